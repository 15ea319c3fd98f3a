mod common;

use common::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;
use utm_core::linalg::Matrix;
use utm_core::model::fixtures::*;
use utm_core::model::PdeSpec;
use utm_core::scalar::{Scalar, Wide, C64};
use utm_core::spectral::*;

const I: C64 = C64 { re: 0.0, im: 1.0 };

fn e(lambda: C64, eta: f64) -> C64 {
    (-I * lambda * eta).exp()
}

#[test]
fn alpha_is_a_root_of_unity() {
    for n in 2..6 {
        let pt = SpectralPoint::new(n, C64::new(1.0, 0.0));
        assert!((pt.alpha.norm() - 1.0).abs() < 1e-15);
        assert!((pt.alpha.powu(n as u32) - 1.0).norm() < 1e-14);
    }
}

#[test]
fn ck_normalisation() {
    let heat = PdeSpec::new(2, c(1.0));
    let lam = C64::new(0.7, -1.3);
    let ck = ck_coefficients(&heat, lam);
    // a / (-iⁿ c_{n-1}) = 1
    assert!((heat.a / (-i_pow(2) * ck[1]) - 1.0).norm() < 1e-15);
    assert_eq!(ck_coefficients(&heat, C64::new(0.0, 0.0))[0], C64::new(0.0, 0.0));
}

#[test]
fn ck_rotation_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (n, a) in [(2, c(1.0)), (3, C64::new(0.0, -1.0)), (4, c(1.0))] {
        let pde = PdeSpec::new(n, a);
        let al = alpha(n);
        for _ in 0..10 {
            let lam = rand_lambda(&mut rng);
            let base = ck_coefficients(&pde, lam);
            let rot = ck_coefficients(&pde, al * lam);
            for k in 0..n {
                let want = al.powu((n - 1 - k) as u32) * base[k];
                assert!((rot[k] - want).norm() < 1e-13 * want.norm().max(1.0));
            }
        }
    }
}

#[test]
fn ck_reproduce_third_order_bracket() {
    let pde = PdeSpec::new(3, C64::new(0.0, -1.0));
    let p = third_order_problem(0.3, pde.a, "0", 1.0);
    let lam = C64::new(1.1, 0.4);
    let ck = ck_coefficients(&pde, lam);
    let b = assemble_b::<C64>(&p, &SpectralPoint::new(3, lam)).unwrap();
    for r in 0..3 {
        for k in 0..3 {
            let b_l = |l: usize| p.conditions.get(l, k, r);
            let from_ck: C64 = (0..3).map(|l| b_l(l) * pde.a / (-i_pow(3) * ck[l])).sum::<C64>() / 3.0;
            let bracket = (-b_l(0) / (lam * lam) + b_l(1) / (I * lam) + b_l(2)) / 3.0;
            assert!((from_ck - bracket).norm() < 1e-14);
            let eta = p.eta()[r];
            assert!((b.get(0, k, r) - e(-lam, eta) * bracket).norm() < 1e-14);
        }
    }
}

#[test]
fn order2_blocks_follow_the_closed_forms() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..20 {
        let p = rand_problem(&mut rng, 2, 3);
        let lam = rand_lambda(&mut rng);
        let b = assemble_b::<C64>(&p, &SpectralPoint::new(2, lam)).unwrap();
        let bm = assemble_b::<C64>(&p, &SpectralPoint::new(2, -lam)).unwrap();
        for r in 0..4 {
            let eta = p.eta()[r];
            for k in 0..2 {
                let b0 = p.conditions.get(0, k, r);
                let b1 = p.conditions.get(1, k, r);
                let want0 = 0.5 * e(-lam, eta) * (b0 / (I * lam) + b1);
                let want1 = 0.5 * e(lam, eta) * (-b0 / (I * lam) + b1);
                assert!((b.get(0, k, r) - want0).norm() < 1e-13);
                assert!((b.get(1, k, r) - want1).norm() < 1e-13);
                assert_eq!(b.get(1, k, r), bm.get(0, k, r));
            }
        }
    }
}

#[test]
fn order3_blocks_rotate() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let p = rand_problem(&mut rng, 3, 2);
    let lam = rand_lambda(&mut rng);
    let al = alpha(3);
    let b = assemble_b::<C64>(&p, &SpectralPoint::new(3, lam)).unwrap();
    for s in 0..3 {
        let bs = assemble_b::<C64>(&p, &SpectralPoint::new(3, al.powu(s as u32) * lam)).unwrap();
        for k in 0..3 {
            for r in 0..3 {
                assert!((b.get(s, k, r) - bs.get(0, k, r)).norm() < 1e-13 * bs.get(0, k, r).norm().max(1.0));
            }
        }
    }
}

#[test]
fn closed_blocks_agree_with_general_blocks() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    for n in [2, 3] {
        for _ in 0..10 {
            let p = rand_problem(&mut rng, n, 2);
            let pt = SpectralPoint::new(n, rand_lambda(&mut rng));
            let a = assemble_b::<C64>(&p, &pt).unwrap();
            let g = assemble_b_general::<C64>(&p, &pt).unwrap();
            for s in 0..n {
                for k in 0..n {
                    for r in 0..3 {
                        assert!((a.get(s, k, r) - g.get(s, k, r)).norm() < 1e-12 * a.get(s, k, r).norm().max(1.0));
                    }
                }
            }
        }
    }
}

#[test]
fn zero_tensor_gives_zero_blocks() {
    let p = bare_problem(2, c(1.0), vec![0.0, 0.5, 1.0], utm_core::model::ConditionTensor::zeros(2, 3));
    let b = assemble_b::<C64>(&p, &SpectralPoint::new(2, C64::new(2.0, 1.0))).unwrap();
    for s in 0..2 {
        for k in 0..2 {
            for r in 0..3 {
                assert_eq!(b.get(s, k, r), C64::new(0.0, 0.0));
            }
        }
    }
}

#[test]
fn blocks_are_singular_at_the_origin() {
    let p = dirichlet_heat("0", 1.0);
    assert_eq!(assemble_b::<C64>(&p, &SpectralPoint::new(2, C64::new(0.0, 0.0))), Err(SpectralError::SingularPoint));
    assert!(delta_c(&p, C64::new(0.0, 0.0)).is_err());
}

#[test]
fn three_point_first_block_row() {
    // at η₀ = 0 both exponentials are 1, so the r = 0 entries are unambiguous
    let p = three_point_heat(0.3, 0.6, "0", 1.0);
    let lam = C64::new(1.7, 0.2);
    let b = assemble_b::<C64>(&p, &SpectralPoint::new(2, lam)).unwrap();
    assert!((b.get(0, 0, 0) - 1.0 / (2.0 * I * lam)).norm() < 1e-15);
    assert!((b.get(1, 0, 0) + 1.0 / (2.0 * I * lam)).norm() < 1e-15);
    assert_eq!(b.get(0, 1, 0), C64::new(0.0, 0.0));
    // interior point carries -c0, -c1 with E₁(-λ)
    assert!((b.get(0, 0, 1) - (-0.3) / (2.0 * I * lam) * e(-lam, 0.5)).norm() < 1e-15);
    assert!((b.get(0, 1, 1) - (-0.6) / (2.0 * I * lam) * e(-lam, 0.5)).norm() < 1e-15);
    assert!((b.get(1, 1, 2) - (-1.0) / (2.0 * I * lam) * e(lam, 1.0)).norm() < 1e-15);
}

#[test]
fn third_order_block_table() {
    let cc = 0.3;
    let p = third_order_problem(cc, C64::new(0.0, -1.0), "0", 1.0);
    let lam = C64::new(1.3, -0.4);
    let al = alpha(3);
    let l2 = lam * lam;
    let b = assemble_b::<C64>(&p, &SpectralPoint::new(3, lam)).unwrap();
    let ex = |z: C64| (I * z).exp();
    let mut want = [[C64::new(0.0, 0.0); 3]; 9];
    for s in 0..3 {
        let a_s = al.powu(s as u32);
        let a_2s = al.powu(2 * s as u32);
        want[s][0] = -a_s / (3.0 * l2);
        want[3 + s][0] = a_s * cc / (3.0 * l2) * ex(a_s * lam / 2.0);
        want[6 + s][1] = -a_s / (3.0 * l2) * ex(a_s * lam);
        want[6 + s][2] = a_2s / (3.0 * I * lam) * ex(a_s * lam);
    }
    for r in 0..3 {
        for s in 0..3 {
            for k in 0..3 {
                let w = want[3 * r + s][k];
                assert!((b.get(s, k, r) - w).norm() < 1e-14 * w.norm().max(1.0), "r={} s={} k={}", r, s, k);
            }
        }
    }
}

#[test]
fn system_matrix_band_pattern() {
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for (n, m) in [(2, 3), (3, 2)] {
        let p = rand_problem(&mut rng, n, m);
        let b = assemble_b::<C64>(&p, &SpectralPoint::new(n, rand_lambda(&mut rng))).unwrap();
        let a = system_matrix(&b);
        let size = n * (m + 1);
        assert_eq!(a.n, size);
        for i in 0..size {
            for j in n..size {
                let want = if j == i && i >= n {
                    1.0
                } else if j == i + n {
                    -1.0
                } else {
                    0.0
                };
                assert_eq!(a.get(i, j), c(want), "({}, {})", i, j);
            }
            for k in 0..n {
                assert_eq!(a.get(i, k), b.get(i % n, k, i / n));
            }
        }
    }
}

#[test]
fn dirichlet_two_point_dtn_by_hand() {
    // For Dirichlet data the h-driven first unknown is a classical DtN map:
    // u₀ = (B¹₁,₁ h₀ − B¹₁,₀ h₁)/Δ summed over points, with only r=0 (k=0) and r=1 (k=1) present.
    let p = dirichlet_heat("0", 1.0);
    let lam = C64::new(2.3, 0.9);
    let pt = SpectralPoint::new(2, lam);
    let b = assemble_b::<C64>(&p, &pt).unwrap();
    let mut rhs = RhsVector::<C64>::zeros(2, 1);
    rhs.h = vec![C64::new(0.4, -0.1), C64::new(-0.2, 0.5)];
    let sol = solve_dtn_generic(&system_matrix(&b), &rhs).unwrap();
    let d = b.get(0, 0, 0) * b.get(1, 1, 1) - b.get(1, 0, 0) * b.get(0, 1, 1);
    let x0 = (b.get(1, 1, 1) * rhs.h[0] - b.get(1, 0, 0) * rhs.h[1]) / d;
    let xx0 = (b.get(0, 0, 0) * rhs.h[1] - b.get(0, 1, 1) * rhs.h[0]) / d;
    assert!((sol.unknowns[0] - x0).norm() < 1e-13);
    assert!((sol.unknowns[1] - xx0).norm() < 1e-13);
    // no data beyond h, so the solution is the same in every block
    assert!((sol.unknowns[2] - x0).norm() < 1e-13);
    assert!((delta::<C64>(&p, &pt).unwrap() - d).norm() < 1e-14);
    assert!((d + I * lam.sin() / (2.0 * lam * lam)).norm() < 1e-14);
}

#[test]
fn closed_matches_generic_on_random_systems() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut worst: f64 = 0.0;
    for (n, mmax) in [(2, 4), (3, 3)] {
        for case in 0..60 {
            let m = 1 + case % mmax;
            let p = rand_problem(&mut rng, n, m);
            let lam = rand_lambda(&mut rng);
            let rhs = rand_rhs(&mut rng, n, m);
            let pt = SpectralPoint::new(n, lam);
            let b = assemble_b::<C64>(&p, &pt).unwrap();
            let closed = solve_dtn_closed_blocks(&b, &rhs, lam).unwrap();
            let generic = solve_dtn_generic(&system_matrix(&b), &rhs).unwrap();
            worst = worst.max(entrywise_rel(&closed.unknowns, &generic.unknowns));
            worst = worst.max(entrywise_rel(&closed.data_part, &generic.data_part));
            worst = worst.max(entrywise_rel(&closed.h_part, &generic.h_part));
        }
    }
    assert!(worst < 1e-10, "worst relative difference {:e}", worst);
}

#[test]
fn closed_form_works_in_extended_range() {
    // |λ| large enough that C64 entries overflow
    let p = three_point_heat(0.4, 0.4, "0", 1.0);
    let lam = C64::new(300.0, 2000.0);
    let pt = SpectralPoint::new(2, lam);
    let mut rhs = RhsVector::<Wide>::zeros(2, 2);
    rhs.h = vec![Wide::one(), Wide::from(C64::new(0.0, 1.0))];
    rhs.q0hat = vec![vec![Wide::one(), Wide::one()], vec![Wide::from(c(0.5)), Wide::from(c(-2.0))]];
    let b = assemble_b::<Wide>(&p, &pt).unwrap();
    let u = solve_dtn_closed_blocks(&b, &rhs, lam).unwrap().unknowns;
    // dense elimination refuses here; check u·𝒜 = rhs column by column instead
    assert!(solve_dtn_generic(&system_matrix(&b), &rhs).is_err());
    let a = system_matrix(&b);
    let target = rhs.to_vec();
    for j in 0..a.n {
        let mut sum = -target[j];
        let mut size = target[j].modulus();
        for i in 0..a.n {
            let t = u[i] * a.get(i, j);
            sum += t;
            size += t.modulus();
        }
        assert!(sum.log2_abs() - size.log2_abs() < -33.0, "column {}", j);
    }
}

#[test]
fn zero_rhs_gives_zero_unknowns() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for n in [2, 3] {
        let p = rand_problem(&mut rng, n, 2);
        let lam = rand_lambda(&mut rng);
        let sol = solve_dtn_closed(&p, &SpectralPoint::new(n, lam), &RhsVector::<C64>::zeros(n, 2)).unwrap();
        assert!(sol.unknowns.iter().all(|z| *z == C64::new(0.0, 0.0)));
    }
}

#[test]
fn parts_add_up() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let p = rand_problem(&mut rng, 3, 2);
    let lam = rand_lambda(&mut rng);
    let rhs = rand_rhs(&mut rng, 3, 2);
    let sol = solve_dtn_closed(&p, &SpectralPoint::new(3, lam), &rhs).unwrap();
    for i in 0..sol.unknowns.len() {
        assert_eq!(sol.unknowns[i], sol.data_part[i] + sol.h_part[i]);
    }
}

#[test]
fn near_singular_point_is_reported() {
    // Δ vanishes at λ = π for the Dirichlet problem
    let p = dirichlet_heat("0", 1.0);
    let lam = C64::new(PI, 0.0);
    let rhs = RhsVector::<C64>::zeros(2, 1);
    match solve_dtn_closed(&p, &SpectralPoint::new(2, lam), &rhs) {
        Err(SpectralError::NearSingular { lambda, .. }) => assert_eq!(lambda, lam),
        other => panic!("expected a near-singular error, got {:?}", other),
    }
}

/// `u` on each block column: the first holds `h`, the others the differences.
fn identities(p: &utm_core::model::ProblemSpec, lam: C64, rhs: &RhsVector<C64>) -> (f64, f64) {
    let n = p.order();
    let m = p.m();
    let pt = SpectralPoint::new(n, lam);
    let b = assemble_b::<C64>(p, &pt).unwrap();
    let sol = solve_dtn_closed_blocks(&b, rhs, lam).unwrap();
    let scale = max_norm(&sol.unknowns).max(1.0);
    let mut diff: f64 = 0.0;
    let mut annihilation: f64 = 0.0;
    for (part, h) in [(&sol.data_part, vec![C64::new(0.0, 0.0); n]), (&sol.h_part, rhs.h.clone())] {
        for r in 1..=m {
            for s in 0..n {
                let y = if h.iter().all(|z| z.norm() == 0.0) { rhs.y(r, s) } else { C64::new(0.0, 0.0) };
                diff = diff.max((part[r * n + s] - part[(r - 1) * n + s] - y).norm() / scale);
            }
        }
        for s in 0..n {
            let sum: C64 = (0..=m).flat_map(|r| (0..n).map(move |q| (r, q))).map(|(r, q)| b.get(q, s, r) * part[r * n + q]).sum();
            annihilation = annihilation.max((sum - h[s]).norm() / scale);
        }
    }
    (diff, annihilation)
}

#[test]
fn difference_and_annihilation_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for n in [2, 3] {
        for case in 0..25 {
            let m = 1 + case % 3;
            let p = rand_problem(&mut rng, n, m);
            let lam = rand_lambda(&mut rng);
            let rhs = rand_rhs(&mut rng, n, m);
            let (d, a) = identities(&p, lam, &rhs);
            assert!(d < 1e-10 && a < 1e-10, "n={} m={} diff {:e} annihilation {:e}", n, m, d, a);
        }
    }
}

#[test]
fn rotation_of_synthetic_boundary_values() {
    // unknowns built from arbitrary f_k^r through the rotation rule must map
    // the first block column onto a/(-iⁿ) Σ b f / c
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for n in [2, 3] {
        let p = rand_problem(&mut rng, n, 2);
        let lam = rand_lambda(&mut rng);
        let pt = SpectralPoint::new(n, lam);
        let al = alpha(n);
        let f: Vec<Vec<C64>> = (0..3).map(|_| (0..n).map(|_| rand_c(&mut rng)).collect()).collect();
        let mut u = vec![C64::new(0.0, 0.0); 3 * n];
        for r in 0..3 {
            for s in 0..n {
                let sum: C64 = (0..n).map(|k| al.powu((s * (n - 1 - k)) as u32) * f[r][k]).sum();
                u[r * n + s] = e(al.powu(s as u32) * lam, p.eta()[r]) * sum;
            }
        }
        let a = system_matrix(&assemble_b::<C64>(&p, &pt).unwrap());
        let out = a.left_mul(&u);
        let ck = ck_coefficients(&p.pde, lam);
        for j in 0..n {
            let want: C64 = (0..3)
                .flat_map(|r| (0..n).map(move |k| (r, k)))
                .map(|(r, k)| p.conditions.get(k, j, r) * f[r][k] / ck[k])
                .sum::<C64>()
                * data_factor(&p.pde);
            assert!((out[j] - want).norm() < 1e-12 * want.norm().max(1.0));
        }
    }
}

#[test]
fn generic_solver_on_identity() {
    let a = Matrix::<C64>::identity(5);
    let rhs: Vec<C64> = (0..5).map(|i| C64::new(i as f64, -1.0)).collect();
    assert_eq!(solve_row(&a, &rhs).unwrap(), rhs);
}

#[test]
fn generic_solver_on_the_band_alone() {
    // β^m = I and every other β block zero: u_m = h, u_{r} - u_{r-1} = y_r
    let mut b = utm_core::spectral::BBlock::<C64>::zeros(2, 3);
    b.set(0, 0, 2, c(1.0));
    b.set(1, 1, 2, c(1.0));
    let a = system_matrix(&b);
    let rhs = [c(0.0), c(0.0), c(1.0), c(2.0), c(3.0), c(4.0)];
    let u = solve_row(&a, &rhs).unwrap();
    assert!((u[0] - c(-4.0)).norm() < 1e-15);
    assert!((u[1] - c(-6.0)).norm() < 1e-15);
    assert!((u[4]).norm() < 1e-15 && (u[5]).norm() < 1e-15);
}

#[test]
fn generic_solver_residual_on_random_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut a = Matrix::<C64>::zeros(8);
    for v in a.data.iter_mut() {
        *v = rand_c(&mut rng);
    }
    let rhs: Vec<C64> = (0..8).map(|_| rand_c(&mut rng)).collect();
    let u = solve_row(&a, &rhs).unwrap();
    let back = a.left_mul(&u);
    let res = back.iter().zip(&rhs).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
    assert!(res <= 1e-10 * max_norm(&rhs));
}

#[test]
fn generic_solver_rejects_singular_matrix() {
    let a = Matrix::<C64>::zeros(3);
    assert!(matches!(solve_row(&a, &[c(1.0); 3]), Err(SpectralError::Singular { .. })));
}

#[test]
fn determinant_lemma_examples() {
    assert_eq!(det_lemma_m(2, 4, 0), 1);
    assert_eq!(det_lemma_m(3, 3, 3), -1);
    assert_eq!(det_lemma_m(2, 3, 1), 0);
}

#[test]
fn determinant_lemma_exhaustive() {
    for n in 1..=4usize {
        for d in 0..=12usize {
            for s in -1..=(n as i64 + 1) {
                assert_eq!(det_lemma_m(n, d, s), det_lemma_m_brute(n, d, s), "n={} d={} s={}", n, d, s);
            }
        }
    }
}

#[test]
fn delta_closed_form_matches_determinant() {
    let mut rng = ChaCha8Rng::seed_from_u64(51);
    for n in [2, 3, 4] {
        for _ in 0..15 {
            let p = rand_problem(&mut rng, n, 2);
            let pt = SpectralPoint::new(n, rand_lambda(&mut rng));
            let d = delta::<C64>(&p, &pt).unwrap();
            let det = delta_det::<C64>(&p, &pt).unwrap();
            assert!((d - det).norm() < 1e-10 * det.norm(), "n={}", n);
        }
    }
}

/// Δ of the three-point heat problem from the blocks, in closed form:
/// `-i sin(λ/2)/λ² [cos(λ/2) - (c₀+c₁)/2]`.
fn three_point_delta(c0: f64, c1: f64, lam: C64) -> C64 {
    -I * (lam / 2.0).sin() / (lam * lam) * ((lam / 2.0).cos() - (c0 + c1) / 2.0)
}

#[test]
fn three_point_delta_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(61);
    for _ in 0..30 {
        let (c0, c1) = (rand::Rng::gen_range(&mut rng, -1.0..1.0), rand::Rng::gen_range(&mut rng, -1.0..1.0));
        let p = three_point_heat(c0, c1, "0", 1.0);
        let lam = rand_lambda(&mut rng);
        let d = delta_c(&p, lam).unwrap();
        let want = three_point_delta(c0, c1, lam);
        assert!((d - want).norm() < 1e-12 * want.norm());
    }
    // zero of the sine factor
    let p = three_point_heat(0.2, 0.9, "0", 1.0);
    assert!(delta_c(&p, C64::new(2.0 * PI, 0.0)).unwrap().norm() < 1e-15);
    // at λ = π/2 with no coupling the magnitude is 2/π²
    let p0 = three_point_heat(0.0, 0.0, "0", 1.0);
    assert!((delta_c(&p0, C64::new(PI / 2.0, 0.0)).unwrap().norm() - 2.0 / (PI * PI)).abs() < 1e-15);
}

fn third_order_delta(cc: f64, lam: C64) -> C64 {
    let al = alpha(3);
    let sum: C64 = (0..3u32)
        .map(|k| {
            let ak = al.powu(k);
            ak * ((-I * ak * lam).exp() - cc * (-I * ak * lam / 2.0).exp())
        })
        .sum();
    (al * al - al) / (27.0 * I * lam.powu(5)) * sum
}

#[test]
fn third_order_delta_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(71);
    for cc in [0.0, 0.3, -0.8] {
        let p = third_order_problem(cc, C64::new(0.0, -1.0), "0", 1.0);
        for _ in 0..20 {
            let lam = rand_lambda(&mut rng);
            let d = delta_c(&p, lam).unwrap();
            let want = third_order_delta(cc, lam);
            assert!((d - want).norm() < 1e-10 * want.norm());
        }
    }
}

#[test]
fn third_order_first_and_last_unknowns() {
    let cc = 0.3;
    let p = third_order_problem(cc, C64::new(0.0, -1.0), "0", 1.0);
    let al = alpha(3);
    let mut rng = ChaCha8Rng::seed_from_u64(81);
    for _ in 0..10 {
        let lam = rand_lambda(&mut rng);
        // y_s^r stands for q̂_τ^r(α^s λ)
        let y: Vec<Vec<C64>> = (0..2).map(|_| (0..3).map(|_| rand_c(&mut rng)).collect()).collect();
        let mut rhs = RhsVector::<C64>::zeros(3, 2);
        rhs.qtau = Some(y.clone());
        let sol = solve_dtn_closed(&p, &SpectralPoint::new(3, lam), &rhs).unwrap();
        let d = delta_c(&p, lam).unwrap();
        let pre = (al * al - al) / (27.0 * I * lam.powu(5) * d);
        let ex = |z: C64| (-I * z).exp();
        let q1 = |s: usize| y[0][s];
        let q2 = |s: usize| y[1][s];
        let tail = |s: u32| ex(al.powu(s) * lam) - cc * ex(al.powu(s) * lam / 2.0);
        let inner = |s: u32| q1(s as usize) + (1.0 - cc * (I * al.powu(s) * lam / 2.0).exp()) * q2(s as usize);
        let x02 = pre * ex(lam) * (0..3u32).map(|k| al.powu(k) * inner(k)).sum::<C64>();
        // the first term enters with a plus sign (see the decisions record)
        let x00 = pre
            * (cc * ex(lam / 2.0) * q1(0) - (al * tail(1) + al * al * tail(2)) * (q1(0) + q2(0))
                + ex(lam) * (al * inner(1) + al * al * inner(2)));
        assert!((sol.unknowns[6] - x02).norm() < 1e-10 * x02.norm().max(1e-300));
        assert!((sol.unknowns[0] - x00).norm() < 1e-10 * x00.norm().max(1e-300));
    }
}
