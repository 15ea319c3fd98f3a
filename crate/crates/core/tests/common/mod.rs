#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use utm_core::data::DataFunction;
use utm_core::model::{ConditionTensor, InterfaceGrid, PdeSpec, ProblemSpec};
use utm_core::scalar::C64;
use utm_core::spectral::RhsVector;

pub fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn rand_c(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
}

/// Sorted interior points with a minimum gap, plus the two ends.
pub fn rand_eta(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    loop {
        let mut eta: Vec<f64> = (1..m).map(|_| rng.gen_range(0.05..0.95)).collect();
        eta.sort_by(|a, b| a.partial_cmp(b).unwrap());
        eta.insert(0, 0.0);
        eta.push(1.0);
        if eta.windows(2).all(|w| w[1] - w[0] > 0.04) {
            return eta;
        }
    }
}

pub fn rand_tensor(rng: &mut ChaCha8Rng, n: usize, points: usize) -> ConditionTensor {
    let mut t = ConditionTensor::zeros(n, points);
    for k in 0..n {
        for j in 0..n {
            for r in 0..points {
                t.set(k, j, r, rand_c(rng));
            }
        }
    }
    t
}

/// Problem with the given tensor and zero data; the spectral tests supply
/// their own right-hand sides.
pub fn bare_problem(n: usize, a: C64, eta: Vec<f64>, b: ConditionTensor) -> ProblemSpec {
    ProblemSpec::new(
        PdeSpec::new(n, a),
        InterfaceGrid::new(eta),
        b,
        (0..n).map(|_| DataFunction::zero("t")).collect(),
        DataFunction::zero("x"),
        1.0,
    )
    .unwrap()
}

pub fn rand_problem(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ProblemSpec {
    let a = if n == 2 { c(1.0) } else { C64::new(0.0, -1.0) };
    let eta = rand_eta(rng, m);
    let b = rand_tensor(rng, n, m + 1);
    bare_problem(n, a, eta, b)
}

/// `λ` with modulus in `[0.5, 6]` and uniform argument.
pub fn rand_lambda(rng: &mut ChaCha8Rng) -> C64 {
    C64::from_polar(rng.gen_range(0.5..6.0), rng.gen_range(0.0..std::f64::consts::TAU))
}

pub fn rand_rhs(rng: &mut ChaCha8Rng, n: usize, m: usize) -> RhsVector<C64> {
    let mut rhs = RhsVector::zeros(n, m);
    for j in 0..n {
        rhs.h[j] = rand_c(rng);
    }
    for r in 0..m {
        for p in 0..n {
            rhs.q0hat[r][p] = rand_c(rng);
        }
    }
    rhs
}

pub fn max_norm(v: &[C64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Largest entrywise relative difference, `|a_i - b_i| / |b_i|`.
pub fn entrywise_rel(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm() / y.norm().max(f64::MIN_POSITIVE)).fold(0.0, f64::max)
}

/// `q(0) = g₀`, `q(1) + β q_x(1) = g₁`.
pub fn beta_tensor(beta: f64) -> ConditionTensor {
    let mut t = ConditionTensor::zeros(2, 2);
    t.set(0, 0, 0, c(1.0));
    t.set(1, 0, 1, c(beta));
    t.set(0, 1, 1, c(1.0));
    t
}

/// Composite Simpson rule with `2k` intervals.
pub fn simpson<F: Fn(f64) -> C64>(f: F, a: f64, b: f64, k: usize) -> C64 {
    let n = 2 * k;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += f(a + i as f64 * h) * w;
    }
    s * (h / 3.0)
}
