//! The spectral system `u·𝒜(λ) = rhs` and its solution.
//!
//! Index convention used throughout: `B[s][k][r]` with `s` the rotation
//! `λ → α^s λ`, `k` the condition (column of `𝒜`), `r` the interface point.
//! The unknown vector is laid out block by block, `u[r·n + s]`; entry `0` is
//! `x₀` (resp. `x₀⁰`) and entry `m·n` is `x_m` (resp. `x₀^m`), the two
//! quantities the solution representation needs.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::linalg::{Lu, Matrix};
use crate::model::{PdeSpec, ProblemSpec};
use crate::scalar::{Scalar, Wide, C64};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// `|Δ|` below this fraction of its cancellation-free size refuses a closed-form solve.
pub const NEAR_SINGULAR: f64 = 1e-12;
/// Largest pivot spread (log2) accepted by the dense solve.
pub const GENERIC_MAX_LOG2_SPREAD: f64 = 46.5;

/// `e^{2πi/n}` with the trivial cases exact.
pub fn alpha(n: usize) -> C64 {
    match n {
        1 => C64::new(1.0, 0.0),
        2 => C64::new(-1.0, 0.0),
        4 => I,
        _ => {
            let t = 2.0 * PI / n as f64;
            C64::new(t.cos(), t.sin())
        }
    }
}

/// `α^p` by reduction of `p` modulo `n`.
pub fn alpha_pow(n: usize, p: i64) -> C64 {
    let p = p.rem_euclid(n as i64) as usize;
    match (n, p) {
        (_, 0) => C64::new(1.0, 0.0),
        (2, 1) => C64::new(-1.0, 0.0),
        (4, 1) => I,
        (4, 2) => C64::new(-1.0, 0.0),
        (4, 3) => -I,
        _ => {
            let t = 2.0 * PI * p as f64 / n as f64;
            C64::new(t.cos(), t.sin())
        }
    }
}

/// `(-i)^k`
fn minus_i_pow(k: usize) -> C64 {
    [C64::new(1.0, 0.0), -I, C64::new(-1.0, 0.0), I][k % 4]
}

/// `i^k`
pub fn i_pow(k: usize) -> C64 {
    [C64::new(1.0, 0.0), I, C64::new(-1.0, 0.0), -I][k % 4]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralPoint {
    pub lambda: C64,
    pub alpha: C64,
    pub n: usize,
}

impl SpectralPoint {
    pub fn new(n: usize, lambda: C64) -> SpectralPoint {
        SpectralPoint { lambda, alpha: alpha(n), n }
    }

    /// `α^p λ`
    pub fn rotated(&self, p: usize) -> C64 {
        alpha_pow(self.n, p as i64) * self.lambda
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum SpectralError {
    /// `λ = 0`, where the blocks have poles.
    SingularPoint,
    NearSingular { lambda: C64, log2_delta: f64, log2_threshold: f64 },
    Singular { log2_condition: f64 },
    Unsupported(String),
}

impl fmt::Display for SpectralError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpectralError::SingularPoint => write!(f, "the spectral blocks are singular at lambda = 0"),
            SpectralError::NearSingular { lambda, log2_delta, log2_threshold } => write!(
                f,
                "Delta is numerically zero at lambda = {}{:+}i (log2|Delta| = {:.1}, threshold {:.1})",
                lambda.re, lambda.im, log2_delta, log2_threshold
            ),
            SpectralError::Singular { log2_condition } => {
                write!(f, "numerically singular system (condition ~ 2^{:.1})", log2_condition)
            }
            SpectralError::Unsupported(s) => write!(f, "unsupported: {}", s),
        }
    }
}

/// Coefficients of `∂x^k` in the boundary expression of the global relation,
/// normalised so that `a / (-iⁿ c_k) = 1/(iλ)^{n-1-k}`.
pub fn ck_coefficients(pde: &PdeSpec, lambda: C64) -> Vec<C64> {
    let n = pde.order;
    (0..n).map(|k| I * pde.a * minus_i_pow(k) * lambda.powu((n - 1 - k) as u32)).collect()
}

/// The factor `a / (-iⁿ)` in front of the time transforms of the data.
pub fn data_factor(pde: &PdeSpec) -> C64 {
    pde.a / (-i_pow(pde.order))
}

#[derive(Clone, Debug, PartialEq)]
pub struct BBlock<S> {
    n: usize,
    points: usize,
    values: Vec<S>,
}

impl<S: Scalar> BBlock<S> {
    pub fn zeros(n: usize, points: usize) -> BBlock<S> {
        BBlock { n, points, values: vec![S::zero(); n * n * points] }
    }

    #[inline]
    pub fn get(&self, s: usize, k: usize, r: usize) -> S {
        self.values[(s * self.n + k) * self.points + r]
    }

    #[inline]
    pub fn set(&mut self, s: usize, k: usize, r: usize, v: S) {
        self.values[(s * self.n + k) * self.points + r] = v;
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn points(&self) -> usize {
        self.points
    }

    /// `log2` of the largest entry.
    pub fn log2_max(&self) -> f64 {
        self.values.iter().map(|v| v.log2_abs()).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `B⁰_{0k}` for `n = 2` in closed form: `½E_r(-λ)[b₀/(iλ) + b₁]`.
fn b0_order2<S: Scalar>(problem: &ProblemSpec, k: usize, r: usize, lambda: C64) -> S {
    let eta = problem.eta()[r];
    let b = &problem.conditions;
    let bracket = b.get(0, k, r) / (I * lambda) + b.get(1, k, r);
    S::exp_c(I * lambda * eta) * S::from_c(bracket * 0.5)
}

/// `B⁰_{0k}` for `n = 3` in closed form: `⅓E_r(-λ)[-b₀/λ² + b₁/(iλ) + b₂]`.
fn b0_order3<S: Scalar>(problem: &ProblemSpec, k: usize, r: usize, lambda: C64) -> S {
    let eta = problem.eta()[r];
    let b = &problem.conditions;
    let bracket = -b.get(0, k, r) / (lambda * lambda) + b.get(1, k, r) / (I * lambda) + b.get(2, k, r);
    S::exp_c(I * lambda * eta) * S::from_c(bracket / 3.0)
}

/// The general block `β^r_{s,k} = (1/n)E_r(-α^sλ) Σ_d α^{s(d+1)} b_{dk}/(iλ)^{n-1-d}`.
fn beta_general<S: Scalar>(problem: &ProblemSpec, s: usize, k: usize, r: usize, lambda: C64) -> S {
    let n = problem.order();
    let eta = problem.eta()[r];
    let b = &problem.conditions;
    let mut bracket = C64::new(0.0, 0.0);
    for d in 0..n {
        let w = alpha_pow(n, (s * (d + 1)) as i64) / (I * lambda).powu((n - 1 - d) as u32);
        bracket += w * b.get(d, k, r);
    }
    let rot = alpha_pow(n, s as i64) * lambda;
    S::exp_c(I * rot * eta) * S::from_c(bracket / n as f64)
}

/// The B-coefficients at `λ`: closed forms for `n = 2, 3`, general blocks otherwise.
pub fn assemble_b<S: Scalar>(problem: &ProblemSpec, pt: &SpectralPoint) -> Result<BBlock<S>, SpectralError> {
    if pt.lambda == C64::new(0.0, 0.0) {
        return Err(SpectralError::SingularPoint);
    }
    let n = problem.order();
    let points = problem.eta().len();
    let mut out = BBlock::zeros(n, points);
    for s in 0..n {
        let rot = pt.rotated(s);
        for k in 0..n {
            for r in 0..points {
                let v = match n {
                    2 => b0_order2(problem, k, r, rot),
                    3 => b0_order3(problem, k, r, rot),
                    _ => beta_general(problem, s, k, r, pt.lambda),
                };
                out.set(s, k, r, v);
            }
        }
    }
    Ok(out)
}

/// Same as [`assemble_b`] but always through the general β formula.
pub fn assemble_b_general<S: Scalar>(problem: &ProblemSpec, pt: &SpectralPoint) -> Result<BBlock<S>, SpectralError> {
    if pt.lambda == C64::new(0.0, 0.0) {
        return Err(SpectralError::SingularPoint);
    }
    let n = problem.order();
    let points = problem.eta().len();
    let mut out = BBlock::zeros(n, points);
    for s in 0..n {
        for k in 0..n {
            for r in 0..points {
                out.set(s, k, r, beta_general(problem, s, k, r, pt.lambda));
            }
        }
    }
    Ok(out)
}

/// The matrix `𝒜`: B in the first block column, identity blocks on the
/// diagonal and `-I` blocks on the block super-diagonal.
pub fn system_matrix<S: Scalar>(b: &BBlock<S>) -> Matrix<S> {
    let n = b.order();
    let points = b.points();
    let size = n * points;
    let mut a = Matrix::zeros(size);
    for r in 0..points {
        for s in 0..n {
            for k in 0..n {
                a.set(r * n + s, k, b.get(s, k, r));
            }
        }
    }
    for c in 1..points {
        for s in 0..n {
            a.set((c - 1) * n + s, c * n + s, -S::one());
            a.set(c * n + s, c * n + s, S::one());
        }
    }
    a
}

/// Right-hand side of the system.
///
/// `q0hat[r-1][p] = q̂₀^r(α^pλ)`, and optionally `qtau[r-1][p] = e^{aλⁿτ} q̂_τ^r(α^pλ)`
/// (only used to check identities; the solution representation never has it).
#[derive(Clone, Debug, PartialEq)]
pub struct RhsVector<S> {
    pub h: Vec<S>,
    pub q0hat: Vec<Vec<S>>,
    pub qtau: Option<Vec<Vec<S>>>,
}

impl<S: Scalar> RhsVector<S> {
    pub fn zeros(n: usize, m: usize) -> RhsVector<S> {
        RhsVector { h: vec![S::zero(); n], q0hat: vec![vec![S::zero(); n]; m], qtau: None }
    }

    /// Entries of block `r ≥ 1`, row `p`: `-q̂₀ + e^{aλⁿτ}q̂_τ`.
    pub fn y(&self, r: usize, p: usize) -> S {
        let mut v = -self.q0hat[r - 1][p];
        if let Some(q) = &self.qtau {
            v += q[r - 1][p];
        }
        v
    }

    pub fn to_vec(&self) -> Vec<S> {
        let n = self.h.len();
        let mut out = self.h.clone();
        for r in 1..=self.q0hat.len() {
            for p in 0..n {
                out.push(self.y(r, p));
            }
        }
        out
    }

    /// The same right-hand side with the data part removed.
    pub fn h_only(&self) -> RhsVector<S> {
        RhsVector::<S> { h: self.h.clone(), ..RhsVector::zeros(self.h.len(), self.q0hat.len()) }
    }

    /// The same right-hand side with `h` set to zero.
    pub fn data_only(&self) -> RhsVector<S> {
        RhsVector { h: vec![S::zero(); self.h.len()], q0hat: self.q0hat.clone(), qtau: self.qtau.clone() }
    }
}

/// Assembles `𝒜(λ)` and the right-hand side for the given horizon `τ`.
pub fn assemble_system<S: Scalar>(
    problem: &ProblemSpec,
    pt: &SpectralPoint,
    tau: f64,
) -> Result<(Matrix<S>, RhsVector<S>), SpectralError> {
    let b = assemble_b::<S>(problem, pt)?;
    Ok((system_matrix(&b), crate::representation::rhs_vector(problem, pt, tau)))
}

#[derive(Clone, Debug, PartialEq)]
pub struct DtnSolution<S> {
    pub unknowns: Vec<S>,
    /// Response to the `y` entries (initial datum and, if present, `q̂_τ`).
    pub data_part: Vec<S>,
    /// Response to `h`.
    pub h_part: Vec<S>,
}

impl<S: Scalar> DtnSolution<S> {
    /// Unknown number 1 of the row vector.
    pub fn first(&self) -> S {
        self.unknowns[0]
    }

    /// Unknown number `mn + 1`.
    pub fn last_block_first(&self, n: usize) -> S {
        self.unknowns[self.unknowns.len() - n]
    }
}

/// Signed range sums of one rotation of `y`: `range(a, b)` is `Σ_{a<l≤b} y_l`
/// for `a < b`, its negative for `a > b`, and zero for `a = b`. The terms are
/// added directly: `y_l` can differ by many orders of magnitude, so a
/// difference of prefix sums would cancel away the small ones.
struct Ranges<S> {
    y: Vec<S>,
}

impl<S: Scalar> Ranges<S> {
    fn new(y: impl Iterator<Item = S>) -> Ranges<S> {
        // y[0] is a placeholder so that y[l] is y_l
        let mut v = vec![S::zero()];
        v.extend(y);
        Ranges { y: v }
    }

    fn range(&self, a: usize, b: usize) -> S {
        let (lo, hi, neg) = if a < b { (a, b, false) } else { (b, a, true) };
        let mut acc = S::zero();
        for l in lo + 1..=hi {
            acc += self.y[l];
        }
        if neg {
            -acc
        } else {
            acc
        }
    }
}

fn det3<S: Scalar>(m: [[S; 3]; 3]) -> S {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// `Σ_{j,k} B⁰₀(j)B¹₁(k) − B¹₀(k)B⁰₁(j)` with `Bᵃ_b(j) = B[a][b][j]`.
fn delta_order2<S: Scalar>(b: &BBlock<S>) -> S {
    let pts = b.points();
    let mut d = S::zero();
    for j in 0..pts {
        for k in 0..pts {
            d += b.get(0, 0, j) * b.get(1, 1, k) - b.get(1, 0, k) * b.get(0, 1, j);
        }
    }
    d
}

/// `𝒟(j₀,j₁,j₂)` with row `s` of the minor replaced by rotation `rows[s]`.
fn minor3<S: Scalar>(b: &BBlock<S>, js: [usize; 3], rows: [usize; 3]) -> S {
    let mut m = [[S::zero(); 3]; 3];
    for (i, row) in m.iter_mut().enumerate() {
        for (k, e) in row.iter_mut().enumerate() {
            *e = b.get(rows[i], k, js[i]);
        }
    }
    det3(m)
}

fn triples(points: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..points).flat_map(move |a| (0..points).flat_map(move |c| (0..points).map(move |d| [a, c, d])))
}

fn delta_order3<S: Scalar>(b: &BBlock<S>) -> S {
    let mut d = S::zero();
    for t in triples(b.points()) {
        d += minor3(b, t, [0, 1, 2]);
    }
    d
}

/// Closed-form `Δ` from the blocks (`n = 2, 3`), determinant of `𝒜` otherwise.
pub fn delta_from_blocks<S: Scalar>(b: &BBlock<S>) -> S {
    match b.order() {
        2 => delta_order2(b),
        3 => delta_order3(b),
        _ => crate::linalg::det(&system_matrix(b)),
    }
}

/// `Δ(λ)`.
pub fn delta<S: Scalar>(problem: &ProblemSpec, pt: &SpectralPoint) -> Result<S, SpectralError> {
    Ok(delta_from_blocks(&assemble_b::<S>(problem, pt)?))
}

/// `det 𝒜(λ)` by elimination, for cross-checks.
pub fn delta_det<S: Scalar>(problem: &ProblemSpec, pt: &SpectralPoint) -> Result<S, SpectralError> {
    Ok(crate::linalg::det(&system_matrix(&assemble_b::<S>(problem, pt)?)))
}

/// Size of `Δ` without cancellation: the sum of the moduli of all products
/// in its closed-form expansion (`n = 2, 3`), `‖B‖ⁿ` otherwise.
pub fn delta_scale<S: Scalar>(b: &BBlock<S>) -> S {
    let pts = b.points();
    let mut acc = S::zero();
    match b.order() {
        2 => {
            for j in 0..pts {
                for k in 0..pts {
                    acc += (b.get(0, 0, j) * b.get(1, 1, k)).modulus() + (b.get(1, 0, k) * b.get(0, 1, j)).modulus();
                }
            }
        }
        3 => {
            const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
            for t in triples(pts) {
                for p in PERMS {
                    acc += (b.get(0, p[0], t[0]) * b.get(1, p[1], t[1]) * b.get(2, p[2], t[2])).modulus();
                }
            }
        }
        n => {
            let top = S::from_c(C64::new(2f64.powf(b.log2_max().clamp(-1000.0, 1000.0)), 0.0));
            acc = S::one();
            for _ in 0..n {
                acc *= top;
            }
        }
    }
    acc
}

fn check_delta<S: Scalar>(b: &BBlock<S>, d: S, lambda: C64) -> Result<(), SpectralError> {
    let thr = NEAR_SINGULAR.log2() + delta_scale(b).log2_abs();
    let ld = d.log2_abs();
    if !(ld >= thr) {
        return Err(SpectralError::NearSingular { lambda, log2_delta: ld, log2_threshold: thr });
    }
    Ok(())
}

/// Closed-form solution for `n = 2`, returned as `x₀, X₀, x₁, X₁, …`.
fn closed_order2<S: Scalar>(b: &BBlock<S>, delta: S, rhs: &RhsVector<S>) -> Vec<S> {
    let pts = b.points();
    let m = pts - 1;
    let py = Ranges::new((1..=m).map(|r| rhs.y(r, 0)));
    let pyy = Ranges::new((1..=m).map(|r| rhs.y(r, 1)));
    let half = S::from_c(C64::new(0.5, 0.0));

    let cx = half * cx_part(b, &pyy, 0) + h_part2(b, rhs.h[0], rhs.h[1], 0);
    let cxx = h_part2(b, rhs.h[0], rhs.h[1], 1) - half * cx_part(b, &py, 1);

    let mut out = Vec::with_capacity(2 * pts);
    for r in 0..pts {
        let mut lx = S::zero();
        let mut lxx = S::zero();
        for j in 0..pts {
            for k in 0..pts {
                let w = b.get(0, 0, j) * b.get(1, 1, k) - b.get(1, 0, k) * b.get(0, 1, j);
                lx += w * py.range(j, r);
                lxx += w * pyy.range(k, r);
            }
        }
        out.push((lx + cx) / delta);
        out.push((lxx + cxx) / delta);
    }
    out
}

/// `Σ_{j,k} (B[s][0][j]B[s][1][k] − B[s][0][k]B[s][1][j])(P_k − P_j)` with `s`
/// the rotation the cross term lives on (`1` feeds `x_r`, `0` feeds `X_r`).
fn cx_part<S: Scalar>(b: &BBlock<S>, p: &Ranges<S>, which: usize) -> S {
    let s = if which == 0 { 1 } else { 0 };
    let pts = b.points();
    let mut acc = S::zero();
    for j in 0..pts {
        for k in 0..pts {
            let u = b.get(s, 0, j) * b.get(s, 1, k) - b.get(s, 0, k) * b.get(s, 1, j);
            acc += u * p.range(j, k);
        }
    }
    acc
}

fn h_part2<S: Scalar>(b: &BBlock<S>, h0: S, h1: S, which: usize) -> S {
    let mut acc = S::zero();
    for j in 0..b.points() {
        acc += if which == 0 {
            b.get(1, 1, j) * h0 - b.get(1, 0, j) * h1
        } else {
            b.get(0, 0, j) * h1 - b.get(0, 1, j) * h0
        };
    }
    acc
}

fn cminor<S: Scalar>(b: &BBlock<S>, p: usize, q: usize, u: usize, v: usize, j0: usize, j1: usize) -> S {
    b.get(u, p, j0) * b.get(v, q, j1) - b.get(u, q, j0) * b.get(v, p, j1)
}

/// Closed-form solution for `n = 3`, returned as `x₀⁰, x₁⁰, x₂⁰, x₀¹, …`.
fn closed_order3<S: Scalar>(b: &BBlock<S>, delta: S, rhs: &RhsVector<S>) -> Vec<S> {
    let pts = b.points();
    let m = pts - 1;
    let p: Vec<Ranges<S>> = (0..3).map(|s| Ranges::new((1..=m).map(|r| rhs.y(r, s)))).collect();
    let half = S::from_c(C64::new(0.5, 0.0));
    let mut out = vec![S::zero(); 3 * pts];
    let minors: Vec<([usize; 3], S)> = triples(pts).map(|t| (t, minor3(b, t, [0, 1, 2]))).collect();
    for s in 0..3 {
        let s1 = (s + 1) % 3;
        let s2 = (s + 2) % 3;
        let mut rot1 = [0, 1, 2];
        rot1[s] = s1;
        let mut rot2 = [0, 1, 2];
        rot2[s] = s2;
        let mut cross = S::zero();
        for t in triples(pts) {
            cross += minor3(b, t, rot1) * p[s1].range(t[s], t[s1]);
            cross += minor3(b, t, rot2) * p[s2].range(t[s], t[s2]);
        }
        let mut hs = S::zero();
        for j0 in 0..pts {
            for j1 in 0..pts {
                hs += rhs.h[s] * cminor(b, s1, s2, s1, s2, j0, j1)
                    + rhs.h[s1] * cminor(b, s2, s, s1, s2, j0, j1)
                    + rhs.h[s2] * cminor(b, s, s1, s1, s2, j0, j1);
            }
        }
        let c = half * cross + hs;
        for r in 0..pts {
            let mut lead = S::zero();
            for (t, d) in &minors {
                lead += *d * p[s].range(t[s], r);
            }
            out[r * 3 + s] = (lead + c) / delta;
        }
    }
    out
}

/// Closed-form solve from precomputed blocks, `n = 2` or `3`.
pub fn closed_solve<S: Scalar>(b: &BBlock<S>, rhs: &RhsVector<S>, lambda: C64) -> Result<Vec<S>, SpectralError> {
    let d = delta_from_blocks(b);
    check_delta(b, d, lambda)?;
    closed_with_delta(b, d, rhs)
}

fn closed_with_delta<S: Scalar>(b: &BBlock<S>, d: S, rhs: &RhsVector<S>) -> Result<Vec<S>, SpectralError> {
    match b.order() {
        2 => Ok(closed_order2(b, d, rhs)),
        3 => Ok(closed_order3(b, d, rhs)),
        n => Err(SpectralError::Unsupported(format!("no closed form for order {}", n))),
    }
}

/// Closed-form solve with the data-driven and `h`-driven parts kept apart.
pub fn solve_dtn_closed_blocks<S: Scalar>(
    b: &BBlock<S>,
    rhs: &RhsVector<S>,
    lambda: C64,
) -> Result<DtnSolution<S>, SpectralError> {
    let d = delta_from_blocks(b);
    check_delta(b, d, lambda)?;
    let data_part = closed_with_delta(b, d, &rhs.data_only())?;
    let h_part = closed_with_delta(b, d, &rhs.h_only())?;
    let unknowns = data_part.iter().zip(&h_part).map(|(a, c)| *a + *c).collect();
    Ok(DtnSolution { unknowns, data_part, h_part })
}

pub fn solve_dtn_closed<S: Scalar>(
    problem: &ProblemSpec,
    pt: &SpectralPoint,
    rhs: &RhsVector<S>,
) -> Result<DtnSolution<S>, SpectralError> {
    let b = assemble_b::<S>(problem, pt)?;
    solve_dtn_closed_blocks(&b, rhs, pt.lambda)
}

fn factor_transpose<S: Scalar>(matrix: &Matrix<S>) -> Result<Lu<S>, SpectralError> {
    Lu::new(&matrix.transpose(), GENERIC_MAX_LOG2_SPREAD)
        .map_err(|e| SpectralError::Singular { log2_condition: e.log2_condition })
}

/// Row-vector solve `u·𝒜 = rhs` by partial-pivot elimination on `𝒜ᵀ`.
pub fn solve_row<S: Scalar>(matrix: &Matrix<S>, rhs: &[S]) -> Result<Vec<S>, SpectralError> {
    Ok(factor_transpose(matrix)?.solve(rhs))
}

/// Dense fallback, any order.
pub fn solve_dtn_generic<S: Scalar>(matrix: &Matrix<S>, rhs: &RhsVector<S>) -> Result<DtnSolution<S>, SpectralError> {
    let lu = factor_transpose(matrix)?;
    let data_part = lu.solve(&rhs.data_only().to_vec());
    let h_part = lu.solve(&rhs.h_only().to_vec());
    let unknowns = data_part.iter().zip(&h_part).map(|(a, c)| *a + *c).collect();
    Ok(DtnSolution { unknowns, data_part, h_part })
}

/// Closed form where available, dense elimination otherwise.
pub fn solve_dtn<S: Scalar>(b: &BBlock<S>, rhs: &RhsVector<S>, lambda: C64) -> Result<DtnSolution<S>, SpectralError> {
    match b.order() {
        2 | 3 => solve_dtn_closed_blocks(b, rhs, lambda),
        _ => solve_dtn_generic(&system_matrix(b), rhs),
    }
}

/// `det M(n,d,s)` for `M_{jk} = δ_{j-s,k} − δ_{j-s,k-n}` as given by the
/// determinant lemma. The empty matrix (`d = 0`) has determinant 1.
pub fn det_lemma_m(n: usize, d: usize, s: i64) -> i64 {
    let n_i = n as i64;
    let sign = |e: i64| if e % 2 == 0 { 1 } else { -1 };
    if d == 0 || s == 0 {
        1
    } else if s == n_i {
        sign(d as i64)
    } else if d % n == 0 && (1..n_i).contains(&s) {
        sign(d as i64 * s)
    } else {
        0
    }
}

/// The matrix `M(n,d,s)` itself.
pub fn lemma_matrix(n: usize, d: usize, s: i64) -> Vec<Vec<i64>> {
    let n = n as i64;
    (0..d as i64)
        .map(|j| (0..d as i64).map(|k| (j - s == k) as i64 - (j - s == k - n) as i64).collect())
        .collect()
}

/// Brute-force `det M(n,d,s)`.
pub fn det_lemma_m_brute(n: usize, d: usize, s: i64) -> i64 {
    crate::linalg::det_integer(&lemma_matrix(n, d, s))
}

/// `Δ(λ)` in extended range, returned as an ordinary complex number.
pub fn delta_c(problem: &ProblemSpec, lambda: C64) -> Result<C64, SpectralError> {
    Ok(delta::<Wide>(problem, &SpectralPoint::new(problem.order(), lambda))?.to_c())
}
