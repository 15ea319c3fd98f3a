//! Independent checks: a finite-difference solver that honours the
//! multipoint rows, the global-relation residual, and the sine series for the
//! two-point Dirichlet heat problem.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::{fd_weights, DataFunction};
use crate::linalg::{Lu, Matrix};
use crate::model::ProblemSpec;
use crate::quad::GaussLegendre;
use crate::reduce::SpaceTimeField;
use crate::representation::{
    build_contours, space_transform, ContourOptions, ContourSet, Evaluator, NodeCache, RepresentationError,
};
use crate::scalar::{Scalar, C64};
use crate::spectral::ck_coefficients;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Clone, Debug, PartialEq)]
pub enum OracleError {
    Unsupported(String),
    /// Some `η_r` is not a grid node.
    GridMismatch { eta: f64, cells: usize },
    /// The implicit step matrix is (numerically) singular.
    SingularStep { log2_condition: f64 },
    /// A multipoint row drifted after a step.
    ConstraintDrift { step: usize, residual: f64 },
    InsufficientLevels(String),
    BadArgument(String),
    Representation(RepresentationError),
}

impl fmt::Display for OracleError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OracleError::Unsupported(s) => write!(f, "unsupported: {}", s),
            OracleError::GridMismatch { eta, cells } => {
                write!(f, "interface point {} is not a node of the {}-cell grid", eta, cells)
            }
            OracleError::SingularStep { log2_condition } => write!(
                f,
                "constrained step matrix is singular (log2 condition {:.1}); the discrete condition set is ill-posed",
                log2_condition
            ),
            OracleError::ConstraintDrift { step, residual } => {
                write!(f, "multipoint rows violated by {:.3e} after step {}", residual, step)
            }
            OracleError::InsufficientLevels(s) => write!(f, "insufficient stored time levels: {}", s),
            OracleError::BadArgument(s) => write!(f, "{}", s),
            OracleError::Representation(e) => write!(f, "{}", e),
        }
    }
}

impl From<RepresentationError> for OracleError {
    fn from(e: RepresentationError) -> Self {
        OracleError::Representation(e)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdOptions {
    pub cells: usize,
    pub dt: f64,
    pub t_end: f64,
    /// Keep every `store_every`-th level (level 0 and the last are always kept).
    pub store_every: usize,
}

impl FdOptions {
    pub fn new(cells: usize, dt: f64, t_end: f64) -> FdOptions {
        FdOptions { cells, dt, t_end, store_every: 1 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct FdSolution {
    pub xs: Vec<f64>,
    pub times: Vec<f64>,
    /// `values[level][node]`
    pub values: Vec<Vec<C64>>,
    pub order: usize,
    pub cells: usize,
    pub dt: f64,
    pub steps: usize,
    /// Largest multipoint-row residual seen after any step.
    pub constraint_residual: f64,
    pub scheme: String,
}

/// Grid index of `x`, if it is a node.
fn node_index(x: f64, cells: usize) -> Option<usize> {
    let s = x * cells as f64;
    let i = s.round();
    if (s - i).abs() <= 1e-9 * cells as f64 && i >= 0.0 && i <= cells as f64 {
        Some(i as usize)
    } else {
        None
    }
}

/// Stencil for `∂_x^k` at node `i`: `(first node, weights)`.
///
/// Interior points use the narrowest centred second-order stencil; the ends
/// use one-sided stencils with `k + 2` points.
fn derivative_stencil(k: usize, i: usize, cells: usize) -> (usize, Vec<f64>) {
    let h = 1.0 / cells as f64;
    if k == 0 {
        return (i, vec![1.0]);
    }
    let half = (k + 1) / 2;
    let width = 2 * half + 1;
    let (start, len) = if i >= half && i + half <= cells {
        (i - half, width)
    } else if i < half {
        (0, (k + 2).max(width))
    } else {
        (cells + 1 - (k + 2).max(width), (k + 2).max(width))
    };
    let pts: Vec<f64> = (0..len).map(|p| (start + p) as f64 * h).collect();
    (start, fd_weights(i as f64 * h, &pts, k))
}

/// One-sided at the ends, centred elsewhere; `∂_x^k` at node `i`.
fn apply_stencil(u: &[C64], k: usize, i: usize, cells: usize) -> C64 {
    let (s, w) = derivative_stencil(k, i, cells);
    w.iter().enumerate().map(|(p, wp)| u[s + p] * *wp).sum()
}

/// Crank–Nicolson method of lines with the multipoint rows imposed exactly at
/// every level.
pub fn fd_solve_with(problem: &ProblemSpec, opts: &FdOptions) -> Result<FdSolution, OracleError> {
    let n = problem.order();
    if n != 2 && n != 3 {
        return Err(OracleError::Unsupported(format!("order {}", n)));
    }
    let cells = opts.cells;
    if cells < 8 {
        return Err(OracleError::BadArgument("at least 8 cells required".into()));
    }
    if !(opts.dt > 0.0 && opts.t_end >= 0.0) {
        return Err(OracleError::BadArgument("dt must be positive and t_end non-negative".into()));
    }
    let eta = problem.eta();
    let idx: Vec<usize> = eta
        .iter()
        .map(|&e| node_index(e, cells).ok_or(OracleError::GridMismatch { eta: e, cells }))
        .collect::<Result<_, _>>()?;
    let steps = (opts.t_end / opts.dt).round().max(if opts.t_end > 0.0 { 1.0 } else { 0.0 }) as usize;
    let dt = if steps > 0 { opts.t_end / steps as f64 } else { opts.dt };
    let h = 1.0 / cells as f64;
    let size = cells + 1;
    // q_t = coef · ∂ⁿq
    let coef = -problem.pde.a * (-I).powu(n as u32);

    // nodes whose PDE row is replaced by a condition
    let mut dropped = vec![0, cells];
    if n == 3 {
        // the side carrying two conditions loses one more row
        dropped.push(if problem.pde.a.im < 0.0 { cells - 1 } else { 1 });
    }
    let spatial: Vec<(usize, Vec<f64>)> = (0..size)
        .map(|i| {
            if dropped.contains(&i) {
                return (0, Vec::new());
            }
            let half = (n + 1) / 2;
            let width = 2 * half + 1;
            let start = if i < half { 0 } else if i + half > cells { cells + 1 - width } else { i - half };
            let pts: Vec<f64> = (0..width).map(|p| (start + p) as f64 * h).collect();
            (start, fd_weights(i as f64 * h, &pts, n))
        })
        .collect();

    // condition rows as dense vectors over the grid
    let mut cond_rows: Vec<Vec<C64>> = Vec::with_capacity(n);
    for j in 0..n {
        let mut row = vec![C64::new(0.0, 0.0); size];
        for k in 0..n {
            for (r, &i) in idx.iter().enumerate() {
                let b = problem.conditions.get(k, j, r);
                if b.norm() == 0.0 {
                    continue;
                }
                let (s, w) = derivative_stencil(k, i, cells);
                for (p, wp) in w.iter().enumerate() {
                    row[s + p] += b * *wp;
                }
            }
        }
        cond_rows.push(row);
    }

    let mut a: Matrix<C64> = Matrix::zeros(size);
    let mut slot = 0;
    for i in 0..size {
        if dropped.contains(&i) {
            for c in 0..size {
                a.set(i, c, cond_rows[slot][c]);
            }
            slot += 1;
        } else {
            let (s, w) = &spatial[i];
            a.set(i, i, C64::new(1.0, 0.0));
            for (p, wp) in w.iter().enumerate() {
                let v = a.get(i, s + p) - coef * (0.5 * dt * wp);
                a.set(i, s + p, v);
            }
        }
    }
    let lu = Lu::new(&a, 52.0).map_err(|e| OracleError::SingularStep { log2_condition: e.log2_condition })?;

    let xs: Vec<f64> = (0..size).map(|i| i as f64 * h).collect();
    let mut u: Vec<C64> = xs.iter().map(|&x| problem.initial_datum.eval(x)).collect();
    let mut times = vec![0.0];
    let mut values = vec![u.clone()];
    let mut worst: f64 = 0.0;
    let store_every = opts.store_every.max(1);
    let mut rhs = vec![C64::new(0.0, 0.0); size];
    for step in 1..=steps {
        let t_new = step as f64 * dt;
        let mut slot = 0;
        for i in 0..size {
            if dropped.contains(&i) {
                rhs[i] = problem.boundary_data[slot].eval(t_new);
                slot += 1;
            } else {
                let (s, w) = &spatial[i];
                let d: C64 = w.iter().enumerate().map(|(p, wp)| u[s + p] * *wp).sum();
                rhs[i] = u[i] + coef * d * (0.5 * dt);
            }
        }
        u = lu.solve(&rhs);
        for (j, row) in cond_rows.iter().enumerate() {
            let lhs: C64 = row.iter().zip(&u).map(|(c, v)| c * v).sum();
            let scale: f64 = row.iter().zip(&u).map(|(c, v)| (c * v).norm()).sum::<f64>().max(1.0);
            let res = (lhs - problem.boundary_data[j].eval(t_new)).norm() / scale;
            worst = worst.max(res);
        }
        if worst > 1e-10 {
            return Err(OracleError::ConstraintDrift { step, residual: worst });
        }
        if step % store_every == 0 || step == steps {
            times.push(t_new);
            values.push(u.clone());
        }
    }
    Ok(FdSolution {
        xs,
        times,
        values,
        order: n,
        cells,
        dt,
        steps,
        constraint_residual: worst,
        scheme: format!(
            "Crank-Nicolson, centred second-order stencils, {} cells, dt = {:e}",
            cells, dt
        ),
    })
}

/// Finite-difference solution up to the problem horizon. At most about two
/// thousand levels are kept.
pub fn fd_solve(problem: &ProblemSpec, cells: usize, dt: f64) -> Result<FdSolution, OracleError> {
    let steps = (problem.horizon / dt).round().max(1.0) as usize;
    let mut opts = FdOptions::new(cells, dt, problem.horizon);
    opts.store_every = steps.div_ceil(2000).max(1);
    fd_solve_with(problem, &opts)
}

impl FdSolution {
    /// Stored level closest to `t`.
    pub fn level(&self, t: f64) -> usize {
        let mut best = 0;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < (self.times[best] - t).abs() {
                best = i;
            }
        }
        best
    }

    /// Value at grid node `x` and a stored time `t`.
    pub fn value_at(&self, x: f64, t: f64) -> Result<C64, OracleError> {
        let i = node_index(x, self.cells).ok_or(OracleError::GridMismatch { eta: x, cells: self.cells })?;
        let l = self.exact_level(t)?;
        Ok(self.values[l][i])
    }

    fn exact_level(&self, t: f64) -> Result<usize, OracleError> {
        let l = self.level(t);
        if (self.times[l] - t).abs() > 1e-9 * t.abs().max(1.0) {
            return Err(OracleError::InsufficientLevels(format!("t = {} is not a stored level", t)));
        }
        Ok(l)
    }
}

/// A solution the global relation can be evaluated on.
pub trait SolutionSource {
    /// Quadrature `(nodes, weights)` on `[0, τ]`.
    fn time_rule(&self, tau: f64) -> Result<(Vec<f64>, Vec<f64>), OracleError>;
    /// `∂_x^k q(x, t)` at each `x`.
    fn dx(&self, k: usize, xs: &[f64], t: f64) -> Result<Vec<C64>, OracleError>;
    /// `∫_lo^hi e^{-iλx} q(x,t) dx` for each `λ`.
    fn space_transform(&self, t: f64, lo: f64, hi: f64, lambdas: &[C64]) -> Result<Vec<C64>, OracleError> {
        let rule = GaussLegendre::new(24);
        let panels = 6;
        let mut xs = Vec::new();
        let mut ws = Vec::new();
        for p in 0..panels {
            let a = lo + (hi - lo) * p as f64 / panels as f64;
            let b = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
            for (x, w) in rule.nodes.iter().zip(&rule.weights) {
                xs.push(0.5 * (a + b) + 0.5 * (b - a) * x);
                ws.push(0.5 * (b - a) * w);
            }
        }
        let q = self.dx(0, &xs, t)?;
        Ok(lambdas
            .iter()
            .map(|&l| xs.iter().zip(&ws).zip(&q).map(|((x, w), v)| (-I * l * *x).exp() * *v * *w).sum())
            .collect())
    }
}

impl SolutionSource for FdSolution {
    fn time_rule(&self, tau: f64) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
        let last = self.exact_level(tau)?;
        if last < 1 {
            return Err(OracleError::InsufficientLevels("need at least two levels up to tau".into()));
        }
        let ts: Vec<f64> = self.times[..=last].to_vec();
        let mut ws = vec![0.0; ts.len()];
        for i in 0..last {
            let d = ts[i + 1] - ts[i];
            ws[i] += 0.5 * d;
            ws[i + 1] += 0.5 * d;
        }
        Ok((ts, ws))
    }

    fn dx(&self, k: usize, xs: &[f64], t: f64) -> Result<Vec<C64>, OracleError> {
        let l = self.exact_level(t)?;
        xs.iter()
            .map(|&x| {
                let i = node_index(x, self.cells).ok_or(OracleError::GridMismatch { eta: x, cells: self.cells })?;
                Ok(apply_stencil(&self.values[l], k, i, self.cells))
            })
            .collect()
    }

    fn space_transform(&self, t: f64, lo: f64, hi: f64, lambdas: &[C64]) -> Result<Vec<C64>, OracleError> {
        let l = self.exact_level(t)?;
        let a = node_index(lo, self.cells).ok_or(OracleError::GridMismatch { eta: lo, cells: self.cells })?;
        let b = node_index(hi, self.cells).ok_or(OracleError::GridMismatch { eta: hi, cells: self.cells })?;
        let h = 1.0 / self.cells as f64;
        Ok(lambdas
            .iter()
            .map(|&lam| {
                let mut s = C64::new(0.0, 0.0);
                for i in a..=b {
                    let w = if i == a || i == b { 0.5 * h } else { h };
                    s += (-I * lam * self.xs[i]).exp() * self.values[l][i] * w;
                }
                s
            })
            .collect())
    }
}

/// Adapter for a field with exact derivatives; time integrals by Gauss–Legendre.
pub struct FieldSource<'a>(pub &'a dyn SpaceTimeField);

const GEOMETRIC_LEVELS: usize = 3;

fn gl_time_rule(tau: f64, panels: usize) -> (Vec<f64>, Vec<f64>) {
    let rule = GaussLegendre::new(20);
    let mut ts = Vec::new();
    let mut ws = Vec::new();
    // uniform panels, the first one split geometrically towards s = 0 where
    // data of limited compatibility make q_x behave like a power of s
    let first = tau / panels as f64;
    let mut edges: Vec<f64> = (0..=GEOMETRIC_LEVELS).map(|l| first * 0.25f64.powi((GEOMETRIC_LEVELS - l) as i32)).collect();
    edges.insert(0, 0.0);
    edges.extend((2..=panels).map(|p| tau * p as f64 / panels as f64));
    for pair in edges.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        for (x, w) in rule.nodes.iter().zip(&rule.weights) {
            ts.push(0.5 * (a + b) + 0.5 * (b - a) * x);
            ws.push(0.5 * (b - a) * w);
        }
    }
    (ts, ws)
}

impl SolutionSource for FieldSource<'_> {
    fn time_rule(&self, tau: f64) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
        Ok(gl_time_rule(tau, 4))
    }

    fn dx(&self, k: usize, xs: &[f64], t: f64) -> Result<Vec<C64>, OracleError> {
        Ok(xs.iter().map(|&x| self.0.dx(k, x, t)).collect())
    }
}

/// The contour representation as a [`SolutionSource`] on `[0, τ]`.
pub struct RepresentationSource<'a> {
    problem: &'a ProblemSpec,
    plan: ContourSet,
    cache: NodeCache,
    tau_eval: f64,
    panels: usize,
}

impl<'a> RepresentationSource<'a> {
    /// Plans contours for every time node the global relation on `[0, τ]` will use.
    pub fn new(problem: &'a ProblemSpec, tau: f64, r: f64) -> Result<RepresentationSource<'a>, OracleError> {
        if !(tau > 0.0 && tau < problem.horizon) {
            return Err(OracleError::BadArgument(format!("tau = {} must lie in (0, T)", tau)));
        }
        let panels = 4;
        let (ts, _) = gl_time_rule(tau, panels);
        let t_min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
        let mut opts = ContourOptions::new(r, t_min, tau);
        opts.tau_max = problem.horizon;
        opts.later_legs = problem.boundary_data.iter().any(|g| !g.is_structurally_zero());
        let plan = build_contours(problem, &opts)?;
        let cache = NodeCache::build(problem, &plan)?;
        Ok(RepresentationSource { problem, plan, cache, tau_eval: problem.horizon, panels })
    }

    pub fn node_count(&self) -> usize {
        self.plan.node_count()
    }
}

impl SolutionSource for RepresentationSource<'_> {
    fn time_rule(&self, tau: f64) -> Result<(Vec<f64>, Vec<f64>), OracleError> {
        Ok(gl_time_rule(tau, self.panels))
    }

    fn dx(&self, k: usize, xs: &[f64], t: f64) -> Result<Vec<C64>, OracleError> {
        if t == 0.0 {
            return Ok(xs.iter().map(|&x| self.problem.initial_datum.derivative_at(k, x).0).collect());
        }
        let ev = Evaluator::new(self.problem, &self.plan, &self.cache, self.tau_eval);
        Ok(ev.time_slice_dx(k, t, xs).into_iter().map(|p| p.value).collect())
    }
}

/// Largest mismatch over `lambdas` between the two sides of the global
/// relation on `(ζ, η) × (0, τ)`.
pub fn global_relation_residual(
    problem: &ProblemSpec,
    source: &dyn SolutionSource,
    zeta: f64,
    eta: f64,
    tau: f64,
    lambdas: &[C64],
) -> Result<f64, OracleError> {
    if !(0.0 <= zeta && zeta < eta && eta <= 1.0) {
        return Err(OracleError::BadArgument(format!("need 0 <= zeta < eta <= 1, got ({}, {})", zeta, eta)));
    }
    if lambdas.iter().any(|l| !(l.re.is_finite() && l.im.is_finite())) {
        return Err(OracleError::BadArgument("lambda samples must be finite".into()));
    }
    let n = problem.order();
    let pde = &problem.pde;
    let (ts, ws) = source.time_rule(tau)?;
    // ∂_x^k q at both ends, every time node
    let mut at_zeta = vec![vec![C64::new(0.0, 0.0); ts.len()]; n];
    let mut at_eta = vec![vec![C64::new(0.0, 0.0); ts.len()]; n];
    for (it, &t) in ts.iter().enumerate() {
        for k in 0..n {
            let v = source.dx(k, &[zeta, eta], t)?;
            at_zeta[k][it] = v[0];
            at_eta[k][it] = v[1];
        }
    }
    let start = source.space_transform(0.0, zeta, eta, lambdas)?;
    let end = source.space_transform(tau, zeta, eta, lambdas)?;
    let mut worst: f64 = 0.0;
    for (il, &lam) in lambdas.iter().enumerate() {
        let c = ck_coefficients(pde, lam);
        let w = pde.a * lam.powu(n as u32);
        let mut fz = C64::new(0.0, 0.0);
        let mut fe = C64::new(0.0, 0.0);
        for (it, &t) in ts.iter().enumerate() {
            let e = (w * t).exp() * ws[it];
            for k in 0..n {
                fz += e * c[k] * at_zeta[k][it];
                fe += e * c[k] * at_eta[k][it];
            }
        }
        let lhs = (-I * lam * zeta).exp() * fz - (-I * lam * eta).exp() * fe;
        let rhs = start[il] - (w * tau).exp() * end[il];
        worst = worst.max((lhs - rhs).norm());
    }
    Ok(worst)
}

/// Result of [`series_reference_dirichlet`].
#[derive(Clone, Debug, PartialEq)]
pub struct SeriesValue {
    pub value: C64,
    pub terms: usize,
    pub warning: Option<String>,
}

/// `Σ_k 2 (∫₀¹ q₀ sin(kπs) ds) e^{-k²π²t} sin(kπx)` for `q_t = q_xx` with
/// zero Dirichlet data, truncated where the tail bound drops below `1e-12`.
pub fn series_reference_dirichlet(q0: &DataFunction, t: f64, x: f64) -> SeriesValue {
    let mut warning = None;
    let cap = 2000usize;
    let size = {
        // ∫|q₀| bounds every sine coefficient
        let rule = GaussLegendre::new(64);
        rule.integrate(0.0, 1.0, |s| C64::new(q0.eval(s).norm(), 0.0)).re
    };
    let terms = if t > 0.0 {
        let mut k = 1usize;
        loop {
            let r = (-(PI * PI) * t).exp();
            let first = 2.0 * size * (-((k + 1) as f64).powi(2) * PI * PI * t).exp();
            let tail = first / (1.0 - r.powi(2 * k as i32 + 3)).max(1e-300);
            if tail < 1e-12 || k >= cap {
                break k;
            }
            k += 1;
        }
    } else {
        let smooth_ends = q0.eval(0.0).norm() < 1e-12 && q0.eval(1.0).norm() < 1e-12;
        if !smooth_ends || q0.kind() == crate::data::DataKind::Sampled {
            warning = Some("t = 0 with a datum that does not vanish at the ends: the series converges slowly".into());
        }
        cap
    };
    let mut value = C64::new(0.0, 0.0);
    for k in 1..=terms {
        let w = k as f64 * PI;
        let plus = space_transform(q0, C64::new(-w, 0.0), 0.0, 1.0).to_c();
        let minus = space_transform(q0, C64::new(w, 0.0), 0.0, 1.0).to_c();
        let coeff = (plus - minus) / (2.0 * I) * 2.0;
        value += coeff * (-w * w * t).exp() * (w * x).sin();
    }
    SeriesValue { value, terms, warning }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::fixtures::*;
    use crate::reduce::ModeSum;

    #[test]
    fn fd_dirichlet_heat() {
        let p = dirichlet_heat("sin(pi*x)", 0.1);
        let sol = fd_solve_with(&p, &FdOptions::new(200, 1e-4, 0.1)).unwrap();
        let last = sol.values.last().unwrap();
        let t = *sol.times.last().unwrap();
        let err = sol
            .xs
            .iter()
            .zip(last)
            .map(|(x, v)| (v - C64::new((-PI * PI * t).exp() * (PI * x).sin(), 0.0)).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-4, "{}", err);
        assert!(sol.constraint_residual < 1e-10);
    }

    #[test]
    fn fd_zero_stays_zero() {
        let p = three_point_heat(0.4, 0.4, "0", 0.05);
        let sol = fd_solve(&p, 40, 1e-3).unwrap();
        assert!(sol.values.iter().flatten().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn fd_rejects_misaligned_grid() {
        let p = three_point_heat(0.4, 0.4, "0", 0.05);
        assert!(matches!(fd_solve(&p, 41, 1e-3), Err(OracleError::GridMismatch { .. })));
    }

    #[test]
    fn global_relation_exact_solution() {
        let p = dirichlet_heat("sin(pi*x)", 1.0);
        let u = ModeSum::sine(&p.pde, 1.0);
        let r = global_relation_residual(&p, &FieldSource(&u), 0.0, 1.0, 0.3, &[C64::new(2.0, 0.0)]).unwrap();
        assert!(r < 1e-8, "{}", r);
        let z = ModeSum::default();
        assert_eq!(global_relation_residual(&p, &FieldSource(&z), 0.0, 1.0, 0.3, &[C64::new(2.0, 0.0)]).unwrap(), 0.0);
    }

    #[test]
    fn series_single_mode() {
        let q0 = DataFunction::expression("sin(pi*x)", "x").unwrap();
        let v = series_reference_dirichlet(&q0, 0.1, 0.3);
        let exact = (-PI * PI * 0.1).exp() * (PI * 0.3).sin();
        assert!((v.value.re - exact).abs() < 1e-12);
        assert_eq!(series_reference_dirichlet(&DataFunction::zero("x"), 0.1, 0.3).value, C64::new(0.0, 0.0));
    }
}
