//! Rewriting integral conditions as multipoint conditions.
//!
//! Differentiating `Σ_k Σ_r ∫_{η_{r-1}}^{η_r} b^r_{kj} x^k q dx = g_j` in time and
//! using `q_t = -(a/iⁿ) ∂ⁿq` gives `∫ w ∂ⁿq = -(iⁿ/a) g_j'`. Integrating by
//! parts `k+1` times moves everything to point values
//! `∂^{n-1-p} q(η_r)` with coefficient `(-1)^p k!/(k-p)! η_r^{k-p} (b^r - b^{r+1})`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::{DataFunction, DataKind};
use crate::model::{ConditionTensor, InterfaceGrid, ModelError, PdeSpec, ProblemSpec};
use crate::quad::GaussLegendre;
use crate::scalar::C64;

#[derive(Clone, Debug, PartialEq)]
pub enum NonlocalRow {
    /// `Σ b^r_k ∂^k q(η_r) = g`; coefficients indexed `[k][r]`.
    Pointwise { coeffs: Vec<Vec<C64>>, datum: DataFunction },
    /// `Σ ∫_{η_{r-1}}^{η_r} b^r_k x^k q dx = g`; weights indexed `[k][r]`, `r = 0` unused.
    Moment { weights: Vec<Vec<C64>>, datum: DataFunction },
    /// `Σ ∫_{η_{r-1}}^{η_r} b^r_k ∂^k q dx = g`.
    Derivative { weights: Vec<Vec<C64>>, datum: DataFunction },
}

impl NonlocalRow {
    fn table(&self) -> &Vec<Vec<C64>> {
        match self {
            NonlocalRow::Pointwise { coeffs, .. } => coeffs,
            NonlocalRow::Moment { weights, .. } | NonlocalRow::Derivative { weights, .. } => weights,
        }
    }

    pub fn datum(&self) -> &DataFunction {
        match self {
            NonlocalRow::Pointwise { datum, .. }
            | NonlocalRow::Moment { datum, .. }
            | NonlocalRow::Derivative { datum, .. } => datum,
        }
    }

    pub fn is_integral(&self) -> bool {
        !matches!(self, NonlocalRow::Pointwise { .. })
    }
}

/// Conditions `0..=J` pointwise, the remaining `n-1-J` integral.
#[derive(Clone, Debug, PartialEq)]
pub struct NonlocalConditionSet {
    pub boundary_count: isize,
    pub rows: Vec<NonlocalRow>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct NonlocalProblem {
    pub pde: PdeSpec,
    pub grid: InterfaceGrid,
    pub conditions: NonlocalConditionSet,
    pub initial_datum: DataFunction,
    pub horizon: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ReduceError {
    Shape(String),
    /// `J` disagrees with the row kinds or lies outside `-1..n-1`.
    BadBoundaryCount(isize),
    /// The datum has no exact derivative and numeric differentiation is off.
    NotDifferentiable { row: usize },
    /// A derivative-weighted row mixing `k = 0` with higher `k`.
    MixedDerivativeRow { row: usize },
    Model(ModelError),
}

impl fmt::Display for ReduceError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ReduceError::Shape(s) => write!(f, "shape error: {}", s),
            ReduceError::BadBoundaryCount(j) => write!(f, "J = {} is out of range or disagrees with the row kinds", j),
            ReduceError::NotDifferentiable { row } => write!(
                f,
                "row {}: datum is sampled; enable numeric differentiation to reduce it",
                row
            ),
            ReduceError::MixedDerivativeRow { row } => write!(
                f,
                "row {}: derivative-weighted integrals must not mix the undifferentiated term with derivatives",
                row
            ),
            ReduceError::Model(e) => write!(f, "{}", e),
        }
    }
}

impl From<ModelError> for ReduceError {
    fn from(e: ModelError) -> Self {
        ReduceError::Model(e)
    }
}

impl NonlocalProblem {
    pub fn check(&self) -> Result<(), ReduceError> {
        let n = self.pde.order;
        let points = self.grid.eta().len();
        if !self.grid.is_valid() {
            return Err(ReduceError::Shape("interface grid must be 0 = eta_0 < ... < eta_m = 1".into()));
        }
        let c = &self.conditions;
        if c.rows.len() != n {
            return Err(ReduceError::Shape(format!("{} rows for order {}", c.rows.len(), n)));
        }
        if c.boundary_count < -1 || c.boundary_count > n as isize - 1 {
            return Err(ReduceError::BadBoundaryCount(c.boundary_count));
        }
        for (j, row) in c.rows.iter().enumerate() {
            let expect_integral = j as isize > c.boundary_count;
            if row.is_integral() != expect_integral {
                return Err(ReduceError::BadBoundaryCount(c.boundary_count));
            }
            let t = row.table();
            if t.len() != n || t.iter().any(|r| r.len() != points) {
                return Err(ReduceError::Shape(format!("row {}: table must be {} x {}", j, n, points)));
            }
            if row.is_integral() && t.iter().any(|r| r[0].norm() != 0.0) {
                return Err(ReduceError::Shape(format!("row {}: integral weights start at interval 1", j)));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TermKind {
    Moment,
    Derivative,
}

/// One contribution to a reduced coefficient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AuditTerm {
    /// Power of `x` (moment rows) or derivative order (derivative rows) of the weight.
    pub weight_order: usize,
    /// Integration by parts step.
    pub p: usize,
    pub point: usize,
    /// Derivative order at the point.
    pub derivative: usize,
    /// `k!/(k-p)! η_r^{k-p} (b^r - b^{r+1})`, before the sign `(-1)^p`.
    pub tilde: C64,
    pub coefficient: C64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RowAudit {
    pub row: usize,
    pub kind: TermKind,
    pub terms: Vec<AuditTerm>,
    /// Factor applied to `g_j'` (moment rows) or `1` (derivative rows).
    pub datum_factor: C64,
}

impl RowAudit {
    /// The reduced coefficients `[k][r]` rebuilt from the terms.
    pub fn reassemble(&self, n: usize, points: usize) -> Vec<Vec<C64>> {
        let mut out = vec![vec![C64::new(0.0, 0.0); points]; n];
        for t in &self.terms {
            out[t.derivative][t.point] += t.coefficient;
        }
        out
    }

    pub fn render(&self, eta: &[f64]) -> String {
        let mut s = format!(
            "row {} ({}): datum factor {}\n",
            self.row,
            match self.kind {
                TermKind::Moment => "x^k-weighted integral, differentiated in t",
                TermKind::Derivative => "derivative-weighted integral",
            },
            fmt_c(self.datum_factor)
        );
        for t in &self.terms {
            s.push_str(&format!(
                "  weight order {}, step p={}: d^{} q({}) += {}\n",
                t.weight_order,
                t.p,
                t.derivative,
                eta[t.point],
                fmt_c(t.coefficient)
            ));
        }
        s
    }
}

fn fmt_c(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReductionResult {
    pub tensor: ConditionTensor,
    pub new_data: Vec<DataFunction>,
    pub audit: Vec<RowAudit>,
    pub problem: ProblemSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReduceOptions {
    pub numeric_derivative: bool,
}

fn falling(k: usize, p: usize) -> f64 {
    (k - p + 1..=k).map(|v| v as f64).product()
}

fn jump(w: &[Vec<C64>], k: usize, r: usize) -> C64 {
    let m = w[k].len() - 1;
    let here = if r >= 1 { w[k][r] } else { C64::new(0.0, 0.0) };
    let next = if r < m { w[k][r + 1] } else { C64::new(0.0, 0.0) };
    here - next
}

fn moment_terms(w: &[Vec<C64>], eta: &[f64], n: usize) -> Vec<AuditTerm> {
    let mut terms = Vec::new();
    for (k, wk) in w.iter().enumerate() {
        if wk.iter().all(|v| v.norm() == 0.0) {
            continue;
        }
        for p in 0..=k {
            for (r, &x) in eta.iter().enumerate() {
                let d = jump(w, k, r);
                if d.norm() == 0.0 {
                    continue;
                }
                let tilde = d * falling(k, p) * x.powi((k - p) as i32);
                let sign = if p % 2 == 0 { 1.0 } else { -1.0 };
                terms.push(AuditTerm { weight_order: k, p, point: r, derivative: n - 1 - p, tilde, coefficient: tilde * sign });
            }
        }
    }
    terms
}

fn derivative_terms(w: &[Vec<C64>], eta: &[f64]) -> Vec<AuditTerm> {
    let mut terms = Vec::new();
    for k in 1..w.len() {
        for r in 0..eta.len() {
            let d = jump(w, k, r);
            if d.norm() != 0.0 {
                terms.push(AuditTerm { weight_order: k, p: 0, point: r, derivative: k - 1, tilde: d, coefficient: d });
            }
        }
    }
    terms
}

/// Replaces every integral row by its equivalent multipoint row.
pub fn reduce_nonlocal(problem: &NonlocalProblem, opts: ReduceOptions) -> Result<ReductionResult, ReduceError> {
    problem.check()?;
    let n = problem.pde.order;
    let eta = problem.grid.eta();
    let points = eta.len();
    // -(iⁿ/a)
    let datum_factor = -crate::spectral::i_pow(n) / problem.pde.a;
    let mut tensor = ConditionTensor::zeros(n, points);
    let mut data = Vec::with_capacity(n);
    let mut audit = Vec::new();
    for (j, row) in problem.conditions.rows.iter().enumerate() {
        match row {
            NonlocalRow::Pointwise { coeffs, datum } => {
                for k in 0..n {
                    for r in 0..points {
                        tensor.set(k, j, r, coeffs[k][r]);
                    }
                }
                data.push(datum.clone());
            }
            NonlocalRow::Moment { weights, datum } => {
                let terms = moment_terms(weights, eta, n);
                let rec = RowAudit { row: j, kind: TermKind::Moment, terms, datum_factor };
                write_row(&mut tensor, j, &rec.reassemble(n, points));
                audit.push(rec);
                data.push(differentiate(datum, j, opts)?.scaled(datum_factor));
            }
            NonlocalRow::Derivative { weights, datum } => {
                let has_plain = weights[0].iter().any(|v| v.norm() != 0.0);
                let has_deriv = weights[1..].iter().any(|r| r.iter().any(|v| v.norm() != 0.0));
                let rec = if has_plain && has_deriv {
                    return Err(ReduceError::MixedDerivativeRow { row: j });
                } else if has_plain {
                    // only the undifferentiated weight: same as a moment row with k = 0
                    let only0: Vec<Vec<C64>> =
                        (0..n).map(|k| if k == 0 { weights[0].clone() } else { vec![C64::new(0.0, 0.0); points] }).collect();
                    data.push(differentiate(datum, j, opts)?.scaled(datum_factor));
                    RowAudit { row: j, kind: TermKind::Moment, terms: moment_terms(&only0, eta, n), datum_factor }
                } else {
                    data.push(datum.clone());
                    RowAudit { row: j, kind: TermKind::Derivative, terms: derivative_terms(weights, eta), datum_factor: C64::new(1.0, 0.0) }
                };
                write_row(&mut tensor, j, &rec.reassemble(n, points));
                audit.push(rec);
            }
        }
    }
    let spec = ProblemSpec::new(
        problem.pde.clone(),
        problem.grid.clone(),
        tensor.clone(),
        data.clone(),
        problem.initial_datum.clone(),
        problem.horizon,
    )?;
    Ok(ReductionResult { tensor, new_data: data, audit, problem: spec })
}

fn write_row(t: &mut ConditionTensor, j: usize, row: &[Vec<C64>]) {
    for (k, rk) in row.iter().enumerate() {
        for (r, v) in rk.iter().enumerate() {
            t.set(k, j, r, *v);
        }
    }
}

fn differentiate(g: &DataFunction, row: usize, opts: ReduceOptions) -> Result<DataFunction, ReduceError> {
    if g.kind() == DataKind::Sampled && !opts.numeric_derivative {
        return Err(ReduceError::NotDifferentiable { row });
    }
    Ok(g.derivative())
}

/// Smooth function of `(x, t)` with exact derivatives.
pub trait SpaceTimeField {
    /// `∂_x^k u(x, t)`.
    fn dx(&self, k: usize, x: f64, t: f64) -> C64;
    fn dt(&self, x: f64, t: f64) -> C64;
}

/// `c·e^{κx + ωt}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpMode {
    pub coeff: C64,
    pub kappa: C64,
    pub omega: C64,
}

impl ExpMode {
    /// The mode with the time dependence the PDE forces.
    pub fn solving(pde: &PdeSpec, coeff: C64, kappa: C64) -> ExpMode {
        let minus_i = C64::new(0.0, -1.0);
        ExpMode { coeff, kappa, omega: -pde.a * (minus_i * kappa).powu(pde.order as u32) }
    }
}

/// A finite sum of exponential modes.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ModeSum(pub Vec<ExpMode>);

impl ModeSum {
    /// `e^{-a(kπ)ⁿ t} sin(kπx)`-type real modes built from two exponentials.
    pub fn sine(pde: &PdeSpec, k: f64) -> ModeSum {
        let w = C64::new(0.0, k * core::f64::consts::PI);
        let h = C64::new(0.0, -0.5);
        ModeSum(vec![ExpMode::solving(pde, h, w), ExpMode::solving(pde, -h, -w)])
    }

    pub fn cosine(pde: &PdeSpec, k: f64) -> ModeSum {
        let w = C64::new(0.0, k * core::f64::consts::PI);
        let h = C64::new(0.5, 0.0);
        ModeSum(vec![ExpMode::solving(pde, h, w), ExpMode::solving(pde, h, -w)])
    }
}

impl SpaceTimeField for ModeSum {
    fn dx(&self, k: usize, x: f64, t: f64) -> C64 {
        self.0.iter().map(|m| m.coeff * m.kappa.powu(k as u32) * (m.kappa * x + m.omega * t).exp()).sum()
    }

    fn dt(&self, x: f64, t: f64) -> C64 {
        self.0.iter().map(|m| m.coeff * m.omega * (m.kappa * x + m.omega * t).exp()).sum()
    }
}

fn integral_functional<F: Fn(f64) -> C64>(w: &[Vec<C64>], eta: &[f64], deriv: bool, f: F, fk: &dyn Fn(usize, f64) -> C64) -> C64 {
    let rule = GaussLegendre::new(24);
    let mut total = C64::new(0.0, 0.0);
    for r in 1..eta.len() {
        for (k, wk) in w.iter().enumerate() {
            if wk[r].norm() == 0.0 {
                continue;
            }
            // split each interval so the rule stays exact to rounding for moderate modes
            let pieces = 8;
            for s in 0..pieces {
                let lo = eta[r - 1] + (eta[r] - eta[r - 1]) * s as f64 / pieces as f64;
                let hi = eta[r - 1] + (eta[r] - eta[r - 1]) * (s + 1) as f64 / pieces as f64;
                total += wk[r]
                    * rule.integrate(lo, hi, |x| if deriv { fk(k, x) } else { x.powi(k as i32) * f(x) });
            }
        }
    }
    total
}

/// Largest mismatch, over sample times, between the time derivative of each
/// integral condition and the reduced multipoint row (or, for derivative
/// rows, between the integral itself and the reduced row).
pub fn verify_reduction(original: &NonlocalProblem, result: &ReductionResult, u: &dyn SpaceTimeField) -> f64 {
    let eta = original.grid.eta();
    let n = original.pde.order;
    let scale = -original.pde.a / crate::spectral::i_pow(n);
    let times: Vec<f64> = (0..=10).map(|i| original.horizon * i as f64 / 10.0).collect();
    let mut worst: f64 = 0.0;
    for (j, row) in original.conditions.rows.iter().enumerate() {
        if !row.is_integral() {
            continue;
        }
        let derivative_kind = result.audit.iter().find(|a| a.row == j).map(|a| a.kind) == Some(TermKind::Derivative);
        for &t in &times {
            let mp: C64 = (0..n)
                .flat_map(|k| (0..eta.len()).map(move |r| (k, r)))
                .map(|(k, r)| result.tensor.get(k, j, r) * u.dx(k, eta[r], t))
                .sum();
            let w = row.table();
            let lhs = if derivative_kind {
                integral_functional(w, eta, true, |_| C64::new(0.0, 0.0), &|k, x| u.dx(k, x, t))
            } else {
                // only the k = 0 weight survives for derivative rows routed through moments
                let w0: Vec<Vec<C64>> = match row {
                    NonlocalRow::Derivative { weights, .. } => {
                        (0..n).map(|k| if k == 0 { weights[0].clone() } else { vec![C64::new(0.0, 0.0); eta.len()] }).collect()
                    }
                    _ => w.clone(),
                };
                integral_functional(&w0, eta, false, |x| u.dt(x, t), &|_, _| C64::new(0.0, 0.0))
            };
            let rhs = if derivative_kind { mp } else { scale * mp };
            worst = worst.max((lhs - rhs).norm());
        }
    }
    worst
}

/// Human-readable account of the reduction.
pub fn audit_text(problem: &NonlocalProblem, result: &ReductionResult) -> String {
    let mut s = String::new();
    for a in &result.audit {
        s.push_str(&a.render(problem.grid.eta()));
    }
    s
}

/// The two-interval heat example: `∫_0^{1/2} q = 0`, `∫_{1/2}^1 (1-x) q = 0`.
pub fn two_integral_heat_example(q0: &str, horizon: f64) -> NonlocalProblem {
    let z = C64::new(0.0, 0.0);
    let o = C64::new(1.0, 0.0);
    let zero = DataFunction::zero("t");
    NonlocalProblem {
        pde: PdeSpec::new(2, o),
        grid: InterfaceGrid::new(vec![0.0, 0.5, 1.0]),
        conditions: NonlocalConditionSet {
            boundary_count: -1,
            rows: vec![
                NonlocalRow::Moment { weights: vec![vec![z, o, z], vec![z, z, z]], datum: zero.clone() },
                NonlocalRow::Moment { weights: vec![vec![z, z, o], vec![z, z, -o]], datum: zero },
            ],
        },
        initial_datum: DataFunction::expression(q0, "x").expect("valid expression"),
        horizon,
    }
}
