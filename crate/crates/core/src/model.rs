//! Problem descriptions and their validation.
//!
//! A problem is `q_t + a(-i∂x)^n q = 0` on `(0,1)`, initial datum `q₀`, and `n`
//! side conditions `Σ_{k,r} b[k][j][r] ∂x^k q(η_r, t) = g_j(t)`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::DMatrix;

use crate::data::{DataFunction, DataKind};
use crate::scalar::C64;

/// Absolute tolerance on the compatibility residual of a unit-scaled row.
pub const TOL_COMPAT: f64 = 1e-8;
/// Relative cut-off for singular values in [`condition_rank`].
pub const RANK_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PdeSpec {
    pub order: usize,
    pub a: C64,
}

impl PdeSpec {
    pub fn new(order: usize, a: C64) -> PdeSpec {
        PdeSpec { order, a }
    }

    /// Whether `a` is admissible for this order: `e^{iθ}`, `θ ∈ [0,π]` for even
    /// order, `±i` for odd order.
    pub fn coefficient_ok(&self) -> bool {
        let tol = 1e-12;
        if self.order % 2 == 0 {
            (self.a.norm() - 1.0).abs() <= tol && self.a.im >= -tol
        } else {
            (self.a - C64::new(0.0, 1.0)).norm() <= tol || (self.a + C64::new(0.0, 1.0)).norm() <= tol
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct InterfaceGrid {
    eta: Vec<f64>,
}

impl InterfaceGrid {
    pub fn new(eta: Vec<f64>) -> InterfaceGrid {
        InterfaceGrid { eta }
    }

    pub fn eta(&self) -> &[f64] {
        &self.eta
    }

    /// Number of subintervals `m`.
    pub fn m(&self) -> usize {
        self.eta.len().saturating_sub(1)
    }

    pub fn is_valid(&self) -> bool {
        self.eta.len() >= 2
            && self.eta[0] == 0.0
            && *self.eta.last().unwrap() == 1.0
            && self.eta.windows(2).all(|w| w[1] > w[0])
    }
}

/// Coefficients `b[k][j][r]`: derivative order `k`, condition `j`, point `r`.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionTensor {
    n: usize,
    points: usize,
    values: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ModelError {
    Shape(String),
    Data(String),
}

impl fmt::Display for ModelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ModelError::Shape(s) => write!(f, "malformed problem: {}", s),
            ModelError::Data(s) => write!(f, "bad data: {}", s),
        }
    }
}

impl ConditionTensor {
    pub fn zeros(n: usize, points: usize) -> ConditionTensor {
        ConditionTensor { n, points, values: alloc::vec![C64::new(0.0, 0.0); n * n * points] }
    }

    /// From nested `[k][j][r]` lists; all dimensions are checked.
    pub fn from_nested(n: usize, points: usize, b: &[Vec<Vec<C64>>]) -> Result<ConditionTensor, ModelError> {
        if b.len() != n {
            return Err(ModelError::Shape(format!("b has {} derivative slices, expected {}", b.len(), n)));
        }
        let mut t = ConditionTensor::zeros(n, points);
        for (k, bk) in b.iter().enumerate() {
            if bk.len() != n {
                return Err(ModelError::Shape(format!("b[{}] has {} conditions, expected {}", k, bk.len(), n)));
            }
            for (j, bkj) in bk.iter().enumerate() {
                if bkj.len() != points {
                    return Err(ModelError::Shape(format!(
                        "b[{}][{}] has {} points, expected {}",
                        k,
                        j,
                        bkj.len(),
                        points
                    )));
                }
                for (r, v) in bkj.iter().enumerate() {
                    t.set(k, j, r, *v);
                }
            }
        }
        Ok(t)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    /// `m + 1`.
    pub fn points(&self) -> usize {
        self.points
    }

    #[inline]
    pub fn get(&self, k: usize, j: usize, r: usize) -> C64 {
        self.values[(k * self.n + j) * self.points + r]
    }

    #[inline]
    pub fn set(&mut self, k: usize, j: usize, r: usize, v: C64) {
        self.values[(k * self.n + j) * self.points + r] = v;
    }

    /// Row `j` flattened over `(k, r)`.
    pub fn row(&self, j: usize) -> Vec<C64> {
        let mut out = Vec::with_capacity(self.n * self.points);
        for k in 0..self.n {
            for r in 0..self.points {
                out.push(self.get(k, j, r));
            }
        }
        out
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<C64>>> {
        (0..self.n)
            .map(|k| (0..self.n).map(|j| (0..self.points).map(|r| self.get(k, j, r)).collect()).collect())
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProblemSpec {
    pub pde: PdeSpec,
    pub grid: InterfaceGrid,
    pub conditions: ConditionTensor,
    pub boundary_data: Vec<DataFunction>,
    pub initial_datum: DataFunction,
    pub horizon: f64,
}

impl ProblemSpec {
    /// Structural checks only; invariants are reported by [`validate`].
    pub fn new(
        pde: PdeSpec,
        grid: InterfaceGrid,
        conditions: ConditionTensor,
        boundary_data: Vec<DataFunction>,
        initial_datum: DataFunction,
        horizon: f64,
    ) -> Result<ProblemSpec, ModelError> {
        let n = pde.order;
        if n < 2 {
            return Err(ModelError::Shape(format!("order {} < 2", n)));
        }
        if conditions.order() != n {
            return Err(ModelError::Shape(format!("tensor order {} differs from PDE order {}", conditions.order(), n)));
        }
        if conditions.points() != grid.eta().len() {
            return Err(ModelError::Shape(format!(
                "tensor has {} points but the grid has {}",
                conditions.points(),
                grid.eta().len()
            )));
        }
        if grid.eta().len() < 2 {
            return Err(ModelError::Shape("grid needs at least the two end points".into()));
        }
        if boundary_data.len() != n {
            return Err(ModelError::Shape(format!("{} boundary data given, expected {}", boundary_data.len(), n)));
        }
        Ok(ProblemSpec { pde, grid, conditions, boundary_data, initial_datum, horizon })
    }

    pub fn order(&self) -> usize {
        self.pde.order
    }

    pub fn m(&self) -> usize {
        self.grid.m()
    }

    pub fn eta(&self) -> &[f64] {
        self.grid.eta()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Finding {
    pub check: String,
    pub location: String,
    pub passed: bool,
    pub approximate: bool,
    pub detail: String,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.findings.iter().all(|f| f.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| !f.passed)
    }

    fn push(&mut self, check: &str, location: String, passed: bool, detail: String) -> &mut Finding {
        self.findings.push(Finding { check: check.into(), location, passed, approximate: false, detail });
        self.findings.last_mut().unwrap()
    }
}

/// Numerical rank of the `n × n(m+1)` flattening of the conditions.
pub fn condition_rank(conditions: &ConditionTensor) -> usize {
    let n = conditions.order();
    let cols = n * conditions.points();
    let m = DMatrix::from_fn(n, cols, |j, c| {
        let k = c / conditions.points();
        let r = c % conditions.points();
        conditions.get(k, j, r)
    });
    let sv = m.singular_values();
    let top = sv.iter().cloned().fold(0.0, f64::max);
    if top == 0.0 {
        return 0;
    }
    sv.iter().filter(|s| **s > RANK_TOL * top).count()
}

/// Left-hand side of condition `j` applied to `q₀`, and whether any derivative
/// was approximated.
pub fn condition_functional(problem: &ProblemSpec, j: usize, f: &DataFunction) -> (C64, bool) {
    let n = problem.order();
    let mut s = C64::new(0.0, 0.0);
    let mut approx = false;
    for k in 0..n {
        for (r, &x) in problem.eta().iter().enumerate() {
            let b = problem.conditions.get(k, j, r);
            if b.norm() == 0.0 {
                continue;
            }
            let (v, exact) = f.derivative_at(k, x);
            approx |= !exact;
            s += b * v;
        }
    }
    (s, approx)
}

/// Checks every invariant of the problem and reports one finding each.
pub fn validate(problem: &ProblemSpec) -> ValidationReport {
    let mut rep = ValidationReport::default();
    let n = problem.order();

    let closed = n == 2 || n == 3;
    rep.push(
        "order",
        "order".into(),
        n >= 2,
        if closed { format!("n = {}", n) } else { format!("n = {}: generic solve only", n) },
    );

    let a = problem.pde.a;
    let ok = problem.pde.coefficient_ok();
    let want = if n % 2 == 0 { "|a| = 1 and Im a >= 0" } else { "a = i or a = -i" };
    rep.push("coefficient", "a".into(), ok, format!("a = {}{:+}i; need {}", a.re, a.im, want));

    let grid_ok = problem.grid.is_valid();
    rep.push(
        "grid",
        "eta".into(),
        grid_ok,
        if grid_ok { format!("m = {}", problem.m()) } else { "need 0 = eta[0] < ... < eta[m] = 1".into() },
    );

    let rank = condition_rank(&problem.conditions);
    rep.push("rank", "b".into(), rank == n, format!("rank {} of {}", rank, n));

    for j in 0..n {
        let (lhs, approx) = condition_functional(problem, j, &problem.initial_datum);
        let g0 = problem.boundary_data[j].eval(0.0);
        let scale = problem.conditions.row(j).iter().map(|c| c.norm()).fold(0.0, f64::max);
        let resid = (lhs - g0).norm();
        let normalized = if scale > 0.0 { resid / scale } else { resid };
        let f = rep.push(
            "compatibility",
            format!("condition {}", j),
            normalized <= TOL_COMPAT,
            format!("|B_j q0 - g_j(0)| = {:.3e} (row scale {:.3e})", resid, scale),
        );
        f.approximate = approx;
        if approx {
            f.detail.push_str("; approximate: derivatives by finite differences");
        }
    }

    let sampled = problem.initial_datum.kind() == DataKind::Sampled;
    let f = rep.push(
        "initial-smoothness",
        "q0".into(),
        true,
        if sampled { "sampled datum: smoothness assumed".into() } else { "structural".into() },
    );
    f.approximate = sampled;

    rep.push("horizon", "T".into(), problem.horizon > 0.0 && problem.horizon.is_finite(), format!("T = {}", problem.horizon));
    rep
}

/// Common fixtures used across the crate's tests and by downstream callers.
pub mod fixtures {
    use super::*;
    use alloc::vec;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    /// Two-point Dirichlet conditions for order `n = 2`.
    pub fn dirichlet_tensor() -> ConditionTensor {
        let mut t = ConditionTensor::zeros(2, 2);
        t.set(0, 0, 0, c(1.0));
        t.set(0, 1, 1, c(1.0));
        t
    }

    /// Two-point Neumann conditions for order `n = 2`.
    pub fn neumann_tensor() -> ConditionTensor {
        let mut t = ConditionTensor::zeros(2, 2);
        t.set(1, 0, 0, c(1.0));
        t.set(1, 1, 1, c(1.0));
        t
    }

    /// `q(0) - c0 q(1/2) = g0`, `q(1) - c1 q(1/2) = g1`.
    pub fn three_point_tensor(c0: f64, c1: f64) -> ConditionTensor {
        let mut t = ConditionTensor::zeros(2, 3);
        t.set(0, 0, 0, c(1.0));
        t.set(0, 0, 1, c(-c0));
        t.set(0, 1, 1, c(-c1));
        t.set(0, 1, 2, c(1.0));
        t
    }

    /// Third-order conditions `q(0) - c q(1/2) = 0`, `q(1) = 0`, `q_x(1) = 0`.
    pub fn third_order_tensor(cc: f64) -> ConditionTensor {
        let mut t = ConditionTensor::zeros(3, 3);
        t.set(0, 0, 0, c(1.0));
        t.set(0, 0, 1, c(-cc));
        t.set(0, 1, 2, c(1.0));
        t.set(1, 2, 2, c(1.0));
        t
    }

    pub fn heat_problem(conditions: ConditionTensor, eta: Vec<f64>, q0: &str, g: [&str; 2], horizon: f64) -> ProblemSpec {
        ProblemSpec::new(
            PdeSpec::new(2, c(1.0)),
            InterfaceGrid::new(eta),
            conditions,
            vec![DataFunction::expression(g[0], "t").unwrap(), DataFunction::expression(g[1], "t").unwrap()],
            DataFunction::expression(q0, "x").unwrap(),
            horizon,
        )
        .unwrap()
    }

    pub fn dirichlet_heat(q0: &str, horizon: f64) -> ProblemSpec {
        heat_problem(dirichlet_tensor(), vec![0.0, 1.0], q0, ["0", "0"], horizon)
    }

    pub fn three_point_heat(c0: f64, c1: f64, q0: &str, horizon: f64) -> ProblemSpec {
        heat_problem(three_point_tensor(c0, c1), vec![0.0, 0.5, 1.0], q0, ["0", "0"], horizon)
    }

    pub fn third_order_problem(cc: f64, a: C64, q0: &str, horizon: f64) -> ProblemSpec {
        ProblemSpec::new(
            PdeSpec::new(3, a),
            InterfaceGrid::new(vec![0.0, 0.5, 1.0]),
            third_order_tensor(cc),
            vec![DataFunction::zero("t"), DataFunction::zero("t"), DataFunction::zero("t")],
            DataFunction::expression(q0, "x").unwrap(),
            horizon,
        )
        .unwrap()
    }
}
