//! Transforms of the data, the contours `∂D_R^±`, and evaluation of
//!
//! `q(x,t) = (1/2π)[∫_ℝ e^{iλx-aλⁿt} q̂₀ dλ − ∫_{∂D⁺} e^{iλx-aλⁿt} u₀ dλ − ∫_{∂D⁻} e^{iλx-aλⁿt} u_{mn} dλ]`
//!
//! where `u` solves the spectral system with no `q̂_τ` terms.
//!
//! The boundary-data part of `u` contains `∫₀^τ e^{aλⁿs}g(s)ds`. Multiplied by
//! `e^{-aλⁿt}` it splits into `∫₀^t`, which decays outside `D`, and `∫_t^τ`,
//! which decays inside `D`. The first is integrated with the initial-datum part
//! on rays turned slightly out of `D`, the second on rays turned into `D`.
//!
//! Both pieces carry the same slowly decaying part
//! `±Σ_p (-1)^p g^{(p)}(t)/(aλⁿ)^{p+1}`, which has no exponential factor in `λ`.
//! It is removed from the first and added to the second, where `e^{iλx}` and
//! the sector geometry make the contour shift legitimate. What remains on each
//! leg decays like a high power of `1/λ` for every `x`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::DataFunction;
use crate::model::{PdeSpec, ProblemSpec};
use crate::quad::GaussLegendre;
use crate::scalar::{Scalar, Wide, C64};
use crate::spectral::{self, alpha_pow, data_factor, RhsVector, SpectralError, SpectralPoint};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Angular offset of the rays from the sector boundaries.
pub const EPS_SEC: f64 = 1e-2;
/// Required decay `Re(aλⁿ)t` at the truncation radius.
pub const DECAY_TARGET: f64 = 40.0;
/// Panel rule order.
pub const PANEL_ORDER: usize = 16;
/// Geometric growth of ray panels.
pub const PANEL_GROWTH: f64 = 1.5;
/// Largest phase change (radians) of the integrand across one panel.
pub const PANEL_PHASE: f64 = 8.0;
/// Stop a ray once a panel contributes less than this fraction of the running sum.
pub const STOP_RATIO: f64 = 1e-14;
/// Hard ceiling on truncation radii.
pub const LAMBDA_CEILING: f64 = 1e5;
/// Truncation radius (in units of `max(R, 1)`) of legs carrying boundary data.
pub const BOUNDARY_RADIUS: f64 = 256.0;
/// Terms of the slowly decaying boundary-data part moved between the legs.
pub const STATIC_TERMS: usize = 4;

#[derive(Clone, Debug, PartialEq)]
pub enum RepresentationError {
    /// The representation is not available for this equation.
    Unsupported(String),
    /// Boundary-value problems with `a = ±i` for even order violate the
    /// dissipativity the contour construction relies on.
    NotDissipative(String),
    BadGrid(String),
    Spectral(SpectralError),
    Overflow { lambda: C64 },
}

impl fmt::Display for RepresentationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepresentationError::Unsupported(s) => write!(f, "unsupported: {}", s),
            RepresentationError::NotDissipative(s) => write!(f, "{}", s),
            RepresentationError::BadGrid(s) => write!(f, "bad evaluation grid: {}", s),
            RepresentationError::Spectral(e) => write!(f, "{}", e),
            RepresentationError::Overflow { lambda } => {
                write!(f, "transform overflow at lambda = {}{:+}i", lambda.re, lambda.im)
            }
        }
    }
}

impl From<SpectralError> for RepresentationError {
    fn from(e: SpectralError) -> Self {
        RepresentationError::Spectral(e)
    }
}

/// `q̂₀^r(λ) = ∫_{η_{r-1}}^{η_r} e^{-iλx} q₀(x) dx`, `1 ≤ r ≤ m`.
pub fn q0_transform(problem: &ProblemSpec, r: usize, lambda: C64) -> Wide {
    let eta = problem.eta();
    problem.initial_datum.exp_transform(-I * lambda, eta[r - 1], eta[r])
}

/// `∫_lo^hi e^{-iλx} f(x) dx` for any datum.
pub fn space_transform(f: &DataFunction, lambda: C64, lo: f64, hi: f64) -> Wide {
    f.exp_transform(-I * lambda, lo, hi)
}

/// `h_j(λ;τ) = (a/(-iⁿ)) ∫₀^τ e^{aλⁿs} g_j(s) ds`.
pub fn h_transform(problem: &ProblemSpec, j: usize, lambda: C64, tau: f64) -> Wide {
    let k = kappa(&problem.pde, lambda);
    Wide::from_c(data_factor(&problem.pde)) * problem.boundary_data[j].exp_transform(k, 0.0, tau)
}

/// `aλⁿ`
pub fn kappa(pde: &PdeSpec, lambda: C64) -> C64 {
    pde.a * lambda.powu(pde.order as u32)
}

/// Right-hand side at `λ` with horizon `τ` and no `q̂_τ` part.
pub fn rhs_vector<S: Scalar>(problem: &ProblemSpec, pt: &SpectralPoint, tau: f64) -> RhsVector<S> {
    let n = problem.order();
    let m = problem.m();
    let mut rhs = RhsVector::zeros(n, m);
    for j in 0..n {
        rhs.h[j] = from_wide(h_transform(problem, j, pt.lambda, tau));
    }
    for r in 1..=m {
        for p in 0..n {
            rhs.q0hat[r - 1][p] = from_wide(q0_transform(problem, r, pt.rotated(p)));
        }
    }
    rhs
}

/// Adds `e^{aλⁿτ} q̂_τ^r(α^pλ)` for a given profile `q(·,τ)`; used to check identities.
pub fn with_qtau<S: Scalar>(
    problem: &ProblemSpec,
    pt: &SpectralPoint,
    tau: f64,
    mut rhs: RhsVector<S>,
    q_tau: &DataFunction,
) -> RhsVector<S> {
    let n = problem.order();
    let eta = problem.eta();
    let e = Wide::exp_c(kappa(&problem.pde, pt.lambda) * tau);
    let q = (1..=problem.m())
        .map(|r| (0..n).map(|p| from_wide(e * space_transform(q_tau, pt.rotated(p), eta[r - 1], eta[r]))).collect())
        .collect();
    rhs.qtau = Some(q);
    rhs
}

fn from_wide<S: Scalar>(w: Wide) -> S {
    // exact for Wide, rounds to f64 range for C64
    let e = w.exponent();
    let m = w.mantissa();
    if e == 0 {
        return S::from_c(m);
    }
    let two = S::from_c(C64::new(2.0, 0.0));
    let mut scale = S::one();
    let mut base = if e > 0 { two } else { S::one() / two };
    let mut k = e.unsigned_abs();
    while k > 0 {
        if k & 1 == 1 {
            scale *= base;
        }
        base = base * base;
        k >>= 1;
    }
    S::from_c(m) * scale
}

/// Angle reduced to `[0, 2π)`.
pub fn wrap(angle: f64) -> f64 {
    let r = angle % (2.0 * PI);
    if r < 0.0 { r + 2.0 * PI } else { r }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    Plus,
    Minus,
}

/// An open sector `lo < arg λ < hi` of `D = {Re(aλⁿ) < 0}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Sector {
    pub lo: f64,
    pub hi: f64,
    pub half: Half,
}

impl Sector {
    pub fn opening(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn contains(&self, angle: f64) -> bool {
        let a = wrap(angle - self.lo);
        a > 0.0 && a < self.opening()
    }
}

/// The `n` sectors of `D`, each assigned to `C⁺` or `C⁻` by its bisector.
pub fn decay_sectors(pde: &PdeSpec) -> Result<Vec<Sector>, RepresentationError> {
    let n = pde.order as f64;
    let theta = pde.a.arg();
    let mut out = Vec::new();
    for k in 0..pde.order {
        let shift = 2.0 * PI * k as f64 / n;
        let mut lo = (PI / 2.0 - theta) / n + shift;
        lo = wrap(lo);
        let hi = lo + PI / n;
        let mid = 0.5 * (lo + hi);
        let s = mid.sin();
        if s.abs() < 1e-12 {
            return Err(RepresentationError::Unsupported(format!(
                "a sector of D is bisected by the real axis (arg a = {:.4})",
                theta
            )));
        }
        out.push(Sector { lo, hi, half: if s > 0.0 { Half::Plus } else { Half::Minus } });
    }
    out.sort_by(|a, b| a.lo.partial_cmp(&b.lo).unwrap());
    Ok(out)
}

/// Directions for the two halves of the real line: bisectors of the sectors
/// where `Re(aλⁿ) > 0` closest to `0` and to `π`.
pub fn real_line_angles(pde: &PdeSpec) -> (f64, f64) {
    let n = pde.order as f64;
    let theta = pde.a.arg();
    let centres: Vec<f64> = (0..2 * pde.order).map(|k| (2.0 * PI * k as f64 - theta) / n).collect();
    let nearest = |target: f64| {
        let mut best = 0.0;
        let mut dist = f64::INFINITY;
        for &c in &centres {
            let d = wrap(c - target + PI) - PI;
            if d.abs() < dist - 1e-12 {
                dist = d.abs();
                best = target + d;
            }
        }
        best
    };
    (nearest(0.0), nearest(PI))
}

/// Whether the representation is available for this equation.
pub fn check_supported(pde: &PdeSpec, allow_nondissipative: bool) -> Result<Option<String>, RepresentationError> {
    match pde.order {
        2 => {
            if pde.a.re > 1e-12 {
                Ok(None)
            } else if pde.a.re.abs() <= 1e-12 {
                let msg = String::from(
                    "a = ±i for a second-order problem: the contour deformation needs Re a > 0, \
                     which fails for Schrödinger-type equations",
                );
                if allow_nondissipative {
                    Ok(Some(msg))
                } else {
                    Err(RepresentationError::NotDissipative(msg))
                }
            } else {
                Err(RepresentationError::Unsupported("second order with Re a < 0".into()))
            }
        }
        3 => {
            if (pde.a.re).abs() <= 1e-12 && (pde.a.im.abs() - 1.0).abs() <= 1e-12 {
                Ok(None)
            } else {
                Err(RepresentationError::Unsupported("third order needs a = ±i".into()))
            }
        }
        n => Err(RepresentationError::Unsupported(format!("no solution representation for order {}", n))),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Role {
    /// Initial-datum part and `∫₀^t` part of the boundary data, on ∂D turned outward.
    Data,
    /// `∫_t^τ` part of the boundary data, on ∂D turned inward.
    Later,
    /// The real-line integral of `q̂₀`.
    Real,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Panel {
    pub nodes: Vec<C64>,
    /// `dλ/du` at each node, `u ∈ [-1,1]`, orientation included.
    pub jac: Vec<C64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Leg {
    pub role: Role,
    /// `None` for the real line.
    pub half: Option<Half>,
    /// Rays may stop early; arcs are always summed in full.
    pub is_ray: bool,
    pub angle: f64,
    /// Ray panels run from the inner radius outward.
    pub panels: Vec<Panel>,
}

impl Leg {
    pub fn node_count(&self) -> usize {
        self.panels.iter().map(|p| p.nodes.len()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourPlan {
    pub half: Half,
    pub r: f64,
    pub legs: Vec<Leg>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourSet {
    pub plus: ContourPlan,
    pub minus: ContourPlan,
    pub real: Vec<Leg>,
    pub r: f64,
    pub lambda_max: f64,
    pub warnings: Vec<String>,
}

impl ContourSet {
    pub fn legs(&self) -> impl Iterator<Item = &Leg> {
        self.real.iter().chain(self.plus.legs.iter()).chain(self.minus.legs.iter())
    }

    pub fn node_count(&self) -> usize {
        self.legs().map(|l| l.node_count()).sum()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourOptions {
    pub r: f64,
    pub lambda_max: Option<f64>,
    /// Smallest and largest evaluation times; they fix truncation and panel size.
    pub t_min: f64,
    pub t_max: f64,
    /// Largest `τ` the plan will be used with (panel size of the inward legs).
    pub tau_max: f64,
    pub eps_sec: f64,
    pub allow_nondissipative: bool,
    /// Build the inward legs for the `∫_t^τ` part. Required whenever the
    /// boundary data are nonzero; `R` is then raised to at least 1.
    pub later_legs: bool,
}

impl ContourOptions {
    pub fn new(r: f64, t_min: f64, t_max: f64) -> ContourOptions {
        ContourOptions {
            r,
            lambda_max: None,
            t_min,
            t_max,
            tau_max: t_max,
            eps_sec: EPS_SEC,
            allow_nondissipative: false,
            later_legs: true,
        }
    }
}

/// Decay rate `Re(a e^{inψ})` of `e^{-aλⁿ}` along a ray, in magnitude.
fn ray_rate(pde: &PdeSpec, angle: f64) -> f64 {
    (pde.a * C64::new(0.0, pde.order as f64 * angle).exp()).re.abs()
}

/// Panel length at radius `rho` keeping the phase change per panel bounded.
/// Only times in `[s_min, s_max]` for which `e^{-rate ρⁿ s}` is still above
/// `e^{-80}` contribute oscillation in `λ`.
fn panel_cap(n: usize, rho: f64, s_min: f64, s_max: f64, rate: f64) -> f64 {
    let rn = rho.powi(n as i32);
    let s_active = if rate > 0.0 && rn > 0.0 {
        let alive = 2.0 * DECAY_TARGET / (rate * rn);
        if alive < s_min { 0.0 } else { s_max.min(alive) }
    } else {
        s_max
    };
    PANEL_PHASE / (2.0 + n as f64 * rho.powi(n as i32 - 1) * s_active)
}

/// Radius beyond which `e^{-Re(aλⁿ)t_min}` has dropped below `e^{-40}` net
/// of a growth `e^{growth·ρ}` from the exponentials in `x`.
fn truncation_radius(pde: &PdeSpec, angle: f64, t_min: f64, r: f64, growth: f64) -> f64 {
    let n = pde.order as i32;
    let c = (pde.a * C64::new(0.0, n as f64 * angle).exp()).re;
    let floor = (4.0 * r).max(8.0);
    if c <= 0.0 {
        return LAMBDA_CEILING;
    }
    let f = |x: f64| x.powi(n) * t_min * c - DECAY_TARGET - growth * x;
    if f(floor) >= 0.0 {
        return floor;
    }
    let mut lo = floor;
    let mut hi = floor;
    while f(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi >= LAMBDA_CEILING {
            return LAMBDA_CEILING;
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

#[allow(clippy::too_many_arguments)]
fn ray_panels(
    rule: &GaussLegendre,
    angle: f64,
    r0: f64,
    r1: f64,
    inward: bool,
    n: usize,
    (s_min, s_max): (f64, f64),
    rate: f64,
) -> Vec<Panel> {
    let dir = C64::new(0.0, angle).exp();
    let sign = if inward { -1.0 } else { 1.0 };
    let mut out = Vec::new();
    let mut a = r0;
    let mut h = panel_cap(n, r0, s_min, s_max, rate).min(0.5);
    while a < r1 - 1e-12 {
        h = h.min(panel_cap(n, a + h, s_min, s_max, rate));
        let b = (a + h).min(r1);
        let c = 0.5 * (a + b);
        let hl = 0.5 * (b - a);
        out.push(Panel {
            nodes: rule.nodes.iter().map(|u| dir * (c + hl * u)).collect(),
            jac: vec![dir * (sign * hl); rule.len()],
        });
        a = b;
        h *= PANEL_GROWTH;
    }
    out
}

/// Arc `|λ| = r` from `from` to `to` (clockwise when `to < from`).
fn arc_panels(rule: &GaussLegendre, r: f64, from: f64, to: f64, n: usize, t_max: f64) -> Vec<Panel> {
    let len = r * (to - from).abs();
    let count = ((len / panel_cap(n, r, 0.0, t_max, 0.0).min(0.5)).ceil() as usize).max(2);
    let step = (to - from) / count as f64;
    (0..count)
        .map(|i| {
            let a = from + step * i as f64;
            let c = a + 0.5 * step;
            let hl = 0.5 * step;
            let phis: Vec<f64> = rule.nodes.iter().map(|u| c + hl * u).collect();
            Panel {
                nodes: phis.iter().map(|p| C64::new(0.0, *p).exp() * r).collect(),
                jac: phis.iter().map(|p| I * C64::new(0.0, *p).exp() * (r * hl)).collect(),
            }
        })
        .collect()
}

/// The boundary of one sector `(ψ₁, ψ₂)` of `D_R`: in along `ψ₂`, clockwise
/// along `|λ| = R`, out along `ψ₁`. `turn` moves both rays out of the sector
/// (positive) or into it (negative).
fn sector_legs(
    rule: &GaussLegendre,
    sector: &Sector,
    turn: f64,
    role: Role,
    opts: &ContourOptions,
    pde: &PdeSpec,
) -> (Vec<Leg>, f64) {
    let n = pde.order;
    let psi2 = sector.hi + turn;
    let psi1 = sector.lo - turn;
    let boundary = BOUNDARY_RADIUS * opts.r.max(1.0);
    let lmax = |ang: f64| {
        opts.lambda_max.unwrap_or_else(|| {
            let l = truncation_radius(pde, ang, opts.t_min, opts.r, 0.0);
            if opts.later_legs { l.max(boundary) } else { l }
        })
    };
    let times = match role {
        Role::Later => (0.0, opts.tau_max),
        _ => (opts.t_min, opts.t_max),
    };
    let (l2, l1) = match role {
        Role::Later => {
            let l = opts.lambda_max.unwrap_or(boundary);
            (l, l)
        }
        _ => (lmax(psi2), lmax(psi1)),
    };
    let legs = vec![
        Leg {
            role,
            half: Some(sector.half),
            is_ray: true,
            angle: psi2,
            panels: ray_panels(rule, psi2, opts.r, l2, true, n, times, ray_rate(pde, psi2)),
        },
        Leg {
            role,
            half: Some(sector.half),
            is_ray: false,
            angle: psi2,
            panels: arc_panels(rule, opts.r, psi2, psi1, n, times.1),
        },
        Leg {
            role,
            half: Some(sector.half),
            is_ray: true,
            angle: psi1,
            panels: ray_panels(rule, psi1, opts.r, l1, false, n, times, ray_rate(pde, psi1)),
        },
    ];
    (legs, l1.max(l2))
}

/// Contours for the two halves and the real line.
pub fn build_contours(problem: &ProblemSpec, opts: &ContourOptions) -> Result<ContourSet, RepresentationError> {
    let pde = &problem.pde;
    let mut warnings = Vec::new();
    if let Some(w) = check_supported(pde, opts.allow_nondissipative)? {
        warnings.push(w);
    }
    if !(opts.t_min > 0.0 && opts.t_max >= opts.t_min) {
        return Err(RepresentationError::BadGrid(format!("times must satisfy 0 < t_min <= t_max (got {}, {})", opts.t_min, opts.t_max)));
    }
    let mut opts = opts.clone();
    if opts.later_legs {
        opts.r = opts.r.max(1.0);
    }
    let opts = &opts;
    let rule = GaussLegendre::new(PANEL_ORDER);
    let sectors = decay_sectors(pde)?;
    let mut plus = ContourPlan { half: Half::Plus, r: opts.r, legs: Vec::new() };
    let mut minus = ContourPlan { half: Half::Minus, r: opts.r, legs: Vec::new() };
    let mut lambda_max: f64 = 0.0;
    for s in &sectors {
        let (mut legs, l) = sector_legs(&rule, s, opts.eps_sec, Role::Data, opts, pde);
        lambda_max = lambda_max.max(l);
        if opts.later_legs {
            let (more, l2) = sector_legs(&rule, s, -0.25 * s.opening(), Role::Later, opts, pde);
            lambda_max = lambda_max.max(l2);
            legs.extend(more);
        }
        match s.half {
            Half::Plus => plus.legs.extend(legs),
            Half::Minus => minus.legs.extend(legs),
        }
    }
    let (right, left) = real_line_angles(pde);
    let mut real = Vec::new();
    for (ang, inward) in [(left, true), (right, false)] {
        let l = opts.lambda_max.unwrap_or_else(|| truncation_radius(pde, ang, opts.t_min, 0.0, ang.sin().abs()));
        lambda_max = lambda_max.max(l);
        real.push(Leg {
            role: Role::Real,
            half: None,
            is_ray: true,
            angle: ang,
            panels: ray_panels(&rule, ang, 0.0, l, inward, pde.order, (opts.t_min, opts.t_max), ray_rate(pde, ang)),
        });
    }
    if lambda_max >= LAMBDA_CEILING {
        warnings.push(format!(
            "truncation radius capped at {:e}; the truncation estimate accounts for the remaining tail",
            LAMBDA_CEILING
        ));
    }
    Ok(ContourSet { plus, minus, real, r: opts.r, lambda_max, warnings })
}

/// Per-node spectral data.
#[derive(Clone, Debug)]
struct NodeData {
    lambda: C64,
    /// `q̂₀(λ)` on the real line, the initial-datum response otherwise.
    data: Wide,
    /// Responses to `h = e_j`.
    unit: Vec<Wide>,
}

/// Everything the evaluation needs that does not depend on `(x,t)`.
#[derive(Clone, Debug)]
pub struct NodeCache {
    legs: Vec<Vec<NodeData>>,
    has_boundary_data: bool,
    /// The plan carries inward legs, so the slowly decaying part can move.
    shift_static: bool,
    pub perturbed_nodes: usize,
}

fn node_response(
    problem: &ProblemSpec,
    lambda: C64,
    half: Half,
    with_data: bool,
    with_unit: bool,
) -> Result<(Wide, Vec<Wide>), SpectralError> {
    let n = problem.order();
    let m = problem.m();
    let pt = SpectralPoint::new(n, lambda);
    let b = spectral::assemble_b::<Wide>(problem, &pt)?;
    let idx = match half {
        Half::Plus => 0,
        Half::Minus => m * n,
    };
    let mut data = Wide::ZERO;
    if with_data {
        let mut rhs = RhsVector::<Wide>::zeros(n, m);
        for r in 1..=m {
            for p in 0..n {
                rhs.q0hat[r - 1][p] = q0_transform(problem, r, pt.rotated(p));
            }
        }
        data = spectral::solve_dtn(&b, &rhs, lambda)?.unknowns[idx];
    }
    let mut unit = Vec::new();
    if with_unit {
        for j in 0..n {
            let mut rhs = RhsVector::<Wide>::zeros(n, m);
            rhs.h[j] = Wide::one();
            unit.push(spectral::solve_dtn(&b, &rhs, lambda)?.unknowns[idx]);
        }
    }
    Ok((data, unit))
}

impl NodeCache {
    pub fn build(problem: &ProblemSpec, plan: &ContourSet) -> Result<NodeCache, RepresentationError> {
        let has_g = problem.boundary_data.iter().any(|g| !g.is_structurally_zero());
        let mut legs = Vec::new();
        let mut perturbed = 0;
        for leg in plan.legs() {
            let mut out = Vec::with_capacity(leg.node_count());
            for panel in &leg.panels {
                for (i, &lam) in panel.nodes.iter().enumerate() {
                    match leg.role {
                        Role::Real => {
                            let q = space_transform(&problem.initial_datum, lam, 0.0, 1.0);
                            out.push(NodeData { lambda: lam, data: q, unit: Vec::new() });
                        }
                        role => {
                            let half = leg.half.unwrap();
                            let with_data = role == Role::Data;
                            if role == Role::Later && !has_g {
                                out.push(NodeData { lambda: lam, data: Wide::ZERO, unit: Vec::new() });
                                continue;
                            }
                            let res = match node_response(problem, lam, half, with_data, has_g) {
                                Err(SpectralError::NearSingular { .. }) => {
                                    // half a node step along the path
                                    perturbed += 1;
                                    let step = panel.jac[i] * (1.0 / PANEL_ORDER as f64);
                                    node_response(problem, lam + step, half, with_data, has_g)
                                }
                                other => other,
                            };
                            let (data, unit) = res?;
                            out.push(NodeData { lambda: lam, data, unit });
                        }
                    }
                }
            }
            legs.push(out);
        }
        let shift_static = has_g && plan.legs().any(|l| l.role == Role::Later);
        Ok(NodeCache { legs, has_boundary_data: has_g, shift_static, perturbed_nodes: perturbed })
    }
}

/// One evaluated point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointValue {
    pub value: C64,
    pub trunc_est: f64,
}

/// Evaluates the representation on a shared plan; immutable, so one instance
/// can serve several threads.
pub struct Evaluator<'a> {
    problem: &'a ProblemSpec,
    plan: &'a ContourSet,
    cache: &'a NodeCache,
    tau: f64,
    rule: GaussLegendre,
    /// `g_j, g_j', …` for the slowly decaying part.
    derivs: Vec<Vec<DataFunction>>,
}

impl<'a> Evaluator<'a> {
    pub fn new(problem: &'a ProblemSpec, plan: &'a ContourSet, cache: &'a NodeCache, tau: f64) -> Evaluator<'a> {
        let derivs = if cache.shift_static {
            problem
                .boundary_data
                .iter()
                .map(|g| {
                    let mut out = vec![g.clone()];
                    for _ in 1..STATIC_TERMS {
                        let d = out.last().unwrap().derivative();
                        out.push(d);
                    }
                    out
                })
                .collect()
        } else {
            Vec::new()
        };
        Evaluator { problem, plan, cache, tau, rule: GaussLegendre::new(PANEL_ORDER), derivs }
    }

    /// `Σ_p (-1)^p g_j^{(p)}(t)/κ^{p+1}`
    fn static_part(&self, gvals: &[C64], kap: C64) -> Wide {
        let inv = Wide::from_c(kap.inv());
        let mut pow = inv;
        let mut s = Wide::ZERO;
        for (p, v) in gvals.iter().enumerate() {
            let term = pow * Wide::from_c(*v);
            if p % 2 == 0 {
                s += term;
            } else {
                s -= term;
            }
            pow = pow * inv;
        }
        s
    }

    /// `q(x,t)` for all `xs` at one time.
    pub fn time_slice(&self, t: f64, xs: &[f64]) -> Vec<PointValue> {
        self.time_slice_dx(0, t, xs)
    }

    /// `∂_x^k q(x,t)`, differentiating under the integral.
    pub fn time_slice_dx(&self, k: usize, t: f64, xs: &[f64]) -> Vec<PointValue> {
        let pde = &self.problem.pde;
        let n = pde.order;
        let fac = Wide::from_c(data_factor(pde));
        let nx = xs.len();
        let mut real_sum = vec![C64::new(0.0, 0.0); nx];
        let mut contour_sum = vec![C64::new(0.0, 0.0); nx];
        let mut err = vec![0.0; nx];
        let mut abs_sum = vec![0.0; nx];
        let mut vals = vec![C64::new(0.0, 0.0); PANEL_ORDER];
        let gvals: Vec<Vec<C64>> = self.derivs.iter().map(|d| d.iter().map(|f| f.eval(t)).collect()).collect();

        for (leg, nodes) in self.plan.legs().zip(&self.cache.legs) {
            if leg.role == Role::Later && !self.cache.has_boundary_data {
                continue;
            }
            let mut active = vec![true; nx];
            let mut leg_abs = vec![0.0; nx];
            let mut last_bound = vec![0.0; nx];
            let mut base = 0;
            for panel in &leg.panels {
                let pn = panel.nodes.len();
                if !active.iter().any(|a| *a) {
                    break;
                }
                // x-independent factors at each node
                let mut node_factor: Vec<Wide> = Vec::with_capacity(pn);
                for i in 0..pn {
                    let nd = &nodes[base + i];
                    let kap = kappa(pde, nd.lambda);
                    let decay = Wide::exp_c(-kap * t);
                    let mut f = match leg.role {
                        Role::Real | Role::Data => decay * nd.data,
                        Role::Later => Wide::ZERO,
                    };
                    if self.cache.has_boundary_data && leg.role != Role::Real {
                        let (lo, hi) = if leg.role == Role::Data { (0.0, t) } else { (t, self.tau) };
                        for j in 0..n {
                            let g = &self.problem.boundary_data[j];
                            if g.is_structurally_zero() {
                                continue;
                            }
                            let mut hj = decay * g.exp_transform(kap, lo, hi);
                            if self.cache.shift_static {
                                let s = self.static_part(&gvals[j], kap);
                                if leg.role == Role::Data {
                                    hj -= s;
                                } else {
                                    hj += s;
                                }
                            }
                            f += fac * hj * nd.unit[j];
                        }
                    }
                    node_factor.push(f);
                }
                for (ix, &x) in xs.iter().enumerate() {
                    if !active[ix] {
                        continue;
                    }
                    let mut s = C64::new(0.0, 0.0);
                    let mut top: f64 = 0.0;
                    let mut wsum = 0.0;
                    for i in 0..pn {
                        let lam = panel.nodes[i];
                        let mut v = (Wide::exp_c(I * lam * x) * node_factor[i]).to_c();
                        if k > 0 {
                            v *= (I * lam).powu(k as u32);
                        }
                        let v = if v.re.is_finite() && v.im.is_finite() { v } else { C64::new(0.0, 0.0) };
                        vals[i] = v * panel.jac[i];
                        s += vals[i] * self.rule.weights[i];
                        top = top.max(v.norm());
                        wsum += (panel.jac[i] * self.rule.weights[i]).norm();
                    }
                    let pe = self.rule.tail_estimate(&vals[..pn], 1.0);
                    err[ix] += pe;
                    let bound = top * wsum;
                    leg_abs[ix] += s.norm();
                    abs_sum[ix] += bound;
                    last_bound[ix] = bound;
                    if leg.role == Role::Real {
                        real_sum[ix] += s;
                    } else {
                        contour_sum[ix] += s;
                    }
                    if leg.is_ray && bound <= STOP_RATIO * leg_abs[ix] {
                        active[ix] = false;
                    }
                }
                base += pn;
            }
            for ix in 0..nx {
                if leg.is_ray {
                    // remaining tail: geometric continuation of the last panel
                    err[ix] += if active[ix] { 2.0 * last_bound[ix] } else { last_bound[ix] };
                }
            }
        }
        (0..nx)
            .map(|ix| {
                let value = (real_sum[ix] - contour_sum[ix]) / (2.0 * PI);
                let floor = 1e-15 * abs_sum[ix] + 4.0 * f64::EPSILON * value.norm();
                PointValue { value, trunc_est: (err[ix] + floor) / (2.0 * PI) }
            })
            .collect()
    }
}

/// `q(x,t)` on a grid with diagnostics.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionField {
    pub xs: Vec<f64>,
    pub ts: Vec<f64>,
    /// `values[it][ix]`
    pub values: Vec<Vec<C64>>,
    pub trunc_est: Vec<Vec<f64>>,
    pub tau: f64,
    pub r: f64,
    pub lambda_max: f64,
    pub warnings: Vec<String>,
}

impl SolutionField {
    pub fn max_trunc(&self) -> f64 {
        self.trunc_est.iter().flatten().cloned().fold(0.0, f64::max)
    }
}

/// Checks the grid against the problem and `τ`.
pub fn check_grid(problem: &ProblemSpec, xs: &[f64], ts: &[f64], tau: f64) -> Result<(), RepresentationError> {
    if xs.is_empty() || ts.is_empty() {
        return Err(RepresentationError::BadGrid("empty grid".into()));
    }
    if let Some(x) = xs.iter().find(|x| !(**x >= 0.0 && **x <= 1.0)) {
        return Err(RepresentationError::BadGrid(format!("x = {} outside [0,1]", x)));
    }
    if !(tau > 0.0 && tau <= problem.horizon * (1.0 + 1e-12)) {
        return Err(RepresentationError::BadGrid(format!("tau = {} outside (0, T]", tau)));
    }
    if let Some(t) = ts.iter().find(|t| !(**t > 0.0 && **t < tau)) {
        return Err(RepresentationError::BadGrid(format!("t = {} must lie in (0, tau)", t)));
    }
    Ok(())
}

/// Builds the plan for the times of a grid with the given options template
/// (its `t_min`, `t_max` and `later_legs` are replaced).
pub fn plan_for_grid(problem: &ProblemSpec, ts: &[f64], template: &ContourOptions) -> Result<ContourSet, RepresentationError> {
    let mut opts = template.clone();
    opts.t_min = ts.iter().cloned().fold(f64::INFINITY, f64::min);
    opts.t_max = ts.iter().cloned().fold(0.0, f64::max);
    opts.tau_max = opts.tau_max.max(problem.horizon);
    opts.later_legs = problem.boundary_data.iter().any(|g| !g.is_structurally_zero());
    build_contours(problem, &opts)
}

/// Evaluates the representation at every `(x, t)` of the grid.
pub fn evaluate_solution(
    problem: &ProblemSpec,
    xs: &[f64],
    ts: &[f64],
    tau: f64,
    plan: &ContourSet,
) -> Result<SolutionField, RepresentationError> {
    check_grid(problem, xs, ts, tau)?;
    let cache = NodeCache::build(problem, plan)?;
    let ev = Evaluator::new(problem, plan, &cache, tau);
    let mut values = Vec::new();
    let mut trunc = Vec::new();
    for &t in ts {
        let row = ev.time_slice(t, xs);
        values.push(row.iter().map(|p| p.value).collect());
        trunc.push(row.iter().map(|p| p.trunc_est).collect());
    }
    let mut warnings = plan.warnings.clone();
    if cache.perturbed_nodes > 0 {
        warnings.push(format!("{} quadrature nodes moved off near-zeros of Delta", cache.perturbed_nodes));
    }
    Ok(SolutionField {
        xs: xs.to_vec(),
        ts: ts.to_vec(),
        values,
        trunc_est: trunc,
        tau,
        r: plan.r,
        lambda_max: plan.lambda_max,
        warnings,
    })
}

/// `max |q_{τ₁} − q_{τ₂}|` over the grid, with the combined truncation estimate.
pub fn tau_independence(
    problem: &ProblemSpec,
    xs: &[f64],
    ts: &[f64],
    tau1: f64,
    tau2: f64,
    opts: &ContourOptions,
) -> Result<(f64, f64), RepresentationError> {
    let plan = plan_for_grid(problem, ts, opts)?;
    let a = evaluate_solution(problem, xs, ts, tau1, &plan)?;
    let b = evaluate_solution(problem, xs, ts, tau2, &plan)?;
    let mut dev: f64 = 0.0;
    let mut est: f64 = 0.0;
    for it in 0..ts.len() {
        for ix in 0..xs.len() {
            dev = dev.max((a.values[it][ix] - b.values[it][ix]).norm());
            est = est.max(a.trunc_est[it][ix] + b.trunc_est[it][ix]);
        }
    }
    Ok((dev, est))
}

/// `α^p` re-exported for callers building rotated transforms.
pub fn rotation(n: usize, p: usize) -> C64 {
    alpha_pow(n, p as i64)
}
