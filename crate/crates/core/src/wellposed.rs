//! Asymptotics of the spectral solution, zeros of `Δ`, and the choice of `R`.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;
use core::fmt;

#[allow(unused_imports)]
use num_traits::Float;

use crate::data::DataFunction;
use crate::model::{condition_functional, ProblemSpec};
use crate::representation::{decay_sectors, space_transform, Half, RepresentationError, EPS_SEC};
use crate::scalar::{Scalar, Wide, C64};
use crate::spectral::{self, RhsVector, SpectralError, SpectralPoint};

const I: C64 = C64 { re: 0.0, im: 1.0 };

/// Allowed excess of a fitted decay exponent over `-1`.
pub const FIT_TOL: f64 = 0.2;
/// `|Δ|` accepted at a refined zero.
pub const ZERO_RESIDUAL: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub enum WellposedError {
    Unsupported(String),
    /// Every sample sat on (numerical) zeros of `Δ`.
    Inconclusive(String),
    /// The search contour keeps passing through zeros.
    ContourOnZero { lambda: C64 },
    NoZeroFreeRadius { tried: f64 },
    Representation(RepresentationError),
}

impl fmt::Display for WellposedError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WellposedError::Unsupported(s) => write!(f, "unsupported: {}", s),
            WellposedError::Inconclusive(s) => write!(f, "inconclusive: {}", s),
            WellposedError::ContourOnZero { lambda } => {
                write!(f, "search contour passes through a zero of Delta near {}{:+}i", lambda.re, lambda.im)
            }
            WellposedError::NoZeroFreeRadius { tried } => write!(
                f,
                "no zero-free radius found up to R = {}; inspect the zeros with the generic solver",
                tried
            ),
            WellposedError::Representation(e) => write!(f, "{}", e),
        }
    }
}

impl From<RepresentationError> for WellposedError {
    fn from(e: RepresentationError) -> Self {
        WellposedError::Representation(e)
    }
}

fn require_order2(problem: &ProblemSpec) -> Result<(), WellposedError> {
    if problem.order() != 2 {
        return Err(WellposedError::Unsupported(format!(
            "delta/gamma asymptotics are only defined for order 2 (got {})",
            problem.order()
        )));
    }
    Ok(())
}

/// `(δ⁺(λ), δ⁻(λ))` from the B-blocks.
pub fn delta_pm(problem: &ProblemSpec, lambda: C64) -> Result<(C64, C64), WellposedError> {
    let (p, m) = delta_pm_wide(problem, lambda)?;
    Ok((p.to_c(), m.to_c()))
}

fn delta_pm_wide(problem: &ProblemSpec, lambda: C64) -> Result<(Wide, Wide), WellposedError> {
    require_order2(problem)?;
    let m = problem.m();
    let b = spectral::assemble_b::<Wide>(problem, &SpectralPoint::new(2, lambda)).map_err(spectral_unsupported)?;
    let plus = b.get(0, 0, 0) * b.get(1, 1, m) - b.get(1, 0, m) * b.get(0, 1, 0);
    let minus = b.get(0, 0, m) * b.get(1, 1, 0) - b.get(1, 0, 0) * b.get(0, 1, m);
    Ok((plus, minus))
}

fn spectral_unsupported(e: SpectralError) -> WellposedError {
    WellposedError::Unsupported(format!("{}", e))
}

/// `δ⁺` through its factored form `¼E_m(λ) det(…)`.
pub fn delta_plus_factored(problem: &ProblemSpec, lambda: C64) -> Result<C64, WellposedError> {
    require_order2(problem)?;
    let m = problem.m();
    let b = |k, j, r| problem.conditions.get(k, j, r);
    let il = C64::new(1.0, 0.0) / (I * lambda);
    let a00 = b(0, 0, 0) * il + b(1, 0, 0);
    let a01 = b(0, 1, 0) * il + b(1, 1, 0);
    let a10 = -b(0, 0, m) * il + b(1, 0, m);
    let a11 = -b(0, 1, m) * il + b(1, 1, m);
    let em = (-I * lambda * problem.eta()[m]).exp();
    Ok(0.25 * em * (a00 * a11 - a01 * a10))
}

/// `γ⁺` and `γ⁻` for boundary values `g(τ)`, as functions of `λ`.
pub struct GammaPm {
    g0: C64,
    g1: C64,
    bm: (C64, C64),
    b0: (C64, C64),
    eta_m: f64,
}

impl GammaPm {
    pub fn plus(&self, lambda: C64) -> C64 {
        let em = (-I * lambda * self.eta_m).exp();
        -em / (2.0 * lambda * lambda) * (self.g0 * self.bm.1 - self.g1 * self.bm.0)
    }

    fn plus_wide(&self, lambda: C64) -> Wide {
        let em = Wide::exp_c(-I * lambda * self.eta_m);
        em * Wide::from_c(-(self.g0 * self.bm.1 - self.g1 * self.bm.0) / (2.0 * lambda * lambda))
    }

    pub fn minus(&self, lambda: C64) -> C64 {
        -C64::new(1.0, 0.0) / (2.0 * lambda * lambda) * (self.g0 * self.b0.1 - self.g1 * self.b0.0)
    }

    pub fn vanishes(&self) -> bool {
        let z = |c: C64| c.norm() == 0.0;
        (z(self.g0 * self.bm.1 - self.g1 * self.bm.0)) && z(self.g0 * self.b0.1 - self.g1 * self.b0.0)
    }
}

pub fn gamma_pm(problem: &ProblemSpec, tau: f64) -> Result<GammaPm, WellposedError> {
    require_order2(problem)?;
    gamma_with_values(problem, problem.boundary_data[0].eval(tau), problem.boundary_data[1].eval(tau))
}

fn gamma_with_values(problem: &ProblemSpec, g0: C64, g1: C64) -> Result<GammaPm, WellposedError> {
    let m = problem.m();
    let b = |k, j, r| problem.conditions.get(k, j, r);
    Ok(GammaPm { g0, g1, bm: (b(1, 0, m), b(1, 1, m)), b0: (b(1, 0, 0), b(1, 1, 0)), eta_m: problem.eta()[m] })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityOptions {
    pub theta: f64,
    /// Sample range of `|λ|`.
    pub rho_min: f64,
    pub rho_max: f64,
    pub samples: usize,
    /// Rays per admissible angular interval (end points included).
    pub rays_per_sector: usize,
    pub fit_tol: f64,
    /// Stand-in for `q(·,τ)`; the initial datum when absent.
    pub surrogate: Option<DataFunction>,
}

impl Default for AdmissibilityOptions {
    fn default() -> Self {
        AdmissibilityOptions {
            theta: PI / 8.0,
            rho_min: 1e2,
            rho_max: 1e4,
            samples: 20,
            rays_per_sector: 5,
            fit_tol: FIT_TOL,
            surrogate: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RayFit {
    pub angle: f64,
    pub half: Half,
    /// Fitted power of `|λ|`; `-inf` when the quantity vanishes identically.
    pub exponent: f64,
    pub used_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AsymptoticsReport {
    pub admissible: bool,
    pub fits: Vec<RayFit>,
    pub rays_used: Vec<f64>,
    /// Samples `(λ, δ⁺, δ⁻, γ⁺, γ⁻)` (order 2 only).
    pub delta_gamma: Vec<(C64, C64, C64, C64, C64)>,
    /// Lemma-based expectation for order 2: `γ^±/δ^±` decays like `1/λ`.
    pub predicted: Option<bool>,
    pub notes: Vec<String>,
}

impl AsymptoticsReport {
    pub fn worst_exponent(&self, half: Half) -> f64 {
        self.fits.iter().filter(|f| f.half == half).map(|f| f.exponent).fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Least-squares slope of `ys` against `xs`.
pub fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
    }
    sxy / sxx
}

/// Angles of `closure(D sector) ∩ C^±_θ`, as closed intervals.
pub fn admissibility_intervals(problem: &ProblemSpec, theta: f64) -> Result<Vec<(f64, f64, Half)>, WellposedError> {
    let mut out = Vec::new();
    for s in decay_sectors(&problem.pde)? {
        let (lo, hi) = match s.half {
            Half::Plus => (theta, PI - theta),
            Half::Minus => (PI + theta, 2.0 * PI - theta),
        };
        // sector angles may exceed 2π after wrapping
        for shift in [-2.0 * PI, 0.0, 2.0 * PI] {
            let a = s.lo.max(lo + shift);
            let b = s.hi.min(hi + shift);
            if b >= a {
                out.push((a, b, s.half));
            }
        }
    }
    Ok(out)
}

/// Unknown `x₀` (plus) or `x_m / E_m` (minus) driven by `q̂_τ` of a profile.
fn qtau_response(problem: &ProblemSpec, profile: &DataFunction, lambda: C64, half: Half) -> Result<Wide, SpectralError> {
    let n = problem.order();
    let m = problem.m();
    let pt = SpectralPoint::new(n, lambda);
    let b = spectral::assemble_b::<Wide>(problem, &pt)?;
    let eta = problem.eta();
    let mut rhs = RhsVector::<Wide>::zeros(n, m);
    for r in 1..=m {
        for p in 0..n {
            // y = +q̂_τ
            rhs.q0hat[r - 1][p] = -space_transform(profile, pt.rotated(p), eta[r - 1], eta[r]);
        }
    }
    let u = spectral::solve_dtn(&b, &rhs, lambda)?.unknowns;
    Ok(match half {
        Half::Plus => u[0],
        Half::Minus => u[m * n] * Wide::exp_c(I * lambda * eta[m]),
    })
}

/// Fits the decay of the `q̂_τ`-driven unknowns along rays in `D ∩ C^±_θ`.
pub fn admissibility_check(problem: &ProblemSpec, opts: &AdmissibilityOptions) -> Result<AsymptoticsReport, WellposedError> {
    let n = problem.order();
    if n != 2 && n != 3 {
        return Err(WellposedError::Unsupported(format!("order {}", n)));
    }
    if !(opts.theta > 0.0 && opts.theta < PI / 2.0) {
        return Err(WellposedError::Unsupported(format!("theta = {} outside (0, pi/2)", opts.theta)));
    }
    let profile = opts.surrogate.clone().unwrap_or_else(|| problem.initial_datum.clone());
    let intervals = admissibility_intervals(problem, opts.theta)?;
    let rhos: Vec<f64> = (0..opts.samples)
        .map(|i| {
            let f = i as f64 / (opts.samples - 1).max(1) as f64;
            opts.rho_min * (opts.rho_max / opts.rho_min).powf(f)
        })
        .collect();
    let mut fits = Vec::new();
    let mut rays = Vec::new();
    let mut notes = Vec::new();
    let mut total_used = 0;
    for &(a, b, half) in &intervals {
        let k = opts.rays_per_sector.max(1);
        for i in 0..k {
            let angle = if k == 1 { 0.5 * (a + b) } else { a + (b - a) * i as f64 / (k - 1) as f64 };
            rays.push(angle);
            let dir = C64::new(0.0, angle).exp();
            let mut xs = Vec::new();
            let mut ys = Vec::new();
            let mut all_zero = true;
            for &rho in &rhos {
                match qtau_response(problem, &profile, dir * rho, half) {
                    Ok(v) => {
                        let l = v.log2_abs();
                        if l.is_finite() {
                            all_zero = false;
                            xs.push(rho.ln());
                            ys.push(l * core::f64::consts::LN_2);
                        } else {
                            xs.push(rho.ln());
                            ys.push(f64::NEG_INFINITY);
                        }
                    }
                    Err(SpectralError::NearSingular { .. }) => {}
                    Err(e) => return Err(spectral_unsupported(e)),
                }
            }
            total_used += xs.len();
            if xs.len() < 3 {
                notes.push(format!("ray {:.4}: too few usable samples", angle));
                continue;
            }
            let exponent = if all_zero {
                f64::NEG_INFINITY
            } else {
                let pairs: Vec<(f64, f64)> = xs.iter().cloned().zip(ys.iter().cloned()).filter(|p| p.1.is_finite()).collect();
                let (px, py): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
                if px.len() < 3 { f64::NEG_INFINITY } else { fit_slope(&px, &py) }
            };
            fits.push(RayFit { angle, half, exponent, used_samples: xs.len() });
        }
    }
    if total_used == 0 || fits.is_empty() {
        return Err(WellposedError::Inconclusive("every sample lies on a numerical zero of Delta".into()));
    }
    let admissible = fits.iter().all(|f| f.exponent <= -1.0 + opts.fit_tol);

    let mut delta_gamma = Vec::new();
    let mut predicted = None;
    if n == 2 {
        // boundary values the profile carries into the conditions
        let (g0, _) = condition_functional(problem, 0, &profile);
        let (g1, _) = condition_functional(problem, 1, &profile);
        let gm = gamma_with_values(problem, g0, g1)?;
        let mut ok = true;
        for &(a, b, half) in &intervals {
            let angle = 0.5 * (a + b);
            let dir = C64::new(0.0, angle).exp();
            let mut lx = Vec::new();
            let mut ly = Vec::new();
            for &rho in &rhos {
                let lam = dir * rho;
                let (dp, dm) = delta_pm_wide(problem, lam)?;
                let (gp, gmn) = (gm.plus_wide(lam), gm.minus(lam));
                delta_gamma.push((lam, dp.to_c(), dm.to_c(), gp.to_c(), gmn));
                // log2 of |γ⁺/δ⁺| or |γ⁻/(δ⁻E_m)|
                let log2_ratio = match half {
                    Half::Plus => gp.log2_abs() - dp.log2_abs(),
                    Half::Minus => {
                        let em = Wide::exp_c(-I * lam * problem.eta()[problem.m()]);
                        Wide::from_c(gmn).log2_abs() - (dm * em).log2_abs()
                    }
                };
                if log2_ratio.is_nan() || log2_ratio == f64::INFINITY {
                    ok = false;
                } else if log2_ratio.is_finite() {
                    lx.push(rho.ln());
                    ly.push(log2_ratio * core::f64::consts::LN_2);
                }
            }
            if lx.len() >= 3 && fit_slope(&lx, &ly) > -1.0 + opts.fit_tol {
                ok = false;
            }
        }
        predicted = Some(ok);
        if predicted != Some(admissible) {
            notes.push("tail fit and delta/gamma dominance disagree".into());
        }
    }
    Ok(AsymptoticsReport { admissible, fits, rays_used: rays, delta_gamma, predicted, notes })
}

/// Axis-aligned search rectangle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rect {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Rect {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Rect {
        Rect { re_min, re_max, im_min, im_max }
    }

    pub fn contains(&self, z: C64) -> bool {
        z.re >= self.re_min && z.re <= self.re_max && z.im >= self.im_min && z.im <= self.im_max
    }

    fn width(&self) -> f64 {
        (self.re_max - self.re_min).max(self.im_max - self.im_min)
    }

    fn corners(&self) -> [C64; 4] {
        [
            C64::new(self.re_min, self.im_min),
            C64::new(self.re_max, self.im_min),
            C64::new(self.re_max, self.im_max),
            C64::new(self.re_min, self.im_max),
        ]
    }

    /// Quadrants, split slightly off-centre so that symmetric zero sets do
    /// not land on the new edges.
    fn split(&self, fx: f64, fy: f64) -> [Rect; 4] {
        let xm = self.re_min + fx * (self.re_max - self.re_min);
        let ym = self.im_min + fy * (self.im_max - self.im_min);
        [
            Rect::new(self.re_min, xm, self.im_min, ym),
            Rect::new(xm, self.re_max, self.im_min, ym),
            Rect::new(xm, self.re_max, ym, self.im_max),
            Rect::new(self.re_min, xm, ym, self.im_max),
        ]
    }

    fn shrunk(&self, f: f64) -> Rect {
        let dx = f * (self.re_max - self.re_min);
        let dy = f * (self.im_max - self.im_min);
        Rect::new(self.re_min + dx, self.re_max - dx, self.im_min + dy, self.im_max - dy)
    }
}

/// A closed search path made of straight and circular pieces.
#[derive(Clone, Copy, Debug)]
enum Piece {
    Line(C64, C64),
    /// centre 0, radius, from angle, to angle
    Arc(f64, f64, f64),
}

impl Piece {
    fn at(&self, s: f64) -> C64 {
        match *self {
            Piece::Line(a, b) => a + (b - a) * s,
            Piece::Arc(r, a, b) => C64::new(0.0, a + (b - a) * s).exp() * r,
        }
    }

    fn length(&self) -> f64 {
        match *self {
            Piece::Line(a, b) => (b - a).norm(),
            Piece::Arc(r, a, b) => r * (b - a).abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Zero {
    pub lambda: C64,
    pub multiplicity: usize,
    pub residual: f64,
    pub region: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RegionCount {
    pub rect: Rect,
    pub count: i64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ZeroSet {
    pub zeros: Vec<Zero>,
    pub regions: Vec<RegionCount>,
    /// Argument-principle count of the whole search region.
    pub count_check: i64,
}

/// Zero finder for `λ^p Δ(λ)`.
pub struct ZeroFinder<'a> {
    problem: &'a ProblemSpec,
    power: u32,
    pub evaluations: core::cell::Cell<usize>,
}

impl<'a> ZeroFinder<'a> {
    pub fn new(problem: &'a ProblemSpec) -> ZeroFinder<'a> {
        let n = problem.order() as u32;
        ZeroFinder { problem, power: n * (n - 1), evaluations: core::cell::Cell::new(0) }
    }

    /// `λ^p Δ(λ)` in extended range.
    pub fn f(&self, lambda: C64) -> Result<Wide, SpectralError> {
        self.evaluations.set(self.evaluations.get() + 1);
        let d = spectral::delta::<Wide>(self.problem, &SpectralPoint::new(self.problem.order(), lambda))?;
        Ok(d * Wide::from_c(lambda.powu(self.power)))
    }

    fn arg(&self, lambda: C64) -> Result<f64, WellposedError> {
        let v = self.f(lambda).map_err(spectral_unsupported)?;
        if v.is_zero() {
            return Err(WellposedError::ContourOnZero { lambda });
        }
        Ok(v.mantissa().arg())
    }

    /// Change of `arg f` along one piece, refined until every step is below `π/4`.
    fn arg_change(&self, piece: &Piece) -> Result<f64, WellposedError> {
        let start_steps = ((piece.length() * 4.0).ceil() as usize).clamp(8, 1 << 16);
        let mut total = 0.0;
        let mut stack: Vec<(f64, f64, f64, f64, usize)> = Vec::new();
        let mut prev_s = 0.0;
        let mut prev_a = self.arg(piece.at(0.0))?;
        for i in 1..=start_steps {
            let s = i as f64 / start_steps as f64;
            let a = self.arg(piece.at(s))?;
            stack.push((prev_s, s, prev_a, a, 0));
            prev_s = s;
            prev_a = a;
            while let Some((s0, s1, a0, a1, depth)) = stack.pop() {
                let d = wrap_pi(a1 - a0);
                if d.abs() < PI / 4.0 {
                    total += d;
                    continue;
                }
                if depth > 40 || (s1 - s0) * piece.length() < 1e-12 {
                    return Err(WellposedError::ContourOnZero { lambda: piece.at(0.5 * (s0 + s1)) });
                }
                let sm = 0.5 * (s0 + s1);
                let am = self.arg(piece.at(sm))?;
                // right half first on the stack so the left half is summed first
                stack.push((sm, s1, am, a1, depth + 1));
                stack.push((s0, sm, a0, am, depth + 1));
            }
        }
        Ok(total)
    }

    fn winding(&self, pieces: &[Piece]) -> Result<i64, WellposedError> {
        let mut total = 0.0;
        for p in pieces {
            total += self.arg_change(p)?;
        }
        let w = total / (2.0 * PI);
        let k = w.round();
        if (w - k).abs() > 1e-3 {
            return Err(WellposedError::ContourOnZero { lambda: pieces[0].at(0.0) });
        }
        Ok(k as i64)
    }

    /// Number of zeros inside a rectangle.
    pub fn count_rect(&self, rect: &Rect) -> Result<i64, WellposedError> {
        let c = rect.corners();
        let pieces = [Piece::Line(c[0], c[1]), Piece::Line(c[1], c[2]), Piece::Line(c[2], c[3]), Piece::Line(c[3], c[0])];
        self.winding(&pieces)
    }

    /// Number of zeros in `{r0 < |λ| < r1, a < arg λ < b}`.
    pub fn count_annular_sector(&self, r0: f64, r1: f64, a: f64, b: f64) -> Result<i64, WellposedError> {
        let e = |r: f64, t: f64| C64::new(0.0, t).exp() * r;
        let pieces = [
            Piece::Line(e(r0, a), e(r1, a)),
            Piece::Arc(r1, a, b),
            Piece::Line(e(r1, b), e(r0, b)),
            Piece::Arc(r0, b, a),
        ];
        self.winding(&pieces)
    }

    /// Newton iteration on `Δ` with multiplicity `k`.
    fn newton(&self, z0: C64, k: usize) -> Result<C64, WellposedError> {
        let mut z = z0;
        for _ in 0..60 {
            let h = 1e-6 * z.norm().max(1.0);
            let f0 = self.f(z).map_err(spectral_unsupported)?;
            let fp = self.f(z + h).map_err(spectral_unsupported)?;
            let fm = self.f(z - h).map_err(spectral_unsupported)?;
            let d = (fp - fm) / Wide::from_c(C64::new(2.0 * h, 0.0));
            if d.is_zero() {
                break;
            }
            let step = (f0 / d).to_c() * k as f64;
            z -= step;
            if step.norm() < 1e-15 * z.norm().max(1.0) {
                break;
            }
        }
        Ok(z)
    }

    fn residual(&self, z: C64) -> f64 {
        spectral::delta::<Wide>(self.problem, &SpectralPoint::new(self.problem.order(), z))
            .map(|d| d.to_c().norm())
            .unwrap_or(f64::INFINITY)
    }
}

fn wrap_pi(a: f64) -> f64 {
    let mut x = a % (2.0 * PI);
    if x > PI {
        x -= 2.0 * PI;
    } else if x < -PI {
        x += 2.0 * PI;
    }
    x
}

/// Zeros of `Δ` in a rectangle by argument-principle subdivision and Newton refinement.
pub fn locate_zeros(problem: &ProblemSpec, region: Rect) -> Result<ZeroSet, WellposedError> {
    if region.contains(C64::new(0.0, 0.0)) {
        return Err(WellposedError::Unsupported("search region contains lambda = 0".into()));
    }
    let finder = ZeroFinder::new(problem);
    let mut region = region;
    let mut total = None;
    for _ in 0..4 {
        match finder.count_rect(&region) {
            Ok(c) => {
                total = Some(c);
                break;
            }
            Err(WellposedError::ContourOnZero { .. }) => region = region.shrunk(1e-3),
            Err(e) => return Err(e),
        }
    }
    let total = total.ok_or(WellposedError::ContourOnZero { lambda: C64::new(region.re_min, region.im_min) })?;
    let mut set = ZeroSet { zeros: Vec::new(), regions: Vec::new(), count_check: total };
    let mut work = vec![(region, total, 0usize)];
    while let Some((rect, count, depth)) = work.pop() {
        if count <= 0 {
            continue;
        }
        let tiny = rect.width() < 1e-7 * (1.0 + rect.corners()[0].norm());
        if count == 1 || tiny || depth > 60 {
            let centre = C64::new(0.5 * (rect.re_min + rect.re_max), 0.5 * (rect.im_min + rect.im_max));
            let mut z = finder.newton(centre, count as usize)?;
            if !rect.contains(z) {
                // Newton left the box from the centre; subdivide further instead
                if !tiny && depth <= 60 && push_children(&finder, &rect, depth, &mut work)? {
                    continue;
                }
                z = centre;
            }
            let id = set.regions.len();
            set.regions.push(RegionCount { rect, count });
            set.zeros.push(Zero { lambda: z, multiplicity: count as usize, residual: finder.residual(z), region: id });
            continue;
        }
        if !push_children(&finder, &rect, depth, &mut work)? {
            // every split crosses the zeros: a multiple root smeared by rounding
            let centre = C64::new(0.5 * (rect.re_min + rect.re_max), 0.5 * (rect.im_min + rect.im_max));
            let z = finder.newton(centre, count as usize).ok().filter(|z| rect.contains(*z)).unwrap_or(centre);
            let id = set.regions.len();
            set.regions.push(RegionCount { rect, count });
            set.zeros.push(Zero { lambda: z, multiplicity: count as usize, residual: finder.residual(z), region: id });
        }
    }
    set.zeros.sort_by(|a, b| {
        (a.lambda.re, a.lambda.im).partial_cmp(&(b.lambda.re, b.lambda.im)).unwrap_or(core::cmp::Ordering::Equal)
    });
    Ok(set)
}

/// Queues the quadrants of `rect`; `false` when every tried split runs
/// through a zero.
fn push_children(
    finder: &ZeroFinder<'_>,
    rect: &Rect,
    depth: usize,
    work: &mut Vec<(Rect, i64, usize)>,
) -> Result<bool, WellposedError> {
    'split: for (fx, fy) in [(0.5123, 0.4871), (0.4637, 0.5389), (0.5711, 0.4299)] {
        let kids = rect.split(fx, fy);
        let mut counts = [0i64; 4];
        for (c, k) in counts.iter_mut().zip(&kids) {
            match finder.count_rect(k) {
                Ok(v) => *c = v,
                Err(WellposedError::ContourOnZero { .. }) => continue 'split,
                Err(e) => return Err(e),
            }
        }
        for (k, c) in kids.iter().zip(counts).rev() {
            work.push((*k, c, depth + 1));
        }
        return Ok(true);
    }
    Ok(false)
}

/// Result of [`choose_r`].
#[derive(Clone, Debug, PartialEq)]
pub struct RadiusChoice {
    pub r: f64,
    /// Checked annular sectors `(r0, r1, angle_lo, angle_hi)`, all zero-free.
    pub certificate: Vec<(f64, f64, f64, f64)>,
}

/// Smallest `R = R_min·2^k` for which the sectors swept by the contours hold no
/// zeros of `Δ` between `R` and `lambda_max`.
pub fn choose_r(problem: &ProblemSpec, r_min: f64, lambda_max: f64) -> Result<RadiusChoice, WellposedError> {
    let finder = ZeroFinder::new(problem);
    let sectors = decay_sectors(&problem.pde)?;
    let mut r = r_min.max(1e-3);
    while r < 0.5 * lambda_max {
        let mut cert = Vec::new();
        let mut clean = true;
        for s in &sectors {
            let (a, b) = (s.lo - 2.0 * EPS_SEC, s.hi + 2.0 * EPS_SEC);
            let mut result = finder.count_annular_sector(r, lambda_max, a, b);
            if let Err(WellposedError::ContourOnZero { .. }) = result {
                result = finder.count_annular_sector(r * (1.0 + 1e-3), lambda_max * (1.0 + 1e-3), a, b);
            }
            match result {
                Ok(0) => cert.push((r, lambda_max, a, b)),
                Ok(_) | Err(WellposedError::ContourOnZero { .. }) => {
                    clean = false;
                    break;
                }
                Err(e) => return Err(e),
            }
        }
        if clean {
            return Ok(RadiusChoice { r, certificate: cert });
        }
        r *= 2.0;
    }
    Err(WellposedError::NoZeroFreeRadius { tried: r })
}
