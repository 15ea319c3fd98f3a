//! Data functions: boundary data `g_j(t)` and the initial datum `q₀(x)`.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;


use crate::expr::{ExpPoly, Expr, ParseError};
use crate::quad::{adaptive, GaussLegendre};
use crate::scalar::{Scalar, Wide, C64};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DataKind {
    Expression,
    PiecewisePolynomial,
    Sampled,
}

#[derive(Clone, Debug, PartialEq)]
enum Repr {
    Expression { expr: Expr, var: String },
    /// Piece `i` covers `[breaks[i], breaks[i+1]]`, coefficients ascending in `x - breaks[i]`.
    Piecewise { breaks: Vec<f64>, coeffs: Vec<Vec<C64>> },
    /// Natural cubic spline through the samples, stored in piecewise form.
    Sampled { xs: Vec<f64>, vs: Vec<C64>, breaks: Vec<f64>, coeffs: Vec<Vec<C64>> },
}

#[derive(Clone, Debug, PartialEq)]
pub struct DataFunction {
    repr: Repr,
}

#[derive(Clone, Debug, PartialEq)]
pub enum DataError {
    Parse(ParseError),
    NotMonotone,
    TooFewSamples,
    BadPieces(&'static str),
}

impl core::fmt::Display for DataError {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        match self {
            DataError::Parse(e) => write!(f, "expression: {}", e),
            DataError::NotMonotone => write!(f, "sample abscissae must be strictly increasing"),
            DataError::TooFewSamples => write!(f, "at least two samples are required"),
            DataError::BadPieces(m) => write!(f, "piecewise polynomial: {}", m),
        }
    }
}

fn poly_eval(p: &[C64], u: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for c in p.iter().rev() {
        acc = acc * u + c;
    }
    acc
}

fn poly_deriv(p: &[C64], k: usize) -> Vec<C64> {
    let mut d = p.to_vec();
    for _ in 0..k {
        d = d.iter().enumerate().skip(1).map(|(i, c)| c * i as f64).collect();
    }
    d
}

fn locate(breaks: &[f64], x: f64) -> usize {
    let pieces = breaks.len() - 1;
    match breaks.binary_search_by(|b| b.partial_cmp(&x).unwrap_or(core::cmp::Ordering::Less)) {
        Ok(i) => i.min(pieces - 1),
        Err(0) => 0,
        Err(i) => (i - 1).min(pieces - 1),
    }
}

fn natural_spline(xs: &[f64], vs: &[C64]) -> Vec<Vec<C64>> {
    let n = xs.len();
    let zero = C64::new(0.0, 0.0);
    if n == 2 {
        let slope = (vs[1] - vs[0]) / (xs[1] - xs[0]);
        return vec![vec![vs[0], slope]];
    }
    let h: Vec<f64> = (0..n - 1).map(|i| xs[i + 1] - xs[i]).collect();
    // second derivatives M_i, M_0 = M_{n-1} = 0; Thomas algorithm
    let mut diag = vec![0.0; n];
    let mut rhs = vec![zero; n];
    let mut upper = vec![0.0; n];
    let mut lower = vec![0.0; n];
    diag[0] = 1.0;
    diag[n - 1] = 1.0;
    for i in 1..n - 1 {
        lower[i] = h[i - 1];
        diag[i] = 2.0 * (h[i - 1] + h[i]);
        upper[i] = h[i];
        rhs[i] = ((vs[i + 1] - vs[i]) / h[i] - (vs[i] - vs[i - 1]) / h[i - 1]) * 6.0;
    }
    for i in 1..n {
        let w = lower[i] / diag[i - 1];
        diag[i] -= w * upper[i - 1];
        let r = rhs[i - 1];
        rhs[i] -= r * w;
    }
    let mut m = vec![zero; n];
    m[n - 1] = rhs[n - 1] / diag[n - 1];
    for i in (0..n - 1).rev() {
        m[i] = (rhs[i] - m[i + 1] * upper[i]) / diag[i];
    }
    (0..n - 1)
        .map(|i| {
            let hi = h[i];
            let b = (vs[i + 1] - vs[i]) / hi - (m[i + 1] + m[i] * 2.0) * (hi / 6.0);
            vec![vs[i], b, m[i] * 0.5, (m[i + 1] - m[i]) / (6.0 * hi)]
        })
        .collect()
}

impl DataFunction {
    pub fn expression(src: &str, var: &str) -> Result<DataFunction, DataError> {
        let expr = Expr::parse(src, var).map_err(DataError::Parse)?;
        Ok(DataFunction { repr: Repr::Expression { expr, var: var.into() } })
    }

    pub fn from_expr(expr: Expr, var: &str) -> DataFunction {
        DataFunction { repr: Repr::Expression { expr, var: var.into() } }
    }

    pub fn zero(var: &str) -> DataFunction {
        DataFunction::from_expr(Expr::num(0.0), var)
    }

    pub fn piecewise(breaks: Vec<f64>, coeffs: Vec<Vec<C64>>) -> Result<DataFunction, DataError> {
        if breaks.len() < 2 || coeffs.len() != breaks.len() - 1 {
            return Err(DataError::BadPieces("need one coefficient list per interval"));
        }
        if breaks.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DataError::NotMonotone);
        }
        if coeffs.iter().any(|c| c.is_empty()) {
            return Err(DataError::BadPieces("empty coefficient list"));
        }
        Ok(DataFunction { repr: Repr::Piecewise { breaks, coeffs } })
    }

    pub fn sampled(xs: Vec<f64>, vs: Vec<C64>) -> Result<DataFunction, DataError> {
        if xs.len() < 2 || xs.len() != vs.len() {
            return Err(DataError::TooFewSamples);
        }
        if xs.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(DataError::NotMonotone);
        }
        let coeffs = natural_spline(&xs, &vs);
        Ok(DataFunction { repr: Repr::Sampled { breaks: xs.clone(), xs, vs, coeffs } })
    }

    pub fn kind(&self) -> DataKind {
        match self.repr {
            Repr::Expression { .. } => DataKind::Expression,
            Repr::Piecewise { .. } => DataKind::PiecewisePolynomial,
            Repr::Sampled { .. } => DataKind::Sampled,
        }
    }

    pub fn as_expr(&self) -> Option<&Expr> {
        match &self.repr {
            Repr::Expression { expr, .. } => Some(expr),
            _ => None,
        }
    }

    pub fn samples(&self) -> Option<(&[f64], &[C64])> {
        match &self.repr {
            Repr::Sampled { xs, vs, .. } => Some((xs, vs)),
            _ => None,
        }
    }

    pub fn pieces(&self) -> Option<(&[f64], &[Vec<C64>])> {
        match &self.repr {
            Repr::Piecewise { breaks, coeffs } => Some((breaks, coeffs)),
            _ => None,
        }
    }

    /// True when the function is identically zero by construction.
    pub fn is_structurally_zero(&self) -> bool {
        match &self.repr {
            Repr::Expression { expr, .. } => matches!(expr, Expr::Num(c) if c.norm() == 0.0),
            Repr::Piecewise { coeffs, .. } => coeffs.iter().flatten().all(|c| c.norm() == 0.0),
            Repr::Sampled { vs, .. } => vs.iter().all(|c| c.norm() == 0.0),
        }
    }

    pub fn eval(&self, x: f64) -> C64 {
        self.derivative_at(0, x).0
    }

    /// `k`-th derivative at `x`; the flag is false when the value comes from
    /// finite differences (sampled data).
    pub fn derivative_at(&self, k: usize, x: f64) -> (C64, bool) {
        match &self.repr {
            Repr::Expression { expr, .. } => (expr.nth_derivative(k).eval(x), true),
            Repr::Piecewise { breaks, coeffs } => {
                let i = locate(breaks, x);
                (poly_eval(&poly_deriv(&coeffs[i], k), x - breaks[i]), true)
            }
            Repr::Sampled { breaks, coeffs, .. } => {
                let f = |y: f64| {
                    let i = locate(breaks, y);
                    poly_eval(&coeffs[i], y - breaks[i])
                };
                (fourth_order_difference(&f, k, x, 1e-4, breaks[0], *breaks.last().unwrap()), k == 0)
            }
        }
    }

    /// The derivative as a data function of the same kind.
    pub fn derivative(&self) -> DataFunction {
        match &self.repr {
            Repr::Expression { expr, var } => DataFunction::from_expr(expr.derivative(), var),
            Repr::Piecewise { breaks, coeffs } => DataFunction {
                repr: Repr::Piecewise {
                    breaks: breaks.clone(),
                    coeffs: coeffs
                        .iter()
                        .map(|c| {
                            let d = poly_deriv(c, 1);
                            if d.is_empty() {
                                vec![C64::new(0.0, 0.0)]
                            } else {
                                d
                            }
                        })
                        .collect(),
                },
            },
            Repr::Sampled { xs, vs, .. } => {
                let d = sampled_derivative(xs, vs);
                DataFunction::sampled(xs.clone(), d).expect("same abscissae")
            }
        }
    }

    /// The same function multiplied by `c`.
    pub fn scaled(&self, c: C64) -> DataFunction {
        match &self.repr {
            Repr::Expression { expr, var } => DataFunction::from_expr(
                Expr::Mul(alloc::boxed::Box::new(Expr::Num(c)), alloc::boxed::Box::new(expr.clone())),
                var,
            ),
            Repr::Piecewise { breaks, coeffs } => DataFunction {
                repr: Repr::Piecewise {
                    breaks: breaks.clone(),
                    coeffs: coeffs.iter().map(|p| p.iter().map(|v| v * c).collect()).collect(),
                },
            },
            Repr::Sampled { xs, vs, .. } => {
                DataFunction::sampled(xs.clone(), vs.iter().map(|v| v * c).collect()).expect("same abscissae")
            }
        }
    }

    fn exp_pieces(&self) -> Option<Vec<(f64, f64, f64, ExpPoly)>> {
        match &self.repr {
            Repr::Expression { expr, .. } => {
                let p = expr.to_exp_poly()?;
                Some(vec![(f64::NEG_INFINITY, f64::INFINITY, 0.0, p)])
            }
            Repr::Piecewise { breaks, coeffs } | Repr::Sampled { breaks, coeffs, .. } => {
                let last = breaks.len() - 2;
                Some(
                    coeffs
                        .iter()
                        .enumerate()
                        .map(|(i, c)| {
                            // the outer pieces extend the end polynomials
                            let lo = if i == 0 { f64::NEG_INFINITY } else { breaks[i] };
                            let hi = if i == last { f64::INFINITY } else { breaks[i + 1] };
                            (lo, hi, breaks[i], ExpPoly::polynomial(c))
                        })
                        .collect(),
                )
            }
        }
    }

    /// `∫_lo^hi e^{γs} f(s) ds`, exact for exponential-polynomial data,
    /// otherwise adaptive Gauss–Legendre with the dominant exponential factored out.
    pub fn exp_transform(&self, gamma: C64, lo: f64, hi: f64) -> Wide {
        if hi <= lo {
            return Wide::ZERO;
        }
        if self.is_structurally_zero() {
            return Wide::ZERO;
        }
        if let Some(pieces) = self.exp_pieces() {
            let mut total = Wide::ZERO;
            for (a, b, origin, p) in pieces {
                let a = a.max(lo);
                let b = b.min(hi);
                if b > a {
                    total += p.integrate_exp(gamma, a, b, origin);
                }
            }
            return total;
        }
        let anchor = if gamma.re > 0.0 { hi } else { lo };
        let rule = GaussLegendre::new(16);
        let (v, _) = adaptive(&rule, lo, hi, 1e-12, 1e-300, |s| (gamma * (s - anchor)).exp() * self.eval(s));
        Wide::exp_c(gamma * anchor) * Wide::from_c(v)
    }
}

/// Fourth-order central differences for derivative orders 0..=4, switched to
/// one-sided stencils near the ends of `[lo, hi]`.
pub fn fourth_order_difference<F: Fn(f64) -> C64>(f: &F, k: usize, x: f64, h: f64, lo: f64, hi: f64) -> C64 {
    if k == 0 {
        return f(x);
    }
    let width = 3.0 * h;
    let offsets: Vec<f64> = if x - lo < width {
        (0..k + 4).map(|i| i as f64).collect()
    } else if hi - x < width {
        (0..k + 4).map(|i| -(i as f64)).collect()
    } else {
        let half = ((k + 3) / 2) as i32;
        (-half..=half).map(|i| i as f64).collect()
    };
    let w = fd_weights(0.0, &offsets, k);
    let mut s = C64::new(0.0, 0.0);
    for (o, wi) in offsets.iter().zip(&w) {
        s += f(x + o * h) * *wi;
    }
    s / h.powi(k as i32)
}

/// Finite-difference weights for the `k`-th derivative at `z` (Fornberg).
pub fn fd_weights(z: f64, xs: &[f64], k: usize) -> Vec<f64> {
    let n = xs.len();
    let mut c = vec![vec![0.0; k + 1]; n];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..n {
        let mn = i.min(k);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for m in (1..=mn).rev() {
                    c[i][m] = c1 * (m as f64 * c[i - 1][m - 1] - c5 * c[i - 1][m]) / c2;
                }
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for m in (1..=mn).rev() {
                c[j][m] = (c4 * c[j][m] - m as f64 * c[j][m - 1]) / c3;
            }
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    c.iter().map(|row| row[k]).collect()
}

/// Derivative of sampled data: fourth-order stencils on the sample grid
/// (one-sided at the ends).
fn sampled_derivative(xs: &[f64], vs: &[C64]) -> Vec<C64> {
    let n = xs.len();
    let width = 5.min(n);
    (0..n)
        .map(|i| {
            let start = if i < width / 2 { 0 } else { (i - width / 2).min(n - width) };
            let pts = &xs[start..start + width];
            let w = fd_weights(xs[i], pts, 1);
            let mut s = C64::new(0.0, 0.0);
            for (j, wj) in w.iter().enumerate() {
                s += vs[start + j] * *wj;
            }
            s
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spline_reproduces_linear_data() {
        let xs: Vec<f64> = (0..11).map(|i| i as f64 / 10.0).collect();
        let vs: Vec<C64> = xs.iter().map(|x| C64::new(2.0 * x - 1.0, 0.0)).collect();
        let f = DataFunction::sampled(xs, vs).unwrap();
        assert!((f.eval(0.37).re - (-0.26)).abs() < 1e-14);
        let (d, exact) = f.derivative_at(1, 0.5);
        assert!(!exact);
        assert!((d.re - 2.0).abs() < 1e-8);
    }

    #[test]
    fn transform_of_piecewise_matches_quadrature() {
        let f = DataFunction::piecewise(
            vec![0.0, 0.5, 1.0],
            vec![vec![C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(-4.0, 0.0)], vec![C64::new(0.0, 0.0), C64::new(-1.0, 0.0)]],
        )
        .unwrap();
        let g = C64::new(0.3, -7.0);
        let exact = f.exp_transform(g, 0.0, 1.0).to_c();
        let rule = GaussLegendre::new(30);
        let q = rule.integrate(0.0, 0.5, |x| (g * x).exp() * f.eval(x)) + rule.integrate(0.5, 1.0, |x| (g * x).exp() * f.eval(x));
        assert!((exact - q).norm() < 1e-13);
    }

    #[test]
    fn fallback_transform_for_non_exp_poly() {
        let f = DataFunction::expression("1/(1+x^2)", "x").unwrap();
        let g = C64::new(0.0, -40.0);
        let v = f.exp_transform(g, 0.0, 1.0).to_c();
        let rule = GaussLegendre::new(16);
        let (q, _) = adaptive(&rule, 0.0, 1.0, 1e-14, 0.0, |x| (g * x).exp() / (1.0 + x * x));
        assert!((v - q).norm() < 1e-12);
    }

    #[test]
    fn fornberg_weights() {
        let w = fd_weights(0.0, &[-1.0, 0.0, 1.0], 2);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] + 2.0).abs() < 1e-14 && (w[2] - 1.0).abs() < 1e-14);
    }
}
