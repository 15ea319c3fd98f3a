//! Gauss–Legendre rules and an adaptive integrator for smooth complex integrands.

#[allow(unused_imports)]
use num_traits::Float;
use alloc::vec::Vec;
use core::f64::consts::PI;


use crate::scalar::C64;

/// Nodes and weights on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(n: usize) -> GaussLegendre {
        assert!(n >= 1);
        let mut nodes = alloc::vec![0.0; n];
        let mut weights = alloc::vec![0.0; n];
        for i in 0..(n + 1) / 2 {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            dp = if d != 0.0 { d } else { dp };
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Integral of `f` over `[a, b]`.
    pub fn integrate<F: FnMut(f64) -> C64>(&self, a: f64, b: f64, mut f: F) -> C64 {
        let c = 0.5 * (a + b);
        let h = 0.5 * (b - a);
        let mut s = C64::new(0.0, 0.0);
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            s += f(c + h * x) * *w;
        }
        s * h
    }

    /// Legendre coefficient `c_k` of the interpolant through node values.
    pub fn legendre_coefficient(&self, values: &[C64], k: usize) -> C64 {
        let mut c = C64::new(0.0, 0.0);
        for i in 0..self.len() {
            c += values[i] * (self.weights[i] * legendre_with_derivative(k, self.nodes[i]).0);
        }
        c * ((2 * k + 1) as f64 / 2.0)
    }

    /// Error estimate for one panel: the trailing Legendre coefficients of the
    /// node values, extrapolated at their observed decay rate to the degree the
    /// rule integrates exactly. Unresolved panels get the raw trailing size.
    pub fn tail_estimate(&self, values: &[C64], half_length: f64) -> f64 {
        let n = self.len();
        if n < 6 {
            return 0.0;
        }
        let c: Vec<f64> = (n - 4..n).map(|k| self.legendre_coefficient(values, k).norm()).collect();
        let last = c[2] + c[3];
        let ratio = |a: f64, b: f64| if b > 0.0 { a / b } else if a > 0.0 { f64::INFINITY } else { 0.0 };
        let r = ratio(c[3], c[1]).max(ratio(c[2], c[0])).sqrt();
        let est = if r < 0.9 { last * r.powi(n as i32 + 1) } else { last };
        est * half_length.abs()
    }
}

/// `(P_n(x), P_n'(x))` by the three-term recurrence.
pub fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = n as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        0.5 * nf * (nf + 1.0) * if x > 0.0 || n % 2 == 1 { 1.0 } else { -1.0 }
    } else {
        nf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// Adaptive bisection with a fixed Gauss–Legendre rule; accepts a panel when
/// the two-halves estimate agrees with the whole-panel one.
pub fn adaptive<F: FnMut(f64) -> C64>(
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    mut f: F,
) -> (C64, f64) {
    let mut stack: Vec<(f64, f64, C64, usize)> = Vec::new();
    let whole = rule.integrate(a, b, &mut f);
    stack.push((a, b, whole, 0));
    let mut total = C64::new(0.0, 0.0);
    let mut err = 0.0;
    let scale_guess = whole.norm();
    while let Some((lo, hi, est, depth)) = stack.pop() {
        let mid = 0.5 * (lo + hi);
        let left = rule.integrate(lo, mid, &mut f);
        let right = rule.integrate(mid, hi, &mut f);
        let refined = left + right;
        let diff = (refined - est).norm();
        let tol = (rel_tol * scale_guess.max(refined.norm())).max(abs_tol)
            * ((hi - lo) / (b - a)).abs().max(1e-3);
        if diff <= tol || depth >= 40 {
            total += refined;
            err += diff;
        } else {
            stack.push((lo, mid, left, depth + 1));
            stack.push((mid, hi, right, depth + 1));
        }
    }
    (total, err)
}
