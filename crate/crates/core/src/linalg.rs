//! Dense linear algebra over [`Scalar`]: partial-pivoted LU and determinants.

use alloc::vec::Vec;

use crate::scalar::Scalar;

/// Row-major square matrix.
#[derive(Clone, Debug)]
pub struct Matrix<S> {
    pub n: usize,
    pub data: Vec<S>,
}

impl<S: Scalar> Matrix<S> {
    pub fn zeros(n: usize) -> Matrix<S> {
        Matrix { n, data: alloc::vec![S::zero(); n * n] }
    }

    pub fn identity(n: usize) -> Matrix<S> {
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = S::one();
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> S {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: S) {
        self.data[i * self.n + j] = v;
    }

    pub fn transpose(&self) -> Matrix<S> {
        let n = self.n;
        let mut t = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                t.data[j * n + i] = self.data[i * n + j];
            }
        }
        t
    }

    /// Row vector times matrix: `(x A)_j = Σ_i x_i A_ij`.
    pub fn left_mul(&self, x: &[S]) -> Vec<S> {
        let n = self.n;
        let mut out = alloc::vec![S::zero(); n];
        for i in 0..n {
            for j in 0..n {
                out[j] += x[i] * self.data[i * n + j];
            }
        }
        out
    }
}

#[derive(Clone, Debug)]
pub struct Lu<S> {
    lu: Matrix<S>,
    perm: Vec<usize>,
    sign: i32,
    /// log2 of the ratio between the largest and smallest pivot.
    pub pivot_spread: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Singular {
    /// log2 of the estimated condition number (infinite for an exact zero pivot).
    pub log2_condition: f64,
}

impl<S: Scalar> Lu<S> {
    /// Factorises with partial pivoting; fails when a pivot is zero or the
    /// pivot spread exceeds `max_log2_spread`.
    pub fn new(a: &Matrix<S>, max_log2_spread: f64) -> Result<Lu<S>, Singular> {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut sign = 1;
        let mut pmax = f64::NEG_INFINITY;
        let mut pmin = f64::INFINITY;
        for c in 0..n {
            let mut best = c;
            let mut best_mag = lu.get(c, c).log2_abs();
            for r in c + 1..n {
                let m = lu.get(r, c).log2_abs();
                if m > best_mag {
                    best = r;
                    best_mag = m;
                }
            }
            if best_mag == f64::NEG_INFINITY {
                return Err(Singular { log2_condition: f64::INFINITY });
            }
            if best != c {
                for j in 0..n {
                    lu.data.swap(c * n + j, best * n + j);
                }
                perm.swap(c, best);
                sign = -sign;
            }
            pmax = pmax.max(best_mag);
            pmin = pmin.min(best_mag);
            let piv = lu.get(c, c);
            for r in c + 1..n {
                let f = lu.get(r, c) / piv;
                if f.is_zero() {
                    continue;
                }
                lu.set(r, c, f);
                for j in c + 1..n {
                    let v = lu.get(r, j) - f * lu.get(c, j);
                    lu.set(r, j, v);
                }
            }
        }
        let spread = if n == 0 { 0.0 } else { pmax - pmin };
        if spread > max_log2_spread {
            return Err(Singular { log2_condition: spread });
        }
        Ok(Lu { lu, perm, sign, pivot_spread: spread })
    }

    pub fn solve(&self, b: &[S]) -> Vec<S> {
        let n = self.lu.n;
        let mut x: Vec<S> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            let mut s = x[i];
            for j in 0..i {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = x[i];
            for j in i + 1..n {
                s -= self.lu.get(i, j) * x[j];
            }
            x[i] = s / self.lu.get(i, i);
        }
        x
    }

    pub fn det(&self) -> S {
        let mut d = if self.sign < 0 { -S::one() } else { S::one() };
        for i in 0..self.lu.n {
            d *= self.lu.get(i, i);
        }
        d
    }
}

/// Determinant by LU (zero if singular).
pub fn det<S: Scalar>(a: &Matrix<S>) -> S {
    match Lu::new(a, f64::INFINITY) {
        Ok(lu) => lu.det(),
        Err(_) => S::zero(),
    }
}

/// Exact integer determinant (fraction-free Bareiss elimination).
pub fn det_integer(a: &[Vec<i64>]) -> i64 {
    let n = a.len();
    if n == 0 {
        return 1;
    }
    let mut m: Vec<Vec<i128>> = a.iter().map(|r| r.iter().map(|&v| v as i128).collect()).collect();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n - 1 {
        if m[k][k] == 0 {
            match (k + 1..n).find(|&r| m[r][k] != 0) {
                Some(r) => {
                    m.swap(k, r);
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
            }
        }
        prev = m[k][k];
    }
    (sign * m[n - 1][n - 1]) as i64
}
