//! Complex scalars for the spectral pipeline.
//!
//! Entries of the spectral system carry factors like `e^{-iλη}` that leave the
//! f64 range long before the quantities we actually want (ratios of such
//! terms) do. [`Wide`] keeps a normalized f64 mantissa with a separate binary
//! exponent so those ratios can be formed without overflow. Precision is still
//! that of f64.

#[allow(unused_imports)]
use num_traits::Float;
use core::cmp::Ordering;
use core::fmt;
use core::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

use num_complex::Complex64;

pub type C64 = Complex64;

/// Arithmetic needed by the assembly and solve routines.
pub trait Scalar:
    Copy
    + fmt::Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn zero() -> Self;
    fn one() -> Self;
    fn from_c(z: C64) -> Self;
    /// `e^z`, exact in range for [`Wide`].
    fn exp_c(z: C64) -> Self;
    /// Back to an ordinary complex number (may overflow to infinity).
    fn to_c(self) -> C64;
    /// `log2 |z|`, `-inf` for zero.
    fn log2_abs(self) -> f64;
    fn is_zero(self) -> bool;
    /// `|z|` as a scalar.
    fn modulus(self) -> Self;
    fn scale(self, s: f64) -> Self {
        self * Self::from_c(C64::new(s, 0.0))
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn one() -> Self {
        C64::new(1.0, 0.0)
    }
    fn from_c(z: C64) -> Self {
        z
    }
    fn exp_c(z: C64) -> Self {
        z.exp()
    }
    fn to_c(self) -> C64 {
        self
    }
    fn log2_abs(self) -> f64 {
        self.norm().log2()
    }
    fn is_zero(self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn modulus(self) -> Self {
        C64::new(self.norm(), 0.0)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Extended-range complex number `m · 2^e`.
///
/// Invariant: either `m == 0` and `e == 0`, or `max(|re m|, |im m|) ∈ [1, 2)`.
#[derive(Clone, Copy, PartialEq)]
pub struct Wide {
    m: C64,
    e: i64,
}

const LN2: f64 = core::f64::consts::LN_2;

impl Wide {
    pub const ZERO: Wide = Wide { m: C64 { re: 0.0, im: 0.0 }, e: 0 };

    pub fn new(m: C64, e: i64) -> Wide {
        Wide { m, e }.normalized()
    }

    pub fn mantissa(self) -> C64 {
        self.m
    }

    pub fn exponent(self) -> i64 {
        self.e
    }

    fn normalized(self) -> Wide {
        let big = self.m.re.abs().max(self.m.im.abs());
        if big == 0.0 || !big.is_finite() {
            if big == 0.0 {
                return Wide::ZERO;
            }
            return Wide { m: self.m, e: self.e };
        }
        let (_, ex) = libm::frexp(big);
        // frexp gives big = f * 2^ex with f in [0.5, 1); we want [1, 2)
        let shift = ex - 1;
        if shift == 0 {
            return self;
        }
        Wide {
            m: C64::new(libm::ldexp(self.m.re, -shift), libm::ldexp(self.m.im, -shift)),
            e: self.e + shift as i64,
        }
    }

    pub fn abs_cmp(self, other: Wide) -> Ordering {
        self.log2_abs()
            .partial_cmp(&other.log2_abs())
            .unwrap_or(Ordering::Equal)
    }

    pub fn conj(self) -> Wide {
        Wide { m: self.m.conj(), e: self.e }
    }

    pub fn is_finite(self) -> bool {
        self.m.re.is_finite() && self.m.im.is_finite()
    }
}

fn ldexp_c(z: C64, e: i64) -> C64 {
    let e = e.clamp(-4000, 4000) as i32;
    C64::new(libm::ldexp(z.re, e), libm::ldexp(z.im, e))
}

impl fmt::Debug for Wide {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?})*2^{}", self.m, self.e)
    }
}

impl Add for Wide {
    type Output = Wide;
    fn add(self, o: Wide) -> Wide {
        if self.m.re == 0.0 && self.m.im == 0.0 {
            return o;
        }
        if o.m.re == 0.0 && o.m.im == 0.0 {
            return self;
        }
        let (a, b) = if self.e >= o.e { (self, o) } else { (o, self) };
        let d = a.e - b.e;
        if d > 64 {
            return a;
        }
        Wide { m: a.m + ldexp_c(b.m, -d), e: a.e }.normalized()
    }
}

impl Sub for Wide {
    type Output = Wide;
    fn sub(self, o: Wide) -> Wide {
        self + (-o)
    }
}

impl Neg for Wide {
    type Output = Wide;
    fn neg(self) -> Wide {
        Wide { m: -self.m, e: self.e }
    }
}

impl Mul for Wide {
    type Output = Wide;
    fn mul(self, o: Wide) -> Wide {
        Wide { m: self.m * o.m, e: self.e + o.e }.normalized()
    }
}

impl Div for Wide {
    type Output = Wide;
    fn div(self, o: Wide) -> Wide {
        Wide { m: self.m / o.m, e: self.e - o.e }.normalized()
    }
}

impl AddAssign for Wide {
    fn add_assign(&mut self, o: Wide) {
        *self = *self + o;
    }
}

impl SubAssign for Wide {
    fn sub_assign(&mut self, o: Wide) {
        *self = *self - o;
    }
}

impl MulAssign for Wide {
    fn mul_assign(&mut self, o: Wide) {
        *self = *self * o;
    }
}

impl From<C64> for Wide {
    fn from(z: C64) -> Wide {
        Wide { m: z, e: 0 }.normalized()
    }
}

impl Scalar for Wide {
    fn zero() -> Self {
        Wide::ZERO
    }
    fn one() -> Self {
        Wide { m: C64::new(1.0, 0.0), e: 0 }
    }
    fn from_c(z: C64) -> Self {
        Wide::from(z)
    }
    fn exp_c(z: C64) -> Self {
        let k = (z.re / LN2).floor();
        let frac = z.re - k * LN2;
        let mag = frac.exp();
        let (s, c) = z.im.sin_cos();
        Wide { m: C64::new(mag * c, mag * s), e: k as i64 }.normalized()
    }
    fn to_c(self) -> C64 {
        ldexp_c(self.m, self.e)
    }
    fn log2_abs(self) -> f64 {
        if self.is_zero() {
            return f64::NEG_INFINITY;
        }
        self.m.norm().log2() + self.e as f64
    }
    fn is_zero(self) -> bool {
        self.m.re == 0.0 && self.m.im == 0.0
    }
    fn modulus(self) -> Self {
        Wide { m: C64::new(self.m.norm(), 0.0), e: self.e }.normalized()
    }
    fn scale(self, s: f64) -> Self {
        Wide { m: self.m * s, e: self.e }.normalized()
    }
}
