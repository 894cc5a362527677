//! Complex scalars in two arithmetic modes.
//!
//! Exact mode works over the Gaussian rationals `Q(i)` with arbitrary
//! precision; float mode uses double-precision complex numbers. Library code
//! is generic over [`Scalar`], so the mode is fixed by the type for the whole
//! computation. [`ComplexScalar`] is the run-time tagged form used at the
//! serialization boundary, where mixing modes is reported as an error.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_complex::{Complex, Complex64};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Result, WcvError};

/// Gaussian rational with arbitrary-precision parts.
pub type Exact = Complex<BigRational>;
/// Double-precision complex number.
pub type Float = Complex64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    Exact,
    Float,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Float => "float",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mode {
    type Err = WcvError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Mode::Exact),
            "float" => Ok(Mode::Float),
            other => Err(WcvError::Parse(format!("unknown mode `{other}`"))),
        }
    }
}

/// Field operations shared by both arithmetic modes.
pub trait Scalar:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    const MODE: Mode;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn from_gaussian(re: (i64, i64), im: (i64, i64)) -> Self;
    fn to_c64(&self) -> Complex64;
    /// Converts a float value; exact mode takes the binary expansion exactly.
    fn from_c64(z: Complex64) -> Self;
    /// The exact value in exact mode, `None` in float mode.
    fn to_exact(&self) -> Option<Exact>;
    /// Exact in exact mode, rounded in float mode.
    fn from_exact(z: &Exact) -> Self;
    fn is_exactly_zero(&self) -> bool;
    fn modulus(&self) -> f64 {
        self.to_c64().norm()
    }
    /// Zero test used by rank decisions: exact in exact mode, `|z| <= tol` in float mode.
    fn negligible(&self, tol: f64) -> bool;
    fn parse_parts(re: &str, im: &str) -> Result<Self>;
    fn format_parts(&self) -> (String, String);

    fn mul_ref(&self, other: &Self) -> Self {
        self.clone() * other.clone()
    }
    fn add_ref(&self, other: &Self) -> Self {
        self.clone() + other.clone()
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self.clone() - other.clone()
    }
    fn from_i64(v: i64) -> Self {
        Self::from_ratio(v, 1)
    }
    fn i() -> Self {
        Self::from_gaussian((0, 1), (1, 1))
    }
}

fn ratio(num: i64, den: i64) -> BigRational {
    assert!(den != 0, "zero denominator");
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

fn parse_rational(s: &str) -> Result<BigRational> {
    let t = s.trim();
    if t.is_empty() {
        return Err(WcvError::Parse("empty rational".into()));
    }
    if let Some((p, q)) = t.split_once('/') {
        let p = BigInt::from_str(p.trim()).map_err(|e| WcvError::Parse(format!("`{s}`: {e}")))?;
        let q = BigInt::from_str(q.trim()).map_err(|e| WcvError::Parse(format!("`{s}`: {e}")))?;
        if q.is_zero() {
            return Err(WcvError::Parse(format!("`{s}`: zero denominator")));
        }
        Ok(BigRational::new(p, q))
    } else {
        let p = BigInt::from_str(t).map_err(|e| WcvError::Parse(format!("`{s}`: {e}")))?;
        Ok(BigRational::from_integer(p))
    }
}

fn format_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

fn rational_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge parts: fall back through the sign alone to avoid NaN.
        if r.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

impl Scalar for Exact {
    const MODE: Mode = Mode::Exact;

    fn zero() -> Self {
        Complex::new(BigRational::zero(), BigRational::zero())
    }
    fn one() -> Self {
        Complex::new(BigRational::one(), BigRational::zero())
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        Complex::new(ratio(num, den), BigRational::zero())
    }
    fn from_gaussian(re: (i64, i64), im: (i64, i64)) -> Self {
        Complex::new(ratio(re.0, re.1), ratio(im.0, im.1))
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(rational_to_f64(&self.re), rational_to_f64(&self.im))
    }
    fn from_c64(z: Complex64) -> Self {
        let conv = |x: f64| BigRational::from_float(x).unwrap_or_else(BigRational::zero);
        Complex::new(conv(z.re), conv(z.im))
    }
    fn to_exact(&self) -> Option<Exact> {
        Some(self.clone())
    }
    fn from_exact(z: &Exact) -> Self {
        z.clone()
    }
    fn is_exactly_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn negligible(&self, _tol: f64) -> bool {
        self.is_exactly_zero()
    }
    fn parse_parts(re: &str, im: &str) -> Result<Self> {
        Ok(Complex::new(parse_rational(re)?, parse_rational(im)?))
    }
    fn format_parts(&self) -> (String, String) {
        (format_rational(&self.re), format_rational(&self.im))
    }
    fn mul_ref(&self, other: &Self) -> Self {
        self * other
    }
    fn add_ref(&self, other: &Self) -> Self {
        self + other
    }
    fn sub_ref(&self, other: &Self) -> Self {
        self - other
    }
}

impl Scalar for Float {
    const MODE: Mode = Mode::Float;

    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn from_ratio(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        Complex64::new(num as f64 / den as f64, 0.0)
    }
    fn from_gaussian(re: (i64, i64), im: (i64, i64)) -> Self {
        Complex64::new(re.0 as f64 / re.1 as f64, im.0 as f64 / im.1 as f64)
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
    fn from_c64(z: Complex64) -> Self {
        z
    }
    fn to_exact(&self) -> Option<Exact> {
        None
    }
    fn from_exact(z: &Exact) -> Self {
        z.to_c64()
    }
    fn is_exactly_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn modulus(&self) -> f64 {
        self.norm()
    }
    fn negligible(&self, tol: f64) -> bool {
        self.norm() <= tol
    }
    fn parse_parts(re: &str, im: &str) -> Result<Self> {
        let p = |s: &str| -> Result<f64> {
            let t = s.trim();
            if t.contains('/') {
                return Ok(rational_to_f64(&parse_rational(t)?));
            }
            t.parse::<f64>().map_err(|e| WcvError::Parse(format!("`{s}`: {e}")))
        };
        Ok(Complex64::new(p(re)?, p(im)?))
    }
    fn format_parts(&self) -> (String, String) {
        (format!("{:?}", self.re), format!("{:?}", self.im))
    }
}

/// A run-time tagged complex scalar, used where the mode is only known from input data.
#[derive(Debug, Clone, PartialEq)]
pub enum ComplexScalar {
    Exact(Exact),
    Float(Float),
}

impl ComplexScalar {
    pub fn mode(&self) -> Mode {
        match self {
            ComplexScalar::Exact(_) => Mode::Exact,
            ComplexScalar::Float(_) => Mode::Float,
        }
    }

    pub fn to_c64(&self) -> Complex64 {
        match self {
            ComplexScalar::Exact(z) => z.to_c64(),
            ComplexScalar::Float(z) => *z,
        }
    }

    fn combine(
        &self,
        other: &Self,
        fe: impl Fn(&Exact, &Exact) -> Exact,
        ff: impl Fn(Float, Float) -> Float,
    ) -> Result<Self> {
        match (self, other) {
            (ComplexScalar::Exact(a), ComplexScalar::Exact(b)) => Ok(ComplexScalar::Exact(fe(a, b))),
            (ComplexScalar::Float(a), ComplexScalar::Float(b)) => Ok(ComplexScalar::Float(ff(*a, *b))),
            (a, b) => Err(WcvError::ModeMismatch { left: a.mode().name(), right: b.mode().name() }),
        }
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a + b, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a - b, |a, b| a - b)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.combine(other, |a, b| a * b, |a, b| a * b)
    }
}

impl From<Exact> for ComplexScalar {
    fn from(z: Exact) -> Self {
        ComplexScalar::Exact(z)
    }
}

impl From<Float> for ComplexScalar {
    fn from(z: Float) -> Self {
        ComplexScalar::Float(z)
    }
}

/// Lets generic code wrap its scalar into the tagged form.
pub trait IntoTagged {
    fn into_tagged(self) -> ComplexScalar;
}

impl IntoTagged for Exact {
    fn into_tagged(self) -> ComplexScalar {
        ComplexScalar::Exact(self)
    }
}

impl IntoTagged for Float {
    fn into_tagged(self) -> ComplexScalar {
        ComplexScalar::Float(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_parse_and_format() {
        let z = Exact::parse_parts("-6/4", "2").unwrap();
        assert_eq!(z.format_parts(), ("-3/2".to_string(), "2".to_string()));
        assert!(Exact::parse_parts("1/0", "0").is_err());
        assert!(Exact::parse_parts("x", "0").is_err());
    }

    #[test]
    fn exact_arithmetic_is_closed() {
        let a = Exact::from_gaussian((1, 3), (2, 5));
        let b = Exact::from_gaussian((-7, 2), (1, 1));
        let q = a.clone() / b.clone();
        assert_eq!(q * b, a);
    }

    #[test]
    fn float_round_trips_through_strings() {
        let z = Float::new(0.1, -1.0 / 3.0);
        let (re, im) = z.format_parts();
        assert_eq!(Float::parse_parts(&re, &im).unwrap(), z);
    }

    #[test]
    fn mixed_modes_are_rejected() {
        let a = ComplexScalar::Exact(<Exact as Scalar>::one());
        let b = ComplexScalar::Float(<Float as Scalar>::one());
        assert!(matches!(a.try_add(&b), Err(WcvError::ModeMismatch { .. })));
        assert!(a.try_mul(&a).is_ok());
    }
}
