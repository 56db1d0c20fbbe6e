//! Scalar fields used by the generic kernels.
//!
//! Exact work runs over [`BigRational`] and complex rationals; bulk float
//! work runs over `f64` and `Complex<f64>`.

use crate::lattice::{value, value_f64, LatticePoint, QParams};
use num_bigint::BigInt;
use num_complex::Complex;
use num_rational::BigRational;
use num_traits::{Num, Signed, ToPrimitive, Zero};
use std::fmt::Debug;
use std::ops::Neg;

pub type Rational = BigRational;
pub type CRational = Complex<BigRational>;

pub trait Field:
    Clone + Debug + PartialEq + Num + Neg<Output = Self> + Send + Sync + 'static
{
    fn from_rational(r: &BigRational) -> Self;

    /// Modulus as a float, used for pivoting and error reports.
    fn magnitude(&self) -> f64;

    fn from_i64(n: i64) -> Self {
        Self::from_rational(&BigRational::from_integer(BigInt::from(n)))
    }
}

/// Totally ordered fields: rationals and `f64`.
pub trait RealField: Field + PartialOrd {
    fn as_f64(&self) -> f64;

    fn from_f64(x: f64) -> Self;

    /// Value of a lattice point in this field.
    fn of_point(p: &LatticePoint, params: &QParams) -> Self {
        Self::from_rational(&value(p, params))
    }

    fn abs_val(&self) -> Self {
        if *self < Self::zero() {
            -self.clone()
        } else {
            self.clone()
        }
    }
}

impl Field for BigRational {
    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }
    fn magnitude(&self) -> f64 {
        rat_to_f64(&self.abs())
    }
}

impl RealField for BigRational {
    fn as_f64(&self) -> f64 {
        rat_to_f64(self)
    }

    fn from_f64(x: f64) -> Self {
        f64_to_rat(x)
    }
}

impl Field for f64 {
    fn from_rational(r: &BigRational) -> Self {
        rat_to_f64(r)
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl RealField for f64 {
    fn as_f64(&self) -> f64 {
        *self
    }

    fn from_f64(x: f64) -> Self {
        x
    }

    fn of_point(p: &LatticePoint, params: &QParams) -> Self {
        value_f64(p, params)
    }
}

/// Complex fields with a distinguished real subfield.
pub trait ComplexField: Field {
    type Real: RealField;

    fn from_real(r: &Self::Real) -> Self;

    fn from_crat(z: &CRational) -> Self;
}

impl ComplexField for Complex<BigRational> {
    type Real = BigRational;

    fn from_real(r: &BigRational) -> Self {
        Complex::new(r.clone(), BigRational::zero())
    }

    fn from_crat(z: &CRational) -> Self {
        z.clone()
    }
}

impl ComplexField for Complex<f64> {
    type Real = f64;

    fn from_real(r: &f64) -> Self {
        Complex::new(*r, 0.0)
    }

    fn from_crat(z: &CRational) -> Self {
        rat_to_c64(z)
    }
}

impl Field for Complex<BigRational> {
    fn from_rational(r: &BigRational) -> Self {
        Complex::new(r.clone(), BigRational::zero())
    }
    fn magnitude(&self) -> f64 {
        rat_to_f64(&self.re).hypot(rat_to_f64(&self.im))
    }
}

impl Field for Complex<f64> {
    fn from_rational(r: &BigRational) -> Self {
        Complex::new(rat_to_f64(r), 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// Nearest `f64` to a rational, robust to huge numerators and denominators.
pub fn rat_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    let n = r.numer();
    let d = r.denom();
    let shift = n.bits() as i64 - d.bits() as i64;
    // scale so the quotient has ~64 significant bits
    let s = 64 - shift;
    let q = if s >= 0 {
        (n << (s as usize)) / d
    } else {
        n / (d << ((-s) as usize))
    };
    q.to_f64().unwrap_or(0.0) * 2f64.powi(-(s as i32))
}

pub fn rat_to_c64(z: &CRational) -> Complex<f64> {
    Complex::new(rat_to_f64(&z.re), rat_to_f64(&z.im))
}

/// Rational from an `f64`, exactly.
pub fn f64_to_rat(x: f64) -> BigRational {
    BigRational::from_float(x).unwrap_or_else(BigRational::zero)
}

pub fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(n))
}

pub fn crat(re: BigRational, im: BigRational) -> CRational {
    Complex::new(re, im)
}

/// Parses `p/q`, an integer, or a decimal literal such as `1e-9`.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().ok()?;
        let q: BigInt = q.trim().parse().ok()?;
        if q.is_zero() {
            return None;
        }
        return Some(BigRational::new(p, q));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(n));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mant, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mant) = match mant.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mant.strip_prefix('+').unwrap_or(mant)),
    };
    let (ip, fp) = mant.split_once('.').unwrap_or((mant, ""));
    if ip.is_empty() && fp.is_empty() {
        return None;
    }
    if !ip.chars().chain(fp.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits: BigInt = format!("{ip}{fp}0").parse().ok()?;
    let scale = exp - fp.len() as i32 - 1;
    let ten = BigRational::from_integer(BigInt::from(10));
    let mut v = BigRational::from_integer(digits) * ten.pow(scale);
    if neg {
        v = -v;
    }
    Some(v)
}

/// Rounds to the nearest multiple of `10^-digits`.
pub fn round_digits(x: &BigRational, digits: u32) -> BigRational {
    let scale = BigInt::from(10).pow(digits);
    let scaled = x * BigRational::from_integer(scale.clone());
    BigRational::new(scaled.round().to_integer(), scale)
}

pub fn one<F: Field>() -> F {
    F::one()
}

/// Sign of a real scalar as -1, 0 or 1.
pub fn signum<F: RealField>(x: &F) -> F {
    if *x > F::zero() {
        F::one()
    } else if *x < F::zero() {
        -F::one()
    } else {
        F::zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("1/2"), Some(rat(1, 2)));
        assert_eq!(parse_rational("-1"), Some(int(-1)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational("1e-3"), Some(rat(1, 1000)));
        assert_eq!(parse_rational("2.5E1"), Some(int(25)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn huge_rationals_convert() {
        let big = BigRational::new(BigInt::from(3) << 5000usize, BigInt::from(1) << 5001usize);
        assert!((rat_to_f64(&big) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rounding_to_digits() {
        assert_eq!(round_digits(&rat(1, 3), 2), rat(33, 100));
        assert_eq!(round_digits(&rat(2, 3), 2), rat(67, 100));
    }
}
