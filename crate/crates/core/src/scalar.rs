use std::cmp::Ordering;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Signed, ToPrimitive, Zero};

/// The number type a system is built over.
///
/// Two implementations exist: `f64` for fast floating-point runs and
/// [`BigRational`] for exact rational arithmetic. The choice is fixed when a
/// system is constructed and never mixed afterwards; everything downstream
/// (grid keys, covers, pressure sums) is generic over this trait.
pub trait Scalar:
    Clone
    + Debug
    + PartialEq
    + PartialOrd
    + Send
    + Sync
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    /// True when arithmetic is exact and comparisons need no tolerance.
    const EXACT: bool;

    fn zero() -> Self;
    fn one() -> Self;
    fn from_i64(v: i64) -> Self;
    /// `num / den`; panics if `den == 0`.
    fn from_rational(num: i64, den: i64) -> Self;
    /// Exact conversion from a float value, if one exists.
    fn from_f64(v: f64) -> Option<Self>;
    fn from_bigint(v: &BigInt) -> Self;
    fn to_f64(&self) -> f64;
    /// Largest integer `<= self`.
    fn floor_int(&self) -> BigInt;
    /// Nearest integer (ties away from the origin are acceptable; callers
    /// only use this together with a tolerance band).
    fn round_int(&self) -> BigInt;
    fn abs(&self) -> Self;
    fn is_zero(&self) -> bool;
    /// Slack used for grid-line comparisons, in grid units. Zero in exact
    /// mode; a fixed small tolerance in float mode.
    fn grid_tol() -> Self;
    /// Total order for sorting; coordinates in this crate are always finite.
    fn cmp_total(&self, other: &Self) -> Ordering;
    fn mode_name() -> &'static str;
}

impl Scalar for f64 {
    const EXACT: bool = false;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        num as f64 / den as f64
    }

    fn from_f64(v: f64) -> Option<Self> {
        Some(v)
    }

    fn from_bigint(v: &BigInt) -> Self {
        v.to_f64().expect("BigInt always converts to f64")
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn floor_int(&self) -> BigInt {
        BigInt::from_f64(self.floor()).expect("finite coordinate")
    }

    fn round_int(&self) -> BigInt {
        BigInt::from_f64(self.round()).expect("finite coordinate")
    }

    fn abs(&self) -> Self {
        f64::abs(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0.0
    }

    fn grid_tol() -> Self {
        1e-9
    }

    fn cmp_total(&self, other: &Self) -> Ordering {
        self.total_cmp(other)
    }

    fn mode_name() -> &'static str {
        "float"
    }
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn zero() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn one() -> Self {
        BigRational::from_integer(BigInt::from(1))
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }

    fn from_rational(num: i64, den: i64) -> Self {
        assert!(den != 0, "zero denominator");
        BigRational::new(BigInt::from(num), BigInt::from(den))
    }

    fn from_f64(v: f64) -> Option<Self> {
        BigRational::from_float(v)
    }

    fn from_bigint(v: &BigInt) -> Self {
        BigRational::from_integer(v.clone())
    }

    fn to_f64(&self) -> f64 {
        big_rational_to_f64(self)
    }

    fn floor_int(&self) -> BigInt {
        self.floor().to_integer()
    }

    fn round_int(&self) -> BigInt {
        self.round().to_integer()
    }

    fn abs(&self) -> Self {
        Signed::abs(self)
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn grid_tol() -> Self {
        BigRational::from_integer(BigInt::from(0))
    }

    fn cmp_total(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn mode_name() -> &'static str {
        "exact"
    }
}

/// Rational to double conversion that stays correct when numerator or
/// denominator individually overflow `f64`.
pub fn big_rational_to_f64(x: &BigRational) -> f64 {
    let n = x.numer();
    let d = x.denom();
    let nf = n.to_f64().unwrap_or(f64::NAN);
    let df = d.to_f64().unwrap_or(f64::NAN);
    if nf.is_finite() && df.is_finite() && df != 0.0 {
        return nf / df;
    }
    // Drop a common power of two until both halves are representable. The
    // larger half keeps ~900 bits, far more than the 53 that survive anyway.
    let bits = n.bits().max(d.bits());
    let shift = bits.saturating_sub(900);
    let n2 = n >> shift;
    let d2 = d >> shift;
    let sign = if (n.sign() == num_bigint::Sign::Minus) != (d.sign() == num_bigint::Sign::Minus) {
        -1.0
    } else {
        1.0
    };
    if d2.is_zero() {
        return sign * f64::INFINITY;
    }
    if n2.is_zero() {
        return 0.0;
    }
    n2.to_f64().unwrap_or(sign * f64::INFINITY) / d2.to_f64().unwrap_or(f64::INFINITY)
}
