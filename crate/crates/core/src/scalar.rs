//! Scalar abstraction shared by the QUBO compiler, the samplers and the
//! metrics.
//!
//! Everything numeric is generic over [`Scalar`]. The exact instantiation
//! ([`Rational`]) is what the oracles compare against; the floating
//! instantiations exist for quick experiments and for tooling that only needs
//! approximate energies.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Arbitrary-precision rational number.
pub type Rational = BigRational;

/// Headroom kept when packing exact values into `i128` so that any sum over
/// a QUBO's terms stays representable.
const I128_SUM_LIMIT_BITS: u64 = 120;

/// A common-denominator integer view of a list of exact values:
/// `values[i] == numerators[i] / denominator`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegerForm<S> {
    pub numerators: Vec<i128>,
    pub denominator: S,
}

pub trait Scalar:
    Clone
    + Debug
    + Display
    + PartialOrd
    + Num
    + Signed
    + FromPrimitive
    + ToPrimitive
    + Send
    + Sync
    + 'static
{
    /// True when arithmetic on this type is exact.
    const EXACT: bool;

    fn from_rational(r: &Rational) -> Self;

    /// Exact rational value; `None` for non-finite floats.
    fn to_rational(&self) -> Option<Rational>;

    fn from_int(v: i128) -> Self;

    /// Parses the text written by [`Scalar::render`] (and plain decimals).
    fn parse_text(s: &str) -> Result<Self>;

    /// Text form that [`Scalar::parse_text`] reads back bit-exactly.
    fn render(&self) -> String;

    /// Packs the values over a shared denominator when the type is exact and
    /// the numerators (and their absolute sum) fit comfortably in `i128`.
    fn integer_form(values: &[Self]) -> Option<IntegerForm<Self>>;

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for Rational {
    const EXACT: bool = true;

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn from_int(v: i128) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn parse_text(s: &str) -> Result<Self> {
        parse_rational(s)
    }

    fn render(&self) -> String {
        if self.is_integer() {
            self.numer().to_string()
        } else {
            format!("{}/{}", self.numer(), self.denom())
        }
    }

    fn integer_form(values: &[Self]) -> Option<IntegerForm<Self>> {
        let lcm = values
            .iter()
            .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
        let mut total = BigInt::zero();
        let mut numerators = Vec::with_capacity(values.len());
        for v in values {
            let scaled = v.numer() * (&lcm / v.denom());
            total += scaled.abs();
            numerators.push(scaled.to_i128()?);
        }
        if total.bits() > I128_SUM_LIMIT_BITS || lcm.bits() > I128_SUM_LIMIT_BITS {
            return None;
        }
        Some(IntegerForm {
            numerators,
            denominator: Rational::from_integer(lcm),
        })
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_rational(r: &Rational) -> Self {
                r.to_f64().unwrap_or(f64::NAN) as $t
            }

            fn to_rational(&self) -> Option<Rational> {
                Rational::from_float(*self)
            }

            fn from_int(v: i128) -> Self {
                v as $t
            }

            fn parse_text(s: &str) -> Result<Self> {
                s.trim()
                    .parse::<$t>()
                    .map_err(|e| Error::input(format!("bad number {s:?}: {e}")))
            }

            fn render(&self) -> String {
                // Display for floats is the shortest round-tripping form.
                format!("{}", self)
            }

            fn integer_form(_values: &[Self]) -> Option<IntegerForm<Self>> {
                None
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);

/// Parses `"a/b"`, integers, and decimals with optional exponent
/// (`"12.5"`, `"1e3"`, `"-2.5E-2"`) into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::input(format!("bad rational {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if (int_part.is_empty() && frac_part.is_empty())
        || !int_part.bytes().chain(frac_part.bytes()).all(|b| b.is_ascii_digit())
    {
        return Err(bad());
    }
    let all_digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::parse_bytes(all_digits.as_bytes(), 10).ok_or_else(bad)?);
    let shift = exponent - frac_part.len() as i64;
    if shift.unsigned_abs() > 4096 {
        return Err(bad());
    }
    let ten = Rational::from_integer(BigInt::from(10));
    let power = num_traits::pow(ten, shift.unsigned_abs() as usize);
    if shift >= 0 {
        value *= power;
    } else {
        value /= power;
    }
    Ok(if negative { -value } else { value })
}

/// Renders a rational as a terminating decimal when possible, `None` otherwise.
pub fn rational_to_decimal(r: &Rational) -> Option<String> {
    if r.is_integer() {
        return Some(r.numer().to_string());
    }
    let mut d = r.denom().clone();
    let (mut twos, mut fives) = (0usize, 0usize);
    let two = BigInt::from(2);
    let five = BigInt::from(5);
    while d.is_multiple_of(&two) {
        d /= &two;
        twos += 1;
    }
    while d.is_multiple_of(&five) {
        d /= &five;
        fives += 1;
    }
    if !d.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = r * Rational::from_integer(num_traits::pow(BigInt::from(10), places));
    let digits = scaled.numer().abs().to_string();
    let digits = format!("{digits:0>width$}", width = places + 1);
    let (int_part, frac_part) = digits.split_at(digits.len() - places);
    let sign = if r.is_negative() { "-" } else { "" };
    Some(format!("{sign}{int_part}.{frac_part}"))
}

/// Shorthand for an integral rational.
pub fn rat(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Shorthand for `n / d`.
pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}
