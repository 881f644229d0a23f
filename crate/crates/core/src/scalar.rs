//! Ordered scalar fields used by the solver and every pricing routine.
//!
//! Two fields are supported: exact rationals over arbitrary-precision
//! integers, and `f64` with an absolute comparison tolerance of [`FLOAT_EPS`].
//! Everything downstream is generic over [`Scalar`], so the same code path
//! produces exact prices or fast approximations.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Exact rational number in lowest terms.
pub type Rational = BigRational;

/// Absolute tolerance for `f64` comparisons.
pub const FLOAT_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    ExactRational,
    Float64,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mode::ExactRational => f.write_str("rational"),
            Mode::Float64 => f.write_str("float"),
        }
    }
}

pub trait Scalar:
    Clone
    + fmt::Debug
    + fmt::Display
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
    fn from_i64(v: i64) -> Self;
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Exact value when one exists; floats convert through their binary expansion.
    fn to_rational(&self) -> Option<Rational>;
    /// Total order, tolerance-aware for floats.
    fn cmp_tol(&self, other: &Self) -> Ordering;

    fn ratio(num: i64, den: i64) -> Self {
        Self::from_rational(&Rational::new(BigInt::from(num), BigInt::from(den)))
    }

    fn is_zero_tol(&self) -> bool {
        self.cmp_tol(&Self::zero()) == Ordering::Equal
    }

    fn is_pos(&self) -> bool {
        self.cmp_tol(&Self::zero()) == Ordering::Greater
    }

    fn is_neg(&self) -> bool {
        self.cmp_tol(&Self::zero()) == Ordering::Less
    }

    fn eq_tol(&self, other: &Self) -> bool {
        self.cmp_tol(other) == Ordering::Equal
    }

    fn abs_val(&self) -> Self {
        if self.is_neg() {
            -self.clone()
        } else {
            self.clone()
        }
    }

    fn max_tol(self, other: Self) -> Self {
        if other.cmp_tol(&self) == Ordering::Greater {
            other
        } else {
            self
        }
    }

    fn min_tol(self, other: Self) -> Self {
        if other.cmp_tol(&self) == Ordering::Less {
            other
        } else {
            self
        }
    }

    /// `self -= a * b`, the inner loop of every pivot.
    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self = self.clone() - a.clone() * b.clone();
    }

    /// Authoritative text form: `p/q` (or `p`) for rationals, shortest
    /// round-trip decimal for floats.
    fn render(&self) -> String;
}

impl Scalar for Rational {
    const MODE: Mode = Mode::ExactRational;

    fn zero() -> Self {
        Zero::zero()
    }

    fn one() -> Self {
        One::one()
    }

    fn from_i64(v: i64) -> Self {
        Rational::from_integer(BigInt::from(v))
    }

    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        match (self.numer().to_f64(), self.denom().to_f64()) {
            (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
            _ => {
                // Very large terms: scale down before dividing.
                let bits = self.numer().bits().max(self.denom().bits()) as i64 - 60;
                let shift = bits.max(0) as usize;
                let n = (self.numer() >> shift).to_f64().unwrap_or(0.0);
                let d = (self.denom() >> shift).to_f64().unwrap_or(1.0);
                n / d
            }
        }
    }

    fn to_rational(&self) -> Option<Rational> {
        Some(self.clone())
    }

    fn cmp_tol(&self, other: &Self) -> Ordering {
        self.cmp(other)
    }

    fn is_zero_tol(&self) -> bool {
        self.is_zero()
    }

    fn abs_val(&self) -> Self {
        self.abs()
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn render(&self) -> String {
        self.to_string()
    }
}

impl Scalar for f64 {
    const MODE: Mode = Mode::Float64;

    fn zero() -> Self {
        0.0
    }

    fn one() -> Self {
        1.0
    }

    fn from_i64(v: i64) -> Self {
        v as f64
    }

    fn from_rational(r: &Rational) -> Self {
        <Rational as Scalar>::to_f64(r)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_rational(&self) -> Option<Rational> {
        Rational::from_float(*self)
    }

    fn cmp_tol(&self, other: &Self) -> Ordering {
        let diff = self - other;
        if diff.abs() <= FLOAT_EPS {
            Ordering::Equal
        } else if diff < 0.0 {
            Ordering::Less
        } else {
            Ordering::Greater
        }
    }

    fn sub_mul_assign(&mut self, a: &Self, b: &Self) {
        *self -= a * b;
    }

    fn render(&self) -> String {
        format!("{self}")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot parse `{0}` as a number (expected `p/q`, an integer, or a decimal)")]
pub struct ParseScalarError(pub String);

/// Parses `p/q`, integers and finite decimals (`-1.25`, `3e-2`) exactly.
pub fn parse_rational(text: &str) -> Result<Rational, ParseScalarError> {
    let t = text.trim();
    let err = || ParseScalarError(text.to_string());
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Ok(i) = BigInt::from_str(t) {
        return Ok(Rational::from_integer(i));
    }
    parse_decimal(t).ok_or_else(err)
}

fn parse_decimal(t: &str) -> Option<Rational> {
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(pos) => (&t[..pos], t[pos + 1..].parse::<i32>().ok()?),
        None => (t, 0),
    };
    let (neg, body) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = body.split_once('.').unwrap_or((body, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let mut value = Rational::from_integer(BigInt::from_str(&digits).ok()?);
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    for _ in 0..scale.unsigned_abs() {
        if scale > 0 {
            value *= &ten;
        } else {
            value /= &ten;
        }
    }
    Some(if neg { -value } else { value })
}

/// Value in `ℝ ∪ {−∞}`; `None` stands for `−∞`.
pub type ExtScalar<F> = Option<F>;

/// Max over `ℝ ∪ {−∞}`.
pub fn ext_max<F: Scalar>(a: ExtScalar<F>, b: ExtScalar<F>) -> ExtScalar<F> {
    match (a, b) {
        (None, x) | (x, None) => x,
        (Some(a), Some(b)) => Some(a.max_tol(b)),
    }
}

pub fn ext_eq<F: Scalar>(a: &ExtScalar<F>, b: &ExtScalar<F>) -> bool {
    match (a, b) {
        (None, None) => true,
        (Some(a), Some(b)) => a.eq_tol(b),
        _ => false,
    }
}

pub fn ext_cmp<F: Scalar>(a: &ExtScalar<F>, b: &ExtScalar<F>) -> Ordering {
    match (a, b) {
        (None, None) => Ordering::Equal,
        (None, Some(_)) => Ordering::Less,
        (Some(_), None) => Ordering::Greater,
        (Some(a), Some(b)) => a.cmp_tol(b),
    }
}

pub fn render_ext<F: Scalar>(v: &ExtScalar<F>) -> String {
    match v {
        Some(x) => x.render(),
        None => "-inf".to_string(),
    }
}

/// Decimal annotation computed by exact long division: at most `digits`
/// fractional digits, with a trailing `…` when the expansion is cut short.
/// Floats use their shortest round-trip form.
pub fn render_decimal<F: Scalar>(v: &F, digits: usize) -> String {
    let r = match (F::MODE, v.to_rational()) {
        (Mode::ExactRational, Some(r)) => r,
        _ => return v.to_f64().to_string(),
    };
    let sign = if r.is_negative() { "-" } else { "" };
    let r = r.abs();
    let den = r.denom().clone();
    let mut out = format!("{sign}{}", r.numer() / &den);
    let mut rem = r.numer() % &den;
    if rem.is_zero() {
        return out;
    }
    out.push('.');
    for _ in 0..digits {
        rem *= 10;
        out.push_str(&(&rem / &den).to_string());
        rem = rem % &den;
        if rem.is_zero() {
            return out;
        }
    }
    out.push('…');
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact_and_marked_when_cut() {
        assert_eq!(render_decimal(&Rational::ratio(18, 5), 12), "3.6");
        assert_eq!(render_decimal(&Rational::ratio(-3, 2), 12), "-1.5");
        assert_eq!(render_decimal(&Rational::ratio(1, 3), 4), "0.3333…");
        assert_eq!(render_decimal(&Rational::ratio(-1, 8), 12), "-0.125");
        assert_eq!(render_decimal(&Rational::from_i64(2), 12), "2");
        assert_eq!(render_decimal(&0.25f64, 12), "0.25");
    }

    fn q(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/2").unwrap(), q(3, 2));
        assert_eq!(parse_rational(" -4/6 ").unwrap(), q(-2, 3));
        assert_eq!(parse_rational("7").unwrap(), q(7, 1));
        assert_eq!(parse_rational("0.4").unwrap(), q(2, 5));
        assert_eq!(parse_rational("-1.25e1").unwrap(), q(-25, 2));
        assert_eq!(parse_rational("2.5E-1").unwrap(), q(1, 4));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn rational_renders_lowest_terms() {
        assert_eq!(q(6, 4).render(), "3/2");
        assert_eq!(q(-18, 5).render(), "-18/5");
        assert_eq!(q(4, 2).render(), "2");
    }

    #[test]
    fn float_comparisons_use_tolerance() {
        assert!(1.0_f64.eq_tol(&(1.0 + 1e-10)));
        assert!(!1.0_f64.eq_tol(&(1.0 + 1e-8)));
        assert!((-1e-12_f64).is_zero_tol());
        assert!(!(-1e-12_f64).is_neg());
    }

    #[test]
    fn huge_rationals_convert_to_float() {
        let big = Rational::new(BigInt::from(10).pow(400) * 3, BigInt::from(10).pow(400) * 2);
        assert!((Scalar::to_f64(&big) - 1.5).abs() < 1e-12);
    }

    #[test]
    fn extended_max_treats_none_as_minus_infinity() {
        assert_eq!(ext_max(None, Some(q(1, 2))), Some(q(1, 2)));
        assert_eq!(ext_max::<Rational>(None, None), None);
        assert_eq!(ext_cmp(&None, &Some(q(-100, 1))), Ordering::Less);
    }
}
