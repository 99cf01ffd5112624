//! Exact rational scalars.
//!
//! Every demand, duration, delay and window in the crate is a [`Rational`].
//! The float view ([`to_f64`]) exists for reporting only.

use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{One, Signed, ToPrimitive};

/// Exact nonnegative-by-convention rational with `i128` numerator and denominator.
pub type Rational = Ratio<i128>;

/// `632/1000`, a rational lower bound on `1 - 1/e`.
pub fn one_minus_inv_e_lower() -> Rational {
    Rational::new(632, 1000)
}

/// `e / (2(e-1))` rounded down to twelve decimals (`0.790988353434`).
pub fn hybrid_threshold_constant() -> Rational {
    Rational::new(790_988_353_434, 1_000_000_000_000)
}

pub fn int(v: i128) -> Rational {
    Rational::from_integer(v)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn is_integer(r: &Rational) -> bool {
    r.is_integer()
}

/// Largest integer `<= r`.
pub fn floor_int(r: &Rational) -> i128 {
    r.floor().to_integer()
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

/// Narrows a big rational back to [`Rational`]; `None` when it does not fit.
pub fn from_big(r: &BigRational) -> Option<Rational> {
    let n = r.numer().to_i128()?;
    let d = r.denom().to_i128()?;
    Some(Rational::new(n, d))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ParseRationalError {
    #[error("empty rational literal")]
    Empty,
    #[error("invalid rational literal `{0}`")]
    Invalid(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
}

/// Parses `"p/q"`, `"p"` or a decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let text = text.trim();
    if text.is_empty() {
        return Err(ParseRationalError::Empty);
    }
    let bad = || ParseRationalError::Invalid(text.to_string());
    if let Some((p, q)) = text.split_once('/') {
        let p = i128::from_str(p.trim()).map_err(|_| bad())?;
        let q = i128::from_str(q.trim()).map_err(|_| bad())?;
        if q == 0 {
            return Err(ParseRationalError::ZeroDenominator(text.to_string()));
        }
        return Ok(Rational::new(p, q));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || frac.len() > 30 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.trim_start().starts_with('-');
        let whole = if whole.is_empty() || whole == "-" {
            0
        } else {
            i128::from_str(whole).map_err(|_| bad())?
        };
        let scale = 10i128.checked_pow(frac.len() as u32).ok_or_else(bad)?;
        let frac = i128::from_str(frac).map_err(|_| bad())?;
        let magnitude = whole.abs() * scale + frac;
        let signed = if negative { -magnitude } else { magnitude };
        return Ok(Rational::new(signed, scale));
    }
    i128::from_str(text).map(Rational::from_integer).map_err(|_| bad())
}

/// Canonical text form: `"p"` for integers, `"p/q"` otherwise.
pub fn format_rational(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Display adapter for rationals in human-facing output.
pub struct Show<'a>(pub &'a Rational);

impl fmt::Display for Show<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}

pub(crate) fn is_nonnegative(r: &Rational) -> bool {
    !r.is_negative()
}

pub(crate) fn min(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub(crate) fn one() -> Rational {
    Rational::one()
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::Zero;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("2/3").unwrap(), Rational::new(2, 3));
        assert_eq!(parse_rational("4/2").unwrap(), int(2));
        assert_eq!(parse_rational(" 7 ").unwrap(), int(7));
        assert_eq!(parse_rational("0.25").unwrap(), Rational::new(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), Rational::new(-3, 2));
        assert!(matches!(parse_rational("1/0"), Err(ParseRationalError::ZeroDenominator(_))));
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn format_round_trips() {
        for r in [Rational::new(2, 3), int(5), Rational::new(-7, 4), Rational::zero()] {
            assert_eq!(parse_rational(&format_rational(&r)).unwrap(), r);
        }
    }

    #[test]
    fn constants_bound_the_irrationals_from_below() {
        let e = std::f64::consts::E;
        assert!(to_f64(&one_minus_inv_e_lower()) < 1.0 - 1.0 / e);
        assert!(to_f64(&hybrid_threshold_constant()) < e / (2.0 * (e - 1.0)));
        assert!((to_f64(&hybrid_threshold_constant()) - e / (2.0 * (e - 1.0))).abs() < 1e-11);
    }
}
