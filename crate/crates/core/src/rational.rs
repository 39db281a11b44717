//! Exact rational arithmetic helpers and the canonical `p/q` text form.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

/// Arbitrary-precision rational, always stored in lowest terms with a
/// positive denominator.
pub type Rational = num_rational::BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseRationalError {
    #[error("expected `p/q`, got `{0}`")]
    Syntax(String),
    #[error("zero denominator in `{0}`")]
    ZeroDenominator(String),
    #[error("non-canonical rational `{0}`")]
    NonCanonical(String),
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

pub fn frac(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Renders `r` as `p/q`; integers keep the explicit `/1`.
pub fn format_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

/// Parses the strict `p/q` form: optional leading `-` on `p`, `q > 0`,
/// `gcd(|p|, q) = 1`, no leading zeros and no `+` signs.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let (p, q) = s
        .split_once('/')
        .ok_or_else(|| ParseRationalError::Syntax(s.to_string()))?;
    let digits_ok = |t: &str| {
        !t.is_empty()
            && t.bytes().all(|b| b.is_ascii_digit())
            && (t == "0" || !t.starts_with('0'))
    };
    let p_digits = p.strip_prefix('-').unwrap_or(p);
    if !digits_ok(p_digits) || !digits_ok(q) || p == "-0" {
        return Err(ParseRationalError::Syntax(s.to_string()));
    }
    let num: BigInt = p.parse().map_err(|_| ParseRationalError::Syntax(s.to_string()))?;
    let den: BigInt = q.parse().map_err(|_| ParseRationalError::Syntax(s.to_string()))?;
    if den.is_zero() {
        return Err(ParseRationalError::ZeroDenominator(s.to_string()));
    }
    if !num.abs().gcd(&den).is_one() {
        return Err(ParseRationalError::NonCanonical(s.to_string()));
    }
    Ok(Rational::new_raw(num, den))
}

/// Least common multiple of the denominators of `values` (1 for an empty slice).
pub fn common_denominator<'a>(values: impl IntoIterator<Item = &'a Rational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

/// Scales `values` by their common denominator, returning integer numerators.
pub fn to_integer_row(values: &[Rational]) -> (Vec<BigInt>, BigInt) {
    let den = common_denominator(values);
    let row = values
        .iter()
        .map(|v| v.numer() * (&den / v.denom()))
        .collect();
    (row, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formats_integers_with_unit_denominator() {
        assert_eq!(format_rational(&int(1)), "1/1");
        assert_eq!(format_rational(&frac(-3, 6)), "-1/2");
    }

    #[test]
    fn rejects_non_canonical_forms() {
        assert!(matches!(
            parse_rational("2/4"),
            Err(ParseRationalError::NonCanonical(_))
        ));
        assert!(matches!(
            parse_rational("1/0"),
            Err(ParseRationalError::ZeroDenominator(_))
        ));
        for bad in ["1", "1/-2", "+1/2", "01/2", "1/02", "-0/1", "a/b", "1/2/3", ""] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
        assert_eq!(parse_rational("0/1").unwrap(), int(0));
        assert_eq!(parse_rational("-7/3").unwrap(), frac(-7, 3));
    }

    #[test]
    fn integer_rows_share_denominator() {
        let (row, den) = to_integer_row(&[frac(1, 2), frac(2, 3), int(1)]);
        assert_eq!(den, BigInt::from(6));
        assert_eq!(row, vec![BigInt::from(3), BigInt::from(4), BigInt::from(6)]);
    }
}
