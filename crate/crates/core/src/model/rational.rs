//! Exact rational scalars and their string encoding.
//!
//! Every work amount, time and allocation is a [`Rational`]. The text form
//! is `"num/den"` in lowest terms, or `"int"` when the denominator is one.

use std::str::FromStr;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational {text:?}: {reason}")]
pub struct ParseRationalError {
    pub text: String,
    pub reason: &'static str,
}

pub fn int(v: i64) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// `num / den`, reduced. Panics on a zero denominator.
pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn parse(text: &str) -> Result<Rational, ParseRationalError> {
    let err = |reason| ParseRationalError {
        text: text.to_string(),
        reason,
    };
    let (num, den) = match text.split_once('/') {
        Some((n, d)) => (n, Some(d)),
        None => (text, None),
    };
    let valid_int = |s: &str, signed: bool| {
        let digits = if signed {
            s.strip_prefix('-').unwrap_or(s)
        } else {
            s
        };
        !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit())
    };
    if !valid_int(num, true) {
        return Err(err("numerator is not an integer"));
    }
    let num = BigInt::from_str(num).map_err(|_| err("numerator is not an integer"))?;
    let den = match den {
        Some(d) => {
            if !valid_int(d, false) {
                return Err(err("denominator is not a non-negative integer"));
            }
            BigInt::from_str(d).map_err(|_| err("denominator is not an integer"))?
        }
        None => BigInt::one(),
    };
    if den.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(Rational::new(num, den))
}

/// Canonical text form, `"n/d"` or `"n"`.
pub fn format(r: &Rational) -> String {
    r.to_string()
}

/// Decimal rendering with `sig` significant digits, rounded half away from
/// zero. Intended for plotting columns; the rational stays canonical.
pub fn to_decimal(r: &Rational, sig: usize) -> String {
    assert!(sig > 0);
    if r.is_zero() {
        return format!("0.{}", "0".repeat(sig - 1));
    }
    let neg = r.is_negative();
    let a = r.abs();
    // Find exponent e such that 10^e <= a < 10^(e+1).
    let ten = Rational::from_integer(BigInt::from(10));
    let mut e: i64 = 0;
    let mut scaled = a.clone();
    while scaled >= ten {
        scaled /= &ten;
        e += 1;
    }
    while scaled < Rational::one() {
        scaled *= &ten;
        e -= 1;
    }
    // digits = round(a * 10^(sig-1-e))
    let shift = sig as i64 - 1 - e;
    let pow = |k: i64| BigInt::from(10).pow(k.unsigned_abs() as u32);
    let value = if shift >= 0 {
        &a * Rational::from_integer(pow(shift))
    } else {
        &a / Rational::from_integer(pow(shift))
    };
    let (q, rem) = value.numer().div_rem(value.denom());
    let mut digits = q;
    if rem * BigInt::from(2) >= *value.denom() {
        digits += 1;
    }
    let mut shift = shift;
    let mut text = digits.to_string();
    if text.len() > sig {
        // rounding carried into a new leading digit
        text.pop();
        shift -= 1;
    }
    let body = if shift <= 0 {
        format!("{}{}", text, "0".repeat((-shift) as usize))
    } else if (shift as usize) < text.len() {
        let split = text.len() - shift as usize;
        format!("{}.{}", &text[..split], &text[split..])
    } else {
        format!("0.{}{}", "0".repeat(shift as usize - text.len()), text)
    };
    if neg {
        format!("-{body}")
    } else {
        body
    }
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Smallest rational with denominator `den` that is `>= v`.
pub fn ceil_to_grid(v: f64, den: i64) -> Rational {
    ratio((v * den as f64).ceil() as i64, den)
}

/// Largest rational with denominator `den` that is `<= v`.
pub fn floor_to_grid(v: f64, den: i64) -> Rational {
    ratio((v * den as f64).floor() as i64, den)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_roundtrip() {
        for s in ["0", "1", "-3", "1/27", "3/2", "-5/7", "123456789012345678901234567891/13"] {
            assert_eq!(format(&parse(s).unwrap()), s);
        }
        assert_eq!(format(&parse("2/4").unwrap()), "1/2");
        assert_eq!(format(&parse("4/2").unwrap()), "2");
    }

    #[test]
    fn parse_rejects_garbage() {
        for s in ["", "1/0", "a", "1/", "/2", "1.5", "1/-2", "--1", " 1"] {
            assert!(parse(s).is_err(), "{s:?} should be rejected");
        }
    }

    #[test]
    fn decimal_rendering() {
        assert_eq!(to_decimal(&ratio(3, 2), 12), "1.50000000000");
        assert_eq!(to_decimal(&ratio(1, 3), 4), "0.3333");
        assert_eq!(to_decimal(&ratio(2, 3), 4), "0.6667");
        assert_eq!(to_decimal(&int(101), 4), "101.0");
        assert_eq!(to_decimal(&int(12345), 3), "12300");
        assert_eq!(to_decimal(&ratio(-1, 8), 2), "-0.13");
        assert_eq!(to_decimal(&ratio(999, 1000), 2), "1.0");
        assert_eq!(to_decimal(&ratio(1, 1000), 2), "0.0010");
        assert_eq!(to_decimal(&int(0), 3), "0.00");
    }
}
