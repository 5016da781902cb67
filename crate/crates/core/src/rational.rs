//! Exact rational scalars.
//!
//! Everything exact in this crate is carried by [`Rational`], an
//! arbitrary-precision reduced fraction with positive denominator.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = num_rational::BigRational;

pub fn rat(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

pub fn ratio(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"p/q"`, an integer, or a plain decimal literal such as `"-0.125"`
/// or `"1.5e-3"`. Decimals are converted exactly, digit by digit.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    if s.is_empty() {
        return Err(Error::Parse("empty rational literal".into()));
    }
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad(s))?;
        let q: BigInt = q.trim().parse().map_err(|_| bad(s))?;
        if q.is_zero() {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(Rational::new(p, q));
    }
    parse_decimal(s)
}

fn bad(s: &str) -> Error {
    Error::Parse(format!("not a rational number: {s:?}"))
}

fn parse_decimal(s: &str) -> Result<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i32 = s[pos + 1..].parse().map_err(|_| bad(s))?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad(s));
    }
    if !int_part
        .chars()
        .chain(frac_part.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(bad(s));
    }
    let all: String = format!("{int_part}{frac_part}");
    let num: BigInt = if all.is_empty() {
        BigInt::zero()
    } else {
        all.parse().map_err(|_| bad(s))?
    };
    let scale = exp - frac_part.len() as i32;
    let ten = BigInt::from(10);
    let mut value = Rational::from_integer(num);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -value } else { value })
}

/// Formats as `p/q`, or `p` for integers.
pub fn format_rational(r: &Rational) -> String {
    r.to_string()
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Huge numerator and denominator: scale both down through their bit lengths.
        let n = r.numer();
        let d = r.denom();
        let shift = n.bits().max(d.bits()).saturating_sub(1000);
        let n = (n >> shift as usize).to_f64().unwrap_or(f64::NAN);
        let d = (d >> shift as usize).to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

pub fn to_complex(r: &Rational) -> Complex64 {
    Complex64::new(to_f64(r), 0.0)
}

/// Nearest rational to `x` with denominator `2^bits`.
pub fn from_f64_dyadic(x: f64, bits: u32) -> Rational {
    Rational::from_float(x)
        .map(|r| round_dyadic(&r, bits))
        .unwrap_or_else(Rational::zero)
}

/// Rounds to the nearest multiple of `2^-bits`.
pub fn round_dyadic(r: &Rational, bits: u32) -> Rational {
    let scale = BigInt::one() << bits as usize;
    let scaled = r * Rational::from_integer(scale.clone());
    Rational::new(scaled.round().to_integer(), scale)
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

pub fn abs(r: &Rational) -> Rational {
    r.abs()
}

/// Serde adapter writing rationals as `"p/q"` strings.
pub mod serde_str {
    use super::{format_rational, parse_rational, Rational};
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Lit {
            S(String),
            I(i64),
            F(f64),
        }
        match Lit::deserialize(d)? {
            Lit::S(s) => parse_rational(&s).map_err(de::Error::custom),
            Lit::I(i) => Ok(super::rat(i)),
            Lit::F(f) => parse_rational(&f.to_string()).map_err(de::Error::custom),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_and_decimals() {
        assert_eq!(parse_rational("2/4").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("-3").unwrap(), rat(-3));
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational("-1.25e1").unwrap(), ratio(-25, 2));
        assert_eq!(parse_rational("5e-2").unwrap(), ratio(1, 20));
        assert_eq!(parse_rational(".5").unwrap(), ratio(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
    }

    #[test]
    fn formats_round_trip() {
        for s in ["7", "-2/3", "0"] {
            assert_eq!(format_rational(&parse_rational(s).unwrap()), s);
        }
    }

    #[test]
    fn dyadic_rounding() {
        assert_eq!(round_dyadic(&ratio(1, 3), 2), ratio(1, 4));
        assert_eq!(from_f64_dyadic(0.75, 10), ratio(3, 4));
    }

    #[test]
    fn combinatorics() {
        assert_eq!(binomial(6, 2), BigInt::from(15));
        assert_eq!(binomial(2, 3), BigInt::zero());
        assert_eq!(factorial(5), BigInt::from(120));
    }
}
