//! Exact rational arithmetic helpers.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::{Error, Result};

/// Exact rational used for every closed-form latency and DoF value.
pub type Rational = Ratio<i64>;

pub fn q(numer: i64, denom: i64) -> Rational {
    Ratio::new(numer, denom)
}

pub fn int(value: i64) -> Rational {
    Ratio::from_integer(value)
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

/// Renders as `p/q`, or `p` when the denominator is one.
pub fn format(value: &Rational) -> String {
    if value.is_integer() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Parses `7`, `3/2`, `-4/6` or a finite decimal such as `1.25`.
pub fn parse(text: &str) -> Result<Rational> {
    let text = text.trim();
    let bad = || Error::Parse(format!("not a rational number: {text:?}"));
    if let Some((n, d)) = text.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(q(n, d));
    }
    if let Some((whole, frac)) = text.split_once('.') {
        if frac.is_empty() || frac.len() > 12 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        let whole_abs: i64 = if digits.is_empty() {
            0
        } else {
            digits.parse().map_err(|_| bad())?
        };
        let scale = 10i64.pow(frac.len() as u32);
        let frac_val: i64 = frac.parse().map_err(|_| bad())?;
        let mag = q(whole_abs * scale + frac_val, scale);
        return Ok(if negative { -mag } else { mag });
    }
    text.parse::<i64>().map(int).map_err(|_| bad())
}

pub fn floor(value: &Rational) -> i64 {
    value.numer().div_floor(value.denom())
}

pub fn ceil(value: &Rational) -> i64 {
    value.numer().div_ceil(value.denom())
}

pub fn min(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max(a: Rational, b: Rational) -> Rational {
    if a >= b {
        a
    } else {
        b
    }
}

pub fn abs_diff(a: &Rational, b: &Rational) -> Rational {
    (a - b).abs()
}

pub fn is_zero(value: &Rational) -> bool {
    value.is_zero()
}

pub fn serialize<S: Serializer>(value: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format(value))
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
    let text = String::deserialize(d)?;
    parse(&text).map_err(serde::de::Error::custom)
}

pub mod vec {
    use super::Rational;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(values: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&super::format(v))?;
        }
        seq.end()
    }
}

pub mod matrix {
    use super::Rational;
    use serde::ser::SerializeSeq;
    use serde::Serializer;

    pub fn serialize<S: Serializer>(rows: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(rows.len()))?;
        for row in rows {
            let row: Vec<String> = row.iter().map(super::format).collect();
            seq.serialize_element(&row)?;
        }
        seq.end()
    }
}
