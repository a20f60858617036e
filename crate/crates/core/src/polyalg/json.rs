//! Polynomial records `[α₁, …, αₙ, coeff]` as JSON arrays.

use serde_json::{Number, Value};

use super::{Monomial, Polynomial};
use crate::error::{Error, Result};

/// Serializes to an array of `[α₁, …, αₙ, coeff]` records in graded-lex order.
///
/// Coefficients are written with shortest round-trip precision, so parsing the
/// output reproduces every coefficient bit for bit.
pub fn to_json(p: &Polynomial) -> Value {
    Value::Array(
        p.terms()
            .map(|(m, c)| {
                let mut rec: Vec<Value> = m.exponents().iter().map(|&e| Value::Number(e.into())).collect();
                rec.push(Number::from_f64(c).map(Value::Number).unwrap_or(Value::Null));
                Value::Array(rec)
            })
            .collect(),
    )
}

impl serde::Serialize for Polynomial {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serde::Serialize::serialize(&to_json(self), serializer)
    }
}

/// Parses records for a polynomial in `n` variables. `path` prefixes error locations.
pub fn from_json(value: &Value, n: usize, path: &str) -> Result<Polynomial> {
    let records = value
        .as_array()
        .ok_or_else(|| Error::parse(path, "expected an array of term records"))?;
    let mut p = Polynomial::zero(n);
    for (i, rec) in records.iter().enumerate() {
        let here = format!("{path}[{i}]");
        let items = rec
            .as_array()
            .ok_or_else(|| Error::parse(&here, "term record must be an array"))?;
        if items.len() != n + 1 {
            return Err(Error::parse(
                &here,
                format!(
                    "term record has {} exponents, expected n = {n}",
                    items.len().saturating_sub(1)
                ),
            ));
        }
        let mut exps = Vec::with_capacity(n);
        for (j, e) in items[..n].iter().enumerate() {
            let v = e
                .as_u64()
                .filter(|&v| v <= u32::MAX as u64)
                .ok_or_else(|| Error::parse(format!("{here}[{j}]"), "exponent must be a nonnegative integer"))?;
            exps.push(v as u32);
        }
        let c = items[n]
            .as_f64()
            .filter(|c| c.is_finite())
            .ok_or_else(|| Error::parse(format!("{here}[{n}]"), "coefficient must be a finite number"))?;
        p.add_term(Monomial::new(exps), c);
    }
    Ok(p)
}

/// Infers `n` from the first record; an empty array yields `None`.
pub fn infer_nvars(value: &Value) -> Option<usize> {
    value.as_array()?.first()?.as_array().map(|r| r.len().saturating_sub(1))
}
