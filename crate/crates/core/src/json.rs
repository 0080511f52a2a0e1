//! JSON encoding helpers.
//!
//! Complex numbers travel as `{"re": .., "im": ..}` objects. On input a bare
//! number is also accepted as a real entry. Output goes through
//! [`to_string_fixed`], which prints every float with 17 significant digits
//! so that identical runs produce byte-identical files.

use crate::{Error, Result, C64};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ComplexRepr {
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum ComplexInput {
    Real(f64),
    Complex(ComplexRepr),
}

impl From<ComplexInput> for C64 {
    fn from(value: ComplexInput) -> Self {
        match value {
            ComplexInput::Real(re) => C64::new(re, 0.0),
            ComplexInput::Complex(c) => C64::new(c.re, c.im),
        }
    }
}

impl From<C64> for ComplexRepr {
    fn from(z: C64) -> Self {
        ComplexRepr { re: z.re, im: z.im }
    }
}

pub fn complex_to_value(z: C64) -> Value {
    serde_json::json!({ "re": z.re, "im": z.im })
}

pub fn complex_vec_to_value(zs: &[C64]) -> Value {
    Value::Array(zs.iter().map(|z| complex_to_value(*z)).collect())
}

pub fn complex_vec_from_value(value: &Value) -> Result<Vec<C64>> {
    let items: Vec<ComplexInput> =
        serde_json::from_value(value.clone()).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(items.into_iter().map(C64::from).collect())
}

/// Serializes a JSON value with floats fixed to 17 significant digits.
pub fn to_string_fixed(value: &Value) -> String {
    let mut out = String::new();
    write_value(value, 0, &mut out);
    out.push('\n');
    out
}

fn format_number(n: &serde_json::Number) -> String {
    if let Some(i) = n.as_i64() {
        return i.to_string();
    }
    if let Some(u) = n.as_u64() {
        return u.to_string();
    }
    match n.as_f64() {
        Some(x) if x.is_finite() => format!("{x:.16e}"),
        _ => "null".to_string(),
    }
}

fn indent(level: usize, out: &mut String) {
    for _ in 0..level {
        out.push_str("  ");
    }
}

fn write_value(value: &Value, level: usize, out: &mut String) {
    match value {
        Value::Null => out.push_str("null"),
        Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => out.push_str(&format_number(n)),
        Value::String(s) => out.push_str(&serde_json::to_string(s).expect("string encodes")),
        Value::Array(items) => {
            if items.is_empty() {
                out.push_str("[]");
                return;
            }
            // Short scalar arrays and {re, im} pairs stay on one line.
            let flat = items.iter().all(|v| !v.is_array() && !is_large_object(v));
            if flat {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_value(item, level, out);
                }
                out.push(']');
            } else {
                out.push_str("[\n");
                for (i, item) in items.iter().enumerate() {
                    indent(level + 1, out);
                    write_value(item, level + 1, out);
                    if i + 1 < items.len() {
                        out.push(',');
                    }
                    out.push('\n');
                }
                indent(level, out);
                out.push(']');
            }
        }
        Value::Object(map) => {
            if map.is_empty() {
                out.push_str("{}");
                return;
            }
            if !is_large_object(value) {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(&serde_json::to_string(k).expect("key encodes"));
                    out.push_str(": ");
                    write_value(v, level, out);
                }
                out.push('}');
                return;
            }
            out.push_str("{\n");
            for (i, (k, v)) in map.iter().enumerate() {
                indent(level + 1, out);
                out.push_str(&serde_json::to_string(k).expect("key encodes"));
                out.push_str(": ");
                write_value(v, level + 1, out);
                if i + 1 < map.len() {
                    out.push(',');
                }
                out.push('\n');
            }
            indent(level, out);
            out.push('}');
        }
    }
}

fn is_large_object(value: &Value) -> bool {
    match value {
        Value::Object(map) => {
            map.len() > 2 || map.values().any(|v| v.is_array() || v.is_object())
        }
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_use_seventeen_digits() {
        let v = serde_json::json!({"x": 0.1, "n": 3});
        let s = to_string_fixed(&v);
        assert!(s.contains("1.0000000000000001e-1"), "{s}");
        assert!(s.contains("\"n\": 3"));
    }

    #[test]
    fn accepts_bare_reals() {
        let v: Value = serde_json::from_str(r#"[1, {"re": 0, "im": 2}]"#).unwrap();
        let zs = complex_vec_from_value(&v).unwrap();
        assert_eq!(zs, vec![C64::new(1.0, 0.0), C64::new(0.0, 2.0)]);
    }

    #[test]
    fn non_finite_becomes_null() {
        let n = serde_json::Number::from_f64(1.5).unwrap();
        assert_eq!(format_number(&n), "1.5000000000000000e0");
    }
}
