//! Canonical JSON for diffable reports.
//!
//! Keys are sorted, floats render with up to nine significant digits and
//! always carry a decimal point (so re-running an experiment produces
//! byte-identical files), and missing metrics serialise as null.

use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Null,
    Bool(bool),
    Int(i64),
    Float(f64),
    Str(String),
    Array(Vec<Value>),
    Object(BTreeMap<String, Value>),
}

impl Value {
    pub fn object(pairs: Vec<(&str, Value)>) -> Value {
        Value::Object(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn opt_float(v: Option<f64>) -> Value {
        match v {
            Some(x) => Value::Float(x),
            None => Value::Null,
        }
    }

    /// Canonical rendering (compact, sorted keys).
    pub fn render(&self) -> String {
        let mut out = String::new();
        self.write(&mut out);
        out
    }

    fn write(&self, out: &mut String) {
        match self {
            Value::Null => out.push_str("null"),
            Value::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
            Value::Int(i) => {
                let _ = write!(out, "{i}");
            }
            Value::Float(x) => out.push_str(&format_float(*x)),
            Value::Str(s) => write_json_string(out, s),
            Value::Array(items) => {
                out.push('[');
                for (i, item) in items.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    item.write(out);
                }
                out.push(']');
            }
            Value::Object(map) => {
                out.push('{');
                for (i, (k, v)) in map.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    write_json_string(out, k);
                    out.push_str(": ");
                    v.write(out);
                }
                out.push('}');
            }
        }
    }
}

fn write_json_string(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

/// Fixed float formatting: up to 9 significant digits, trailing zeros
/// trimmed, always at least one decimal digit ("1.0", never "1").
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        return "null".to_string();
    }
    if x == 0.0 {
        return "0.0".to_string();
    }
    let ax = x.abs();
    if !(1e-4..1e15).contains(&ax) {
        // Scientific form with 9 significant digits.
        let s = format!("{x:.8e}");
        return s;
    }
    let magnitude = ax.log10().floor() as i32;
    let decimals = (8 - magnitude).clamp(1, 17) as usize;
    let mut s = format!("{x:.decimals$}");
    // Trim trailing zeros but keep one digit after the point.
    while s.ends_with('0') && !s.ends_with(".0") {
        s.pop();
    }
    s
}
