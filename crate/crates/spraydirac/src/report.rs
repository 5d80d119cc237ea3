// SPDX-License-Identifier: Apache-2.0

//! Ordered report trees rendered as indented text or JSON.

use std::fmt::Write as _;
use std::time::Duration;

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};
use spraydirac_core::expr::{Expr, ZeroTest};

pub fn sha256_hex(bytes: &[u8]) -> String {
    let d = Sha256::digest(bytes);
    let mut s = String::with_capacity(64);
    for b in d {
        let _ = write!(s, "{b:02x}");
    }
    s
}

/// A float as a JSON number, or as a string when not finite.
pub fn num(v: f64) -> Value {
    serde_json::Number::from_f64(v)
        .map(Value::Number)
        .unwrap_or_else(|| Value::String(format!("{v}")))
}

pub fn nums(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|x| num(*x)).collect())
}

pub fn expr(e: &Expr) -> Value {
    Value::String(e.canonical_string())
}

pub fn exprs<'a>(e: impl IntoIterator<Item = &'a Expr>) -> Value {
    Value::Array(e.into_iter().map(expr).collect())
}

pub fn verdict(z: ZeroTest) -> Value {
    Value::String(z.as_str().to_string())
}

#[derive(Clone, Debug)]
pub struct Report {
    pub command: String,
    pub digest: String,
    pub seed: u64,
    pub body: Map<String, Value>,
    pub timing: Option<Duration>,
}

impl Report {
    pub fn new(command: &str, input: &[u8], seed: u64) -> Report {
        Report {
            command: command.to_string(),
            digest: sha256_hex(input),
            seed,
            body: Map::new(),
            timing: None,
        }
    }

    pub fn set(&mut self, key: &str, v: impl Into<Value>) {
        self.body.insert(key.to_string(), v.into());
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.body.get(key)
    }

    /// The full tree; timing goes last and only when requested.
    pub fn to_value(&self, with_timing: bool) -> Value {
        let mut m = Map::new();
        m.insert("command".into(), Value::String(self.command.clone()));
        m.insert("input_sha256".into(), Value::String(self.digest.clone()));
        m.insert("seed".into(), Value::from(self.seed));
        for (k, v) in &self.body {
            m.insert(k.clone(), v.clone());
        }
        if with_timing {
            if let Some(t) = self.timing {
                m.insert("timing_ms".into(), num(t.as_secs_f64() * 1e3));
            }
        }
        Value::Object(m)
    }

    pub fn text(&self, with_timing: bool) -> String {
        let mut out = String::new();
        if let Value::Object(m) = self.to_value(with_timing) {
            write_map(&mut out, &m, 0);
        }
        out
    }

    pub fn json(&self, with_timing: bool) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_value(with_timing)).unwrap_or_default();
        s.push('\n');
        s
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::Null => Some("null".into()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::String(s) => Some(s.clone()),
        Value::Object(m) if m.is_empty() => Some("{}".into()),
        Value::Array(a) if a.iter().all(|x| scalar(x).is_some() && !x.is_array()) => Some(format!(
            "[{}]",
            a.iter().filter_map(scalar).collect::<Vec<_>>().join(", ")
        )),
        _ => None,
    }
}

fn write_map(out: &mut String, m: &Map<String, Value>, depth: usize) {
    let pad = "  ".repeat(depth);
    for (k, v) in m {
        match (scalar(v), v) {
            (Some(s), _) => {
                let _ = writeln!(out, "{pad}{k}: {s}");
            }
            (None, Value::Object(inner)) => {
                let _ = writeln!(out, "{pad}{k}:");
                write_map(out, inner, depth + 1);
            }
            (None, Value::Array(items)) => {
                let _ = writeln!(out, "{pad}{k}:");
                write_list(out, items, depth + 1);
            }
            _ => {}
        }
    }
}

fn write_list(out: &mut String, items: &[Value], depth: usize) {
    let pad = "  ".repeat(depth);
    for item in items {
        match (scalar(item), item) {
            (Some(s), _) => {
                let _ = writeln!(out, "{pad}- {s}");
            }
            (None, Value::Object(inner)) => {
                let _ = writeln!(out, "{pad}-");
                write_map(out, inner, depth + 1);
            }
            (None, Value::Array(inner)) => {
                let _ = writeln!(out, "{pad}-");
                write_list(out, inner, depth + 1);
            }
            _ => {}
        }
    }
}
