//! Line-delimited JSON records and the trajectory table.
//!
//! Floats are written with 17 significant digits so that identical runs give
//! identical bytes. Non-finite values become strings.

use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Bool(bool),
    Str(String),
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as i64)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Int(v as i64)
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Float(v)
    }
}

impl From<bool> for Field {
    fn from(v: bool) -> Self {
        Field::Bool(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Str(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Str(v)
    }
}

/// One certificate or summary line; fields keep insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub kind: &'static str,
    pub fields: Vec<(&'static str, Field)>,
}

impl Record {
    pub fn new(kind: &'static str) -> Self {
        Self { kind, fields: Vec::new() }
    }

    pub fn with(mut self, key: &'static str, value: impl Into<Field>) -> Self {
        self.fields.push((key, value.into()));
        self
    }

    pub fn get(&self, key: &str) -> Option<&Field> {
        self.fields.iter().find(|(k, _)| *k == key).map(|(_, v)| v)
    }

    /// The record's `pass` field, if it has one.
    pub fn pass(&self) -> Option<bool> {
        match self.get("pass") {
            Some(Field::Bool(b)) => Some(*b),
            _ => None,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = String::from("{\"record\":");
        s.push_str(&quote(self.kind));
        for (k, v) in &self.fields {
            let _ = write!(s, ",{}:", quote(k));
            match v {
                Field::Int(i) => {
                    let _ = write!(s, "{i}");
                }
                Field::Float(x) => s.push_str(&json_float(*x)),
                Field::Bool(b) => {
                    let _ = write!(s, "{b}");
                }
                Field::Str(t) => s.push_str(&quote(t)),
            }
        }
        s.push('}');
        s
    }
}

fn quote(s: &str) -> String {
    serde_json::to_string(s).expect("strings always serialise")
}

pub fn format_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn json_float(x: f64) -> String {
    if x.is_finite() {
        format_float(x)
    } else {
        quote(&x.to_string())
    }
}

pub fn render_report(records: &[Record]) -> String {
    records.iter().map(|r| r.to_json() + "\n").collect()
}

pub const TRAJECTORY_HEADER: &str = "step,generator,norm,dist_to_target";

pub fn render_trajectory(rows: &[triproj::assembly::TrajectoryRow]) -> String {
    let mut s = String::from(TRAJECTORY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.step, r.generator, format_float(r.norm), format_float(r.dist_to_target));
    }
    s
}
