use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::{Map, Value};

/// Key/value provenance written as `# key: value` lines or a JSON `meta` object.
#[derive(Clone, Debug, Default)]
pub struct Meta {
    entries: Vec<(String, String)>,
}

impl Meta {
    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.entries.push((key.to_string(), value.to_string()));
    }

    fn header(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            writeln!(s, "# {k}: {v}").unwrap();
        }
        s
    }

    fn json(&self) -> Value {
        Value::Object(
            self.entries
                .iter()
                .map(|(k, v)| (k.clone(), Value::String(v.clone())))
                .collect::<Map<_, _>>(),
        )
    }
}

/// A cell of a CSV row.
pub enum Cell {
    F(f64),
    Opt(Option<f64>),
    B(bool),
    OptB(Option<bool>),
    U(usize),
    S(String),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::F(x) => fmt_f64(*x),
            Cell::Opt(x) => x.map(fmt_f64).unwrap_or_default(),
            Cell::B(b) => b.to_string(),
            Cell::OptB(b) => b.map(|v| v.to_string()).unwrap_or_default(),
            Cell::U(u) => u.to_string(),
            Cell::S(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::F(x) => num(*x),
            Cell::Opt(x) => x.map_or(Value::Null, num),
            Cell::B(b) => Value::Bool(*b),
            Cell::OptB(b) => b.map_or(Value::Null, Value::Bool),
            Cell::U(u) => Value::from(*u),
            Cell::S(s) => Value::String(s.clone()),
        }
    }
}

/// Shortest round-trip form, switching to exponent notation outside `[1e-4, 1e15)`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub struct Table {
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn csv(&self, meta: &Meta) -> String {
        let mut s = meta.header();
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        s
    }

    pub fn json(&self, meta: &Meta) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                Value::Object(
                    self.columns
                        .iter()
                        .zip(row)
                        .map(|(c, v)| (c.to_string(), v.json()))
                        .collect(),
                )
            })
            .collect();
        let doc = serde_json::json!({ "meta": meta.json(), "rows": rows });
        pretty(&doc)
    }
}

pub fn document<T: Serialize>(meta: &Meta, data: &T) -> String {
    let doc = serde_json::json!({ "meta": meta.json(), "data": data });
    pretty(&doc)
}

fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json value serializes");
    s.push('\n');
    s
}

pub fn emit(text: &str, path: Option<&Path>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()
        }
    }
}
