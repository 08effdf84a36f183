//! Datasets and their CSV/JSON rendering.

use serde_json::{json, Map, Value as Json};

use crate::config::{Format, RunConfig};

/// Significant digits of every printed number.
pub const SIG_DIGITS: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    /// Non-finite numbers render as empty cells.
    Num(f64),
    Int(u64),
    Flag(bool),
    Empty,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Dataset {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    /// Extra metadata entries, e.g. the momentum grid of the XY chain.
    pub notes: Vec<(String, String)>,
}

impl Dataset {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// `%.12g`-style formatting: fixed notation for decimal exponents in
/// `[-5, 12)`, scientific otherwise, trailing zeros removed.
pub fn format_number(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", SIG_DIGITS - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..SIG_DIGITS as i32).contains(&exp) {
        let decimals = (SIG_DIGITS as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{:.*}", decimals, x))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn csv_cell(v: &Value) -> String {
    match v {
        Value::Num(x) => format_number(*x),
        Value::Int(i) => i.to_string(),
        Value::Flag(b) => (*b as u8).to_string(),
        Value::Empty => String::new(),
    }
}

fn json_cell(v: &Value) -> Json {
    match v {
        Value::Num(x) if x.is_finite() => {
            // Parse back the rounded text so JSON carries the same digits as CSV.
            let rounded: f64 = format_number(*x).parse().expect("formatted number parses");
            json!(rounded)
        }
        Value::Num(_) | Value::Empty => Json::Null,
        Value::Int(i) => json!(i),
        Value::Flag(b) => json!(b),
    }
}

/// Deterministic metadata: tool, version, subcommand, config echo and notes.
/// Wall time lives in the sidecar only so reruns reproduce the dataset.
fn metadata(cfg: &RunConfig, data: &Dataset) -> Vec<(String, String)> {
    let mut meta = vec![
        ("tool".to_string(), "sgu".to_string()),
        ("version".to_string(), sgu_core::VERSION.to_string()),
        ("subcommand".to_string(), cfg.subcommand.name().to_string()),
        ("config".to_string(), cfg.to_json()),
    ];
    meta.extend(data.notes.iter().cloned());
    meta
}

pub fn render(cfg: &RunConfig, data: &Dataset) -> String {
    let meta = metadata(cfg, data);
    match cfg.format {
        Format::Csv => {
            let mut out = String::new();
            for (k, v) in &meta {
                out.push_str(&format!("# {k}: {v}\n"));
            }
            out.push_str(&data.columns.join(","));
            out.push('\n');
            for row in &data.rows {
                let cells: Vec<String> = row.iter().map(csv_cell).collect();
                out.push_str(&cells.join(","));
                out.push('\n');
            }
            out
        }
        Format::Json => {
            let mut m = Map::new();
            for (k, v) in meta {
                let value = if k == "config" {
                    serde_json::from_str(&v).expect("config echo is JSON")
                } else {
                    Json::String(v)
                };
                m.insert(k, value);
            }
            let rows: Vec<Json> = data
                .rows
                .iter()
                .map(|r| Json::Array(r.iter().map(json_cell).collect()))
                .collect();
            let doc = json!({"metadata": m, "columns": data.columns, "rows": rows});
            let mut s = serde_json::to_string_pretty(&doc).expect("dataset serializes");
            s.push('\n');
            s
        }
    }
}

/// Sidecar record: config echo, library version and wall time.
pub fn sidecar(cfg: &RunConfig, wall_time_s: f64, rows: usize) -> String {
    let config: Json = serde_json::from_str(&cfg.to_json()).expect("config echo is JSON");
    let doc = json!({
        "tool": "sgu",
        "version": sgu_core::VERSION,
        "subcommand": cfg.subcommand.name(),
        "config": config,
        "rows": rows,
        "wall_time_s": wall_time_s,
    });
    serde_json::to_string_pretty(&doc).expect("sidecar serializes") + "\n"
}
