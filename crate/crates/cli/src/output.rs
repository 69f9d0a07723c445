//! Tabular results with a config echo, written as CSV or JSON.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

/// Prefix of the config-echo line heading every CSV.
pub const ECHO_PREFIX: &str = "# relaynet ";

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(u64),
    Text(String),
    Bool(bool),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<u64> for Cell {
    fn from(x: u64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as u64)
    }
}

impl From<bool> for Cell {
    fn from(x: bool) -> Self {
        Cell::Bool(x)
    }
}

impl From<String> for Cell {
    fn from(x: String) -> Self {
        Cell::Text(x)
    }
}

impl From<&str> for Cell {
    fn from(x: &str) -> Self {
        Cell::Text(x.to_string())
    }
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(x) => format_sig(*x),
            Cell::Int(x) => x.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            Cell::Num(x) => format_sig(*x).parse::<f64>().map_or(Value::Null, |v| json!(v)),
            Cell::Int(x) => json!(x),
            Cell::Text(s) => json!(s),
            Cell::Bool(b) => json!(b),
        }
    }
}

/// `x` to 12 significant digits, trailing zeros dropped.
pub fn format_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return if x.is_nan() { "NaN".into() } else if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{x:.11e}");
    let (mantissa, exp) = s.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        trim_zeros(&fixed)
    } else {
        format!("{}e{exp}", trim_zeros(mantissa))
    }
}

fn trim_zeros(s: &str) -> String {
    if !s.contains('.') {
        return s.to_string();
    }
    s.trim_end_matches('0').trim_end_matches('.').to_string()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

/// Renders `table` with `config` echoed: a `#` line for CSV, a field for JSON.
pub fn render<C: Serialize>(table: &Table, config: &C, format: Format) -> String {
    let echo = serde_json::to_value(config).expect("config serializes");
    match format {
        Format::Csv => {
            let mut out = String::new();
            writeln!(out, "{ECHO_PREFIX}{echo}").unwrap();
            let mut w = csv::Writer::from_writer(Vec::new());
            w.write_record(&table.columns).expect("in-memory write");
            for row in &table.rows {
                w.write_record(row.iter().map(Cell::render)).expect("in-memory write");
            }
            out.push_str(&String::from_utf8(w.into_inner().expect("flush")).expect("utf8"));
            out
        }
        Format::Json => {
            let rows: Vec<Value> = table
                .rows
                .iter()
                .map(|r| {
                    Value::Object(
                        table
                            .columns
                            .iter()
                            .cloned()
                            .zip(r.iter().map(Cell::to_json))
                            .collect(),
                    )
                })
                .collect();
            let mut s = serde_json::to_string_pretty(&json!({"config": echo, "rows": rows})).expect("json");
            s.push('\n');
            s
        }
    }
}

/// A CSV produced by [`render`], read back.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvDocument {
    pub config: Value,
    pub columns: Vec<String>,
    pub records: Vec<Vec<String>>,
}

impl CsvDocument {
    pub fn parse(text: &str) -> Result<Self, String> {
        let (first, body) = text.split_once('\n').ok_or("empty document")?;
        let echo = first.strip_prefix(ECHO_PREFIX).ok_or("missing config echo line")?;
        let config: Value = serde_json::from_str(echo).map_err(|e| format!("config echo: {e}"))?;
        let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(body.as_bytes());
        let columns = r
            .headers()
            .map_err(|e| e.to_string())?
            .iter()
            .map(str::to_string)
            .collect();
        let records = r
            .records()
            .map(|rec| rec.map(|x| x.iter().map(str::to_string).collect()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        Ok(CsvDocument {
            config,
            columns,
            records,
        })
    }

    /// Column `name` of record `row`.
    pub fn get(&self, row: usize, name: &str) -> Option<&str> {
        let j = self.columns.iter().position(|c| c == name)?;
        self.records.get(row)?.get(j).map(String::as_str)
    }

    pub fn get_f64(&self, row: usize, name: &str) -> Option<f64> {
        self.get(row, name)?.parse().ok()
    }
}
