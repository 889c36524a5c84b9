//! CSV, JSON and plain-text renderings of analysis results.

use std::io::{self, Write};

use serde_json::{json, Map, Value};

use crate::contour::Polyline;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Cell {
        Cell::Text(v)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Cell {
        Cell::Text(v.to_string())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(headers: impl IntoIterator<Item = S>) -> Table {
        Table {
            headers: headers.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }
}

/// `name1 … namen`.
pub fn indexed(name: &str, n: usize) -> Vec<String> {
    (1..=n).map(|k| format!("{name}{k}")).collect()
}

/// C `printf("%.17g")`.
pub fn fmt_g17(x: f64) -> String {
    const P: i32 = 17;
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    if x == 0.0 {
        return if x.is_sign_negative() { "-0" } else { "0" }.into();
    }
    let sci = format!("{:.*e}", (P - 1) as usize, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent digits");
    if !(-4..P).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (P - 1 - exp) as usize;
        trim_zeros(&format!("{:.*}", decimals, x)).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Eight decimals, with negative zero printed as zero.
pub fn fmt_text(x: f64) -> String {
    let s = format!("{x:.8}");
    if s.starts_with('-') && s[1..].bytes().all(|c| c == b'0' || c == b'.') {
        s[1..].to_string()
    } else {
        s
    }
}

pub fn fmt_tuple(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| fmt_text(*x)).collect();
    format!("({})", parts.join(", "))
}

pub fn write_csv<W: Write>(table: &Table, w: W) -> io::Result<()> {
    let mut wr = csv::WriterBuilder::new().terminator(csv::Terminator::CRLF).from_writer(w);
    wr.write_record(&table.headers)?;
    for row in &table.rows {
        wr.write_record(row.iter().map(|c| match c {
            Cell::Num(v) => fmt_g17(*v),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }))?;
    }
    wr.flush()
}

pub fn csv_string(table: &Table) -> String {
    let mut buf = Vec::new();
    write_csv(table, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is UTF-8")
}

/// Wrap `body` (an object) with the schema version.
pub fn json_document(kind: &str, body: Value) -> Value {
    let mut out = Map::new();
    out.insert("schema_version".into(), json!(SCHEMA_VERSION));
    out.insert("kind".into(), json!(kind));
    match body {
        Value::Object(m) => out.extend(m),
        other => {
            out.insert("data".into(), other);
        }
    }
    Value::Object(out)
}

/// Polylines as `{"closed": bool, "points": [[x, y], …]}` objects.
pub fn segments_json(t: f64, lines: &[Polyline]) -> Value {
    json_document(
        "segments",
        json!({
            "t": t,
            "segments": lines
                .iter()
                .map(|p| json!({"closed": p.closed, "points": p.points}))
                .collect::<Vec<_>>(),
        }),
    )
}

/// Polyline vertices as `t,x,y` rows; the sidecar keeps the grouping.
pub fn polyline_table(t: f64, lines: &[Polyline], names: [&str; 2]) -> Table {
    let mut table = Table::new(["t", names[0], names[1]]);
    for p in lines {
        for q in &p.points {
            table.push(vec![t.into(), q[0].into(), q[1].into()]);
        }
    }
    table
}

/// Sidecar path: `out.csv` becomes `out.segments.json`.
pub fn sidecar_path(out: &std::path::Path) -> std::path::PathBuf {
    out.with_extension("segments.json")
}
