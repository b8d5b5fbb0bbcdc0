//! Flat result records and their CSV/JSON serialization.
//!
//! Two fixed schemas cover every command: the modes schema (one row per
//! evaluated configuration) and the PMF schema (one row per support
//! point). Columns always appear in schema order, numbers carry 12
//! significant digits, and output is UTF-8 with LF line endings, so
//! identical runs produce byte-identical files.

use std::io::Write;

use cachemodes_core::error::{Error, Result};

/// Version tag stamped into the `schema_version` column.
pub const SCHEMA_VERSION: &str = "1";

/// Column order of mode-probability rows (analyze, simulate, sweep,
/// optimize, validate).
pub const MODES_SCHEMA: &[&str] = &[
    "schema_version",
    "sweep",
    "swept_param",
    "swept_value",
    "policy",
    "engine",
    "n_users",
    "library_size",
    "gamma_r",
    "gamma_c",
    "trials",
    "seed",
    "p_sr",
    "p_sr_hdtx",
    "p_fdtr",
    "p_bfd",
    "p_tnfd",
    "p_hdtx",
    "p_hdrx",
    "p_ho",
    "p_hd",
    "p_fd",
    "p_tx",
    "p_rx",
    "se_sr",
    "se_sr_hdtx",
    "se_fdtr",
    "se_bfd",
    "se_tnfd",
    "se_hdtx",
    "se_hdrx",
    "se_ho",
    "metric",
    "metric_value",
    "is_optimum",
    "at_boundary",
    "error",
];

/// Column order of PMF rows.
pub const PMF_SCHEMA: &[&str] = &[
    "schema_version",
    "policy",
    "engine",
    "n_users",
    "library_size",
    "gamma_r",
    "gamma_c",
    "trials",
    "seed",
    "mode",
    "p",
    "k",
    "mass",
];

/// One cell of a record.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Empty,
    Text(String),
    Int(u64),
    Float(f64),
    Bool(bool),
}

impl Cell {
    fn to_csv(&self) -> String {
        match self {
            Cell::Empty => String::new(),
            Cell::Text(s) => escape_csv(s),
            Cell::Int(v) => v.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Bool(v) => v.to_string(),
        }
    }

    fn to_json(&self) -> serde_json::Value {
        match self {
            Cell::Empty => serde_json::Value::Null,
            Cell::Text(s) => serde_json::Value::String(s.clone()),
            Cell::Int(v) => serde_json::Value::from(*v),
            Cell::Float(v) => {
                // Round-trip through the 12-digit text form so CSV and
                // JSON carry the same numeric value.
                let rounded: f64 = format_float(*v).parse().unwrap_or(*v);
                serde_json::Number::from_f64(rounded)
                    .map(serde_json::Value::Number)
                    .unwrap_or(serde_json::Value::Null)
            }
            Cell::Bool(v) => serde_json::Value::from(*v),
        }
    }
}

/// 12 significant digits, scientific notation.
fn format_float(value: f64) -> String {
    format!("{value:.11e}")
}

fn escape_csv(field: &str) -> String {
    if field.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// One result row bound to a schema; unset columns serialize as empty.
#[derive(Debug, Clone, PartialEq)]
pub struct ResultRecord {
    schema: &'static [&'static str],
    cells: Vec<Cell>,
}

impl ResultRecord {
    pub fn new(schema: &'static [&'static str]) -> Self {
        let mut record = ResultRecord {
            schema,
            cells: vec![Cell::Empty; schema.len()],
        };
        record.set("schema_version", Cell::Text(SCHEMA_VERSION.to_string()));
        record
    }

    pub fn schema(&self) -> &'static [&'static str] {
        self.schema
    }

    /// Panics on keys outside the schema; the schemas are fixed.
    pub fn set(&mut self, key: &str, value: Cell) -> &mut Self {
        let idx = self
            .schema
            .iter()
            .position(|&k| k == key)
            .unwrap_or_else(|| panic!("column `{key}` is not part of the schema"));
        self.cells[idx] = value;
        self
    }

    pub fn get(&self, key: &str) -> Option<&Cell> {
        self.schema
            .iter()
            .position(|&k| k == key)
            .map(|idx| &self.cells[idx])
    }
}

/// Output encoding of [`write_records`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            other => Err(Error::InvalidArgument(format!(
                "unknown output format `{other}` (expected csv or json)"
            ))),
        }
    }
}

/// Serializes `records` to `out`. All records must share one schema; an
/// empty list yields a header-only CSV (or an empty JSON array).
pub fn write_records(
    records: &[ResultRecord],
    format: OutputFormat,
    out: &mut dyn Write,
) -> std::io::Result<()> {
    let schema = records.first().map(|r| r.schema).unwrap_or(MODES_SCHEMA);
    assert!(
        records.iter().all(|r| r.schema == schema),
        "records in one batch must share a schema"
    );
    match format {
        OutputFormat::Csv => {
            let mut line = schema.join(",");
            line.push('\n');
            out.write_all(line.as_bytes())?;
            for record in records {
                let row: Vec<String> = record.cells.iter().map(Cell::to_csv).collect();
                let mut line = row.join(",");
                line.push('\n');
                out.write_all(line.as_bytes())?;
            }
        }
        OutputFormat::Json => {
            let rows: Vec<serde_json::Value> = records
                .iter()
                .map(|record| {
                    let mut map = serde_json::Map::new();
                    for (key, cell) in record.schema.iter().zip(&record.cells) {
                        map.insert((*key).to_string(), cell.to_json());
                    }
                    serde_json::Value::Object(map)
                })
                .collect();
            serde_json::to_writer_pretty(&mut *out, &rows)?;
            out.write_all(b"\n")?;
        }
    }
    out.flush()
}
