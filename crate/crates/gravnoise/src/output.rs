//! Reports, grids and traces, with their provenance block.

use std::fmt::Write as _;

use gravnoise_core::hybrid::{DEFAULT_PADDING, STEP_LIMIT, TRUNCATION_LIMIT};
use gravnoise_core::quadrature::QuadratureSpec;
use gravnoise_core::scanner::{Cell, ExclusionGrid};
use gravnoise_core::thresholds::Flag;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::CliError;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Written with 17 significant digits, which round-trips every `f64`.
pub fn fmt_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        format!("{x}")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub quadrature: QuadratureSpec,
    pub hybrid_truncation_limit: f64,
    pub hybrid_step_limit: f64,
    pub hybrid_padding: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    /// SHA-256 of the canonical JSON form of the parsed configuration.
    pub config_sha256: String,
    pub seed: u64,
    pub tolerances: Tolerances,
}

impl Provenance {
    pub fn new(command: &str, config: &RunConfig, seed: u64) -> Self {
        let canonical = serde_json::to_vec(config).expect("configuration serializes");
        let digest = Sha256::digest(&canonical);
        Self {
            tool: "gravnoise",
            version: VERSION,
            command: command.to_string(),
            config_sha256: digest.iter().map(|b| format!("{b:02x}")).collect(),
            seed,
            tolerances: Tolerances {
                quadrature: config.quadrature,
                hybrid_truncation_limit: TRUNCATION_LIMIT,
                hybrid_step_limit: STEP_LIMIT,
                hybrid_padding: config.evolve.padding.max(DEFAULT_PADDING),
            },
        }
    }

    /// `# key: value` lines for CSV files.
    pub fn csv_header(&self) -> String {
        let mut out = String::new();
        let mut flat = Vec::new();
        flatten(
            "",
            &serde_json::to_value(self).expect("provenance serializes"),
            &mut flat,
        );
        for (k, v) in flat {
            let _ = writeln!(out, "# {k}: {v}");
        }
        out
    }
}

/// The JSON report shared by every command.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    pub model: Option<String>,
    pub config: Value,
    pub rates: Value,
    pub thresholds: Value,
    pub verdicts: Value,
    pub flags: Vec<Flag>,
    pub provenance: Provenance,
}

impl Report {
    pub fn new(model: Option<String>, config: &RunConfig, provenance: Provenance) -> Self {
        Self {
            model,
            config: serde_json::to_value(config).expect("configuration serializes"),
            rates: Value::Object(Default::default()),
            thresholds: Value::Object(Default::default()),
            verdicts: Value::Object(Default::default()),
            flags: Vec::new(),
            provenance,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `section,key,value` rows under the provenance comment block.
    pub fn to_csv(&self) -> String {
        let mut w = csv_writer(&self.provenance);
        w.write_record(["section", "key", "value"]).expect("in-memory write");
        let mut push = |section: &str, v: &Value| {
            let mut flat = Vec::new();
            flatten("", v, &mut flat);
            for (k, v) in flat {
                w.write_record([section, &k, &v]).expect("in-memory write");
            }
        };
        if let Some(m) = &self.model {
            push("model", &Value::String(m.clone()));
        }
        push("config", &self.config);
        push("rates", &self.rates);
        push("thresholds", &self.thresholds);
        push("verdicts", &self.verdicts);
        push("flags", &serde_json::to_value(&self.flags).expect("flags serialize"));
        finish(w)
    }

    pub fn render(&self, format: crate::config::Format) -> String {
        match format {
            crate::config::Format::Json => self.to_json(),
            crate::config::Format::Csv => self.to_csv(),
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Bool(b) => b.to_string(),
        Value::Number(n) => match n.as_f64() {
            Some(x) if n.is_f64() => fmt_float(x),
            _ => n.to_string(),
        },
        Value::String(s) => s.clone(),
        _ => unreachable!("containers are flattened"),
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let join = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(map) => {
            if map.is_empty() && !prefix.is_empty() {
                out.push((prefix.to_string(), String::new()));
            }
            for (k, v) in map {
                flatten(&join(k), v, out);
            }
        }
        Value::Array(items) => {
            for (i, v) in items.iter().enumerate() {
                flatten(&join(&i.to_string()), v, out);
            }
        }
        _ => out.push((prefix.to_string(), scalar(v))),
    }
}

/// A CSV writer whose buffer already holds the provenance block.
fn csv_writer(provenance: &Provenance) -> csv::Writer<Vec<u8>> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(provenance.csv_header().into_bytes())
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("UTF-8 fields")
}

pub const GRID_HEADER: &str = "D0,D2,S_FF_pred,label";

pub fn grid_to_csv(grid: &ExclusionGrid, provenance: &Provenance) -> String {
    let mut w = csv_writer(provenance);
    w.write_record(GRID_HEADER.split(',')).expect("in-memory write");
    for c in &grid.cells {
        w.write_record([
            fmt_float(c.d0),
            fmt_float(c.d2),
            fmt_float(c.s_ff_pred),
            c.label.to_string(),
        ])
        .expect("in-memory write");
    }
    finish(w)
}

#[derive(Serialize)]
struct GridJson<'a> {
    provenance: &'a Provenance,
    summary: &'a Value,
    cells: &'a [Cell],
}

pub fn grid_to_json(grid: &ExclusionGrid, summary: &Value, provenance: &Provenance) -> String {
    let mut s = serde_json::to_string_pretty(&GridJson {
        provenance,
        summary,
        cells: &grid.cells,
    })
    .expect("grid serializes");
    s.push('\n');
    s
}

/// Parses the CSV written by [`grid_to_csv`]; `#` lines are skipped.
pub fn grid_from_csv(text: &str) -> Result<ExclusionGrid, CliError> {
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let bad = |e: csv::Error| CliError::Config(format!("grid csv: {e}"));
    let header = r.headers().map_err(bad)?;
    if header.iter().collect::<Vec<_>>().join(",") != GRID_HEADER {
        return Err(CliError::Config(format!("grid csv: unexpected header {header:?}")));
    }
    let cells = r.deserialize::<Cell>().collect::<Result<Vec<_>, _>>().map_err(bad)?;
    Ok(ExclusionGrid::from_cells(cells)?)
}

/// A CSV table with a provenance block.
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: Vec<&'static str>) -> Self {
        Self {
            header,
            rows: Vec::new(),
        }
    }

    pub fn to_csv(&self, provenance: &Provenance) -> String {
        let mut w = csv_writer(provenance);
        w.write_record(&self.header).expect("in-memory write");
        for row in &self.rows {
            w.write_record(row.iter().map(|&x| fmt_float(x)))
                .expect("in-memory write");
        }
        finish(w)
    }
}
