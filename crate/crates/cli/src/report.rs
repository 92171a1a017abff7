//! Output plumbing: provenance headers, CSV tables and JSON records.

use serde::Serialize;

use crate::CliError;

pub const TOOL: &str = "zeroflat";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Identifies a run in every emitted report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    /// Short name of the property or quantity the report addresses.
    pub property: &'static str,
    pub seed: u64,
    /// Sampling resolution in effect, absolute unless stated otherwise.
    pub resolution: Option<f64>,
}

impl Provenance {
    pub fn new(command: &'static str, property: &'static str, seed: u64, resolution: Option<f64>) -> Self {
        Provenance {
            tool: TOOL,
            version: VERSION,
            command,
            property,
            seed,
            resolution,
        }
    }

    /// One `#` comment line, skipped by CSV readers that honour comments.
    pub fn csv_comment(&self) -> String {
        let res = self.resolution.map_or_else(|| "none".to_string(), fmt_f64);
        format!(
            "# tool={} version={} command={} property={} seed={} resolution={}\n",
            self.tool, self.version, self.command, self.property, self.seed, res
        )
    }
}

/// A named output file.
#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub contents: String,
}

impl Artifact {
    pub fn new(name: impl Into<String>, contents: impl Into<String>) -> Self {
        Artifact {
            name: name.into(),
            contents: contents.into(),
        }
    }
}

/// `inf` for infinities, shortest round-trip text otherwise.
pub fn fmt_f64(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

/// CSV rows under a header, rendered with a provenance comment on top.
#[derive(Clone, Debug, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        Table {
            header: header.iter().map(|s| s.as_ref().to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn render(&self, prov: &Provenance) -> Result<String, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        let body = String::from_utf8(w.into_inner().map_err(|e| CliError::Io(e.into_error()))?)
            .expect("csv output is utf-8");
        Ok(prov.csv_comment() + &body)
    }
}

#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    provenance: &'a Provenance,
    data: &'a T,
}

/// Pretty JSON `{provenance, data}` with a trailing newline.
pub fn record<T: Serialize>(prov: &Provenance, data: &T) -> Result<String, CliError> {
    let mut s = serde_json::to_string_pretty(&Envelope { provenance: prov, data })?;
    s.push('\n');
    Ok(s)
}
