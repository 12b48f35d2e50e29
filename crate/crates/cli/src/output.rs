use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Seventeen significant digits: enough for every `f64` to parse back to the
/// same bits.
pub fn float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Rows of a CSV table; every cell is already formatted.
pub struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn push_floats(&mut self, row: &[f64]) {
        self.push(row.iter().map(|&x| float(x)).collect());
    }

    fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(&self.header)?;
        for r in &self.rows {
            out.write_record(r)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// A finished payload.
pub enum Payload {
    Csv(Table),
    Json(Value),
}

impl Payload {
    pub fn json<T: Serialize>(value: &T) -> Result<Self> {
        Ok(Payload::Json(serde_json::to_value(value)?))
    }

    fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        match self {
            Payload::Csv(t) => t.write_to(w),
            Payload::Json(v) => {
                serde_json::to_writer_pretty(&mut w, v)?;
                writeln!(w)?;
                Ok(())
            }
        }
    }
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Value,
    pub version: &'static str,
    pub threads: usize,
    pub wall_time_s: f64,
    pub outputs: Vec<PathBuf>,
    /// Headline numbers of the run, if the subcommand has any.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<Value>,
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes `payload` to `out` with its manifest beside it, or to stdout.
pub fn emit(
    subcommand: &str,
    parameters: Value,
    started: Instant,
    payload: &Payload,
    summary: Option<Value>,
    out: Option<&Path>,
) -> Result<()> {
    let Some(out) = out else {
        return payload.write_to(io::stdout().lock());
    };
    if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let file = File::create(out).with_context(|| format!("creating {}", out.display()))?;
    payload.write_to(io::BufWriter::new(file))?;
    let manifest = RunManifest {
        subcommand: subcommand.to_string(),
        parameters,
        version: env!("CARGO_PKG_VERSION"),
        threads: rayon::current_num_threads(),
        wall_time_s: started.elapsed().as_secs_f64(),
        outputs: vec![out.to_path_buf()],
        summary,
    };
    write_json(&manifest_path(out), &manifest)
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    let mut w = io::BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 1.7817974362806785, f64::MAX, 5e-324] {
            assert_eq!(float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
        }
        assert_eq!(float(f64::NAN), "NaN");
    }

    #[test]
    fn manifest_sits_beside_output() {
        assert_eq!(manifest_path(Path::new("out/fig1.csv")), Path::new("out/fig1.csv.manifest.json"));
    }
}
