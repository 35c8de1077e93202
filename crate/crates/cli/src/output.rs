//! Run artifacts: one JSON document and flat CSV rows.

use std::io::Write;
use std::path::PathBuf;

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{Format, RunConfig};

/// Version of the CSV columns below.
pub const CSV_SCHEMA: u32 = 1;

/// One CSV row. The first thirteen columns are fixed; `observable` names
/// the quantity when a run measures several.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub run_id: String,
    pub command: String,
    pub n: f64,
    pub x: f64,
    pub h: f64,
    pub h_prime: f64,
    pub bc: String,
    pub domain: String,
    pub size: Option<u64>,
    pub rho: Option<u32>,
    pub estimate: f64,
    pub std_error: f64,
    pub flag: String,
    pub observable: String,
}

impl Row {
    /// Row carrying the run's identity and parameters.
    pub fn new(cfg: &RunConfig, run_id: &str, observable: impl Into<String>) -> Self {
        Self {
            run_id: run_id.into(),
            command: cfg.command.clone(),
            n: cfg.n,
            x: cfg.x,
            h: cfg.h,
            h_prime: cfg.h_prime,
            bc: cfg.bc.clone(),
            domain: cfg.domain.clone(),
            size: None,
            rho: None,
            estimate: f64::NAN,
            std_error: 0.0,
            flag: String::new(),
            observable: observable.into(),
        }
    }
}

#[derive(Serialize)]
struct Engine {
    name: &'static str,
    version: &'static str,
}

#[derive(Serialize)]
struct Document<'a> {
    engine: Engine,
    csv_schema: u32,
    run_id: &'a str,
    command: &'a str,
    config: &'a RunConfig,
    flagged: bool,
    result: &'a serde_json::Value,
}

/// What a command produced.
pub struct Outcome {
    pub result: serde_json::Value,
    pub rows: Vec<Row>,
    pub flagged: bool,
    /// Extra CSV written next to the main artifacts, as `(suffix, bytes)`.
    pub extra: Option<(String, Vec<u8>)>,
}

/// Stable identifier derived from the recorded configuration.
pub fn run_id(cfg: &RunConfig) -> anyhow::Result<String> {
    let text = serde_json::to_string(cfg)?;
    let digest = Sha256::digest(format!("{}\n{text}", hexcross::VERSION).as_bytes());
    Ok(digest[..6].iter().map(|b| format!("{b:02x}")).collect())
}

pub fn document_bytes(cfg: &RunConfig, run_id: &str, outcome: &Outcome) -> anyhow::Result<Vec<u8>> {
    let doc = Document {
        engine: Engine {
            name: "hexcross",
            version: hexcross::VERSION,
        },
        csv_schema: CSV_SCHEMA,
        run_id,
        command: &cfg.command,
        config: cfg,
        flagged: outcome.flagged,
        result: &outcome.result,
    };
    let mut bytes = serde_json::to_vec_pretty(&doc)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn csv_bytes(rows: &[Row]) -> anyhow::Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record([
            "run_id", "command", "n", "x", "h", "h_prime", "bc", "domain", "size", "rho", "estimate", "std_error",
            "flag", "observable",
        ])?;
    }
    w.into_inner().map_err(|e| anyhow::anyhow!("{e}"))
}

/// Writes the artifacts into the output directory, or prints the main one
/// to `out`. Returns the paths written.
pub fn emit(cfg: &RunConfig, run_id: &str, outcome: &Outcome, out: &mut dyn Write) -> anyhow::Result<Vec<PathBuf>> {
    let doc = document_bytes(cfg, run_id, outcome)?;
    let Some(dir) = &cfg.output_dir else {
        match cfg.format {
            Format::Json => out.write_all(&doc)?,
            Format::Csv => out.write_all(&csv_bytes(&outcome.rows)?)?,
        }
        return Ok(Vec::new());
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let stem = format!("{}-{run_id}", cfg.command);
    let mut files = vec![(dir.join(format!("{stem}.json")), doc)];
    if cfg.format == Format::Csv {
        files.push((dir.join(format!("{stem}.csv")), csv_bytes(&outcome.rows)?));
    }
    if let Some((suffix, bytes)) = &outcome.extra {
        files.push((dir.join(format!("{stem}.{suffix}")), bytes.clone()));
    }
    let mut paths = Vec::new();
    for (path, bytes) in files {
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        writeln!(out, "{}", path.display())?;
        paths.push(path);
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn run_id_follows_the_recorded_config_only() {
        let a = RunConfig::default();
        let b = RunConfig {
            output_dir: Some("/elsewhere".into()),
            threads: Some(7),
            ..RunConfig::default()
        };
        assert_eq!(run_id(&a).unwrap(), run_id(&b).unwrap());
        let c = RunConfig { seed: 1, ..RunConfig::default() };
        assert_ne!(run_id(&a).unwrap(), run_id(&c).unwrap());
        assert_eq!(run_id(&a).unwrap().len(), 12);
    }

    #[test]
    fn csv_header_has_the_fixed_columns_first() {
        let cfg = RunConfig {
            command: "crossing-prob".into(),
            ..RunConfig::default()
        };
        let mut row = Row::new(&cfg, "abc", "horizontal");
        row.estimate = 0.25;
        row.size = Some(7);
        let text = String::from_utf8(csv_bytes(&[row]).unwrap()).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "run_id,command,n,x,h,h_prime,bc,domain,size,rho,estimate,std_error,flag,observable"
        );
        assert_eq!(lines.next().unwrap(), "abc,crossing-prob,1.0,0.5,0.0,0.0,free,hexagon:1,7,,0.25,0.0,,horizontal");
        let empty = String::from_utf8(csv_bytes(&[]).unwrap()).unwrap();
        assert!(empty.starts_with("run_id,command,"));
    }
}
