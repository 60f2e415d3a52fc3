//! Report rows, the run manifest, and dataset loading shared by the commands.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{Context, Result};
use clap::ValueEnum;
use credal_core::ingest::{self, InputFormat, LikelihoodManifest, PredictionDataset};
use credal_core::measures::baselines::{EntropyDecomposition, HartleyDecomposition};
use credal_core::measures::AUInterval;
use credal_core::SimplexPolicy;
use serde::{Deserialize, Serialize};

use crate::failure::{from_ingest, Failure, EXIT_PARSE, EXIT_SHAPE};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Tu,
    Au,
    Eu,
    Entropy,
    Hartley,
}

impl Measure {
    pub fn name(self) -> &'static str {
        match self {
            Self::Tu => "tu",
            Self::Au => "au",
            Self::Eu => "eu",
            Self::Entropy => "entropy",
            Self::Hartley => "hartley",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FormatArg {
    Auto,
    Jsonl,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<usize>,
    pub predicted: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub au: Option<AUInterval>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eu: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub entropy: Option<EntropyDecomposition>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hartley: Option<HartleyDecomposition>,
}

/// Provenance of a run, written as the last line of every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub inputs: Vec<String>,
    pub measures: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inject_dirac: Option<usize>,
    pub strict: bool,
    pub instances: usize,
    pub models: usize,
    pub classes: usize,
    /// Seconds per measure summed over all instances; absent with `--no-timings`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timings_seconds: Option<BTreeMap<String, f64>>,
}

impl RunManifest {
    pub fn new(command: &str, inputs: Vec<String>, ds: &PredictionDataset, strict: bool) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            inputs,
            measures: Vec::new(),
            bins: None,
            alpha: None,
            seed: None,
            inject_dirac: None,
            strict,
            instances: ds.len(),
            models: ds.m(),
            classes: ds.k(),
            timings_seconds: None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ManifestLine {
    manifest: RunManifest,
}

pub fn write_report(path: Option<&Path>, rows: &[ReportRow], manifest: &RunManifest) -> Result<()> {
    let sink: Box<dyn Write> = match path {
        Some(p) => {
            Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut out = BufWriter::new(sink);
    for row in rows {
        serde_json::to_writer(&mut out, row)?;
        out.write_all(b"\n")?;
    }
    serde_json::to_writer(
        &mut out,
        &ManifestLine {
            manifest: manifest.clone(),
        },
    )?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

pub struct Report {
    pub rows: Vec<ReportRow>,
    pub manifest: Option<RunManifest>,
}

pub fn read_report(path: &Path) -> Result<Report> {
    let file = File::open(path)
        .map_err(|e| Failure::new(EXIT_PARSE, format!("cannot open {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    let mut manifest = None;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line =
            line.map_err(|e| Failure::new(EXIT_PARSE, format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        if let Ok(m) = serde_json::from_str::<ManifestLine>(&line) {
            manifest = Some(m.manifest);
            continue;
        }
        let row = serde_json::from_str::<ReportRow>(&line).map_err(|e| {
            Failure::new(
                EXIT_PARSE,
                format!("{}: line {}: {e}", path.display(), i + 1),
            )
        })?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Failure::new(
            EXIT_SHAPE,
            format!("{}: report has no rows", path.display()),
        )
        .into());
    }
    Ok(Report { rows, manifest })
}

/// True when the first record of a JSONL file looks like a `measure` report row.
pub fn looks_like_report(path: &Path) -> bool {
    let Ok(file) = File::open(path) else {
        return false;
    };
    BufReader::new(file)
        .lines()
        .map_while(|l| l.ok())
        .find(|l| !l.trim().is_empty())
        .and_then(|l| serde_json::from_str::<serde_json::Value>(&l).ok())
        .is_some_and(|v| v.get("predicted").is_some() && v.get("probs").is_none())
}

pub fn resolve_format(path: &Path, format: FormatArg) -> InputFormat {
    match format {
        FormatArg::Auto => InputFormat::from_path(path),
        FormatArg::Jsonl => InputFormat::Jsonl,
        FormatArg::Csv => InputFormat::Csv,
    }
}

/// Dataset options shared by `measure` and `arc`.
pub struct DatasetOptions<'a> {
    pub input: &'a Path,
    pub format: FormatArg,
    pub strict: bool,
    pub likelihoods: Option<&'a Path>,
    pub alpha: Option<f64>,
    pub inject_dirac: Option<usize>,
}

impl DatasetOptions<'_> {
    pub fn inputs(&self) -> Vec<String> {
        let mut inputs = vec![self.input.display().to_string()];
        inputs.extend(self.likelihoods.map(|p| p.display().to_string()));
        inputs
    }
}

pub fn load_dataset(opts: &DatasetOptions<'_>) -> Result<PredictionDataset> {
    let policy = if opts.strict {
        SimplexPolicy::Strict
    } else {
        SimplexPolicy::Renormalize
    };
    let display = opts.input.display().to_string();
    let mut ds = ingest::load(opts.input, resolve_format(opts.input, opts.format), policy)
        .map_err(|e| from_ingest(&display, &e))?;
    if let Some(path) = opts.likelihoods {
        let manifest = LikelihoodManifest::load(path)
            .map_err(|e| from_ingest(&path.display().to_string(), &e))?;
        ds = ds
            .with_likelihoods(&manifest)
            .map_err(|e| Failure::new(EXIT_SHAPE, format!("{}: {e}", path.display())))?;
    }
    if let Some(alpha) = opts.alpha {
        ds = ingest::filter_by_relative_likelihood(&ds, alpha)
            .map_err(|e| Failure::new(EXIT_SHAPE, e.to_string()))?;
    }
    if let Some(label) = opts.inject_dirac {
        ds = ingest::inject_dirac_member(&ds, label)
            .map_err(|e| Failure::new(EXIT_SHAPE, e.to_string()))?;
    }
    Ok(ds)
}
