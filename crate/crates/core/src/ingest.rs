//! Loading ensemble predictions into per-instance credal sets.
//!
//! Two input formats are supported:
//!
//! * **JSONL**: one object per line with exactly the fields `id` (string),
//!   `label` (optional nonnegative integer) and `probs` (an `M × K` array).
//! * **CSV**: header `instance_id,model_id,label,p_0,…,p_{K-1}`, one row per
//!   (instance, model) pair in any order. `label` may be blank.
//!
//! Relative likelihoods `L(h) / max L` come from a sidecar JSON manifest
//! `{"model_ids": [...], "likelihood_ratios": [...]}`.
//!
//! Loaders collect every violation they find instead of stopping at the first.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::{Error, Result};
use crate::simplex::{CredalSet, Distribution, SimplexPolicy};

/// Category of an ingestion problem; the CLI maps these to exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ViolationKind {
    /// Unreadable file, malformed JSON / CSV, non-numeric fields.
    Parse,
    /// Inconsistent `M` or `K`, missing or duplicate rows, labels out of range, empty input.
    Shape,
    /// A probability row off the simplex.
    Simplex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostic {
    pub kind: ViolationKind,
    /// 1-based line in the input file, when the problem has one.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            ViolationKind::Parse => "parse",
            ViolationKind::Shape => "shape",
            ViolationKind::Simplex => "simplex",
        };
        match self.line {
            Some(line) => write!(f, "line {line}: {kind} error: {}", self.message),
            None => write!(f, "{kind} error: {}", self.message),
        }
    }
}

/// All violations found while loading a dataset.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("{} problem(s) in input; first: {}", .diagnostics.len(), .diagnostics[0])]
pub struct IngestError {
    pub diagnostics: Vec<Diagnostic>,
}

impl IngestError {
    fn single(kind: ViolationKind, line: Option<usize>, message: impl Into<String>) -> Self {
        Self {
            diagnostics: vec![Diagnostic {
                kind,
                line,
                message: message.into(),
            }],
        }
    }

    /// Kind of the first violation in file order.
    pub fn kind(&self) -> ViolationKind {
        self.diagnostics[0].kind
    }
}

#[derive(Default)]
struct Collector(Vec<Diagnostic>);

impl Collector {
    fn push(&mut self, kind: ViolationKind, line: Option<usize>, message: impl Into<String>) {
        self.0.push(Diagnostic {
            kind,
            line,
            message: message.into(),
        });
    }

    fn finish<T>(self, value: impl FnOnce() -> T) -> std::result::Result<T, IngestError> {
        if self.0.is_empty() {
            Ok(value())
        } else {
            Err(IngestError {
                diagnostics: self.0,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Instance {
    pub id: String,
    pub credal: CredalSet,
    pub label: Option<usize>,
}

/// Instances with aligned credal sets: generator `j` of every instance comes
/// from model `model_ids[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionDataset {
    instances: Vec<Instance>,
    model_ids: Vec<String>,
    likelihood_ratios: Option<Vec<f64>>,
    /// False when the source carried no model names (JSONL) and ids are positional.
    named_models: bool,
}

impl PredictionDataset {
    pub fn new(instances: Vec<Instance>, model_ids: Vec<String>) -> Result<Self> {
        let first = instances.first().ok_or(Error::EmptyRanking)?;
        let (m, k) = (model_ids.len(), first.credal.k());
        for inst in &instances {
            if inst.credal.m() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: inst.credal.m(),
                });
            }
            if inst.credal.k() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    found: inst.credal.k(),
                });
            }
            if let Some(label) = inst.label.filter(|&y| y >= k) {
                return Err(Error::LabelOutOfRange { label, k });
            }
        }
        Ok(Self {
            instances,
            model_ids,
            likelihood_ratios: None,
            named_models: true,
        })
    }

    fn with_positional_ids(instances: Vec<Instance>) -> Result<Self> {
        let m = instances.first().map_or(0, |i| i.credal.m());
        let mut ds = Self::new(instances, default_model_ids(m))?;
        ds.named_models = false;
        Ok(ds)
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn model_ids(&self) -> &[String] {
        &self.model_ids
    }

    pub fn likelihood_ratios(&self) -> Option<&[f64]> {
        self.likelihood_ratios.as_deref()
    }

    pub fn k(&self) -> usize {
        self.instances[0].credal.k()
    }

    pub fn m(&self) -> usize {
        self.model_ids.len()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn has_all_labels(&self) -> bool {
        self.instances.iter().all(|i| i.label.is_some())
    }

    /// Attaches relative likelihoods. Named models are matched by id;
    /// positional ones (JSONL) take the manifest's order and names.
    pub fn with_likelihoods(mut self, manifest: &LikelihoodManifest) -> Result<Self> {
        if manifest.model_ids.len() != self.m() {
            return Err(Error::InvalidLikelihoods(format!(
                "manifest lists {} models, dataset has {}",
                manifest.model_ids.len(),
                self.m()
            )));
        }
        if self.named_models {
            let lookup: HashMap<&str, f64> = manifest
                .model_ids
                .iter()
                .map(String::as_str)
                .zip(manifest.likelihood_ratios.iter().copied())
                .collect();
            let ratios = self
                .model_ids
                .iter()
                .map(|id| {
                    lookup.get(id.as_str()).copied().ok_or_else(|| {
                        Error::InvalidLikelihoods(format!("model {id} missing from manifest"))
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            self.likelihood_ratios = Some(ratios);
        } else {
            self.model_ids = manifest.model_ids.clone();
            self.likelihood_ratios = Some(manifest.likelihood_ratios.clone());
            self.named_models = true;
        }
        Ok(self)
    }

    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for inst in &self.instances {
            let row = JsonlRowOut {
                id: &inst.id,
                label: inst.label,
                probs: inst.credal.generators().iter().map(|g| g.probs()).collect(),
            };
            serde_json::to_writer(&mut out, &row)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

fn default_model_ids(m: usize) -> Vec<String> {
    (0..m).map(|j| format!("model_{j}")).collect()
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct JsonlRow {
    id: String,
    #[serde(default)]
    label: Option<i64>,
    probs: Vec<Vec<f64>>,
}

#[derive(Serialize)]
struct JsonlRowOut<'a> {
    id: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<usize>,
    probs: Vec<&'a [f64]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputFormat {
    Jsonl,
    Csv,
}

impl InputFormat {
    /// `.csv` means CSV; anything else is read as JSONL.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("csv") => Self::Csv,
            _ => Self::Jsonl,
        }
    }
}

pub fn load(
    path: &Path,
    format: InputFormat,
    policy: SimplexPolicy,
) -> std::result::Result<PredictionDataset, IngestError> {
    match format {
        InputFormat::Jsonl => load_jsonl(path, policy),
        InputFormat::Csv => load_csv(path, policy),
    }
}

fn open(path: &Path) -> std::result::Result<File, IngestError> {
    File::open(path).map_err(|e| {
        IngestError::single(
            ViolationKind::Parse,
            None,
            format!("cannot open {}: {e}", path.display()),
        )
    })
}

pub fn load_jsonl(
    path: &Path,
    policy: SimplexPolicy,
) -> std::result::Result<PredictionDataset, IngestError> {
    read_jsonl(BufReader::new(open(path)?), policy)
}

pub fn read_jsonl<R: BufRead>(
    reader: R,
    policy: SimplexPolicy,
) -> std::result::Result<PredictionDataset, IngestError> {
    let mut issues = Collector::default();
    let mut instances = Vec::new();
    let mut shape: Option<(usize, usize, usize)> = None;
    let mut seen = HashSet::new();

    for (index, line) in reader.lines().enumerate() {
        let lineno = index + 1;
        let line = match line {
            Ok(l) => l,
            Err(e) => {
                issues.push(
                    ViolationKind::Parse,
                    Some(lineno),
                    format!("unreadable line: {e}"),
                );
                break;
            }
        };
        if line.trim().is_empty() {
            continue;
        }
        let row: JsonlRow = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                issues.push(ViolationKind::Parse, Some(lineno), e.to_string());
                continue;
            }
        };
        let m = row.probs.len();
        let k = row.probs.first().map_or(0, Vec::len);
        if m == 0 {
            issues.push(
                ViolationKind::Shape,
                Some(lineno),
                "probs has no model rows",
            );
            continue;
        }
        if let Some(j) = row.probs.iter().position(|r| r.len() != k) {
            issues.push(
                ViolationKind::Shape,
                Some(lineno),
                format!(
                    "model {j} has {} probabilities, model 0 has {k}",
                    row.probs[j].len()
                ),
            );
            continue;
        }
        match shape {
            None => shape = Some((m, k, lineno)),
            Some((m0, k0, first)) if (m0, k0) != (m, k) => {
                issues.push(
                    ViolationKind::Shape,
                    Some(lineno),
                    format!("probs is {m}×{k}, but line {first} is {m0}×{k0}"),
                );
                continue;
            }
            _ => {}
        }
        if !seen.insert(row.id.clone()) {
            issues.push(
                ViolationKind::Shape,
                Some(lineno),
                format!("duplicate id {:?}", row.id),
            );
        }
        let label = match row.label {
            None => None,
            Some(y) if y >= 0 && (y as usize) < k => Some(y as usize),
            Some(y) => {
                issues.push(
                    ViolationKind::Shape,
                    Some(lineno),
                    format!("label {y} out of range for {k} classes"),
                );
                None
            }
        };
        let mut generators = Vec::with_capacity(m);
        for (j, probs) in row.probs.into_iter().enumerate() {
            match Distribution::with_policy(probs, policy) {
                Ok(d) => generators.push(d),
                Err(Error::TooFewLabels(n)) => issues.push(
                    ViolationKind::Shape,
                    Some(lineno),
                    format!("model {j}: need at least 2 classes, got {n}"),
                ),
                Err(e) => issues.push(
                    ViolationKind::Simplex,
                    Some(lineno),
                    format!("model {j}: {e}"),
                ),
            }
        }
        if generators.len() == m {
            instances.push(Instance {
                id: row.id,
                credal: CredalSet::new(generators).expect("validated shape"),
                label,
            });
        }
    }
    if instances.is_empty() && issues.0.is_empty() {
        issues.push(ViolationKind::Shape, None, "dataset is empty");
    }
    issues.finish(|| ())?;
    PredictionDataset::with_positional_ids(instances)
        .map_err(|e| IngestError::single(ViolationKind::Shape, None, e.to_string()))
}

pub fn load_csv(
    path: &Path,
    policy: SimplexPolicy,
) -> std::result::Result<PredictionDataset, IngestError> {
    read_csv(open(path)?, policy)
}

struct CsvInstance {
    id: String,
    label: Option<usize>,
    label_line: usize,
    rows: HashMap<usize, (usize, Distribution)>,
}

pub fn read_csv<R: Read>(
    reader: R,
    policy: SimplexPolicy,
) -> std::result::Result<PredictionDataset, IngestError> {
    let mut issues = Collector::default();
    let mut csv = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let header = csv
        .headers()
        .map_err(|e| IngestError::single(ViolationKind::Parse, Some(1), e.to_string()))?
        .clone();
    let fixed = ["instance_id", "model_id", "label"];
    let header_ok = header.len() >= fixed.len() + 2
        && header.iter().take(3).eq(fixed.iter().copied())
        && header
            .iter()
            .skip(3)
            .enumerate()
            .all(|(y, name)| name == format!("p_{y}"));
    if !header_ok {
        return Err(IngestError::single(
            ViolationKind::Parse,
            Some(1),
            "header must be instance_id,model_id,label,p_0,...,p_{K-1} with K >= 2",
        ));
    }
    let k = header.len() - 3;

    let mut model_index: HashMap<String, usize> = HashMap::new();
    let mut model_ids: Vec<String> = Vec::new();
    let mut by_id: HashMap<String, usize> = HashMap::new();
    let mut grouped: Vec<CsvInstance> = Vec::new();

    for record in csv.records() {
        let record = match record {
            Ok(r) => r,
            Err(e) => {
                let line = e.position().map(|p| p.line() as usize);
                issues.push(ViolationKind::Parse, line, e.to_string());
                continue;
            }
        };
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != k + 3 {
            issues.push(
                ViolationKind::Shape,
                Some(line),
                format!("row has {} fields, header has {}", record.len(), k + 3),
            );
            continue;
        }
        let instance_id = record[0].to_string();
        let model_id = record[1].to_string();
        let label = match &record[2] {
            "" => None,
            raw => match raw.parse::<usize>() {
                Ok(y) if y < k => Some(y),
                Ok(y) => {
                    issues.push(
                        ViolationKind::Shape,
                        Some(line),
                        format!("label {y} out of range for {k} classes"),
                    );
                    continue;
                }
                Err(_) => {
                    issues.push(
                        ViolationKind::Parse,
                        Some(line),
                        format!("label {raw:?} is not a class index"),
                    );
                    continue;
                }
            },
        };
        let parsed: std::result::Result<Vec<f64>, _> =
            record.iter().skip(3).map(str::parse::<f64>).collect();
        let probs = match parsed {
            Ok(p) => p,
            Err(e) => {
                issues.push(
                    ViolationKind::Parse,
                    Some(line),
                    format!("probability is not a number: {e}"),
                );
                continue;
            }
        };
        let dist = match Distribution::with_policy(probs, policy) {
            Ok(d) => d,
            Err(e) => {
                issues.push(
                    ViolationKind::Simplex,
                    Some(line),
                    format!("instance {instance_id:?}, model {model_id:?}: {e}"),
                );
                continue;
            }
        };

        let model = *model_index.entry(model_id.clone()).or_insert_with(|| {
            model_ids.push(model_id.clone());
            model_ids.len() - 1
        });
        let slot = *by_id.entry(instance_id.clone()).or_insert_with(|| {
            grouped.push(CsvInstance {
                id: instance_id.clone(),
                label,
                label_line: line,
                rows: HashMap::new(),
            });
            grouped.len() - 1
        });
        let inst = &mut grouped[slot];
        if inst.label != label {
            issues.push(
                ViolationKind::Shape,
                Some(line),
                format!(
                    "instance {instance_id:?}: label {label:?} disagrees with {:?} on line {}",
                    inst.label, inst.label_line
                ),
            );
        }
        if let Some((first, _)) = inst.rows.get(&model) {
            issues.push(
                ViolationKind::Shape,
                Some(line),
                format!("duplicate row for instance {instance_id:?}, model {model_id:?} (first on line {first})"),
            );
            continue;
        }
        inst.rows.insert(model, (line, dist));
    }

    let mut instances = Vec::with_capacity(grouped.len());
    for inst in grouped {
        let missing: Vec<&str> = (0..model_ids.len())
            .filter(|j| !inst.rows.contains_key(j))
            .map(|j| model_ids[j].as_str())
            .collect();
        if !missing.is_empty() {
            for model in missing {
                issues.push(
                    ViolationKind::Shape,
                    None,
                    format!("instance {:?} has no row for model {model:?}", inst.id),
                );
            }
            continue;
        }
        let mut rows = inst.rows;
        let generators: Vec<Distribution> = (0..model_ids.len())
            .map(|j| rows.remove(&j).expect("checked above").1)
            .collect();
        instances.push(Instance {
            id: inst.id,
            credal: CredalSet::new(generators).expect("aligned rows"),
            label: inst.label,
        });
    }
    if instances.is_empty() && issues.0.is_empty() {
        issues.push(ViolationKind::Shape, None, "dataset is empty");
    }
    issues.finish(|| ())?;
    PredictionDataset::new(instances, model_ids)
        .map_err(|e| IngestError::single(ViolationKind::Shape, None, e.to_string()))
}

/// Sidecar with one relative likelihood `L(h) / sup L` per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LikelihoodManifest {
    pub model_ids: Vec<String>,
    pub likelihood_ratios: Vec<f64>,
}

impl LikelihoodManifest {
    /// Validates the ratios and rescales them so the best model is exactly 1.
    pub fn new(model_ids: Vec<String>, likelihood_ratios: Vec<f64>) -> Result<Self> {
        if model_ids.is_empty() || model_ids.len() != likelihood_ratios.len() {
            return Err(Error::InvalidLikelihoods(format!(
                "{} model ids but {} ratios",
                model_ids.len(),
                likelihood_ratios.len()
            )));
        }
        if let Some(bad) = likelihood_ratios.iter().find(|r| !(0.0..=1.0).contains(*r)) {
            return Err(Error::InvalidLikelihoods(format!(
                "ratio {bad} outside [0, 1]"
            )));
        }
        let best = likelihood_ratios.iter().copied().fold(0.0, f64::max);
        if (1.0 - best).abs() > 1e-9 {
            return Err(Error::InvalidLikelihoods(format!(
                "largest ratio is {best}; the maximum-likelihood model must have ratio 1"
            )));
        }
        let mut unique = HashSet::new();
        if let Some(dup) = model_ids.iter().find(|id| !unique.insert(id.as_str())) {
            return Err(Error::InvalidLikelihoods(format!(
                "model {dup} listed twice"
            )));
        }
        Ok(Self {
            model_ids,
            likelihood_ratios: likelihood_ratios.into_iter().map(|r| r / best).collect(),
        })
    }

    pub fn load(path: &Path) -> std::result::Result<Self, IngestError> {
        let file = open(path)?;
        let raw: LikelihoodManifest =
            serde_json::from_reader(BufReader::new(file)).map_err(|e| {
                IngestError::single(ViolationKind::Parse, None, format!("manifest: {e}"))
            })?;
        Self::new(raw.model_ids, raw.likelihood_ratios)
            .map_err(|e| IngestError::single(ViolationKind::Shape, None, format!("manifest: {e}")))
    }
}

/// Keeps the models whose relative likelihood is at least `alpha`.
pub fn filter_by_relative_likelihood(
    ds: &PredictionDataset,
    alpha: f64,
) -> Result<PredictionDataset> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::InvalidAlpha(alpha));
    }
    let ratios = ds
        .likelihood_ratios
        .as_ref()
        .ok_or(Error::MissingLikelihoods)?;
    let keep: Vec<bool> = ratios.iter().map(|&r| r >= alpha).collect();
    let instances = ds
        .instances
        .iter()
        .map(|inst| Instance {
            id: inst.id.clone(),
            credal: inst
                .credal
                .retain_indices(|j| keep[j])
                .expect("the maximum-likelihood model has ratio 1"),
            label: inst.label,
        })
        .collect();
    let pick = |j: &usize| keep[*j];
    Ok(PredictionDataset {
        instances,
        model_ids: (0..ds.m())
            .filter(pick)
            .map(|j| ds.model_ids[j].clone())
            .collect(),
        likelihood_ratios: Some((0..ds.m()).filter(pick).map(|j| ratios[j]).collect()),
        named_models: ds.named_models,
    })
}

/// Appends a model that predicts `δ_label` on every instance. Its relative
/// likelihood, when ratios are attached, is recorded as 0.
pub fn inject_dirac_member(ds: &PredictionDataset, label: usize) -> Result<PredictionDataset> {
    let k = ds.k();
    let dirac = Distribution::dirac(k, label)?;
    let instances = ds
        .instances
        .iter()
        .map(|inst| {
            Ok(Instance {
                id: inst.id.clone(),
                credal: inst.credal.with_generator(dirac.clone())?,
                label: inst.label,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut model_ids = ds.model_ids.clone();
    model_ids.push(format!("dirac_{label}"));
    Ok(PredictionDataset {
        instances,
        model_ids,
        likelihood_ratios: ds.likelihood_ratios.as_ref().map(|r| {
            let mut r = r.clone();
            r.push(0.0);
            r
        }),
        named_models: ds.named_models,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::tv::{eu_tv, tu_tv};
    use proptest::prelude::*;

    fn jsonl(text: &str) -> std::result::Result<PredictionDataset, IngestError> {
        read_jsonl(text.as_bytes(), SimplexPolicy::Renormalize)
    }

    fn csv_in(text: &str) -> std::result::Result<PredictionDataset, IngestError> {
        read_csv(text.as_bytes(), SimplexPolicy::Renormalize)
    }

    #[test]
    fn jsonl_row_maps_directly() {
        let ds = jsonl(r#"{"id":"a","label":1,"probs":[[0.2,0.8],[0.7,0.3]]}"#).unwrap();
        assert_eq!((ds.len(), ds.m(), ds.k()), (1, 2, 2));
        let inst = &ds.instances()[0];
        assert_eq!(inst.id, "a");
        assert_eq!(inst.label, Some(1));
        assert_eq!(inst.credal.generators()[1].probs(), &[0.7, 0.3]);
    }

    #[test]
    fn jsonl_violations_are_located() {
        let text = concat!(
            r#"{"id":"a","label":0,"probs":[[0.5,0.5],[0.6,0.4]]}"#,
            "\n",
            r#"{"id":"b","label":0,"probs":[[0.5,0.5],[0.6,0.6]]}"#,
            "\n"
        );
        let err = jsonl(text).unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Simplex);
        assert_eq!(err.diagnostics[0].line, Some(2));
        assert!(err.diagnostics[0].message.contains("model 1"));

        let err = jsonl("").unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Shape);
        assert!(err.diagnostics[0].message.contains("empty"));

        let err = jsonl("{not json}\n").unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Parse);

        let err = jsonl(r#"{"id":"a","probs":[[0.5,0.5]],"extra":1}"#).unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Parse);

        let text = concat!(
            r#"{"id":"a","probs":[[0.5,0.5],[0.6,0.4]]}"#,
            "\n",
            r#"{"id":"b","probs":[[0.5,0.5]]}"#,
            "\n",
            r#"{"id":"c","label":5,"probs":[[0.5,0.5],[0.6,0.4]]}"#,
            "\n",
            r#"{"id":"c","probs":[[1.5,-0.5],[0.6,0.4]]}"#,
        );
        let err = jsonl(text).unwrap_err();
        let kinds: Vec<_> = err.diagnostics.iter().map(|d| (d.kind, d.line)).collect();
        assert_eq!(
            kinds,
            vec![
                (ViolationKind::Shape, Some(2)),
                (ViolationKind::Shape, Some(3)),
                (ViolationKind::Shape, Some(4)),
                (ViolationKind::Simplex, Some(4)),
            ]
        );
    }

    #[test]
    fn strict_policy_rejects_noise() {
        let text = r#"{"id":"a","probs":[[0.5,0.5000001],[0.6,0.4]]}"#;
        assert!(jsonl(text).is_ok());
        assert!(read_jsonl(text.as_bytes(), SimplexPolicy::Strict).is_err());
    }

    const GRID: &str = "instance_id,model_id,label,p_0,p_1,p_2,p_3
x,m0,2,0.1,0.2,0.3,0.4
x,m1,2,0.25,0.25,0.25,0.25
y,m2,,0.4,0.3,0.2,0.1
x,m2,2,0.7,0.1,0.1,0.1
y,m0,,0.2,0.2,0.2,0.4
y,m1,,0.1,0.1,0.1,0.7
";

    #[test]
    fn csv_complete_grid() {
        let ds = csv_in(GRID).unwrap();
        assert_eq!((ds.len(), ds.m(), ds.k()), (2, 3, 4));
        assert_eq!(ds.model_ids(), &["m0", "m1", "m2"]);
        assert_eq!(ds.instances()[0].label, Some(2));
        assert_eq!(ds.instances()[1].label, None);
        // generator order follows model order, not row order
        assert_eq!(
            ds.instances()[1].credal.generators()[2].probs(),
            &[0.4, 0.3, 0.2, 0.1]
        );
    }

    #[test]
    fn csv_missing_duplicate_and_inconsistent_rows() {
        let missing: String = GRID
            .lines()
            .filter(|l| !l.starts_with("y,m1"))
            .collect::<Vec<_>>()
            .join("\n");
        let err = csv_in(&missing).unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Shape);
        assert!(
            err.diagnostics[0].message.contains("\"y\"")
                && err.diagnostics[0].message.contains("\"m1\"")
        );

        let dup = format!("{GRID}x,m0,2,0.1,0.2,0.3,0.4\n");
        let err = csv_in(&dup).unwrap_err();
        assert!(err.diagnostics[0].message.contains("duplicate row"));
        assert_eq!(err.diagnostics[0].line, Some(8));

        let relabel = GRID.replace("x,m1,2,", "x,m1,1,");
        let err = csv_in(&relabel).unwrap_err();
        assert!(err.diagnostics[0].message.contains("disagrees"));

        let ragged = format!("{GRID}z,m0,1,0.5,0.5\n");
        let err = csv_in(&ragged).unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Shape);

        let err = csv_in("id,model,label,p_0,p_1\n").unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Parse);

        let bad = GRID.replace("0.7,0.1,0.1,0.1", "0.7,0.2,0.2,0.2");
        let err = csv_in(&bad).unwrap_err();
        assert_eq!(err.kind(), ViolationKind::Simplex);
        assert_eq!(err.diagnostics[0].line, Some(5));
    }

    fn with_ratios(ratios: &[f64]) -> PredictionDataset {
        let text = r#"{"id":"a","label":0,"probs":[[0.6,0.4],[0.3,0.7],[0.5,0.5]]}
{"id":"b","label":1,"probs":[[0.1,0.9],[0.2,0.8],[0.9,0.1]]}"#;
        let manifest =
            LikelihoodManifest::new(vec!["h1".into(), "h2".into(), "h3".into()], ratios.to_vec())
                .unwrap();
        jsonl(text).unwrap().with_likelihoods(&manifest).unwrap()
    }

    #[test]
    fn likelihood_filter_examples() {
        let ds = with_ratios(&[1.0, 0.6, 0.3]);
        assert_eq!(filter_by_relative_likelihood(&ds, 0.0).unwrap(), ds);
        let top = filter_by_relative_likelihood(&ds, 1.0).unwrap();
        assert_eq!(top.model_ids(), &["h1"]);
        assert_eq!(top.instances()[0].credal.m(), 1);
        let half = filter_by_relative_likelihood(&ds, 0.5).unwrap();
        assert_eq!(half.model_ids(), &["h1", "h2"]);
        assert_eq!(
            half.instances()[1].credal.generators()[1].probs(),
            &[0.2, 0.8]
        );

        assert_eq!(
            filter_by_relative_likelihood(&ds, 1.5),
            Err(Error::InvalidAlpha(1.5))
        );
        let bare = jsonl(r#"{"id":"a","probs":[[0.5,0.5],[0.6,0.4]]}"#).unwrap();
        assert_eq!(
            filter_by_relative_likelihood(&bare, 0.5),
            Err(Error::MissingLikelihoods)
        );
    }

    #[test]
    fn manifest_validation() {
        assert!(LikelihoodManifest::new(vec!["a".into()], vec![0.5]).is_err());
        assert!(LikelihoodManifest::new(vec!["a".into(), "b".into()], vec![1.0]).is_err());
        assert!(LikelihoodManifest::new(vec!["a".into(), "a".into()], vec![1.0, 0.2]).is_err());
        let m =
            LikelihoodManifest::new(vec!["a".into(), "b".into()], vec![1.0 - 1e-10, 0.5]).unwrap();
        assert_eq!(m.likelihood_ratios[0], 1.0);

        // named models are matched by id, whatever the manifest order
        let ds = csv_in(GRID).unwrap();
        let manifest = LikelihoodManifest::new(
            vec!["m2".into(), "m0".into(), "m1".into()],
            vec![0.2, 1.0, 0.7],
        )
        .unwrap();
        let ds = ds.with_likelihoods(&manifest).unwrap();
        assert_eq!(ds.likelihood_ratios().unwrap(), &[1.0, 0.7, 0.2]);
        let wrong = LikelihoodManifest::new(
            vec!["m0".into(), "m1".into(), "zz".into()],
            vec![1.0, 0.1, 0.1],
        )
        .unwrap();
        assert!(csv_in(GRID).unwrap().with_likelihoods(&wrong).is_err());
    }

    #[test]
    fn dirac_injection() {
        let ds = with_ratios(&[1.0, 0.6, 0.3]);
        let poisoned = inject_dirac_member(&ds, 1).unwrap();
        assert_eq!(poisoned.m(), 4);
        assert_eq!(poisoned.model_ids()[3], "dirac_1");
        assert_eq!(poisoned.likelihood_ratios().unwrap()[3], 0.0);
        for (before, after) in ds.instances().iter().zip(poisoned.instances()) {
            let lower = after.credal.singleton_envelopes().lower[1];
            assert_eq!(tu_tv(&after.credal), 1.0 - lower);
            assert!(eu_tv(&after.credal) >= eu_tv(&before.credal));
        }
        // any alpha > 0 removes it again
        assert_eq!(
            filter_by_relative_likelihood(&poisoned, 0.1).unwrap().m(),
            3
        );
        assert!(inject_dirac_member(&ds, 2).is_err());
    }

    fn dataset_strategy() -> impl Strategy<Value = PredictionDataset> {
        (2usize..6, 1usize..4, 1usize..6).prop_flat_map(|(k, m, n)| {
            prop::collection::vec(
                (
                    prop::collection::vec(prop::collection::vec(1e-9f64..1.0, k), m),
                    prop::option::of(0..k),
                ),
                n,
            )
            .prop_map(move |rows| {
                let instances = rows
                    .into_iter()
                    .enumerate()
                    .map(|(i, (gens, label))| Instance {
                        id: format!("i{i}"),
                        credal: CredalSet::new(
                            gens.into_iter()
                                .map(|v| {
                                    let s: f64 = v.iter().sum();
                                    Distribution::new(v.into_iter().map(|x| x / s).collect())
                                        .unwrap()
                                })
                                .collect(),
                        )
                        .unwrap(),
                        label,
                    })
                    .collect();
                PredictionDataset::with_positional_ids(instances).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn jsonl_round_trip_is_lossless(ds in dataset_strategy()) {
            let mut buf = Vec::new();
            ds.write_jsonl(&mut buf).unwrap();
            let back = read_jsonl(buf.as_slice(), SimplexPolicy::Renormalize).unwrap();
            prop_assert_eq!(back, ds);
        }

        #[test]
        fn filtering_is_monotone(
            ratios in prop::collection::vec(0.0f64..=1.0, 3),
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let mut ratios = ratios;
            ratios[1] = 1.0;
            let ds = with_ratios(&ratios);
            let (lo, hi) = (a.min(b), a.max(b));
            let wide = filter_by_relative_likelihood(&ds, lo).unwrap();
            let narrow = filter_by_relative_likelihood(&ds, hi).unwrap();
            prop_assert!(narrow.model_ids().iter().all(|id| wide.model_ids().contains(id)));
            prop_assert!(narrow.m() >= 1);
        }
    }
}
