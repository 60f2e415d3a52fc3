use std::fs::File;
use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, ValueEnum};
use credal_core::measures::HartleyConfig;
use credal_core::selective::{
    accuracy_rejection_curve, rank_by_uncertainty, tie_fraction, ScoredInstance,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::measure::{check_hartley, measure_all, SourceArgs};
use crate::failure::{Failure, EXIT_MISSING_LABELS, EXIT_PARSE};
use crate::report::{
    load_dataset, looks_like_report, read_report, Measure, ReportRow, RunManifest,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Component {
    Tu,
    Au,
    Eu,
}

/// Which family supplies the ranking score.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreSource {
    /// Total-variation measures; `au` ranks by the interval `(lo, hi)` lexicographically.
    Tv,
    /// Upper entropy, lower entropy and their gap.
    Entropy,
    /// Upper entropy, its residual after the Hartley measure, and the Hartley measure.
    Hartley,
    /// Misclassified instances first (needs labels; a sanity ceiling).
    Oracle,
    /// Every instance scores the same.
    Constant,
    /// Seeded uniform scores.
    Random,
}

#[derive(Debug, Args)]
pub struct ArcArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, default_value_t = Component::Tu)]
    pub component: Component,
    #[arg(long, value_enum, default_value_t = ScoreSource::Tv)]
    pub measure: ScoreSource,
    #[arg(long, default_value_t = credal_core::selective::DEFAULT_BINS)]
    pub bins: usize,
    /// Seed for `--measure random`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Curve CSV path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Summary JSON path; the summary is also printed to stderr.
    #[arg(long)]
    pub summary: Option<PathBuf>,
}

#[derive(Serialize)]
struct Summary {
    auc: f64,
    mr: f64,
    bins: usize,
    measure: ScoreSource,
    component: Component,
    tie_fraction: f64,
    instances: usize,
    manifest: RunManifest,
}

fn needed_measures(source: ScoreSource, component: Component) -> Vec<Measure> {
    match (source, component) {
        (ScoreSource::Tv, Component::Tu) => vec![Measure::Tu],
        (ScoreSource::Tv, Component::Au) => vec![Measure::Au],
        (ScoreSource::Tv, Component::Eu) => vec![Measure::Eu],
        (ScoreSource::Entropy, _) => vec![Measure::Entropy],
        (ScoreSource::Hartley, _) => vec![Measure::Hartley],
        _ => Vec::new(),
    }
}

fn missing(what: &str) -> anyhow::Error {
    Failure::new(
        EXIT_PARSE,
        format!("report has no {what} values; rerun `measure` with it in --measures"),
    )
    .into()
}

fn score_key(row: &ReportRow, source: ScoreSource, component: Component) -> Result<Vec<f64>> {
    Ok(match (source, component) {
        (ScoreSource::Tv, Component::Tu) => vec![row.tu.ok_or_else(|| missing("tu"))?],
        (ScoreSource::Tv, Component::Au) => row
            .au
            .ok_or_else(|| missing("au"))?
            .lexicographic_key()
            .to_vec(),
        (ScoreSource::Tv, Component::Eu) => vec![row.eu.ok_or_else(|| missing("eu"))?],
        (ScoreSource::Entropy, c) => {
            let e = row.entropy.as_ref().ok_or_else(|| missing("entropy"))?;
            vec![match c {
                Component::Tu => e.upper,
                Component::Au => e.lower,
                Component::Eu => e.epistemic,
            }]
        }
        (ScoreSource::Hartley, c) => {
            let h = row.hartley.as_ref().ok_or_else(|| missing("hartley"))?;
            vec![match c {
                Component::Tu => h.total,
                Component::Au => h.aleatoric,
                Component::Eu => h.epistemic,
            }]
        }
        (ScoreSource::Oracle, _) => vec![if Some(row.predicted) == row.label {
            0.0
        } else {
            1.0
        }],
        (ScoreSource::Constant, _) => vec![0.0],
        (ScoreSource::Random, _) => unreachable!("random scores are drawn per run"),
    })
}

pub fn run(args: &ArcArgs) -> Result<()> {
    let src = &args.source;
    let from_report = !src
        .input
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"))
        && looks_like_report(&src.input);
    let (rows, mut manifest) = if from_report {
        let report = read_report(&src.input)?;
        let mut manifest = report.manifest.unwrap_or_else(|| RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: String::new(),
            inputs: Vec::new(),
            measures: Vec::new(),
            bins: None,
            alpha: None,
            seed: None,
            inject_dirac: None,
            strict: false,
            instances: report.rows.len(),
            models: 0,
            classes: 0,
            timings_seconds: None,
        });
        manifest.inputs.insert(0, src.input.display().to_string());
        manifest.timings_seconds = None;
        (report.rows, manifest)
    } else {
        let opts = src.options();
        let ds = load_dataset(&opts)?;
        let measures = needed_measures(args.measure, args.component);
        check_hartley(&ds, &measures, src.hartley_k_max)?;
        let config = HartleyConfig {
            k_max: src.hartley_k_max,
        };
        let (rows, _) = measure_all(&ds, &measures, &config)?;
        let mut manifest = RunManifest::new("measure", opts.inputs(), &ds, src.strict);
        manifest.measures = measures.iter().map(|m| m.name().to_string()).collect();
        manifest.alpha = src.alpha;
        manifest.inject_dirac = src.inject_dirac;
        (rows, manifest)
    };

    let unlabelled = rows.iter().filter(|r| r.label.is_none()).count();
    if unlabelled > 0 {
        return Err(Failure::new(
            EXIT_MISSING_LABELS,
            format!(
                "{unlabelled} of {} instances have no true label; accuracy-rejection curves need labels",
                rows.len()
            ),
        )
        .into());
    }

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let records = rows
        .iter()
        .map(|row| {
            let key = if args.measure == ScoreSource::Random {
                vec![rng.random::<f64>()]
            } else {
                score_key(row, args.measure, args.component)?
            };
            Ok(ScoredInstance {
                instance_id: row.id.clone(),
                predicted_label: row.predicted,
                true_label: row.label,
                score_key: key,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let order = rank_by_uncertainty(&records)?;
    let ties = tie_fraction(&records, &order);
    let ranked: Vec<ScoredInstance> = order.iter().map(|&i| records[i].clone()).collect();
    let curve = accuracy_rejection_curve(&ranked, args.bins)
        .map_err(|e| Failure::new(crate::failure::EXIT_SHAPE, e.to_string()))?;
    if ties > 0.5 {
        log::warn!(
            "{:.0}% of adjacent ranks are exact ties; the curve reflects input order there",
            ties * 100.0
        );
    }

    let sink: Box<dyn Write> = match &args.out {
        Some(p) => {
            Box::new(File::create(p).with_context(|| format!("cannot create {}", p.display()))?)
        }
        None => Box::new(std::io::stdout().lock()),
    };
    let mut writer = csv::Writer::from_writer(sink);
    writer.write_record(["rejection_fraction", "accuracy"])?;
    for point in &curve.bins {
        writer.write_record([
            point.rejection_fraction.to_string(),
            point.accuracy.to_string(),
        ])?;
    }
    writer.flush()?;

    manifest.command = "arc".to_string();
    manifest.bins = Some(args.bins);
    if args.measure == ScoreSource::Random {
        manifest.seed = Some(args.seed);
    }
    let summary = Summary {
        auc: curve.auc,
        mr: curve.mr,
        bins: curve.bin_count,
        measure: args.measure,
        component: args.component,
        tie_fraction: ties,
        instances: records.len(),
        manifest,
    };
    let text = serde_json::to_string_pretty(&summary)?;
    if let Some(path) = &args.summary {
        std::fs::write(path, format!("{text}\n"))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    eprintln!("{text}");
    Ok(())
}
