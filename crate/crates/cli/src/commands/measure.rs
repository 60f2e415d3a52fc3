use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::Result;
use clap::Args;
use credal_core::ingest::{Instance, PredictionDataset};
use credal_core::measures::baselines::{
    entropy_lower, entropy_upper, generalized_hartley, split_exact, EntropyDecomposition,
    HartleyDecomposition,
};
use credal_core::measures::tv::{au_tv_interval, eu_tv, tu_tv};
use credal_core::measures::HartleyConfig;
use credal_core::selective::credal_predict;
use rayon::prelude::*;

use crate::failure::{Failure, EXIT_HARTLEY_CAP};
use crate::report::{
    load_dataset, write_report, DatasetOptions, FormatArg, Measure, ReportRow, RunManifest,
};

#[derive(Debug, Args)]
pub struct SourceArgs {
    /// Prediction file (JSONL or CSV).
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Reject rows that are off the simplex instead of renormalizing them.
    #[arg(long)]
    pub strict: bool,
    /// Sidecar with per-model relative likelihoods.
    #[arg(long)]
    pub likelihoods: Option<PathBuf>,
    /// Keep only models whose relative likelihood is at least this value.
    #[arg(long, requires = "likelihoods")]
    pub alpha: Option<f64>,
    /// Append a model that always predicts this label.
    #[arg(long, value_name = "LABEL")]
    pub inject_dirac: Option<usize>,
    /// Largest class count for which the Hartley measure is computed.
    #[arg(long, default_value_t = credal_core::measures::baselines::DEFAULT_HARTLEY_K_MAX)]
    pub hartley_k_max: usize,
}

impl SourceArgs {
    pub fn options(&self) -> DatasetOptions<'_> {
        DatasetOptions {
            input: &self.input,
            format: self.format,
            strict: self.strict,
            likelihoods: self.likelihoods.as_deref(),
            alpha: self.alpha,
            inject_dirac: self.inject_dirac,
        }
    }
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, value_enum, value_delimiter = ',', default_value = "tu,au,eu")]
    pub measures: Vec<Measure>,
    /// Report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Leave timings out of the manifest so repeated runs are byte-identical.
    #[arg(long)]
    pub no_timings: bool,
}

/// Time spent on each measure for one instance.
#[derive(Default, Clone, Copy)]
pub struct Timings {
    pub by_measure: [Duration; 5],
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let start = Instant::now();
    let value = f();
    (value, start.elapsed())
}

pub fn check_hartley(ds: &PredictionDataset, measures: &[Measure], k_max: usize) -> Result<()> {
    if measures.contains(&Measure::Hartley) && ds.k() > k_max {
        return Err(Failure::new(
            EXIT_HARTLEY_CAP,
            format!(
                "hartley needs all 2^K label subsets; K = {} exceeds the cap of {k_max}. \
                 The measure is unavailable at this size (shown as \"--\" in comparison tables); \
                 drop it from --measures or raise --hartley-k-max",
                ds.k()
            ),
        )
        .into());
    }
    Ok(())
}

pub fn measure_instance(
    inst: &Instance,
    measures: &[Measure],
    config: &HartleyConfig,
) -> Result<(ReportRow, Timings)> {
    let cs = &inst.credal;
    let mut t = Timings::default();
    let mut row = ReportRow {
        id: inst.id.clone(),
        label: inst.label,
        predicted: credal_predict(cs),
        tu: None,
        au: None,
        eu: None,
        entropy: None,
        hartley: None,
    };
    if measures.contains(&Measure::Tu) {
        let (v, d) = timed(|| tu_tv(cs));
        row.tu = Some(v);
        t.by_measure[0] = d;
    }
    if measures.contains(&Measure::Au) {
        let (v, d) = timed(|| au_tv_interval(cs));
        row.au = Some(v?);
        t.by_measure[1] = d;
    }
    if measures.contains(&Measure::Eu) {
        let (v, d) = timed(|| eu_tv(cs));
        row.eu = Some(v);
        t.by_measure[2] = d;
    }
    let wants_entropy = measures.contains(&Measure::Entropy);
    let wants_hartley = measures.contains(&Measure::Hartley);
    if wants_entropy || wants_hartley {
        let (report, t_upper) = timed(|| entropy_upper(cs));
        if wants_entropy {
            let (lower, t_lower) = timed(|| entropy_lower(cs));
            row.entropy = Some(EntropyDecomposition {
                upper: report.optimum,
                lower,
                epistemic: split_exact(report.optimum, lower),
                upper_gap: report.certified_gap,
                converged: report.converged,
            });
            t.by_measure[3] = t_upper + t_lower;
        }
        if wants_hartley {
            let (gh, t_gh) = timed(|| generalized_hartley(cs, config));
            let gh = gh?;
            row.hartley = Some(HartleyDecomposition {
                total: report.optimum,
                aleatoric: split_exact(report.optimum, gh),
                epistemic: gh,
            });
            t.by_measure[4] = t_upper + t_gh;
        }
    }
    Ok((row, t))
}

/// Scores every instance on the worker pool; rows come back in input order.
pub fn measure_all(
    ds: &PredictionDataset,
    measures: &[Measure],
    config: &HartleyConfig,
) -> Result<(Vec<ReportRow>, BTreeMap<String, f64>)> {
    let results: Vec<(ReportRow, Timings)> = ds
        .instances()
        .par_iter()
        .map(|inst| measure_instance(inst, measures, config))
        .collect::<Result<_>>()?;
    let mut totals = [Duration::ZERO; 5];
    for (_, t) in &results {
        for (acc, d) in totals.iter_mut().zip(t.by_measure) {
            *acc += d;
        }
    }
    let all = [
        Measure::Tu,
        Measure::Au,
        Measure::Eu,
        Measure::Entropy,
        Measure::Hartley,
    ];
    let timings = all
        .iter()
        .zip(totals)
        .filter(|(m, _)| measures.contains(m))
        .map(|(m, d)| (m.name().to_string(), d.as_secs_f64()))
        .collect();
    Ok((results.into_iter().map(|(row, _)| row).collect(), timings))
}

pub fn run(args: &MeasureArgs) -> Result<()> {
    let mut measures = args.measures.clone();
    measures.sort();
    measures.dedup();
    let opts = args.source.options();
    let ds = load_dataset(&opts)?;
    check_hartley(&ds, &measures, args.source.hartley_k_max)?;
    let config = HartleyConfig {
        k_max: args.source.hartley_k_max,
    };
    let (rows, timings) = measure_all(&ds, &measures, &config)?;

    let mut manifest = RunManifest::new("measure", opts.inputs(), &ds, args.source.strict);
    manifest.measures = measures.iter().map(|m| m.name().to_string()).collect();
    manifest.alpha = args.source.alpha;
    manifest.inject_dirac = args.source.inject_dirac;
    manifest.timings_seconds = (!args.no_timings).then_some(timings);
    write_report(args.out.as_deref(), &rows, &manifest)?;
    if let Some(out) = &args.out {
        log::info!("wrote {} rows to {}", rows.len(), out.display());
    }
    Ok(())
}
