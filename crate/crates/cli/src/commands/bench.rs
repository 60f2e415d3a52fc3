use std::fs::File;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::Args;
use credal_core::measures::baselines::{entropy_lower, entropy_upper, generalized_hartley};
use credal_core::measures::tv::{au_tv_lower, au_tv_upper, eu_tv, tu_tv};
use credal_core::measures::HartleyConfig;
use credal_core::synthetic::{generate, SyntheticConfig};
use credal_core::CredalSet;

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "10,100")]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "5,10")]
    pub m: Vec<usize>,
    /// Instances per grid cell.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Spread of ensemble members around the true conditional.
    #[arg(long, default_value_t = 1.0)]
    pub noise: f64,
    #[arg(long, default_value_t = credal_core::measures::baselines::DEFAULT_HARTLEY_K_MAX)]
    pub hartley_k_max: usize,
    /// Also write the table as CSV.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

struct Row {
    k: usize,
    m: usize,
    measure: &'static str,
    complexity: &'static str,
    seconds: Option<f64>,
}

fn time_over(sets: &[&CredalSet], f: impl Fn(&CredalSet) -> f64) -> f64 {
    let start = Instant::now();
    let mut sink = 0.0;
    for cs in sets {
        sink += f(cs);
    }
    std::hint::black_box(sink);
    start.elapsed().as_secs_f64()
}

pub fn run(args: &BenchArgs) -> Result<()> {
    let config = HartleyConfig {
        k_max: args.hartley_k_max,
    };
    let mut rows = Vec::new();
    for &k in &args.k {
        for &m in &args.m {
            let data = generate(&SyntheticConfig {
                k,
                n: args.n,
                m,
                noise: args.noise,
                seed: args.seed,
            })?;
            let sets: Vec<&CredalSet> =
                data.dataset.instances().iter().map(|i| &i.credal).collect();
            let mut push = |measure, complexity, seconds| {
                rows.push(Row {
                    k,
                    m,
                    measure,
                    complexity,
                    seconds,
                })
            };
            push("tu_tv", "O(MK)", Some(time_over(&sets, tu_tv)));
            push("au_tv_lower", "O(MK)", Some(time_over(&sets, au_tv_lower)));
            push(
                "au_tv_upper",
                "LP",
                Some(time_over(&sets, |cs| au_tv_upper(cs).unwrap_or(f64::NAN))),
            );
            push("eu_tv", "O(M^2 K)", Some(time_over(&sets, eu_tv)));
            push(
                "entropy_lower",
                "O(MK)",
                Some(time_over(&sets, entropy_lower)),
            );
            push(
                "entropy_upper",
                "convex opt.",
                Some(time_over(&sets, |cs| entropy_upper(cs).optimum)),
            );
            let hartley = (k <= config.k_max).then(|| {
                time_over(&sets, |cs| {
                    generalized_hartley(cs, &config).unwrap_or(f64::NAN)
                })
            });
            push("generalized_hartley", "O(M 2^K + 3^K)", hartley);
        }
    }

    println!(
        "{:>6} {:>6} {:<20} {:<16} {:>12} {:>14}",
        "K", "M", "measure", "complexity", "total_s", "per_instance_us"
    );
    for r in &rows {
        match r.seconds {
            Some(s) => println!(
                "{:>6} {:>6} {:<20} {:<16} {:>12.6} {:>14.3}",
                r.k,
                r.m,
                r.measure,
                r.complexity,
                s,
                s * 1e6 / args.n as f64
            ),
            None => println!(
                "{:>6} {:>6} {:<20} {:<16} {:>12} {:>14}",
                r.k, r.m, r.measure, r.complexity, "--", "--"
            ),
        }
    }

    if let Some(path) = &args.out {
        let file =
            File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
        let mut w = csv::Writer::from_writer(file);
        w.write_record(["k", "m", "n", "measure", "complexity", "total_seconds"])?;
        for r in &rows {
            w.write_record([
                r.k.to_string(),
                r.m.to_string(),
                args.n.to_string(),
                r.measure.to_string(),
                r.complexity.to_string(),
                r.seconds
                    .map_or_else(|| "--".to_string(), |s| s.to_string()),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}
