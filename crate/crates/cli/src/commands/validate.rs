use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use credal_core::ingest;
use credal_core::SimplexPolicy;

use crate::failure::{exit_code_for, Failure};
use crate::report::{resolve_format, FormatArg};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Prediction file (JSONL or CSV).
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = FormatArg::Auto)]
    pub format: FormatArg,
    /// Reject rows that are off the simplex instead of renormalizing them.
    #[arg(long)]
    pub strict: bool,
}

pub fn run(args: &ValidateArgs) -> Result<()> {
    let policy = if args.strict {
        SimplexPolicy::Strict
    } else {
        SimplexPolicy::Renormalize
    };
    let path = args.input.display();
    match ingest::load(
        &args.input,
        resolve_format(&args.input, args.format),
        policy,
    ) {
        Ok(ds) => {
            let labelled = ds.instances().iter().filter(|i| i.label.is_some()).count();
            println!(
                "{path}: ok ({} instances, {} models, {} classes, {labelled} labelled)",
                ds.len(),
                ds.m(),
                ds.k()
            );
            Ok(())
        }
        Err(err) => {
            for d in &err.diagnostics {
                eprintln!("{path}: {d}");
            }
            Err(Failure::new(
                exit_code_for(err.kind()),
                format!("{path}: {} problem(s)", err.diagnostics.len()),
            )
            .into())
        }
    }
}
