use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use hardylab_cli::{resolve_jobs, run_file, CliError, Experiment, RunOptions};

/// Numerical experiments for spectral multipliers on Hardy spaces of finite
/// metric-measure spaces.
#[derive(Debug, Parser)]
#[command(name = "hardylab", version)]
struct Args {
    /// One of: space-report, heat-check, dg-check, atom-bench, multiplier-verify,
    /// molecule-check, wave-check, prop1-check, lemma3-check.
    experiment: String,
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; `HARDYLAB_JOBS` takes precedence.
    #[arg(long)]
    jobs: Option<usize>,
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) if e.kind() == clap::error::ErrorKind::DisplayHelp || e.kind() == clap::error::ErrorKind::DisplayVersion => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => return fail(CliError::Config(e.to_string().trim().to_string())),
    };
    let Some(exp) = Experiment::parse(&args.experiment) else {
        return fail(CliError::Config(format!("unknown experiment `{}`", args.experiment)));
    };
    let jobs = match resolve_jobs(args.jobs) {
        Ok(j) => j,
        Err(e) => return fail(e),
    };
    let opts = RunOptions { out_dir: args.out, seed: args.seed, jobs, base_dir: PathBuf::new() };
    match run_file(exp, &args.config, &opts) {
        Ok(m) => {
            println!("{}: wrote {} files to {}", m.experiment, m.outputs.len() + 1, opts.out_dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => fail(e),
    }
}

fn fail(e: CliError) -> ExitCode {
    eprintln!("{}", e.to_json());
    ExitCode::from(e.exit_code() as u8)
}
