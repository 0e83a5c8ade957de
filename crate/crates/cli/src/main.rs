use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use superlandweber::experiment::{
    generate_problem, read_summary, run_delta_sweep, write_sweep, ExperimentConfig, Prepared,
    Problem, ProblemSpec, RuleName, Summary, SUMMARY_FILE,
};
use superlandweber::{record, Format};

const DEFAULT_DELTAS: [f64; 5] = [1e-1, 3e-2, 1e-2, 3e-3, 1e-3];

/// Superiorized Landweber experiments: generate problems, run noisy
/// reconstructions under stopping rules, and sweep over noise levels.
#[derive(Parser)]
#[command(name = "superlandweber", version)]
struct Cli {
    /// Increase log verbosity (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Materialize a problem spec into operator, truth and exact data.
    Generate {
        /// Problem spec (JSON).
        #[arg(long)]
        problem: PathBuf,
        /// Override the generator seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; `problem.json` is written there.
        #[arg(long)]
        out: PathBuf,
    },
    /// One noisy run at a single noise level.
    Run(RunArgs),
    /// Every rule at every noise level.
    Sweep(RunArgs),
    /// Print the summary of a finished run or sweep.
    Report {
        /// Directory holding `summary.json`.
        #[arg(long)]
        out: PathBuf,
        /// Exit nonzero if any run is flagged.
        #[arg(long)]
        strict: bool,
    },
}

#[derive(Args)]
struct RunArgs {
    /// Problem spec or generated problem (JSON).
    #[arg(long)]
    problem: PathBuf,
    /// Experiment config (JSON); defaults apply when omitted.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Stopping rule name, or a comma-separated list.
    #[arg(long, value_delimiter = ',', default_value = "apriori,discrepancy")]
    rule: Vec<RuleName>,
    /// Noise level, or a comma-separated strictly decreasing list.
    #[arg(long, value_delimiter = ',')]
    delta: Vec<f64>,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value = "csv")]
    format: Format,
    /// Noise seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Exit nonzero if any run is flagged.
    #[arg(long)]
    strict: bool,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ProblemFile {
    Generated(Box<Problem>),
    Spec(ProblemSpec),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new().filter_level(level).init();

    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(3),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

/// Returns `Ok(false)` when `--strict` is set and some run was flagged.
fn dispatch(command: Command) -> Result<bool> {
    match command {
        Command::Generate { problem, seed, out } => {
            let mut spec: ProblemSpec = record::read_json(&problem)?;
            if let Some(s) = seed {
                match &mut spec {
                    ProblemSpec::Deconvolution1d { seed, .. }
                    | ProblemSpec::DecaySpectrum { seed, .. } => *seed = s,
                    ProblemSpec::ExplicitMatrix { .. } => {
                        bail!("explicit-matrix problems have no seed")
                    }
                }
            }
            let generated = generate_problem(&spec)?;
            let mut text = serde_json::to_string_pretty(&generated)?;
            text.push('\n');
            let path = out.join("problem.json");
            record::write_file(&path, &text)?;
            log::info!("wrote {}", path.display());
            Ok(true)
        }
        Command::Run(args) => {
            if args.rule.len() != 1 || args.delta.len() != 1 {
                bail!("run takes exactly one --rule and one --delta; use sweep for lists");
            }
            execute(args)
        }
        Command::Sweep(mut args) => {
            if args.delta.is_empty() {
                args.delta = DEFAULT_DELTAS.to_vec();
            }
            execute(args)
        }
        Command::Report { out, strict } => {
            let summary = read_summary(&out)?;
            print!("{}", render(&summary));
            Ok(!(strict && flagged(&summary)))
        }
    }
}

fn execute(args: RunArgs) -> Result<bool> {
    if args.delta.is_empty() {
        bail!("--delta is required");
    }
    let problem = load_problem(&args.problem)?;
    let config: ExperimentConfig = match &args.config {
        Some(p) => record::read_json(p)?,
        None => ExperimentConfig::default(),
    };
    let prep =
        Prepared::with_cache(problem, config, Some(&args.out)).context("preparing references")?;
    let entries = run_delta_sweep(&prep, &args.rule, &args.delta, args.seed)?;
    let summary = write_sweep(&prep, &entries, &args.out, args.format)?;
    log::info!(
        "wrote {} records and {}",
        summary.rows.len(),
        args.out.join(SUMMARY_FILE).display()
    );
    print!("{}", render(&summary));
    if flagged(&summary) {
        eprintln!("warning: some runs are flagged (see status column)");
    }
    Ok(!(args.strict && flagged(&summary)))
}

fn load_problem(path: &Path) -> Result<Problem> {
    match record::read_json::<ProblemFile>(path)? {
        ProblemFile::Generated(p) => Ok(*p),
        ProblemFile::Spec(spec) => Ok(generate_problem(&spec)?),
    }
}

fn flagged(summary: &Summary) -> bool {
    !summary.exact_converged || summary.rows.iter().any(|r| r.fired_index.is_none())
}

fn render(summary: &Summary) -> String {
    let opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
    let mut s = format!(
        "exact reference: {} iterations, {}\n",
        summary.exact_iterations,
        if summary.exact_converged {
            "converged"
        } else {
            "NOT converged"
        }
    );
    s.push_str(&format!(
        "{:<20} {:>10} {:>8} {:<16} {:>11} {:>11} {:>11}\n",
        "file", "delta", "k", "status", "residual", "err_pinv", "err_exact"
    ));
    for r in &summary.rows {
        s.push_str(&format!(
            "{:<20} {:>10.3e} {:>8} {:<16} {:>11.4e} {:>11} {:>11}\n",
            r.file,
            r.delta,
            r.final_k,
            serde_json::to_value(r.status)
                .ok()
                .and_then(|v| v.as_str().map(str::to_owned))
                .unwrap_or_default(),
            r.residual_norm,
            opt(r.error_to_pinv),
            opt(r.error_to_exact_limit),
        ));
    }
    s
}
