use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Parser, Subcommand};

use ctxocc::compare::{compare_runs, write_report, CompareOptions, Metric};
use ctxocc::config::KeyValues;
use ctxocc::{experiment, report, ExperimentConfig, HarnessError};
use ctxocc_core::clustering::{ball_distance, DEFAULT_MC_SAMPLES};
use ctxocc_core::sampling::min_window_size;

#[derive(Parser)]
#[command(
    name = "ctxocc",
    version,
    about = "Contextual one-class classification experiments on data streams"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a cross-validated experiment and write its output files.
    Run {
        /// Flat key = value config file.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Master seed (overrides the `seed` key).
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory (overrides the `out` key).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Further overrides as --key=value or --key value.
        #[arg(
            allow_hyphen_values = true,
            trailing_var_arg = true,
            value_name = "--KEY=VALUE"
        )]
        overrides: Vec<String>,
    },
    /// Compare runs with the correlated Bayesian t-test.
    Compare {
        /// Run directories (each holding metrics.csv and manifest.txt).
        #[arg(required = true)]
        runs: Vec<PathBuf>,
        /// Report file.
        #[arg(long, default_value = "cbtt.csv")]
        out: PathBuf,
        /// auc or g_mean.
        #[arg(long, default_value = "auc")]
        metric: Metric,
        /// Half-width of the region of practical equivalence.
        #[arg(long, default_value_t = ctxocc_core::evaluation::DEFAULT_ROPE)]
        rope: f64,
        /// Correlation between folds (default 1 / fold count).
        #[arg(long)]
        rho: Option<f64>,
        /// Baseline series label, e.g. single/sa (default: the first series).
        #[arg(long)]
        baseline: Option<String>,
    },
    /// Smallest window holding at least tau instances of every context with the given confidence.
    WindowSize {
        /// Comma-separated context probabilities.
        #[arg(long, value_delimiter = ',', required = true)]
        probabilities: Vec<f64>,
        #[arg(long)]
        tau: u64,
        #[arg(long, default_value_t = 0.95)]
        confidence: f64,
    },
    /// Cluster distance between two balls, raw and normalised.
    ClusterDistance {
        /// Centre of the first ball, comma-separated.
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        center_a: Vec<f64>,
        #[arg(long)]
        radius_a: f64,
        #[arg(
            long,
            value_delimiter = ',',
            allow_hyphen_values = true,
            required = true
        )]
        center_b: Vec<f64>,
        #[arg(long)]
        radius_b: f64,
        /// Monte-Carlo samples for overlapping balls in two or more dimensions.
        #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn run(
    config: Option<PathBuf>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    overrides: &[String],
) -> Result<(), HarnessError> {
    let mut tail = KeyValues::new();
    tail.apply_overrides(overrides)?;
    let file = tail.remove("config").map(PathBuf::from).or(config);
    let mut kv = match &file {
        Some(p) => KeyValues::from_file(p).map_err(|e| match e {
            HarnessError::Io { .. } => HarnessError::config("config", e.to_string()),
            other => other,
        })?,
        None => KeyValues::new(),
    };
    kv.apply_overrides(overrides)?;
    kv.remove("config");
    if let Some(s) = seed {
        kv.set("seed", &s.to_string());
    }
    if let Some(o) = &out {
        kv.set("out", &o.display().to_string());
    }
    let config = ExperimentConfig::from_key_values(&kv)?;
    let outcome = experiment::run(&config)?;
    report::write_run(&config, &outcome)?;
    for s in &outcome.series {
        let aucs: Vec<f64> = s.folds.iter().filter_map(|f| f.mean_auc()).collect();
        let mean = (!aucs.is_empty()).then(|| aucs.iter().sum::<f64>() / aucs.len() as f64);
        println!("{}\tmean prequential AUC {}", s.label(), report::na(mean));
    }
    println!("wrote {}", config.out.display());
    Ok(())
}

fn exit_with(e: &HarnessError) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run {
            config,
            seed,
            out,
            overrides,
        } => match run(config, seed, out, &overrides) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => exit_with(&e),
        },
        Command::Compare {
            runs,
            out,
            metric,
            rope,
            rho,
            baseline,
        } => {
            let options = CompareOptions {
                metric,
                rope,
                rho,
                baseline,
            };
            match compare_runs(&runs, &options).and_then(|c| write_report(&out, &c).map(|_| c)) {
                Ok(comparisons) => {
                    for c in comparisons {
                        let s = c.summary;
                        println!(
                            "{}\tp_left {}\tp_rope {}\tp_right {}",
                            c.label, s.p_left, s.p_rope, s.p_right
                        );
                    }
                    ExitCode::SUCCESS
                }
                Err(e) => exit_with(&e),
            }
        }
        Command::WindowSize {
            probabilities,
            tau,
            confidence,
        } => match min_window_size(&probabilities, tau, confidence).context("window size") {
            Ok(w) => {
                println!("n = {}\nlemma_satisfied = {}", w.n, w.lemma_satisfied);
                ExitCode::SUCCESS
            }
            Err(e) => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
        Command::ClusterDistance {
            center_a,
            radius_a,
            center_b,
            radius_b,
            samples,
            seed,
        } => {
            match ball_distance(&center_a, radius_a, &center_b, radius_b, samples, seed)
                .context("cluster distance")
            {
                Ok(d) => {
                    println!("raw = {}\nnormalized = {}", d.raw, d.normalized);
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
    }
}
