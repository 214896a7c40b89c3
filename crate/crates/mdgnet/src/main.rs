use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mdgnet::commands::{self, DATASET_FILE};
use mdgnet::config::RunConfig;
use mdgnet::Result;
use mdgnet_core::mlp::Target;

/// Estimate mode-dependent gain and optical SNR of coupled SDM links from
/// MMSE equalizer features.
///
/// Exit status: 0 success, 1 failure, 2 usage error.
#[derive(Parser)]
#[command(name = "mdgnet", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Flat TOML run configuration; absent keys take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, overriding the config and $MDGNET_OUT_DIR.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum TargetArg {
    SigmaMdg,
    Snr,
}

impl From<TargetArg> for Target {
    fn from(t: TargetArg) -> Self {
        match t {
            TargetArg::SigmaMdg => Target::SigmaMdg,
            TargetArg::Snr => Target::Snr,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the labelled dataset CSV and its manifest.
    Generate {
        #[command(flatten)]
        common: Common,
    },
    /// Train the network for one target on a dataset CSV.
    Train {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        target: TargetArg,
        /// Defaults to <out>/dataset.csv.
        #[arg(long)]
        dataset: Option<PathBuf>,
    },
    /// Held-out MSE of the conventional estimators and the given models.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Model file, repeatable. Defaults to both models in <out>.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Defaults to <out>/dataset.csv.
        #[arg(long)]
        dataset: Option<PathBuf>,
        /// Require every model to estimate this target.
        #[arg(long, value_enum)]
        target: Option<TargetArg>,
        /// Exit 1 when a model misses its MSE bound.
        #[arg(long)]
        strict: bool,
        /// Also report the label-echo estimator, whose MSE is 0 by construction.
        #[arg(long)]
        debug_echo: bool,
    },
    /// Signed-error grids over (sigma_mdg, SNR) for conventional and NN estimators.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Model file, repeatable. Defaults to both models in <out>.
        #[arg(long = "model")]
        models: Vec<PathBuf>,
        /// Overwrite an existing <out>/grid directory.
        #[arg(long)]
        force: bool,
        /// Exit 1 when a grid check fails.
        #[arg(long)]
        strict: bool,
    },
    /// Compare closed-form SINR against symbol-level simulation.
    OracleCheck {
        #[command(flatten)]
        common: Common,
    },
}

fn resolve(common: &Common) -> Result<(RunConfig, PathBuf)> {
    let mut cfg = match &common.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &common.out {
        cfg.out_dir = Some(out.clone());
    }
    cfg.validate()?;
    let out = cfg.resolved_out_dir();
    Ok((cfg, out))
}

fn default_models(out: &std::path::Path, given: Vec<PathBuf>) -> Vec<PathBuf> {
    if given.is_empty() {
        [Target::SigmaMdg, Target::Snr].map(|t| out.join(commands::model_file(t))).to_vec()
    } else {
        given
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate { common } => {
            let (cfg, out) = resolve(&common)?;
            let g = commands::generate(&cfg, &out)?;
            println!("wrote {} samples to {}", g.samples, g.dataset.display());
            println!("sha256 {}", g.sha256);
        }
        Command::Train { common, target, dataset } => {
            let (cfg, out) = resolve(&common)?;
            let dataset = dataset.unwrap_or_else(|| out.join(DATASET_FILE));
            let t = commands::train_target(&cfg, &dataset, target.into(), &out)?;
            let last = |v: &[f64]| v.last().copied().unwrap_or(f64::NAN);
            println!(
                "{}: train MSE {:.6} dB^2, held-out MSE {:.6} dB^2 after {} epochs",
                t.saved.params.target.name(),
                last(&t.history.train_loss),
                last(&t.history.held_out_loss),
                t.history.train_loss.len()
            );
            println!("wrote {} and {}", t.model.display(), t.history_file.display());
        }
        Command::Evaluate { common, models, dataset, target, strict, debug_echo } => {
            let (cfg, out) = resolve(&common)?;
            let dataset = dataset.unwrap_or_else(|| out.join(DATASET_FILE));
            let models = default_models(&out, models);
            let (path, m) =
                commands::evaluate(&cfg, &dataset, &models, target.map(Into::into), debug_echo, strict, &out)?;
            for e in &m.estimators {
                let verdict = e.pass.map_or("", |p| if p { "  pass" } else { "  FAIL" });
                println!("{:<13} {:<10} MSE {:.6} dB^2  MAE {:.4} dB  n={}{verdict}", e.estimator, e.target, e.mse_db2, e.mae_db, e.n);
            }
            println!("wrote {}", path.display());
        }
        Command::Grid { common, models, force, strict } => {
            let (cfg, out) = resolve(&common)?;
            let models = default_models(&out, models);
            let (dir, _, summary) = commands::grid(&cfg, &models, &out, force, strict)?;
            for c in &summary.checks {
                println!("{} {:.4}  {}", if c.pass { "pass" } else { "FAIL" }, c.value, c.description);
            }
            for i in &summary.improvements {
                println!(
                    "{} {}: conventional {:.3} dB vs nn {:.3} dB ({})",
                    i.target,
                    i.region,
                    i.conventional_mean_abs_bias_db,
                    i.nn_mean_abs_bias_db,
                    if i.improved { "improved" } else { "not improved" }
                );
            }
            println!("wrote {} grids to {}", summary.grids.len(), dir.display());
        }
        Command::OracleCheck { common } => {
            let (cfg, _) = resolve(&common)?;
            let report = commands::oracle_check(&cfg)?;
            for c in &report.cases {
                println!("sigma_mdg {:>4} dB  snr {:>4} dB  max deviation {:.4} dB", c.sigma_mdg_db, c.snr_db, c.max_deviation_db);
            }
            println!("max deviation {:.4} dB (threshold {} dB)", report.max_deviation_db, report.threshold_db);
            if !report.pass {
                return Err(mdgnet::Error::CheckFailed("closed-form SINR disagrees with simulation".into()));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
