use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use mberjidf::gradcheck::{run_gradcheck, GradCheckConfig};
use mberjidf::harness::{ExperimentConfig, PRESETS};
use mberjidf_cli::config::split_assignment;
use mberjidf_cli::export::{complexity_csv, export_complexity};
use mberjidf_cli::{render, resolve, run_and_export, ConfigFile, Overrides, THREADS_ENV};

const GRADCHECK_TOLERANCE: f64 = 1e-5;

#[derive(Parser)]
#[command(
    name = "mberjidf",
    version,
    about = "Adaptive MBER-JIDF reduced-rank receiver simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte Carlo experiment and write CSV curves and a manifest.
    Run {
        #[command(flatten)]
        config: ConfigArgs,
        /// Output directory.
        #[arg(long, default_value = "results")]
        out: PathBuf,
        /// Worker threads (0 = one per core).
        #[arg(long, env = THREADS_ENV, default_value_t = 0)]
        threads: usize,
    },
    /// Print per-symbol operation counts for the configured dimensions.
    Complexity {
        #[command(flatten)]
        config: ConfigArgs,
        /// Also write complexity.csv into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the analytic gradients with central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = GradCheckConfig::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = GradCheckConfig::default().instances)]
        instances: usize,
    },
    /// List the named presets.
    Presets {
        /// Print the full configuration of each preset.
        #[arg(long)]
        show: bool,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Preset {
    Paper,
    Desk,
}

impl Preset {
    fn name(self) -> &'static str {
        match self {
            Preset::Paper => "paper",
            Preset::Desk => "desk",
        }
    }
}

#[derive(Args)]
struct ConfigArgs {
    /// Flat `key = value` configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base preset; values from --config and flags are applied on top.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    /// Override any config key, e.g. `--set rank=4`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let file = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("reading {}", path.display()))?;
                Some(ConfigFile::parse(&text).with_context(|| format!("in {}", path.display()))?)
            }
            None => None,
        };
        let set = self
            .set
            .iter()
            .map(|s| split_assignment(s))
            .collect::<Result<Vec<_>, _>>()?;
        let flags = Overrides {
            preset: self.preset.map(|p| p.name().to_owned()),
            seed: self.seed,
            trials: self.trials,
            set,
        };
        Ok(resolve(file.as_ref(), &flags)?)
    }
}

fn describe(name: &str) -> &'static str {
    match name {
        "paper" => "M=40, K=4, N_U=2, D=I=8, B=4, K sweep 2..18",
        "desk" => "M=16, K=2, N_U=2, D=I=4, B=2, K sweep 1..4",
        _ => "",
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            out,
            threads,
        } => {
            let cfg = config.resolve()?;
            let manifest = run_and_export(&cfg, &out, threads)?;
            for f in &manifest.files {
                println!("{}", f.display());
            }
            eprintln!("done in {:.1} s", manifest.duration.as_secs_f64());
        }
        Command::Complexity { config, out } => {
            let cfg = config.resolve()?;
            print!("{}", complexity_csv(&cfg)?);
            if let Some(dir) = out {
                let path = export_complexity(&cfg, &dir)?;
                eprintln!("wrote {}", path.display());
            }
        }
        Command::Gradcheck { seed, instances } => {
            let cfg = GradCheckConfig {
                seed,
                instances,
                ..GradCheckConfig::default()
            };
            let rep = run_gradcheck(&cfg)?;
            println!("instances = {}", rep.instances);
            println!("max_rel_error_w = {:e}", rep.max_rel_error_w);
            println!("max_rel_error_p = {:e}", rep.max_rel_error_p);
            if !(rep.max_rel_error_w < GRADCHECK_TOLERANCE
                && rep.max_rel_error_p < GRADCHECK_TOLERANCE)
            {
                bail!("gradient mismatch above {GRADCHECK_TOLERANCE:e}");
            }
        }
        Command::Presets { show } => {
            for name in PRESETS {
                println!("{name}: {}", describe(name));
                if show {
                    print!("{}", render(&ExperimentConfig::preset(name)?));
                    println!();
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
