use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::json;

use muskat_core::dirichlet_neumann::flat_dn_multiplier;
use muskat_lab::config::{parse_config, ConfigError, ExperimentConfig, Phase, Preset};
use muskat_lab::criteria;
use muskat_lab::presets::linear_rate;

#[derive(Parser)]
#[command(name = "muskat", version, about = "Numerical laboratory for the Muskat interface problem")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment preset and write its artifacts.
    Run {
        /// Config file (TOML).
        config_file: Option<PathBuf>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Run directory (default: `output` from the config, else `runs/<preset>`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Overrides the preset named in the file.
        #[arg(long, value_enum)]
        preset: Option<Preset>,
    },
    /// Run the acceptance criteria.
    Check {
        /// Criterion numbers to run (default: all).
        #[arg(long, value_delimiter = ',')]
        only: Vec<usize>,
        #[arg(long, default_value_t = default_threads())]
        threads: usize,
    },
    /// Print closed-form oracle values.
    Oracle {
        #[arg(value_enum)]
        name: OracleName,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Largest wavenumber in the table.
        #[arg(long, default_value_t = 8)]
        k_max: u32,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleName {
    /// Flat DN symbol `|k|` or `|k| tanh(k H)`.
    FlatDn,
    /// Linear decay rate of the configured phase.
    DecayRate,
    /// Share of `[rho] eta` carried by the lower potential.
    PotentialShare,
    /// Coefficient of `|D| eta` in the linearized `[B]`.
    JumpB,
    /// RT of a flat two-phase interface.
    FlatRt,
}

fn default_threads() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn error_record(kind: &str, e: &dyn std::fmt::Display) -> serde_json::Value {
    json!({ "error": kind, "message": e.to_string() })
}

fn load(file: Option<PathBuf>, flag: Option<PathBuf>) -> Result<ExperimentConfig, ConfigError> {
    match flag.or(file) {
        Some(p) => parse_config(&p),
        None => Err(ConfigError::Invalid(vec!["no config given (pass a file or --config)".into()])),
    }
}

fn run(config_file: Option<PathBuf>, config: Option<PathBuf>, out: Option<PathBuf>, threads: usize, seed: Option<u64>, preset: Option<Preset>) -> ExitCode {
    let mut cfg = match load(config_file, config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("{}", error_record("config", &e));
            return ExitCode::from(2);
        }
    };
    if let Some(s) = seed {
        cfg.seed = s;
    }
    if let Some(p) = preset {
        cfg.preset = p;
    }
    if let Err(e) = cfg.validate() {
        eprintln!("{}", error_record("config", &e));
        return ExitCode::from(2);
    }
    let dir = out.or_else(|| cfg.output.clone()).unwrap_or_else(|| PathBuf::from("runs").join(cfg.preset.to_string()));
    match muskat_lab::run_to_dir(&cfg, &dir, threads.max(1)) {
        Ok(art) => {
            println!("{}: {} summary rows written to {}", cfg.preset, art.summary.rows.len(), dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let rec = error_record("run", &format!("{e:#}"));
            let _ = std::fs::create_dir_all(&dir).and_then(|_| std::fs::write(dir.join("error.json"), rec.to_string() + "\n"));
            eprintln!("{rec}");
            ExitCode::FAILURE
        }
    }
}

fn oracle(name: OracleName, config: Option<PathBuf>, k_max: u32) -> ExitCode {
    let cfg = match config.map(|p| parse_config(&p)).transpose() {
        Ok(c) => c.unwrap_or_else(|| ExperimentConfig::new(Preset::Freeplay)),
        Err(e) => {
            eprintln!("{}", error_record("config", &e));
            return ExitCode::from(2);
        }
    };
    let p = &cfg.physics;
    let jump = p.rho_minus - p.rho_plus;
    println!("k\tvalue");
    for k in 1..=k_max {
        let k = f64::from(k);
        let v = match name {
            OracleName::FlatDn => flat_dn_multiplier(k, p.depth),
            OracleName::DecayRate => linear_rate(&cfg, k),
            OracleName::PotentialShare => {
                let lo = flat_dn_multiplier(k, p.depth) / p.mu_minus;
                let up = flat_dn_multiplier(k, p.upper_depth) / p.mu_plus;
                jump * up / (lo + up)
            }
            OracleName::JumpB => jump * (p.mu_minus - p.mu_plus) / (p.mu_plus + p.mu_minus),
            OracleName::FlatRt => jump,
        };
        println!("{k}\t{v:.12e}");
    }
    if matches!(name, OracleName::DecayRate) && p.phase == Phase::Two && (p.depth.is_some() || p.upper_depth.is_some()) {
        eprintln!("note: finite depths use the parallel sum of the flat symbols");
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Run { config_file, config, out, threads, seed, preset } => run(config_file, config, out, threads, seed, preset),
        Command::Check { only, threads } => {
            let pool = match rayon::ThreadPoolBuilder::new().num_threads(threads.max(1)).build() {
                Ok(p) => p,
                Err(e) => {
                    eprintln!("{}", error_record("threads", &e));
                    return ExitCode::FAILURE;
                }
            };
            let outcomes = pool.install(|| criteria::run(&only));
            for o in &outcomes {
                println!("{}", criteria::format_outcome(o));
            }
            if outcomes.iter().all(|o| o.pass) {
                ExitCode::SUCCESS
            } else {
                ExitCode::FAILURE
            }
        }
        Command::Oracle { name, config, k_max } => oracle(name, config, k_max),
    }
}
