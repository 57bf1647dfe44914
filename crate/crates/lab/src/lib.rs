//! Experiment harness for `muskat-core`: TOML configuration, presets,
//! run artifacts and the acceptance criteria.

pub mod config;
pub mod criteria;
pub mod output;
pub mod presets;

use std::path::Path;

pub use config::{parse_config, ConfigError, ExperimentConfig, Preset};
pub use output::Artifacts;

/// Relative slack allowed between consecutive L2 monitor values.
pub const L2_SLACK: f64 = 1e-10;

/// Runs `cfg` on a pool of `threads` workers and writes the artifacts
/// under `out`.
pub fn run_to_dir(cfg: &ExperimentConfig, out: &Path, threads: usize) -> anyhow::Result<Artifacts> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    let art = pool.install(|| presets::run_preset(cfg))?;
    art.write(out, cfg, threads)?;
    Ok(art)
}
