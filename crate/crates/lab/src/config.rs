//! Experiment configuration (TOML).

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use muskat_core::evolution::Scheme;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {message}")]
    Parse { path: PathBuf, message: String },
    #[error("invalid configuration:\n  - {}", .0.join("\n  - "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
#[value(rename_all = "snake_case")]
pub enum Preset {
    Dispersion,
    Scaling,
    Convergence,
    ParalinResidual,
    RtCrosscheck,
    Freeplay,
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Preset::Dispersion => "dispersion",
            Preset::Scaling => "scaling",
            Preset::Convergence => "convergence",
            Preset::ParalinResidual => "paralin_residual",
            Preset::RtCrosscheck => "rt_crosscheck",
            Preset::Freeplay => "freeplay",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    #[default]
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeName {
    #[default]
    SemiImplicit,
    ExplicitRk4,
}

impl From<SchemeName> for Scheme {
    fn from(s: SchemeName) -> Self {
        match s {
            SchemeName::SemiImplicit => Scheme::SemiImplicit,
            SchemeName::ExplicitRk4 => Scheme::ExplicitRk4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub preset: Preset,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub physics: PhysicsConfig,
    #[serde(default)]
    pub time: TimeConfig,
    #[serde(default)]
    pub initial: InitialData,
    #[serde(default)]
    pub study: StudyConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
}

/// Resolution ladder. `rt_crosscheck` pairs the two lists entry by entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    /// Interface points `N`.
    pub resolutions: Vec<usize>,
    /// Vertical cells `M`.
    pub cells: Vec<usize>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self { resolutions: vec![32], cells: vec![64] }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PhysicsConfig {
    pub phase: Phase,
    pub kappa: f64,
    pub mu_plus: f64,
    pub mu_minus: f64,
    pub rho_plus: f64,
    pub rho_minus: f64,
    /// Depth of the bottom wall; absent means infinite depth.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub depth: Option<f64>,
    /// Height of the top wall (two phase); absent means infinite.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub upper_depth: Option<f64>,
    /// Required separation from the walls.
    pub h: f64,
}

impl Default for PhysicsConfig {
    fn default() -> Self {
        Self {
            phase: Phase::One,
            kappa: 1.0,
            mu_plus: 1.0,
            mu_minus: 3.0,
            rho_plus: 1.0,
            rho_minus: 2.5,
            depth: None,
            upper_depth: None,
            h: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub scheme: SchemeName,
    pub dt: f64,
    pub t_end: f64,
    pub epsilon: f64,
    pub monitor_every: usize,
    pub sobolev_index: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { scheme: SchemeName::SemiImplicit, dt: 0.02, t_end: 1.0, epsilon: 0.0, monitor_every: 1, sobolev_index: 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Mode {
    pub k: i64,
    pub amplitude: f64,
    /// `amplitude * cos(k x - phase)`.
    #[serde(default)]
    pub phase: f64,
}

/// Random band-limited data drawn from `seed`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomModes {
    /// Highest wavenumber.
    pub modes: usize,
    /// Sup norm of the result.
    pub amplitude: f64,
}

/// Initial interface: the sum of `modes`, the samples in `file` and the
/// `random` draw (any of them may be absent).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialData {
    pub modes: Vec<Mode>,
    /// CSV with a header and columns `x,eta` on a uniform periodic grid.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub file: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub random: Option<RandomModes>,
}

/// Parameters specific to one preset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StudyConfig {
    /// Amplitude ladder for `paralin_residual`.
    pub amplitudes: Vec<f64>,
    /// Wavenumbers for `dispersion` and `convergence`.
    pub wavenumbers: Vec<i64>,
    /// Dilation factor for `scaling`.
    pub lambda: f64,
    /// Amplitude of the linear `dispersion` runs.
    pub linear_amplitude: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self { amplitudes: vec![1e-2, 1e-3, 1e-4], wavenumbers: vec![1, 2, 3, 5], lambda: 2.0, linear_amplitude: 1e-3 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub dn: f64,
    pub dn_max_iter: usize,
    pub outer: f64,
    pub outer_max_iter: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { dn: 1e-12, dn_max_iter: 500, outer: 1e-10, outer_max_iter: 200 }
    }
}

fn finite(v: f64) -> bool {
    v.is_finite()
}

impl ExperimentConfig {
    pub fn new(preset: Preset) -> Self {
        Self {
            preset,
            seed: 0,
            output: None,
            grid: GridConfig::default(),
            physics: PhysicsConfig::default(),
            time: TimeConfig::default(),
            initial: InitialData::default(),
            study: StudyConfig::default(),
            tolerances: Tolerances::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self, ConfigError> {
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse { path: PathBuf::from("<string>"), message: e.to_string() })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Every violated invariant, not just the first.
    pub fn violations(&self) -> Vec<String> {
        let mut bad = Vec::new();
        let g = &self.grid;
        if g.resolutions.is_empty() {
            bad.push("grid.resolutions is empty".into());
        }
        for &n in &g.resolutions {
            if !n.is_power_of_two() || n < 8 {
                bad.push(format!("grid.resolutions: {n} is not a power of two >= 8"));
            }
        }
        if g.cells.is_empty() {
            bad.push("grid.cells is empty".into());
        }
        for &m in &g.cells {
            if !m.is_power_of_two() || m < 4 {
                bad.push(format!("grid.cells: {m} is not a power of two >= 4"));
            }
        }
        let p = &self.physics;
        for (name, v) in [("kappa", p.kappa), ("mu_plus", p.mu_plus), ("mu_minus", p.mu_minus), ("h", p.h)] {
            if !(finite(v) && v > 0.0) {
                bad.push(format!("physics.{name} must be positive and finite, got {v}"));
            }
        }
        for (name, v) in [("rho_plus", p.rho_plus), ("rho_minus", p.rho_minus)] {
            if !finite(v) {
                bad.push(format!("physics.{name} must be finite, got {v}"));
            }
        }
        if p.phase == Phase::Two && !(p.rho_minus > p.rho_plus) {
            bad.push(format!("physics: two-phase runs need rho_minus > rho_plus, got {} <= {}", p.rho_minus, p.rho_plus));
        }
        for (name, d) in [("depth", p.depth), ("upper_depth", p.upper_depth)] {
            if let Some(d) = d {
                if !(finite(d) && d > p.h) {
                    bad.push(format!("physics.{name} must exceed h = {}, got {d}", p.h));
                }
            }
        }
        let t = &self.time;
        if !(finite(t.dt) && t.dt > 0.0) {
            bad.push(format!("time.dt must be positive, got {}", t.dt));
        }
        if !(finite(t.t_end) && t.t_end > 0.0) {
            bad.push(format!("time.t_end must be positive, got {}", t.t_end));
        }
        if !(finite(t.epsilon) && t.epsilon >= 0.0) {
            bad.push(format!("time.epsilon must be nonnegative, got {}", t.epsilon));
        }
        if t.monitor_every == 0 {
            bad.push("time.monitor_every must be at least 1".into());
        }
        if !finite(t.sobolev_index) {
            bad.push("time.sobolev_index must be finite".into());
        }
        let nmin = g.resolutions.iter().copied().min().unwrap_or(0) as i64;
        for (i, m) in self.initial.modes.iter().enumerate() {
            if !finite(m.amplitude) || !finite(m.phase) {
                bad.push(format!("initial.modes[{i}]: amplitude and phase must be finite"));
            }
            if m.k < 1 || 3 * m.k > nmin {
                bad.push(format!("initial.modes[{i}]: k = {} outside 1..=N/3 for N = {nmin}", m.k));
            }
        }
        if let Some(r) = &self.initial.random {
            if !finite(r.amplitude) {
                bad.push("initial.random.amplitude must be finite".into());
            }
            if r.modes == 0 || 3 * r.modes as i64 > nmin {
                bad.push(format!("initial.random.modes = {} outside 1..=N/3 for N = {nmin}", r.modes));
            }
        }
        if let Some(f) = &self.initial.file {
            if !f.is_file() {
                bad.push(format!("initial.file {} does not exist", f.display()));
            }
        }
        let s = &self.study;
        if s.amplitudes.iter().any(|a| !(finite(*a) && *a > 0.0)) {
            bad.push("study.amplitudes must be positive and finite".into());
        }
        if s.wavenumbers.iter().any(|&k| k < 1 || 3 * k > nmin) {
            bad.push(format!("study.wavenumbers must lie in 1..=N/3 for N = {nmin}"));
        }
        if !(finite(s.lambda) && s.lambda >= 1.0 && s.lambda.fract() == 0.0) {
            bad.push(format!("study.lambda must be an integer >= 1, got {}", s.lambda));
        }
        if !(finite(s.linear_amplitude) && s.linear_amplitude > 0.0) {
            bad.push("study.linear_amplitude must be positive and finite".into());
        }
        let tol = &self.tolerances;
        for (name, v) in [("dn", tol.dn), ("outer", tol.outer)] {
            if !(finite(v) && v > 0.0) {
                bad.push(format!("tolerances.{name} must be positive, got {v}"));
            }
        }
        if tol.dn_max_iter == 0 || tol.outer_max_iter == 0 {
            bad.push("tolerances: iteration limits must be positive".into());
        }
        bad
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let bad = self.violations();
        if bad.is_empty() {
            Ok(())
        } else {
            Err(ConfigError::Invalid(bad))
        }
    }
}

/// Reads, resolves relative file paths against the config's directory and
/// validates.
pub fn parse_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_owned(), source })?;
    let mut cfg: ExperimentConfig =
        toml::from_str(&text).map_err(|e| ConfigError::Parse { path: path.to_owned(), message: e.to_string() })?;
    let base = path.parent().unwrap_or(Path::new("."));
    if let Some(f) = &cfg.initial.file {
        if f.is_relative() {
            cfg.initial.file = Some(base.join(f));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}
