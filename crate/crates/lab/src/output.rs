//! Run artifacts: summary table, monitor stream, SVG plots, manifest.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use muskat_core::evolution::{HaltReason, MonitorRecord};

use crate::config::ExperimentConfig;

/// A CSV table. Cells are formatted by the producer, so the bytes depend
/// only on the computed numbers.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<&str>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].as_str()).collect())
    }

    pub fn to_csv(&self) -> anyhow::Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        Ok(w.into_inner()?)
    }
}

/// Fixed-width scientific notation for table cells.
pub fn num(v: f64) -> String {
    format!("{v:.9e}")
}

pub fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, num)
}

pub fn halt_label(h: &HaltReason) -> String {
    match h {
        HaltReason::Completed => "completed".into(),
        HaltReason::GeometryBreach { min_gap, required } => format!("geometry_breach(gap={min_gap:.3e},required={required:.3e})"),
        HaltReason::RayleighTaylorLoss { min_rt } => format!("rayleigh_taylor_loss(min_rt={min_rt:.3e})"),
        HaltReason::SolverStall { message } => format!("solver_stall({message})"),
    }
}

/// One NDJSON line of the monitor stream.
#[derive(Debug, Clone, Serialize)]
pub struct MonitorLine {
    pub run: String,
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub l2_norm: f64,
    pub hs_norm: f64,
    pub min_one_minus_b: Option<f64>,
    pub min_rt: Option<f64>,
    pub min_gap: Option<f64>,
    pub dissipation_increment: f64,
    pub dissipation_total: f64,
    pub energy_balance: f64,
    pub outer_iterations: usize,
    pub outer_residual: f64,
    pub inner_residual: f64,
    pub halt: Option<String>,
    /// Wall clock since the start of the run (the only nondeterministic
    /// field).
    pub elapsed_ms: f64,
}

impl MonitorLine {
    pub fn new(run: &str, r: &MonitorRecord, elapsed_ms: f64) -> Self {
        Self {
            run: run.to_owned(),
            step: r.step,
            t: r.t,
            dt: r.dt,
            l2_norm: r.l2_norm,
            hs_norm: r.hs_norm,
            min_one_minus_b: r.min_one_minus_b,
            min_rt: r.min_rt,
            min_gap: r.min_gap,
            dissipation_increment: r.dissipation_increment,
            dissipation_total: r.dissipation_total,
            energy_balance: r.energy_balance,
            outer_iterations: r.outer_iterations,
            outer_residual: r.outer_residual,
            inner_residual: r.inner_residual,
            halt: r.halt.as_ref().map(halt_label),
            elapsed_ms,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
    pub dashed: bool,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self { label: label.into(), points, dashed: false }
    }

    pub fn dashed(mut self) -> Self {
        self.dashed = true;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Plot {
    pub name: String,
    pub title: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub series: Vec<Series>,
}

const PALETTE: [&str; 8] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b", "#e377c2"];

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn ticks(lo: f64, hi: f64, log: bool) -> Vec<f64> {
    if log {
        let (a, b) = (lo.floor() as i32, hi.ceil() as i32);
        let step = ((b - a) / 6).max(1);
        return (a..=b).step_by(step as usize).map(f64::from).filter(|t| *t >= lo - 1e-9 && *t <= hi + 1e-9).collect();
    }
    let span = hi - lo;
    let raw = span / 5.0;
    let mag = 10f64.powf(raw.log10().floor());
    let step = [1.0, 2.0, 5.0, 10.0].iter().map(|m| m * mag).find(|s| *s >= raw).unwrap_or(mag * 10.0);
    let first = (lo / step).ceil() * step;
    (0..=10).map(|i| first + i as f64 * step).take_while(|t| *t <= hi + 1e-12 * span.abs()).collect()
}

fn tick_label(v: f64, log: bool) -> String {
    if log {
        format!("1e{}", v.round() as i32)
    } else if v == 0.0 || (v.abs() >= 1e-2 && v.abs() < 1e4) {
        let s = format!("{v:.3}");
        s.trim_end_matches('0').trim_end_matches('.').to_owned()
    } else {
        format!("{v:.1e}")
    }
}

impl Plot {
    /// Polyline plot as a standalone SVG document.
    pub fn to_svg(&self) -> String {
        let (w, h) = (640.0, 420.0);
        let (left, right, top, bottom) = (72.0, 150.0, 36.0, 52.0);
        let tx = |v: f64| if self.log_x { v.log10() } else { v };
        let ty = |v: f64| if self.log_y { v.log10() } else { v };
        let pts: Vec<Vec<(f64, f64)>> = self
            .series
            .iter()
            .map(|s| {
                s.points
                    .iter()
                    .filter(|(x, y)| (!self.log_x || *x > 0.0) && (!self.log_y || *y > 0.0))
                    .map(|&(x, y)| (tx(x), ty(y)))
                    .filter(|(x, y)| x.is_finite() && y.is_finite())
                    .collect()
            })
            .collect();
        let all = pts.iter().flatten();
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for &(x, y) in all {
            x0 = x0.min(x);
            x1 = x1.max(x);
            y0 = y0.min(y);
            y1 = y1.max(y);
        }
        if !x0.is_finite() {
            (x0, x1, y0, y1) = (0.0, 1.0, 0.0, 1.0);
        }
        if x1 - x0 <= 0.0 {
            x0 -= 0.5;
            x1 += 0.5;
        }
        if y1 - y0 <= 0.0 {
            let pad = if y0 == 0.0 { 1.0 } else { 0.1 * y0.abs() };
            y0 -= pad;
            y1 += pad;
        }
        let pw = w - left - right;
        let ph = h - top - bottom;
        let sx = |x: f64| left + (x - x0) / (x1 - x0) * pw;
        let sy = |y: f64| top + (1.0 - (y - y0) / (y1 - y0)) * ph;

        let mut s = String::new();
        let _ = writeln!(s, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#);
        let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
        let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(&self.title));
        let _ = writeln!(s, r##"<rect x="{left}" y="{top}" width="{pw}" height="{ph}" fill="none" stroke="#444"/>"##);
        for t in ticks(x0, x1, self.log_x) {
            let x = sx(t);
            let _ = writeln!(s, r##"<line x1="{x:.2}" y1="{}" x2="{x:.2}" y2="{}" stroke="#ddd"/>"##, top, top + ph);
            let _ = writeln!(s, r#"<text x="{x:.2}" y="{}" text-anchor="middle">{}</text>"#, top + ph + 16.0, tick_label(t, self.log_x));
        }
        for t in ticks(y0, y1, self.log_y) {
            let y = sy(t);
            let _ = writeln!(s, r##"<line x1="{}" y1="{y:.2}" x2="{}" y2="{y:.2}" stroke="#ddd"/>"##, left, left + pw);
            let _ = writeln!(s, r#"<text x="{}" y="{:.2}" text-anchor="end">{}</text>"#, left - 6.0, y + 4.0, tick_label(t, self.log_y));
        }
        let _ = writeln!(s, r#"<text x="{}" y="{}" text-anchor="middle">{}</text>"#, left + pw / 2.0, h - 12.0, escape(&self.x_label));
        let _ = writeln!(
            s,
            r#"<text x="16" y="{0}" text-anchor="middle" transform="rotate(-90 16 {0})">{1}</text>"#,
            top + ph / 2.0,
            escape(&self.y_label)
        );
        for (i, (series, p)) in self.series.iter().zip(&pts).enumerate() {
            let color = PALETTE[i % PALETTE.len()];
            let dash = if series.dashed { r#" stroke-dasharray="6 4""# } else { "" };
            let coords: Vec<String> = p.iter().map(|&(x, y)| format!("{:.2},{:.2}", sx(x), sy(y))).collect();
            if p.len() > 1 {
                let _ = writeln!(s, r#"<polyline fill="none" stroke="{color}" stroke-width="1.6"{dash} points="{}"/>"#, coords.join(" "));
            }
            for &(x, y) in p.iter().take(64) {
                if p.len() <= 64 {
                    let _ = writeln!(s, r#"<circle cx="{:.2}" cy="{:.2}" r="2.5" fill="{color}"/>"#, sx(x), sy(y));
                }
            }
            let ly = top + 14.0 + 18.0 * i as f64;
            let lx = left + pw + 12.0;
            let _ = writeln!(s, r#"<line x1="{lx}" y1="{ly}" x2="{}" y2="{ly}" stroke="{color}" stroke-width="2"{dash}/>"#, lx + 20.0);
            let _ = writeln!(s, r#"<text x="{}" y="{}">{}</text>"#, lx + 26.0, ly + 4.0, escape(&series.label));
        }
        s.push_str("</svg>\n");
        s
    }
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub preset: String,
    pub seed: u64,
    pub threads: usize,
    pub config_sha256: String,
    pub config: String,
    pub tolerances: ManifestTolerances,
    pub files: Vec<String>,
}

#[derive(Debug, Serialize)]
pub struct ManifestTolerances {
    pub dn_relative_residual: f64,
    pub dn_max_iter: usize,
    pub outer_relative_residual: f64,
    pub outer_max_iter: usize,
    pub l2_monotonicity_slack: f64,
}

pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let digest = Sha256::digest(cfg.to_toml_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Everything a preset produces.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub summary: Table,
    pub monitors: Vec<MonitorLine>,
    pub plots: Vec<Plot>,
    /// Extra CSV files (name, table), e.g. final spectra.
    pub tables: Vec<(String, Table)>,
}

impl Artifacts {
    pub fn write(&self, dir: &Path, cfg: &ExperimentConfig, threads: usize) -> anyhow::Result<()> {
        fs::create_dir_all(dir.join("plots"))?;
        let mut files = vec!["summary.csv".to_owned(), "monitors.ndjson".to_owned()];
        fs::write(dir.join("summary.csv"), self.summary.to_csv()?)?;
        let mut nd = fs::File::create(dir.join("monitors.ndjson"))?;
        for m in &self.monitors {
            serde_json::to_writer(&mut nd, m)?;
            nd.write_all(b"\n")?;
        }
        for (name, t) in &self.tables {
            fs::write(dir.join(name), t.to_csv()?)?;
            files.push(name.clone());
        }
        for p in &self.plots {
            let name = format!("plots/{}.svg", p.name);
            fs::write(dir.join(&name), p.to_svg())?;
            files.push(name);
        }
        files.push("manifest.json".into());
        let manifest = Manifest {
            tool: "muskat",
            version: env!("CARGO_PKG_VERSION"),
            preset: cfg.preset.to_string(),
            seed: cfg.seed,
            threads,
            config_sha256: config_hash(cfg),
            config: cfg.to_toml_string(),
            tolerances: ManifestTolerances {
                dn_relative_residual: cfg.tolerances.dn,
                dn_max_iter: cfg.tolerances.dn_max_iter,
                outer_relative_residual: cfg.tolerances.outer,
                outer_max_iter: cfg.tolerances.outer_max_iter,
                l2_monotonicity_slack: crate::L2_SLACK,
            },
            files,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
        Ok(())
    }
}
