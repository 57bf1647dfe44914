use std::fs;

use muskat_lab::config::*;
use muskat_lab::presets::*;

fn col(t: &muskat_lab::output::Table, name: &str) -> Vec<f64> {
    t.column(name).unwrap().iter().map(|s| s.parse().unwrap()).collect()
}

#[test]
fn dispersion_defaults_match_linear_rates() {
    let art = run_preset(&ExperimentConfig::new(Preset::Dispersion)).unwrap();
    let ratios = col(&art.summary, "ratio");
    assert_eq!(ratios.len(), 4);
    assert!(ratios.iter().all(|r| (0.99..=1.01).contains(r)), "{ratios:?}");
    assert_eq!(art.plots.len(), 1);
}

#[test]
fn convergence_slope_column() {
    let mut cfg = ExperimentConfig::new(Preset::Convergence);
    cfg.grid.resolutions = vec![64];
    cfg.grid.cells = vec![32, 64, 128];
    let art = run_preset(&cfg).unwrap();
    let slopes = col(&art.summary, "fitted_slope");
    assert!(slopes.iter().all(|&s| s >= 1.9), "{slopes:?}");
}

#[test]
fn freeplay_with_zero_data_is_flat() {
    let mut cfg = ExperimentConfig::new(Preset::Freeplay);
    cfg.grid.resolutions = vec![16];
    cfg.grid.cells = vec![16];
    cfg.time.t_end = 0.1;
    let art = run_preset(&cfg).unwrap();
    assert!(art.monitors.iter().all(|m| m.l2_norm == 0.0 && m.dissipation_total == 0.0));
    assert_eq!(art.summary.column("halt").unwrap(), vec!["completed"]);
    assert_eq!(art.summary.column("l2_monotone").unwrap(), vec!["true"]);
}

#[test]
fn initial_data_from_file_is_resampled() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("eta.csv");
    let mut text = String::from("x,eta\n");
    for i in 0..64 {
        let x = 2.0 * std::f64::consts::PI * i as f64 / 64.0;
        text += &format!("{x},{}\n", 0.1 * (2.0 * x).sin() + 0.02 * (40.0 * x).cos());
    }
    fs::write(&path, text).unwrap();
    let mut cfg = ExperimentConfig::new(Preset::Freeplay);
    cfg.initial.file = Some(path);
    let eta = initial_data(&cfg, 32).unwrap();
    // the k = 40 component is beyond the 32-point grid and is dropped
    for (i, v) in eta.values().iter().enumerate() {
        let x = eta.grid().x(i);
        assert!((v - 0.1 * (2.0 * x).sin()).abs() < 1e-12);
    }
}

#[test]
fn random_initial_data_depends_on_seed_only() {
    let mut cfg = ExperimentConfig::new(Preset::Freeplay);
    cfg.initial.random = Some(RandomModes { modes: 3, amplitude: 0.2 });
    cfg.seed = 5;
    let a = initial_data(&cfg, 32).unwrap();
    let b = initial_data(&cfg, 32).unwrap();
    assert_eq!(a, b);
    assert!((a.sup_norm() - 0.2).abs() < 1e-12);
    let hi = a.coeffs().iter().zip(a.grid().wavenumbers()).filter(|(_, k)| k.abs() > 3.0).map(|(c, _)| c.norm()).fold(0.0, f64::max);
    assert!(hi < 1e-15);
    cfg.seed = 6;
    assert_ne!(initial_data(&cfg, 32).unwrap(), a);
}

#[test]
fn two_phase_decay_rate_is_parallel_sum() {
    let mut cfg = ExperimentConfig::new(Preset::Dispersion);
    cfg.physics.phase = Phase::Two;
    let j = cfg.physics.rho_minus - cfg.physics.rho_plus;
    assert!((linear_rate(&cfg, 2.0) - j * 2.0 / 4.0).abs() < 1e-14);
    cfg.physics.depth = Some(1.0);
    let lo = 2.0 * (2.0f64).tanh() / 3.0;
    let up = 2.0 / 1.0;
    assert!((linear_rate(&cfg, 2.0) - j * lo * up / (lo + up)).abs() < 1e-14);
}

#[test]
fn loglog_slope_of_power_law() {
    let x = [1.0, 2.0, 4.0, 8.0];
    let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(-2.0)).collect();
    assert!((loglog_slope(&x, &y) + 2.0).abs() < 1e-12);
}
