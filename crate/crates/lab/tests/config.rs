use std::fs;

use muskat_lab::config::*;

#[test]
fn minimal_config_gets_defaults() {
    let cfg = ExperimentConfig::from_toml_str("preset = \"dispersion\"\n").unwrap();
    assert_eq!(cfg, ExperimentConfig::new(Preset::Dispersion));
    assert_eq!(cfg.grid.resolutions, vec![32]);
    assert_eq!(cfg.time.scheme, SchemeName::SemiImplicit);
    assert_eq!(cfg.physics.depth, None);
}

#[test]
fn every_violation_is_listed() {
    let text = r#"
preset = "freeplay"
[grid]
resolutions = [48, 64]
cells = [20]
[time]
dt = -1.0
[[initial.modes]]
k = 1
amplitude = inf
"#;
    match ExperimentConfig::from_toml_str(text) {
        Err(ConfigError::Invalid(v)) => {
            let all = v.join("\n");
            assert!(all.contains("48 is not a power of two"), "{all}");
            assert!(all.contains("cells: 20"), "{all}");
            assert!(all.contains("time.dt"), "{all}");
            assert!(all.contains("initial.modes[0]"), "{all}");
            assert_eq!(v.len(), 4, "{all}");
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn unknown_keys_are_rejected_with_location() {
    let err = ExperimentConfig::from_toml_str("preset = \"scaling\"\n[time]\ndt = 0.1\nstep_size = 2\n").unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("step_size"), "{msg}");
    assert!(msg.contains("line 4"), "{msg}");
}

#[test]
fn missing_initial_file_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    fs::write(&path, "preset = \"freeplay\"\n[initial]\nfile = \"nowhere.csv\"\n").unwrap();
    let msg = parse_config(&path).unwrap_err().to_string();
    assert!(msg.contains("nowhere.csv") && msg.contains("does not exist"), "{msg}");
    fs::write(dir.path().join("nowhere.csv"), "x,eta\n0,0\n").unwrap();
    let cfg = parse_config(&path).unwrap();
    assert!(cfg.initial.file.unwrap().is_absolute() || dir.path().is_relative());
}

#[test]
fn round_trip() {
    let text = r#"
preset = "rt_crosscheck"
seed = 42
output = "out/rt"
[grid]
resolutions = [16, 32, 64]
cells = [16, 32, 64]
[physics]
phase = "two"
mu_plus = 2.0
mu_minus = 0.5
depth = 1.5
upper_depth = 3.0
[time]
scheme = "explicit_rk4"
epsilon = 1e-3
[[initial.modes]]
k = 1
amplitude = 0.2
phase = 0.3
[initial.random]
modes = 3
amplitude = 0.05
[study]
amplitudes = [0.1, 0.01]
[tolerances]
dn = 1e-11
"#;
    let a = ExperimentConfig::from_toml_str(text).unwrap();
    let b = ExperimentConfig::from_toml_str(&a.to_toml_string()).unwrap();
    assert_eq!(a, b);
    let c = ExperimentConfig::new(Preset::Freeplay);
    assert_eq!(ExperimentConfig::from_toml_str(&c.to_toml_string()).unwrap(), c);
}

#[test]
fn two_phase_needs_stable_stratification() {
    let err = ExperimentConfig::from_toml_str("preset = \"freeplay\"\n[physics]\nphase = \"two\"\nrho_plus = 3.0\n").unwrap_err();
    assert!(err.to_string().contains("rho_minus > rho_plus"));
}
