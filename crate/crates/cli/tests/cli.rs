use std::path::Path;
use std::process::{Command, Output};

use fbl::emit::{csv_string, read_manifest, svg_string};
use fbl::{run, Experiment, RunOptions};

const SMALL_SWEEP: &str = r#"kind = "variance-sweep"
seed = 9
hbar = [0.04, 0.03, 0.02, 0.015, 0.01]
region = { kind = "interval", a = -0.5, b = 0.5 }

[problem]
dim = 1
half_width = 1.5
mu = 1.0
potential = { kind = "harmonic" }
"#;

fn fbl(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fbl"))
        .args(args)
        .arg("--out")
        .arg(dir)
        .output()
        .unwrap()
}

#[test]
fn successful_run_writes_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("sweep.toml");
    std::fs::write(&config, SMALL_SWEEP).unwrap();
    let out = fbl(&["run", config.to_str().unwrap()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    for ext in ["csv", "json", "svg"] {
        assert!(dir.path().join(format!("variance-sweep.{ext}")).is_file());
    }
    let csv = std::fs::read_to_string(dir.path().join("variance-sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "hbar,N,variance,j2_sq,j1,entropy,normalized,prediction_C"
    );
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, SMALL_SWEEP.replace("seed = 9", "seed = 9\nunknown_key = 1")).unwrap();
    assert_eq!(fbl(&["run", bad.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let too_few = dir.path().join("few.toml");
    std::fs::write(&too_few, SMALL_SWEEP.replace("0.04, 0.03, 0.02, 0.015, 0.01", "0.04, 0.02")).unwrap();
    assert_eq!(fbl(&["run", too_few.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let missing = dir.path().join("missing.toml");
    assert_eq!(fbl(&["run", missing.to_str().unwrap()], dir.path()).status.code(), Some(2));

    let weyl = fbl(&["weyl", "--hbar", "0.05", "--potential", "cubic"], dir.path());
    assert_eq!(weyl.status.code(), Some(2));
}

#[test]
fn shorthand_subcommands_run() {
    let dir = tempfile::tempdir().unwrap();
    let weyl = fbl(&["weyl", "--hbar", "0.05,0.025", "--formats", "csv"], dir.path());
    assert_eq!(weyl.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("weyl.csv")).unwrap();
    assert!(csv.starts_with("hbar,N,predicted,ratio\n"));

    let oscint = fbl(
        &["oscint", "--mode", "bessel", "--n", "3", "--points", "200", "--formats", "json"],
        dir.path(),
    );
    assert_eq!(oscint.status.code(), Some(0));
    assert!(dir.path().join("oscint.json").is_file());
}

#[test]
fn manifest_reproduces_the_table() {
    let experiment = Experiment::from_toml(SMALL_SWEEP).unwrap();
    let first = run(&experiment, RunOptions::default()).unwrap();
    let manifest = fbl::emit::manifest_string(&experiment, &first);
    let (config, seed) = read_manifest(&manifest).unwrap();
    let again = Experiment::from_toml(&config).unwrap();
    let second = run(
        &again,
        RunOptions {
            seed: Some(seed),
            timing: false,
        },
    )
    .unwrap();
    assert_eq!(csv_string(&first), csv_string(&second));
}

#[test]
fn permuted_hbar_permutes_rows() {
    let forward = Experiment::from_toml(SMALL_SWEEP).unwrap();
    let shuffled = Experiment::from_toml(&SMALL_SWEEP.replace("0.04, 0.03, 0.02, 0.015, 0.01", "0.02, 0.01, 0.04, 0.015, 0.03")).unwrap();
    let a = run(&forward, RunOptions::default()).unwrap();
    let b = run(&shuffled, RunOptions::default()).unwrap();
    let order = [2, 4, 0, 3, 1];
    for (row, &k) in b.table.rows.iter().zip(&order) {
        assert_eq!(row, &a.table.rows[k]);
    }
    let (fa, fb) = (&a.fits["normalized variance"], &b.fits["normalized variance"]);
    assert!((fa.slope - fb.slope).abs() <= 1e-12 * fa.slope.abs());
}

#[test]
fn dropping_the_coarsest_cell_keeps_the_slope() {
    let full = run(&Experiment::from_toml(SMALL_SWEEP).unwrap(), RunOptions::default()).unwrap();
    let trimmed_config = SMALL_SWEEP.replace("0.04, 0.03, 0.02, 0.015, 0.01", "0.03, 0.02, 0.015, 0.01");
    let trimmed = run(&Experiment::from_toml(&trimmed_config).unwrap(), RunOptions::default()).unwrap();
    let (a, b) = (&full.fits["normalized variance"], &trimmed.fits["normalized variance"]);
    let tolerance = 3.0 * a.slope_std_error.max(b.slope_std_error);
    assert!((a.slope - b.slope).abs() <= tolerance, "{} vs {} (tolerance {tolerance})", a.slope, b.slope);
}

#[test]
fn svg_draws_data_and_fit() {
    let result = run(&Experiment::from_toml(SMALL_SWEEP).unwrap(), RunOptions::default()).unwrap();
    let svg = svg_string(&result);
    assert_eq!(svg.matches("<polyline").count(), result.series.len());
    assert_eq!(result.series.len(), 2);
}

#[test]
fn seed_override_changes_samples_only() {
    let config = r#"kind = "sample"
seed = 1
[problem]
dim = 1
half_width = 1.5
mu = 1.0
potential = { kind = "harmonic" }
[sample]
count = 200
hbar = 0.1
"#;
    let experiment = Experiment::from_toml(config).unwrap();
    let base = run(&experiment, RunOptions::default()).unwrap();
    let same = run(
        &experiment,
        RunOptions {
            seed: Some(1),
            timing: false,
        },
    )
    .unwrap();
    let other = run(
        &experiment,
        RunOptions {
            seed: Some(2),
            timing: false,
        },
    )
    .unwrap();
    assert_eq!(csv_string(&base), csv_string(&same));
    assert_ne!(csv_string(&base), csv_string(&other));
    assert_eq!(base.table.header, other.table.header);
}

#[test]
fn numeric_failures_exit_with_three_and_are_recorded() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("outside.toml");
    // the region lies outside the classically allowed interval (-1, 1)
    let text = SMALL_SWEEP
        .replace("variance-sweep", "entropy-sweep")
        .replace("a = -0.5, b = 0.5", "a = 1.3, b = 1.45");
    std::fs::write(&config, text).unwrap();
    let out = fbl(&["run", config.to_str().unwrap(), "--formats", "json"], dir.path());
    assert_eq!(out.status.code(), Some(3));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("entropy-sweep.json")).unwrap()).unwrap();
    let failures = manifest["failures"].as_array().unwrap();
    assert_eq!(failures.len(), 1);
    assert_eq!(failures[0]["stage"], "prediction");
}
