use std::fs;
use std::path::Path;

use aircsc::pipeline::{run, run_stages, Manifest, RunConfig, Stage};
use aircsc::synth::{generate, DgpConfig};
use aircsc::Error;

fn bundle(dir: &Path) {
    let cfg = DgpConfig {
        seed: 21,
        markets: 40,
        spokes: 12,
        periods: 3,
        ..DgpConfig::default()
    };
    generate(&cfg).unwrap().0.write_to(dir).unwrap();
}

#[test]
fn full_run_records_every_stage() {
    let dir = tempfile::tempdir().unwrap();
    bundle(&dir.path().join("in"));
    let cfg = RunConfig::for_bundle(&dir.path().join("in"), &dir.path().join("out"));
    let m = run(&cfg).unwrap();
    let names: Vec<&str> = Stage::ALL.iter().map(|s| s.as_str()).collect();
    assert_eq!(m.stages, names);
    assert!(m.failed.is_none());
    for e in m.entries.iter().filter(|e| e.role == "output") {
        assert!(dir.path().join("out").join(&e.file).is_file(), "{}", e.file);
    }
    for f in ["sample.csv", "metrics.csv", "instruments.csv", "coefficients.csv", "first_stages.csv", "report.txt"] {
        assert!(m.entries.iter().any(|e| e.file == f && e.role == "output"), "{f} not in manifest");
    }
    let saved = Manifest::load(&dir.path().join("out")).unwrap().unwrap();
    assert_eq!(saved, m);
    let report = fs::read_to_string(dir.path().join("out/report.txt")).unwrap();
    assert!(report.contains("control function") && report.contains("cluster F"));
}

#[test]
fn missing_weather_stops_at_instruments() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("in");
    bundle(&input);
    fs::remove_file(input.join("weather.csv")).unwrap();
    let out = dir.path().join("out");
    let cfg = RunConfig::for_bundle(&input, &out);
    let err = run(&cfg).unwrap_err();
    match &err {
        Error::Stage { stage, source } => {
            assert_eq!(stage, "instruments");
            assert!(matches!(**source, Error::MissingFile(ref p) if p.ends_with("weather.csv")), "{source}");
        }
        other => panic!("unexpected error {other}"),
    }
    let m = Manifest::load(&out).unwrap().unwrap();
    assert_eq!(m.failed.as_deref(), Some("instruments"));
    assert_eq!(m.stages, ["ingest", "build-sample", "panel", "metrics"]);
    assert!(!out.join("instruments.csv").exists());
    assert!(out.join("metrics.csv").is_file());

    // Least squares needs no weather.
    let mut ols = cfg.clone();
    let mut spec = aircsc::pipeline::baseline_spec();
    spec.estimator = aircsc::econometrics::Estimator::FeOls;
    ols.specs = vec![spec];
    let m = run_stages(&ols, &[Stage::Instruments, Stage::Estimate]).unwrap();
    assert!(m.failed.is_none());
    assert!(out.join("coefficients.csv").is_file());
}

#[test]
fn configuration_paths_are_relative_to_the_file() {
    let dir = tempfile::tempdir().unwrap();
    bundle(&dir.path().join("in"));
    let toml = r#"
out = "results"
seed = 4

[inputs]
coupons = "in/coupons.csv"
tickets = "in/tickets.csv"
markets = "in/markets.csv"
cpi = "in/cpi.csv"

[sample]
quarters = [2, 3]

[[specs]]
name = "ols"
endogenous = ["csc"]
estimator = "fe_ols"
"#;
    let path = dir.path().join("run.toml");
    fs::write(&path, toml).unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert_eq!(cfg.out, dir.path().join("results"));
    assert_eq!(cfg.inputs.coupons, dir.path().join("in/coupons.csv"));
    assert_eq!(cfg.sample.quarters, vec![2, 3]);
    cfg.validate().unwrap();

    fs::write(&path, toml.replace("seed = 4", "seed = 4\nsede = 5")).unwrap();
    assert!(matches!(RunConfig::load(&path), Err(Error::Config(_))));

    fs::write(&path, toml.replace("in/cpi.csv", "in/nope.csv")).unwrap();
    let cfg = RunConfig::load(&path).unwrap();
    assert!(matches!(cfg.validate(), Err(Error::MissingFile(_))));
}
