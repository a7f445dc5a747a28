use std::collections::BTreeMap;

use aircsc::instruments::InstrumentConfig;
use aircsc::pipeline::analyze_bundle;
use aircsc::sample::{DropRecord, SampleConfig};
use aircsc::synth::{generate, DgpConfig};
use aircsc::Error;

fn small() -> DgpConfig {
    DgpConfig {
        seed: 11,
        markets: 60,
        spokes: 15,
        periods: 4,
        inject_violations: true,
        ..DgpConfig::default()
    }
}

#[test]
fn same_seed_same_bytes() {
    let cfg = small();
    let (a, ta) = generate(&cfg).unwrap();
    let (b, tb) = generate(&cfg).unwrap();
    assert_eq!(a, b);
    assert_eq!(ta, tb);
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    a.write_to(d1.path()).unwrap();
    b.write_to(d2.path()).unwrap();
    for f in aircsc::synth::BUNDLE_FILES {
        let x = std::fs::read(d1.path().join(f)).unwrap();
        let y = std::fs::read(d2.path().join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
    let (c, _) = generate(&DgpConfig { seed: 12, ..cfg }).unwrap();
    assert_ne!(a.tickets, c.tickets);
}

#[test]
fn pipeline_measures_what_was_planted() {
    let (bundle, truth) = generate(&small()).unwrap();
    let a = analyze_bundle(&bundle, &SampleConfig::default(), &InstrumentConfig::default()).unwrap();

    let mut dropped: Vec<DropRecord> = a.sample.dropped.clone();
    dropped.sort_by(|x, y| (&x.itinerary_id, x.direction).cmp(&(&y.itinerary_id, y.direction)));
    assert_eq!(dropped, truth.expected_drops);
    assert!(a.sample.rejects.is_empty(), "{:?}", &a.sample.rejects[..1]);

    let (rt, half) = truth.roundtrip.clone().unwrap();
    let halves: Vec<_> = a.observations.iter().filter(|o| o.itinerary_id == rt).collect();
    assert_eq!(halves.len(), 2);
    for h in halves {
        assert!((h.fare - half).abs() < 1e-9 * half);
    }

    let rows: BTreeMap<_, _> = a.rows.iter().map(|r| ((r.carrier.clone(), r.market.clone(), r.period), r)).collect();
    for t in &truth.cells {
        let r = rows[&(t.carrier.clone(), t.market.clone(), t.period)];
        let close = |x: f64, y: f64, what: &str| assert!((x - y).abs() < 1e-9, "{what}: {x} vs {y}");
        close(r.value("log_price").unwrap(), t.log_price, "log price");
        close(r.value("regional_share").unwrap(), t.regional_share, "share");
        close(r.value("csc").unwrap(), t.csc, "csc");
        close(r.value("mmc").unwrap(), t.mmc, "mmc");
        close(r.network_origin, t.network_origin, "network origin");
        close(r.network_destination, t.network_destination, "network destination");
        for iv in ["own_precipitation", "comp_min_temperature", "regional_network_iv", "net_origin_sum"] {
            assert!(r.value(iv).is_some(), "{iv} missing");
        }
    }
}

#[test]
fn impossible_configurations_are_explained() {
    let err = generate(&DgpConfig {
        markets: 10_000,
        ..DgpConfig::default()
    })
    .unwrap_err();
    assert!(matches!(err, Error::Infeasible(ref m) if m.contains("10000 markets")), "{err}");

    let err = generate(&DgpConfig {
        background_airports: 3,
        ..DgpConfig::default()
    })
    .unwrap_err();
    assert!(matches!(err, Error::Infeasible(ref m) if m.contains("background")), "{err}");

    assert!(generate(&DgpConfig {
        endogeneity: 1.0,
        ..DgpConfig::default()
    })
    .is_err());
}

#[test]
fn least_squares_is_unbiased_without_endogeneity() {
    use aircsc::econometrics::{estimate, Estimator, RegressionSpec};
    let cfg = DgpConfig {
        seed: 5,
        endogeneity: 0.0,
        ..DgpConfig::default()
    };
    let (bundle, truth) = generate(&cfg).unwrap();
    let a = analyze_bundle(&bundle, &SampleConfig::default(), &InstrumentConfig::default()).unwrap();
    let core: std::collections::BTreeSet<_> = truth.cells.iter().map(|c| (&c.carrier, &c.market, c.period)).collect();
    let rows: Vec<_> = a.rows.iter().filter(|r| core.contains(&(&r.carrier, &r.market, r.period))).cloned().collect();
    let mut spec = RegressionSpec::new("ols", &["csc", "regional_share", "mmc"]);
    spec.estimator = Estimator::FeOls;
    let fit = estimate(&spec, &rows, 0).unwrap();
    for (v, beta) in [("csc", cfg.beta_csc), ("regional_share", cfg.beta_share), ("mmc", cfg.beta_mmc)] {
        let c = fit.coefficient(v).unwrap();
        assert!((c.estimate - beta).abs() < 2.0 * c.se, "{v}: {} ({}) vs {beta}", c.estimate, c.se);
    }
}
