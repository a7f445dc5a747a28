use std::collections::BTreeMap;

use aircsc::econometrics::{
    estimate, first_stages, AnalysisRow, ClusterUnit, Estimator, RegressionSpec,
};
use aircsc::{Carrier, Error, Market, Period};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

const IVS: [&str; 3] = ["comp_precipitation", "net_origin_sum", "own_snowfall"];

struct Sim {
    rows: Vec<AnalysisRow>,
    carrier: Vec<usize>,
    market: Vec<usize>,
    year: Vec<usize>,
}

fn z(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Unbalanced panel: every market carries 2-4 of 5 carriers each year.
fn simulate(seed: u64, markets: usize, years: usize) -> Sim {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Sim {
        rows: Vec::new(),
        carrier: Vec::new(),
        market: Vec::new(),
        year: Vec::new(),
    };
    let mfe: Vec<f64> = (0..markets).map(|_| z(&mut rng)).collect();
    for m in 0..markets {
        for t in 0..years {
            let k = rng.random_range(2..=4);
            let mut carriers: Vec<usize> = (0..5).collect();
            for i in 0..k {
                let j = rng.random_range(i..5);
                carriers.swap(i, j);
            }
            for &c in &carriers[..k] {
                let ivs: Vec<f64> = (0..3).map(|_| z(&mut rng)).collect();
                let u = z(&mut rng);
                let csc = 0.5 + 0.6 * ivs[0] + 0.3 * ivs[1] + 0.5 * u + 0.2 * z(&mut rng) + 0.1 * mfe[m];
                let share = 0.4 * ivs[2] - 0.4 * ivs[1] + 0.4 * u + 0.3 * z(&mut rng);
                let net = z(&mut rng) + 0.05 * t as f64;
                let net_d = z(&mut rng);
                let lp = 5.0 + mfe[m] + 0.1 * c as f64 + 0.03 * t as f64 + 0.2 * csc - 0.3 * share + 0.1 * net
                    - 0.05 * net_d
                    + u
                    + 0.3 * z(&mut rng);
                let mut row = AnalysisRow::new(
                    Carrier::new(format!("C{c}")),
                    Market::new(format!("A{m:02}").as_str(), "HUB"),
                    Period::new(2000 + t as i32, 2),
                    lp.exp(),
                    100,
                );
                row.set("csc", csc).unwrap();
                row.set("regional_share", share).unwrap();
                row.set("network_origin", net).unwrap();
                row.set("network_destination", net_d).unwrap();
                for (name, v) in IVS.iter().zip(&ivs) {
                    row.set(name, *v).unwrap();
                }
                sim.rows.push(row);
                sim.carrier.push(c);
                sim.market.push(m);
                sim.year.push(t);
            }
        }
    }
    sim
}

fn spec(estimator: Estimator) -> RegressionSpec {
    let mut s = RegressionSpec::new("test", &["csc", "regional_share"]);
    s.estimator = estimator;
    s.bootstrap.replicates = 0;
    for v in ["csc", "regional_share"] {
        s.iv_map.insert(v.into(), IVS.iter().map(|s| s.to_string()).collect());
    }
    s
}

/// Markets, carriers after the first, years after the first.
fn dummies(sim: &Sim) -> DMatrix<f64> {
    let nm = sim.market.iter().max().unwrap() + 1;
    let nc = sim.carrier.iter().max().unwrap() + 1;
    let ny = sim.year.iter().max().unwrap() + 1;
    let n = sim.rows.len();
    let mut d = DMatrix::zeros(n, nm + nc - 1 + ny - 1);
    for i in 0..n {
        d[(i, sim.market[i])] = 1.0;
        if sim.carrier[i] > 0 {
            d[(i, nm + sim.carrier[i] - 1)] = 1.0;
        }
        if sim.year[i] > 0 {
            d[(i, nm + nc - 1 + sim.year[i] - 1)] = 1.0;
        }
    }
    d
}

fn columns(sim: &Sim, names: &[&str]) -> DMatrix<f64> {
    DMatrix::from_fn(sim.rows.len(), names.len(), |i, j| sim.rows[i].value(names[j]).unwrap())
}

fn hstack(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.nrows(), a.ncols() + b.ncols());
    m.view_mut((0, 0), a.shape()).copy_from(a);
    m.view_mut((0, a.ncols()), b.shape()).copy_from(b);
    m
}

fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    x.clone().svd(true, true).solve(y, 1e-12).unwrap()
}

#[test]
fn absorbed_effects_match_dummy_regression() {
    let sim = simulate(1, 40, 6);
    let fit = estimate(&spec(Estimator::FeOls), &sim.rows, 0).unwrap();
    assert_eq!(fit.n, sim.rows.len());
    let regs = ["csc", "regional_share", "network_origin", "network_destination"];
    let x = hstack(&columns(&sim, &regs), &dummies(&sim));
    let y = columns(&sim, &["log_price"]).column(0).into_owned();
    let b = ols(&x, &y);
    for (j, name) in regs.iter().enumerate() {
        let c = fit.coefficient(name).unwrap();
        assert!((c.estimate - b[j]).abs() < 1e-8, "{name}: {} vs {}", c.estimate, b[j]);
    }

    // HC1 with the absorbed levels counted as parameters
    let e = &y - &x * &b;
    let n = x.nrows() as f64;
    let k = x.ncols() as f64;
    let xx_inv = (x.transpose() * &x).try_inverse().unwrap();
    let mut xe = x.clone();
    for (i, mut r) in xe.row_iter_mut().enumerate() {
        r *= e[i];
    }
    let v = &xx_inv * (xe.transpose() * &xe) * &xx_inv * (n / (n - k));
    for (j, name) in regs.iter().enumerate() {
        let se = v[(j, j)].sqrt();
        let c = fit.coefficient(name).unwrap();
        assert!((c.robust_se - se).abs() < 1e-8 * se.max(1.0), "{name}: {} vs {se}", c.robust_se);
    }
}

#[test]
fn control_function_equals_two_stage_least_squares() {
    let sim = simulate(2, 40, 6);
    let fit = estimate(&spec(Estimator::ControlFunction), &sim.rows, 0).unwrap();
    let endog = ["csc", "regional_share"];
    let exog = ["network_origin", "network_destination"];
    let d = dummies(&sim);
    let controls = hstack(&columns(&sim, &exog), &d);
    let x = hstack(&columns(&sim, &endog), &controls);
    let zm = hstack(&columns(&sim, &IVS), &controls);
    let y = columns(&sim, &["log_price"]).column(0).into_owned();
    let pz = &zm * (zm.transpose() * &zm).try_inverse().unwrap() * zm.transpose();
    let xhat = &pz * &x;
    let b = ols(&xhat, &y);
    for (j, name) in endog.iter().chain(&exog).enumerate() {
        let c = fit.coefficient(name).unwrap();
        assert!((c.estimate - b[j]).abs() < 1e-7, "{name}: {} vs {}", c.estimate, b[j]);
    }
    assert!(fit.coefficient("residual(csc)").is_some());
}

#[test]
fn first_stage_f_matches_restricted_regression() {
    let sim = simulate(3, 30, 5);
    let fs = first_stages(&spec(Estimator::ControlFunction), &sim.rows).unwrap();
    let d = dummies(&sim);
    let controls = hstack(&columns(&sim, &["network_origin", "network_destination"]), &d);
    let full = hstack(&columns(&sim, &IVS), &controls);
    for (e, var) in ["csc", "regional_share"].iter().enumerate() {
        let y = columns(&sim, &[var]).column(0).into_owned();
        let rss = |x: &DMatrix<f64>| (&y - x * ols(x, &y)).norm_squared();
        let (ru, rr) = (rss(&full), rss(&controls));
        let n = y.len() as f64;
        let df = n - full.ncols() as f64;
        let f = ((rr - ru) / 3.0) / (ru / df);
        assert_eq!(fs[e].variable, *var);
        assert!((fs[e].f_classical - f).abs() < 1e-6 * f, "{} vs {f}", fs[e].f_classical);
        assert!(!fs[e].capped);
    }
}

#[test]
fn exact_first_stage_is_capped() {
    let mut sim = simulate(4, 20, 4);
    for r in &mut sim.rows {
        let v = 2.0 * r.value("comp_precipitation").unwrap() - r.value("net_origin_sum").unwrap()
            + 0.5 * r.network_origin;
        r.set("csc", v).unwrap();
    }
    let fs = first_stages(&spec(Estimator::ControlFunction), &sim.rows).unwrap();
    assert!(fs[0].capped);
    assert_eq!(fs[0].f_classical, 1e12);
    assert!(!fs[1].capped);
}

#[test]
fn collinear_control_is_named() {
    let mut sim = simulate(5, 20, 4);
    for r in &mut sim.rows {
        r.network_destination = 2.0 * r.network_origin;
    }
    match estimate(&spec(Estimator::FeOls), &sim.rows, 0) {
        Err(Error::RankDeficient { columns }) => assert_eq!(columns, ["network_destination"]),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

#[test]
fn regressor_absorbed_by_effects_is_named() {
    let mut sim = simulate(6, 20, 4);
    for (r, &m) in sim.rows.iter_mut().zip(&sim.market) {
        r.network_origin = m as f64 * 0.7;
    }
    match estimate(&spec(Estimator::FeOls), &sim.rows, 0) {
        Err(Error::RankDeficient { columns }) => assert_eq!(columns, ["network_origin"]),
        other => panic!("expected rank deficiency, got {other:?}"),
    }
}

fn boot_spec(seed: u64) -> RegressionSpec {
    let mut s = spec(Estimator::ControlFunction);
    s.bootstrap.replicates = 100;
    s.bootstrap.seed = Some(seed);
    s
}

#[test]
fn bootstrap_is_reproducible_across_thread_counts() {
    let sim = simulate(7, 30, 5);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| estimate(&boot_spec(11), &sim.rows, 0).unwrap())
    };
    let a = run(1);
    let b = run(3);
    assert_eq!(a, b);
    let c = estimate(&boot_spec(12), &sim.rows, 0).unwrap();
    assert_ne!(a.coefficients[0].se, c.coefficients[0].se);
    assert!(a.coefficients.iter().all(|c| c.se > 0.0 && c.se.is_finite()));
}

#[test]
fn bootstrap_ignores_cluster_labels() {
    let sim = simulate(8, 30, 5);
    let a = estimate(&boot_spec(3), &sim.rows, 0).unwrap();
    let renamed: Vec<AnalysisRow> = sim
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.market = Market::new(format!("X{}", r.market.origin).as_str(), "ZZZ");
            r
        })
        .collect();
    let b = estimate(&boot_spec(3), &renamed, 0).unwrap();
    for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
        assert_eq!(x.se, y.se);
    }
}

#[test]
fn observation_bootstrap_runs() {
    let sim = simulate(9, 15, 4);
    let mut s = boot_spec(1);
    s.bootstrap.cluster = ClusterUnit::Observation;
    let fit = estimate(&s, &sim.rows, 0).unwrap();
    assert!(fit.coefficients.iter().all(|c| c.se > 0.0 && c.se.is_finite()));
}

#[test]
fn interactions_and_effects() {
    let sim = simulate(10, 40, 6);
    let mut s = spec(Estimator::FeOls);
    s.interactions = vec![toml::from_str(
        r#"
        variable = "csc"
        bins = [{ label = "early", to = 2002 }, { label = "late", from = 2003 }]
        "#,
    )
    .unwrap()];
    s.iqr.insert("regional_share".into(), BTreeMap::from([("all".to_string(), 0.5)]));
    let fit = estimate(&s, &sim.rows, 0).unwrap();
    let base = fit.coefficient("csc").unwrap().estimate;
    let inter = fit.coefficient("csc x late").unwrap().estimate;
    let late = fit.effects.iter().find(|e| e.variable == "csc" && e.bin == "late").unwrap();
    assert!((late.beta - (base + inter)).abs() < 1e-12);
    let share = fit.effects.iter().find(|e| e.variable == "regional_share").unwrap();
    assert_eq!(share.iqr, 0.5);
    assert!((share.effect_pct - share.beta * 50.0).abs() < 1e-12);

    s.interactions[0].bins[1].from = Some(2010);
    s.interactions[0].bins[1].label = "empty".into();
    s.interactions[0].bins[0].to = Some(2009);
    assert!(matches!(estimate(&s, &sim.rows, 0), Err(Error::EmptyBin(_))));
}

#[test]
fn missing_values_and_singletons_are_dropped() {
    let mut sim = simulate(11, 20, 4);
    sim.rows[0].instruments.as_mut().unwrap().comp_precipitation = None;
    let mut lonely = sim.rows[1].clone();
    lonely.market = Market::new("QQQ", "HUB");
    sim.rows.push(lonely);
    let fit = estimate(&spec(Estimator::ControlFunction), &sim.rows, 0).unwrap();
    assert_eq!(fit.dropped_missing, 1);
    assert_eq!(fit.dropped_singletons, 1);
    let ols = estimate(&spec(Estimator::FeOls), &sim.rows, 0).unwrap();
    assert_eq!(ols.dropped_missing, 0);
}
