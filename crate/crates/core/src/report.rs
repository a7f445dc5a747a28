//! Text and CSV renderings of estimation results.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::econometrics::{CoefKind, EffectRow, Estimator, RegressionFit, SeKind};
use crate::ingest::Table;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRow {
    pub spec: String,
    pub variable: String,
    pub kind: CoefKind,
    pub estimate: f64,
    pub se: f64,
    pub se_kind: SeKind,
    pub stars: String,
    pub ci_low: f64,
    pub ci_high: f64,
    pub robust_se: f64,
}

impl Table for CoefficientRow {
    const NAME: &'static str = "coefficients.csv";
    const COLUMNS: &'static [&'static str] = &[
        "spec", "variable", "kind", "estimate", "se", "se_kind", "stars", "ci_low", "ci_high", "robust_se",
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStageRow {
    pub spec: String,
    pub variable: String,
    pub instruments: String,
    pub f_classical: f64,
    pub f_robust: f64,
    pub f_cluster: f64,
    pub capped: bool,
    pub n: usize,
}

impl Table for FirstStageRow {
    const NAME: &'static str = "first_stages.csv";
    const COLUMNS: &'static [&'static str] =
        &["spec", "variable", "instruments", "f_classical", "f_robust", "f_cluster", "capped", "n"];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectCsvRow {
    pub spec: String,
    pub variable: String,
    pub bin: String,
    pub beta: f64,
    pub iqr: f64,
    pub effect_pct: f64,
    pub exact_pct: f64,
}

impl Table for EffectCsvRow {
    const NAME: &'static str = "effects.csv";
    const COLUMNS: &'static [&'static str] = &["spec", "variable", "bin", "beta", "iqr", "effect_pct", "exact_pct"];
}

pub fn coefficient_rows(fits: &[RegressionFit]) -> Vec<CoefficientRow> {
    fits.iter()
        .flat_map(|f| {
            f.coefficients.iter().map(move |c| CoefficientRow {
                spec: f.name.clone(),
                variable: c.name.clone(),
                kind: c.kind,
                estimate: c.estimate,
                se: c.se,
                se_kind: c.se_kind,
                stars: c.stars().to_string(),
                ci_low: c.ci_low,
                ci_high: c.ci_high,
                robust_se: c.robust_se,
            })
        })
        .collect()
}

pub fn first_stage_rows(fits: &[RegressionFit]) -> Vec<FirstStageRow> {
    fits.iter()
        .flat_map(|f| {
            f.first_stages.iter().map(move |s| FirstStageRow {
                spec: f.name.clone(),
                variable: s.variable.clone(),
                instruments: s.instruments.join("|"),
                f_classical: s.f_classical,
                f_robust: s.f_robust,
                f_cluster: s.f_cluster,
                capped: s.capped,
                n: s.n,
            })
        })
        .collect()
}

pub fn effect_rows(fits: &[RegressionFit]) -> Vec<EffectCsvRow> {
    fits.iter()
        .flat_map(|f| {
            f.effects.iter().map(move |e| EffectCsvRow {
                spec: f.name.clone(),
                variable: e.variable.clone(),
                bin: e.bin.clone(),
                beta: e.beta,
                iqr: e.iqr,
                effect_pct: e.effect_pct,
                exact_pct: e.exact_pct,
            })
        })
        .collect()
}

fn estimator_label(e: Estimator) -> &'static str {
    match e {
        Estimator::FeOls => "fixed-effects OLS",
        Estimator::ControlFunction => "control function",
    }
}

fn se_label(k: SeKind) -> &'static str {
    match k {
        SeKind::Bootstrap => "cluster bootstrap",
        SeKind::Robust => "heteroskedasticity-robust",
        SeKind::Classical => "classical",
    }
}

/// Variables as rows, bins as columns, percent effects in the cells.
pub fn effects_grid(rows: &[EffectRow]) -> String {
    let mut bins: Vec<&str> = Vec::new();
    let mut vars: Vec<&str> = Vec::new();
    for r in rows {
        if !bins.contains(&r.bin.as_str()) {
            bins.push(&r.bin);
        }
        if !vars.contains(&r.variable.as_str()) {
            vars.push(&r.variable);
        }
    }
    let width = vars.iter().map(|v| v.len()).max().unwrap_or(0).max("variable".len());
    let mut out = format!("{:<width$}", "variable");
    for b in &bins {
        let _ = write!(out, "  {:>12}", b);
    }
    out.push('\n');
    for v in &vars {
        let _ = write!(out, "{:<width$}", v);
        for b in &bins {
            match rows.iter().find(|r| r.variable == *v && r.bin == *b) {
                Some(r) => {
                    let _ = write!(out, "  {:>11.2}%", r.effect_pct);
                }
                None => {
                    let _ = write!(out, "  {:>12}", "");
                }
            }
        }
        out.push('\n');
    }
    out
}

/// One block per fit: coefficients with stars and standard errors, the
/// first-stage F statistics and the effects grid.
pub fn render_text(fits: &[RegressionFit]) -> String {
    let mut out = String::new();
    for (i, f) in fits.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(
            out,
            "== {} : {} on {} ==",
            f.name,
            estimator_label(f.estimator),
            f.dependent.as_str()
        );
        let groups: Vec<String> = f.fe_groups.iter().map(|(d, g)| format!("{d} {g}")).collect();
        let _ = writeln!(
            out,
            "observations {}  clusters {}  fixed effects: {}  within R2 {:.4}",
            f.n,
            f.clusters,
            groups.join(", "),
            f.r2_within
        );
        if f.dropped_missing + f.dropped_singletons > 0 {
            let _ = writeln!(
                out,
                "dropped: {} with missing values, {} singletons",
                f.dropped_missing, f.dropped_singletons
            );
        }
        let width = f.coefficients.iter().map(|c| c.name.len()).max().unwrap_or(0).max(8);
        let _ = writeln!(out, "{:<width$}  {:>14}  {:>12}", "variable", "estimate", "s.e.");
        for c in &f.coefficients {
            let est = format!("{:.4}{}", c.estimate, c.stars());
            let _ = writeln!(out, "{:<width$}  {:>14}  {:>12}", c.name, est, format!("({:.4})", c.se));
        }
        if let Some(c) = f.coefficients.first() {
            let mut note = format!("standard errors: {}", se_label(c.se_kind));
            if let Some(b) = &f.bootstrap {
                let _ = write!(note, " ({} replicates, seed {}, {} redraws)", b.replicates, b.seed, b.redraws);
            }
            let _ = writeln!(out, "{note}");
        }
        let _ = writeln!(out, "*** p<0.01, ** p<0.05, * p<0.1");

        if !f.first_stages.is_empty() {
            let _ = writeln!(out, "-- first stage --");
            let w = f.first_stages.iter().map(|s| s.variable.len()).max().unwrap_or(0).max(8);
            let _ = writeln!(
                out,
                "{:<w$}  {:>12}  {:>12}  {:>12}  {:>11}",
                "variable", "F", "robust F", "cluster F", "instruments"
            );
            for s in &f.first_stages {
                let cap = if s.capped { " (capped)" } else { "" };
                let _ = writeln!(
                    out,
                    "{:<w$}  {:>12.2}  {:>12.2}  {:>12.2}  {:>11}{cap}",
                    s.variable,
                    s.f_classical,
                    s.f_robust,
                    s.f_cluster,
                    s.instruments.len()
                );
            }
        }
        if !f.effects.is_empty() {
            let _ = writeln!(out, "-- price effect of an interquartile-range increase --");
            out.push_str(&effects_grid(&f.effects));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn effect(var: &str, bin: &str, pct: f64) -> EffectRow {
        EffectRow {
            variable: var.into(),
            bin: bin.into(),
            beta: pct / 100.0,
            iqr: 1.0,
            effect_pct: pct,
            exact_pct: pct,
        }
    }

    #[test]
    fn empty_grid_has_header_only() {
        assert_eq!(effects_grid(&[]), "variable\n");
    }

    #[test]
    fn grid_places_bins_as_columns() {
        let rows = [
            effect("csc", "1998-2003", 1.0),
            effect("csc", "2004-2009", 2.5),
            effect("mmc", "1998-2003", -3.0),
            effect("mmc", "2004-2009", 4.0),
            effect("csc", "2010-2016", 1.75),
        ];
        let g = effects_grid(&rows);
        let lines: Vec<&str> = g.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].contains("1998-2003") && lines[0].ends_with("2010-2016"));
        assert!(lines[1].starts_with("csc") && lines[1].ends_with("1.75%"));
        assert!(lines[2].contains("-3.00%") && lines[2].trim_end().ends_with("4.00%"));
    }
}
