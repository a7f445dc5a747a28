//! Price effects of an interquartile-range move in a regressor.

use super::design::PanelDesignMatrix;
use super::spec::{EffectRow, RegressionFit, RegressionSpec};
use crate::error::Result;
use crate::stats;

/// (approximate, exact) percentage change in the outcome: β·Δ·100 and
/// (exp(β·Δ) − 1)·100.
pub fn iqr_effect(beta: f64, delta: f64) -> (f64, f64) {
    (beta * delta * 100.0, (beta * delta).exp_m1() * 100.0)
}

/// One row per endogenous variable and bin. The coefficient of a later
/// bin is the base coefficient plus its interaction.
pub fn effects_table(spec: &RegressionSpec, fit: &RegressionFit, pdm: &PanelDesignMatrix) -> Result<Vec<EffectRow>> {
    let mut out = Vec::new();
    for (e, var) in spec.endogenous.iter().enumerate() {
        let Some(base) = fit.coefficient(var) else { continue };
        let col = pdm.layout.endog[e];
        let values = |keep: &dyn Fn(i32) -> bool| -> Vec<f64> {
            (0..pdm.n()).filter(|&i| keep(pdm.years[i])).map(|i| pdm.data[(i, col)]).collect()
        };
        let supplied = spec.iqr.get(var);
        let mut push = |bin: &str, beta: f64, sample: Vec<f64>| {
            let iqr = supplied
                .and_then(|m| m.get(bin))
                .copied()
                .or_else(|| stats::iqr(&sample))
                .unwrap_or(f64::NAN);
            let (effect_pct, exact_pct) = iqr_effect(beta, iqr);
            out.push(EffectRow {
                variable: var.clone(),
                bin: bin.to_string(),
                beta,
                iqr,
                effect_pct,
                exact_pct,
            });
        };
        match spec.interactions.iter().find(|ib| ib.variable == *var) {
            None => push("all", base.estimate, values(&|_| true)),
            Some(ib) => {
                for (k, b) in ib.bins.iter().enumerate() {
                    let beta = if k == 0 {
                        base.estimate
                    } else {
                        base.estimate + fit.coefficient(&ib.column(b)).map_or(f64::NAN, |c| c.estimate)
                    };
                    push(&b.label, beta, values(&|y| b.contains(y)));
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_computed() {
        let (a, x) = iqr_effect(0.2, 0.5);
        assert!((a - 10.0).abs() < 1e-12);
        assert!((x - 10.517091807564771).abs() < 1e-9);
        let (a, x) = iqr_effect(-0.3, 0.4);
        assert!((a + 12.0).abs() < 1e-12);
        assert!((x + 11.307956328284252).abs() < 1e-9);
    }
}
