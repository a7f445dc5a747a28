//! Fixed-effects least squares and the control-function estimator with a
//! cluster bootstrap.

pub mod algebra;
pub mod bootstrap;
pub mod design;
pub mod effects;
pub mod spec;
pub mod within;

use nalgebra::DMatrix;

pub use design::{analysis_rows, build_design, AnalysisRow, PanelDesignMatrix};
pub use effects::{effects_table, iqr_effect};
pub use spec::{
    BootstrapConfig, BootstrapSummary, ClusterUnit, CoefKind, Coefficient, Dependent, EffectRow, Estimator, FeDim,
    FirstStage, InteractionBins, RegressionFit, RegressionSpec, SeKind,
};
pub use within::{FixedEffects, WithinOptions};

use crate::error::Result;

/// Normal critical value for the reported confidence intervals.
pub const Z95: f64 = 1.96;

/// Design columns after removing the fixed effects, with the squared
/// norms they had before.
pub fn demeaned(pdm: &PanelDesignMatrix, opts: WithinOptions) -> Result<(DMatrix<f64>, Vec<f64>, usize)> {
    let mut x = pdm.data.clone();
    let reference = x.column_iter().map(|c| c.norm_squared()).collect();
    let sweeps = within::within_transform(&mut x, &pdm.fe, opts)?;
    Ok((x, reference, sweeps))
}

fn first_stage_reports(
    spec: &RegressionSpec,
    pdm: &PanelDesignMatrix,
    x: &DMatrix<f64>,
    first: &[algebra::FirstStageSolution],
) -> Result<Vec<FirstStage>> {
    let absorbed = pdm.fe.absorbed_df();
    first
        .iter()
        .enumerate()
        .map(|(e, fs)| {
            let f = algebra::first_stage_f(x, fs, absorbed, &pdm.clusters)?;
            Ok(FirstStage {
                variable: spec.endogenous[e].clone(),
                instruments: fs.w[..fs.n_instruments].iter().map(|&j| pdm.layout.names[j].clone()).collect(),
                f_classical: f.classical,
                f_robust: f.robust,
                f_cluster: f.cluster,
                capped: f.capped,
                n: pdm.n(),
            })
        })
        .collect()
}

/// First stages only, without the outcome equation.
pub fn first_stages(spec: &RegressionSpec, rows: &[AnalysisRow]) -> Result<Vec<FirstStage>> {
    let mut spec = spec.clone();
    spec.estimator = Estimator::ControlFunction;
    let pdm = build_design(&spec, rows)?;
    let (x, reference, _) = demeaned(&pdm, WithinOptions::default())?;
    let gram = x.transpose() * &x;
    let first = (0..spec.endogenous.len())
        .map(|e| algebra::first_stage(&gram, &reference, &pdm.layout, e))
        .collect::<Result<Vec<_>>>()?;
    first_stage_reports(&spec, &pdm, &x, &first)
}

/// Estimates one specification. `seed` drives the bootstrap unless the
/// specification carries its own.
pub fn estimate(spec: &RegressionSpec, rows: &[AnalysisRow], seed: u64) -> Result<RegressionFit> {
    estimate_with(spec, rows, seed, WithinOptions::default())
}

pub fn estimate_with(spec: &RegressionSpec, rows: &[AnalysisRow], seed: u64, opts: WithinOptions) -> Result<RegressionFit> {
    let pdm = build_design(spec, rows)?;
    let (x, reference, sweeps) = demeaned(&pdm, opts)?;
    let gram = x.transpose() * &x;
    let absorbed = pdm.fe.absorbed_df();
    let sol = algebra::solve(&gram, &reference, &pdm.layout, spec.estimator)?;
    let inf = algebra::inference(&x, &sol, absorbed)?;

    let first_stages = first_stage_reports(spec, &pdm, &x, &sol.first)?;

    let seed = spec.bootstrap.seed.unwrap_or(seed);
    let use_bootstrap = spec.estimator == Estimator::ControlFunction && spec.bootstrap.replicates > 0;
    let (boot_se, summary) = if use_bootstrap {
        let reps = bootstrap::bootstrap(&pdm, spec.estimator, &spec.bootstrap, seed, opts)?;
        log::info!(
            "{}: {} bootstrap replicates, {} redraws",
            spec.name,
            reps.draws.len(),
            reps.redraws
        );
        let summary = BootstrapSummary {
            replicates: reps.draws.len(),
            seed,
            redraws: reps.redraws,
            cluster: spec.bootstrap.cluster,
        };
        (Some(reps.standard_errors()), Some(summary))
    } else {
        (None, None)
    };

    let coefficients = (0..sol.reported)
        .map(|j| {
            let estimate = sol.beta[j];
            let (se, se_kind) = match &boot_se {
                Some(s) => (s[j], SeKind::Bootstrap),
                None => (inf.robust[j], SeKind::Robust),
            };
            Coefficient {
                name: sol.names[j].clone(),
                kind: sol.kinds[j],
                estimate,
                se,
                se_kind,
                ci_low: estimate - Z95 * se,
                ci_high: estimate + Z95 * se,
                robust_se: inf.robust[j],
            }
        })
        .collect();

    let mut fit = RegressionFit {
        name: spec.name.clone(),
        estimator: spec.estimator,
        dependent: spec.dependent,
        n: pdm.n(),
        clusters: pdm.n_clusters(),
        fe_groups: pdm
            .fe_dims
            .iter()
            .zip(pdm.fe.groups())
            .map(|(d, g)| (d.as_str().to_string(), g))
            .collect(),
        dropped_missing: pdm.dropped_missing,
        dropped_singletons: pdm.dropped_singletons,
        r2_within: inf.r2_within,
        sweeps,
        coefficients,
        first_stages,
        bootstrap: summary,
        effects: Vec::new(),
    };
    fit.effects = effects_table(spec, &fit, &pdm)?;
    Ok(fit)
}
