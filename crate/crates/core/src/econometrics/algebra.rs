//! Least squares and the control-function system expressed through the
//! cross-product matrix of the design columns, so that reweighted samples
//! only need a new cross-product.

use nalgebra::{Cholesky, DMatrix, DVector};

use super::design::Layout;
use super::spec::{CoefKind, Estimator, F_CAP};
use crate::error::{Error, Result};

/// Pivot ratio under which a column counts as a combination of earlier ones.
const COLLINEAR_TOL: f64 = 1e-11;

/// Positions (in `g`'s order) of columns that add nothing to the ones
/// before them. `reference[i]` is the squared norm that column `i` would
/// have before any projection; it stops columns wiped out by the fixed
/// effects from passing as fine.
pub fn collinear(g: &DMatrix<f64>, reference: &[f64]) -> Vec<usize> {
    let k = g.nrows();
    let mut l: Vec<Vec<f64>> = Vec::new();
    let mut accepted: Vec<usize> = Vec::new();
    let mut bad = Vec::new();
    for c in 0..k {
        let mut r = vec![0.0; accepted.len()];
        for (i, &a) in accepted.iter().enumerate() {
            let mut s = g[(a, c)];
            for j in 0..i {
                s -= l[i][j] * r[j];
            }
            r[i] = s / l[i][i];
        }
        let d = g[(c, c)] - r.iter().map(|x| x * x).sum::<f64>();
        let scale = reference[c].max(g[(c, c)]);
        if !(d > COLLINEAR_TOL * scale) {
            bad.push(c);
            continue;
        }
        let mut row = r;
        row.push(d.sqrt());
        l.push(row);
        accepted.push(c);
    }
    bad
}

fn sub(g: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    g.select_rows(idx).select_columns(idx)
}

fn chol(m: DMatrix<f64>, what: &str) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    Cholesky::new(m).ok_or_else(|| Error::Degenerate(format!("{what} cross-product is not positive definite")))
}

#[derive(Debug, Clone)]
pub struct FirstStageSolution {
    /// Regressor columns: instruments first, then controls.
    pub w: Vec<usize>,
    pub n_instruments: usize,
    pub pi: DVector<f64>,
    /// Residual as a combination of design columns.
    pub resid: DVector<f64>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub names: Vec<String>,
    pub kinds: Vec<CoefKind>,
    /// Design columns → regressors.
    pub c: DMatrix<f64>,
    pub beta: DVector<f64>,
    /// Regressors before the fixed-effect indicators.
    pub reported: usize,
    pub first: Vec<FirstStageSolution>,
}

fn unit(nb: usize, j: usize) -> DVector<f64> {
    let mut v = DVector::zeros(nb);
    v[j] = 1.0;
    v
}

fn check(g: &DMatrix<f64>, reference: &[f64], names: &[String]) -> Result<()> {
    let bad = collinear(g, reference);
    if bad.is_empty() {
        Ok(())
    } else {
        Err(Error::RankDeficient {
            columns: bad.into_iter().map(|i| names[i].clone()).collect(),
        })
    }
}

/// First stage of endogenous variable `e`: regress it on its instruments,
/// the exogenous columns and any indicators.
pub fn first_stage(g: &DMatrix<f64>, reference: &[f64], layout: &Layout, e: usize) -> Result<FirstStageSolution> {
    let nb = layout.width();
    let x = layout.endog[e];
    let ivs = &layout.iv_sets[e];
    let w: Vec<usize> = ivs.iter().chain(&layout.exog).chain(&layout.dummies).copied().collect();
    let gw = sub(g, &w);
    let refs: Vec<f64> = w.iter().map(|&j| reference[j]).collect();
    let names: Vec<String> = w.iter().map(|&j| layout.names[j].clone()).collect();
    check(&gw, &refs, &names)?;
    let gwx = DVector::from_iterator(w.len(), w.iter().map(|&j| g[(j, x)]));
    let pi = chol(gw, "first-stage")?.solve(&gwx);
    let mut resid = unit(nb, x);
    for (p, &j) in pi.iter().zip(&w) {
        resid[j] -= p;
    }
    Ok(FirstStageSolution {
        n_instruments: ivs.len(),
        w,
        pi,
        resid,
    })
}

/// Outcome equation, with first-stage residuals appended under the
/// control-function estimator.
pub fn solve(g: &DMatrix<f64>, reference: &[f64], layout: &Layout, estimator: Estimator) -> Result<Solution> {
    let nb = layout.width();
    let mut first = Vec::new();
    if estimator == Estimator::ControlFunction {
        for e in 0..layout.endog.len() {
            first.push(first_stage(g, reference, layout, e)?);
        }
    }
    let mut entries: Vec<(DVector<f64>, String, CoefKind, f64)> = Vec::new();
    let unit_entry = |j: usize, kind: CoefKind| (unit(nb, j), layout.names[j].clone(), kind, reference[j]);
    entries.extend(layout.endog.iter().map(|&j| unit_entry(j, CoefKind::Endogenous)));
    entries.extend(layout.inter.iter().map(|&j| unit_entry(j, CoefKind::Interaction)));
    for (e, fs) in first.iter().enumerate() {
        let x = layout.endog[e];
        entries.push((fs.resid.clone(), format!("residual({})", layout.names[x]), CoefKind::Residual, reference[x]));
    }
    entries.extend(layout.exog.iter().map(|&j| unit_entry(j, CoefKind::Exogenous)));
    let reported = entries.len();
    entries.extend(layout.dummies.iter().map(|&j| unit_entry(j, CoefKind::Exogenous)));
    let cols: Vec<DVector<f64>> = entries.iter().map(|e| e.0.clone()).collect();
    let names: Vec<String> = entries.iter().map(|e| e.1.clone()).collect();
    let kinds: Vec<CoefKind> = entries.iter().map(|e| e.2).collect();
    let refs: Vec<f64> = entries.iter().map(|e| e.3).collect();
    let c = DMatrix::from_columns(&cols);
    let gc = g * &c;
    let rr = c.transpose() * &gc;
    check(&rr, &refs, &names)?;
    let ry = gc.row(0).transpose();
    let beta = chol(rr, "outcome")?.solve(&ry);
    Ok(Solution {
        names,
        kinds,
        c,
        beta,
        reported,
        first,
    })
}

#[derive(Debug, Clone)]
pub struct Inference {
    pub classical: DVector<f64>,
    pub robust: DVector<f64>,
    pub r2_within: f64,
}

fn dof(n: usize, k: usize, absorbed: usize) -> Result<f64> {
    let used = k + absorbed;
    if n <= used {
        return Err(Error::Degenerate(format!("{n} observations for {used} parameters")));
    }
    Ok((n - used) as f64)
}

/// Classical and HC1 covariance of an OLS fit of `y` on `r`.
fn covariances(r: &DMatrix<f64>, e: &DVector<f64>, absorbed: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let n = r.nrows();
    let df = dof(n, r.ncols(), absorbed)?;
    let rr_inv = chol(r.transpose() * r, "regressor")?.inverse();
    let s2 = e.norm_squared() / df;
    let mut weighted = r.clone();
    for (i, mut row) in weighted.row_iter_mut().enumerate() {
        row *= e[i];
    }
    let meat = weighted.transpose() * &weighted;
    let robust = &rr_inv * meat * &rr_inv * (n as f64 / df);
    Ok((rr_inv * s2, robust))
}

/// Standard errors of the outcome equation from the demeaned design `x`.
pub fn inference(x: &DMatrix<f64>, sol: &Solution, absorbed: usize) -> Result<Inference> {
    let r = x * &sol.c;
    let y = x.column(0);
    let e = y - &r * &sol.beta;
    let (vc, vr) = covariances(&r, &e, absorbed)?;
    let yy = y.norm_squared();
    Ok(Inference {
        classical: vc.diagonal().map(f64::sqrt),
        robust: vr.diagonal().map(f64::sqrt),
        r2_within: if yy > 0.0 { 1.0 - e.norm_squared() / yy } else { 0.0 },
    })
}

fn wald(pi: &DVector<f64>, v: &DMatrix<f64>, q: usize) -> (f64, bool) {
    let b = pi.rows(0, q).into_owned();
    let vq = v.view((0, 0), (q, q)).into_owned();
    let f = match Cholesky::new(vq) {
        Some(c) => b.dot(&c.solve(&b)) / q as f64,
        None => f64::INFINITY,
    };
    if f.is_finite() && f <= F_CAP {
        (f, false)
    } else {
        (F_CAP, true)
    }
}

/// CR1 covariance with fixed effects nested in the clusters.
fn cluster_covariance(r: &DMatrix<f64>, e: &DVector<f64>, clusters: &[usize]) -> Result<DMatrix<f64>> {
    let (n, k) = (r.nrows(), r.ncols());
    let g = clusters.iter().max().map_or(0, |m| m + 1);
    if g < 2 || n <= k {
        return Err(Error::Degenerate(format!("{g} clusters and {n} observations for {k} regressors")));
    }
    let rr_inv = chol(r.transpose() * r, "regressor")?.inverse();
    let mut scores = DMatrix::zeros(g, k);
    for i in 0..n {
        let mut row = scores.row_mut(clusters[i]);
        row += r.row(i) * e[i];
    }
    let meat = scores.transpose() * &scores;
    let adj = g as f64 / (g - 1) as f64 * (n - 1) as f64 / (n - k) as f64;
    Ok(&rr_inv * meat * &rr_inv * adj)
}

/// Joint significance of the excluded instruments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FirstStageF {
    pub classical: f64,
    pub robust: f64,
    pub cluster: f64,
    pub capped: bool,
}

pub fn first_stage_f(
    x: &DMatrix<f64>,
    fs: &FirstStageSolution,
    absorbed: usize,
    clusters: &[usize],
) -> Result<FirstStageF> {
    let w = x.select_columns(&fs.w);
    let v = x * &fs.resid;
    let (vc, vr) = covariances(&w, &v, absorbed)?;
    let vcl = cluster_covariance(&w, &v, clusters)?;
    let (classical, cc) = wald(&fs.pi, &vc, fs.n_instruments);
    let (robust, cr) = wald(&fs.pi, &vr, fs.n_instruments);
    let (cluster, ccl) = wald(&fs.pi, &vcl, fs.n_instruments);
    Ok(FirstStageF {
        classical,
        robust,
        cluster,
        capped: cc || cr || ccl,
    })
}
