//! Cluster bootstrap of the whole two-step estimator.
//!
//! When clusters coincide with a fixed-effect dimension, a resampled data
//! set is the original one with integer weights on the clusters. Removing
//! the cluster effect within each cluster and carrying the remaining
//! effects as explicit indicators turns every replicate into a weighted sum
//! of per-cluster cross-products, with no need to copy rows or re-run the
//! alternating projections.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::algebra::{collinear, solve, Solution};
use super::design::{Layout, PanelDesignMatrix};
use super::spec::{BootstrapConfig, Estimator};
use super::within::{densify, within_transform, FixedEffects, WithinOptions};
use crate::error::{Error, Result};

/// Per-replicate estimates of the reported coefficients.
#[derive(Debug, Clone)]
pub struct Replicates {
    pub draws: Vec<DVector<f64>>,
    pub redraws: usize,
}

impl Replicates {
    /// Sample standard deviation across replicates, per coefficient.
    pub fn standard_errors(&self) -> Vec<f64> {
        let k = self.draws.first().map_or(0, |d| d.len());
        (0..k)
            .map(|j| {
                let v: Vec<f64> = self.draws.iter().map(|d| d[j]).collect();
                crate::stats::sample_sd(&v).unwrap_or(f64::NAN)
            })
            .collect()
    }
}

fn rng_for(seed: u64, replicate: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate as u64);
    rng
}

fn draw_counts(rng: &mut ChaCha8Rng, g: usize) -> Vec<u32> {
    let mut w = vec![0u32; g];
    for _ in 0..g {
        w[rng.random_range(0..g)] += 1;
    }
    w
}

/// Runs `config.replicates` replicates; each is redrawn while the
/// resampled design is degenerate.
pub fn bootstrap(pdm: &PanelDesignMatrix, estimator: Estimator, config: &BootstrapConfig, seed: u64, opts: WithinOptions) -> Result<Replicates> {
    let engine: Box<dyn Fn(&[u32]) -> Result<DVector<f64>> + Sync> = match pdm.cluster_dim() {
        Some(dim) => {
            let fast = ClusterGrams::new(pdm, dim);
            Box::new(move |w| fast.replicate(w, estimator))
        }
        None => Box::new(move |w| materialized(pdm, w, estimator, opts)),
    };
    let g = pdm.n_clusters();
    let results: Vec<Result<(DVector<f64>, usize)>> = (0..config.replicates)
        .into_par_iter()
        .map(|b| {
            let mut rng = rng_for(seed, b);
            let mut redraws = 0;
            loop {
                let w = draw_counts(&mut rng, g);
                match engine(&w) {
                    Ok(beta) => return Ok((beta, redraws)),
                    Err(Error::RankDeficient { .. } | Error::Degenerate(_)) if redraws < config.max_redraws => redraws += 1,
                    Err(e) => {
                        return Err(Error::Degenerate(format!("replicate {b} after {redraws} redraws: {e}")));
                    }
                }
            }
        })
        .collect();
    let mut out = Replicates {
        draws: Vec::with_capacity(config.replicates),
        redraws: 0,
    };
    for r in results {
        let (beta, redraws) = r?;
        out.draws.push(beta);
        out.redraws += redraws;
    }
    Ok(out)
}

fn reported(sol: &Solution) -> DVector<f64> {
    sol.beta.rows(0, sol.reported).into_owned()
}

/// Per-cluster cross-products of the cluster-demeaned design with
/// indicators for the other fixed effects.
struct ClusterGrams {
    layout: Layout,
    grams: Vec<DMatrix<f64>>,
    raw_ss: Vec<Vec<f64>>,
}

impl ClusterGrams {
    fn new(pdm: &PanelDesignMatrix, dim: usize) -> Self {
        let n = pdm.n();
        let nb = pdm.layout.width();
        let mut layout = pdm.layout.clone();
        let mut extra: Vec<Vec<f64>> = Vec::new();
        for (d, kind) in pdm.fe_dims.iter().enumerate() {
            if d == dim {
                continue;
            }
            let ids = pdm.fe.ids(d);
            let groups = ids.iter().max().map_or(0, |m| m + 1);
            for g in 1..groups {
                layout.dummies.push(nb + extra.len());
                layout.names.push(format!("{}={g}", kind.as_str()));
                extra.push(ids.iter().map(|&i| if i == g { 1.0 } else { 0.0 }).collect());
            }
        }
        let width = nb + extra.len();
        let mut x = DMatrix::zeros(n, width);
        x.view_mut((0, 0), (n, nb)).copy_from(&pdm.data);
        for (j, col) in extra.iter().enumerate() {
            x.column_mut(nb + j).copy_from_slice(col);
        }
        let clusters = pdm.fe.ids(dim).to_vec();
        let g = pdm.n_clusters();
        let mut raw_ss = vec![vec![0.0; width]; g];
        for (i, &c) in clusters.iter().enumerate() {
            for j in 0..width {
                raw_ss[c][j] += x[(i, j)] * x[(i, j)];
            }
        }
        let single = FixedEffects::new(vec![clusters.clone()]);
        within_transform(&mut x, &single, WithinOptions::default()).expect("one dimension always converges");
        let mut members: Vec<Vec<usize>> = vec![Vec::new(); g];
        for (i, &c) in clusters.iter().enumerate() {
            members[c].push(i);
        }
        let grams = members
            .iter()
            .map(|rows| {
                let xm = x.select_rows(rows);
                xm.transpose() * xm
            })
            .collect();
        ClusterGrams { layout, grams, raw_ss }
    }

    fn replicate(&self, weights: &[u32], estimator: Estimator) -> Result<DVector<f64>> {
        let width = self.layout.width();
        let mut g = DMatrix::zeros(width, width);
        let mut reference = vec![0.0; width];
        for ((gm, ss), &w) in self.grams.iter().zip(&self.raw_ss).zip(weights) {
            if w == 0 {
                continue;
            }
            g += gm * (w as f64);
            for (r, s) in reference.iter_mut().zip(ss) {
                *r += w as f64 * s;
            }
        }
        // Indicators of groups that were not drawn, or that the cluster
        // effect and the other indicators already span, drop out.
        let mut layout = self.layout.clone();
        let dg = g.select_rows(&layout.dummies).select_columns(&layout.dummies);
        let dref: Vec<f64> = layout.dummies.iter().map(|&j| reference[j]).collect();
        let redundant = collinear(&dg, &dref);
        layout.dummies = layout
            .dummies
            .iter()
            .enumerate()
            .filter(|(i, _)| !redundant.contains(i))
            .map(|(_, &j)| j)
            .collect();
        let sol = solve(&g, &reference, &layout, estimator)?;
        Ok(reported(&sol))
    }
}

/// Generic replicate: copy the drawn clusters, relabel effects nested in
/// the cluster so that duplicates are separate groups, and re-estimate.
fn materialized(pdm: &PanelDesignMatrix, weights: &[u32], estimator: Estimator, opts: WithinOptions) -> Result<DVector<f64>> {
    let g = weights.len();
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); g];
    for (i, &c) in pdm.clusters.iter().enumerate() {
        members[c].push(i);
    }
    let nested: Vec<bool> = (0..pdm.fe.dims())
        .map(|d| {
            let mut owner = std::collections::HashMap::new();
            pdm.fe.ids(d).iter().zip(&pdm.clusters).all(|(gid, c)| *owner.entry(*gid).or_insert(*c) == *c)
        })
        .collect();
    let mut rows = Vec::new();
    let mut keys: Vec<Vec<(usize, usize)>> = vec![Vec::new(); pdm.fe.dims()];
    let mut copy = 0;
    for (c, &w) in weights.iter().enumerate() {
        for _ in 0..w {
            for &i in &members[c] {
                rows.push(i);
                for (d, k) in keys.iter_mut().enumerate() {
                    let id = pdm.fe.ids(d)[i];
                    k.push(if nested[d] { (copy, id) } else { (0, id) });
                }
            }
            copy += 1;
        }
    }
    let fe = FixedEffects::new(keys.iter().map(|k| densify(k)).collect());
    let mut x = pdm.data.select_rows(&rows);
    let reference: Vec<f64> = x.column_iter().map(|c| c.norm_squared()).collect();
    within_transform(&mut x, &fe, opts)?;
    let gram = x.transpose() * &x;
    let sol = solve(&gram, &reference, &pdm.layout, estimator)?;
    Ok(reported(&sol))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::econometrics::design::{build_design, AnalysisRow};
    use crate::econometrics::spec::RegressionSpec;
    use crate::types::{Carrier, Market, Period};

    fn rows(seed: u64) -> Vec<AnalysisRow> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Vec::new();
        for m in 0..25 {
            for t in 0..5 {
                for c in 0..4 {
                    if rng.random_bool(0.3) {
                        continue;
                    }
                    let mut u = || rng.random_range(-1.0..1.0);
                    let (z1, z2, e) = (u(), u(), u());
                    let x = z1 + 0.5 * z2 + e;
                    let mut r = AnalysisRow::new(
                        Carrier::new(format!("C{c}")),
                        Market::new(format!("M{m}").as_str(), "HUB"),
                        Period::new(2000 + t, 2),
                        (1.0 + 0.3 * x + e + 0.1 * m as f64 + 0.05 * c as f64 + u()).exp(),
                        1,
                    );
                    r.set("csc", x).unwrap();
                    r.set("network_origin", u()).unwrap();
                    r.set("network_destination", u()).unwrap();
                    r.set("comp_precipitation", z1).unwrap();
                    r.set("comp_snowfall", z2).unwrap();
                    out.push(r);
                }
            }
        }
        out
    }

    #[test]
    fn weighted_cross_products_match_copied_rows() {
        let mut spec = RegressionSpec::new("b", &["csc"]);
        spec.iv_map.insert("csc".into(), vec!["comp_precipitation".into(), "comp_snowfall".into()]);
        let pdm = build_design(&spec, &rows(3)).unwrap();
        let fast = ClusterGrams::new(&pdm, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..5 {
            let w = draw_counts(&mut rng, pdm.n_clusters());
            let a = fast.replicate(&w, Estimator::ControlFunction).unwrap();
            let b = materialized(&pdm, &w, Estimator::ControlFunction, WithinOptions::default()).unwrap();
            for (x, y) in a.iter().zip(b.iter()) {
                assert!((x - y).abs() < 1e-8, "{x} vs {y}");
            }
        }
    }
}
