//! Removal of several fixed-effect dimensions by alternating projections.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense group ids, one vector per dimension.
#[derive(Debug, Clone)]
pub struct FixedEffects {
    ids: Vec<Vec<usize>>,
    counts: Vec<Vec<f64>>,
    n: usize,
}

impl FixedEffects {
    /// Ids in each dimension must be dense (0..G).
    pub fn new(ids: Vec<Vec<usize>>) -> Self {
        let n = ids.first().map_or(0, Vec::len);
        assert!(ids.iter().all(|d| d.len() == n), "fixed-effect dimensions differ in length");
        let counts = ids
            .iter()
            .map(|d| {
                let g = d.iter().max().map_or(0, |m| m + 1);
                let mut c = vec![0.0; g];
                for &i in d {
                    c[i] += 1.0;
                }
                c
            })
            .collect();
        FixedEffects { ids, counts, n }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dims(&self) -> usize {
        self.ids.len()
    }

    pub fn ids(&self, dim: usize) -> &[usize] {
        &self.ids[dim]
    }

    pub fn groups(&self) -> Vec<usize> {
        self.counts.iter().map(Vec::len).collect()
    }

    /// Estimable fixed-effect levels: ΣG − (D − 1).
    pub fn absorbed_df(&self) -> usize {
        let g: usize = self.groups().iter().sum();
        (g + 1).saturating_sub(self.dims())
    }
}

/// Rows to keep after iteratively dropping observations that are alone in
/// some fixed-effect group.
pub fn non_singletons(ids: &[Vec<usize>]) -> Vec<bool> {
    let n = ids.first().map_or(0, Vec::len);
    let mut keep = vec![true; n];
    loop {
        let mut changed = false;
        for d in ids {
            let g = d.iter().max().map_or(0, |m| m + 1);
            let mut c = vec![0usize; g];
            for (i, &gid) in d.iter().enumerate() {
                if keep[i] {
                    c[gid] += 1;
                }
            }
            for (i, &gid) in d.iter().enumerate() {
                if keep[i] && c[gid] == 1 {
                    keep[i] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            return keep;
        }
    }
}

/// Relabels ids to 0..G in order of first appearance.
pub fn densify<T: Eq + std::hash::Hash + Clone>(keys: &[T]) -> Vec<usize> {
    let mut map = std::collections::HashMap::new();
    keys.iter()
        .map(|k| {
            let next = map.len();
            *map.entry(k.clone()).or_insert(next)
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
pub struct WithinOptions {
    /// Largest group mean, relative to the column's largest absolute value,
    /// tolerated at convergence.
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for WithinOptions {
    fn default() -> Self {
        WithinOptions {
            tolerance: 1e-10,
            max_sweeps: 10_000,
        }
    }
}

/// Demeans one column in place. Returns the number of sweeps.
pub fn demean_column(col: &mut [f64], fe: &FixedEffects, opts: WithinOptions, scratch: &mut Vec<f64>) -> Result<usize> {
    let scale = col.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return Ok(0);
    }
    let mut worst = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        worst = 0.0f64;
        for (ids, counts) in fe.ids.iter().zip(&fe.counts) {
            scratch.clear();
            scratch.resize(counts.len(), 0.0);
            for (v, &g) in col.iter().zip(ids) {
                scratch[g] += v;
            }
            for (s, c) in scratch.iter_mut().zip(counts) {
                *s /= c;
                worst = worst.max(s.abs());
            }
            for (v, &g) in col.iter_mut().zip(ids) {
                *v -= scratch[g];
            }
        }
        if worst <= opts.tolerance * scale {
            return Ok(sweep);
        }
        // A single dimension is exact after one pass.
        if fe.dims() == 1 {
            return Ok(sweep);
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_sweeps,
        residual: worst / scale,
    })
}

/// Demeans every column of `m` in place; returns the largest sweep count.
pub fn within_transform(m: &mut DMatrix<f64>, fe: &FixedEffects, opts: WithinOptions) -> Result<usize> {
    assert_eq!(m.nrows(), fe.len(), "design rows differ from fixed-effect rows");
    let mut scratch = Vec::new();
    let mut sweeps = 0;
    for mut c in m.column_iter_mut() {
        let s = demean_column(c.as_mut_slice(), fe, opts, &mut scratch)?;
        sweeps = sweeps.max(s);
    }
    Ok(sweeps)
}
