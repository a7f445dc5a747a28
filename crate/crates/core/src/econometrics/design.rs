//! Joining panel cells with market measures and instruments, and laying
//! out the regression columns.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::spec::{Bin, ClusterUnit, Estimator, FeDim, RegressionSpec};
use super::within::{densify, non_singletons, FixedEffects};
use crate::error::{Error, Result};
use crate::instruments::InstrumentVector;
use crate::metrics::MarketPeriodMetrics;
use crate::panel::{regional_share, CarrierMarketPeriod};
use crate::types::{Carrier, Market, Period};

/// Everything a regression can use for one carrier-market-period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRow {
    pub carrier: Carrier,
    pub market: Market,
    pub period: Period,
    pub price: f64,
    pub traffic: u64,
    pub regional_share: Option<f64>,
    pub network_origin: f64,
    pub network_destination: f64,
    pub metrics: Option<MarketPeriodMetrics>,
    pub instruments: Option<InstrumentVector>,
}

impl AnalysisRow {
    pub fn new(carrier: Carrier, market: Market, period: Period, price: f64, traffic: u64) -> Self {
        AnalysisRow {
            carrier,
            market,
            period,
            price,
            traffic,
            regional_share: None,
            network_origin: 0.0,
            network_destination: 0.0,
            metrics: None,
            instruments: None,
        }
    }

    /// Sets a named regression variable or instrument. Outcomes are set
    /// through `price` and `traffic`.
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let (market, period, carrier) = (self.market.clone(), self.period, self.carrier.clone());
        let m = || MarketPeriodMetrics::empty(market.clone(), period);
        match name {
            "regional_share" => self.regional_share = Some(value),
            "network_origin" => self.network_origin = value,
            "network_destination" => self.network_destination = value,
            "csc" => self.metrics.get_or_insert_with(m).csc_baseline = value,
            "csc_count" => self.metrics.get_or_insert_with(m).csc_count = value,
            "csc_weighted" => self.metrics.get_or_insert_with(m).csc_weighted = value,
            "mmc" => {
                let mm = self.metrics.get_or_insert_with(m);
                mm.mmc = Some(value);
                mm.mmc_raw = Some(value * crate::metrics::MMC_SCALE);
            }
            "regional_hhi" => self.metrics.get_or_insert_with(m).regional_hhi = Some(value),
            other => {
                let iv = self
                    .instruments
                    .get_or_insert_with(|| InstrumentVector::empty(carrier, market.clone(), period));
                if !iv.set(other, Some(value)) {
                    return Err(Error::Spec(format!("unknown variable `{other}`")));
                }
            }
        }
        Ok(())
    }

    pub fn value(&self, name: &str) -> Option<f64> {
        let m = self.metrics.as_ref();
        match name {
            "log_price" => (self.price > 0.0).then(|| self.price.ln()),
            "log_traffic" => (self.traffic > 0).then(|| (self.traffic as f64).ln()),
            "price" => Some(self.price),
            "traffic" => Some(self.traffic as f64),
            "regional_share" => self.regional_share,
            "network_origin" => Some(self.network_origin),
            "network_destination" => Some(self.network_destination),
            "csc" => m.map(|m| m.csc_baseline),
            "csc_count" => m.map(|m| m.csc_count),
            "csc_weighted" => m.map(|m| m.csc_weighted),
            "mmc" => m.and_then(|m| m.mmc),
            "mmc_raw" => m.and_then(|m| m.mmc_raw),
            "regional_hhi" => m.and_then(|m| m.regional_hhi),
            other => self.instruments.as_ref().and_then(|iv| iv.get(other)),
        }
        .filter(|v| v.is_finite())
    }
}

/// Joins cells to their market-period measures and instruments.
/// `instruments` is either empty or aligned with `cells`.
pub fn analysis_rows(
    cells: &[CarrierMarketPeriod],
    metrics: &[MarketPeriodMetrics],
    instruments: &[InstrumentVector],
) -> Result<Vec<AnalysisRow>> {
    let by_mp: BTreeMap<(&Market, Period), &MarketPeriodMetrics> =
        metrics.iter().map(|m| ((&m.market, m.period), m)).collect();
    let by_cell: BTreeMap<(&Carrier, &Market, Period), &InstrumentVector> =
        instruments.iter().map(|iv| ((&iv.carrier, &iv.market, iv.period), iv)).collect();
    if !instruments.is_empty() && by_cell.len() != cells.len() {
        return Err(Error::Spec(format!(
            "{} instrument rows for {} panel cells",
            instruments.len(),
            cells.len()
        )));
    }
    Ok(cells
        .iter()
        .map(|c| AnalysisRow {
            carrier: c.carrier.clone(),
            market: c.market.clone(),
            period: c.period,
            price: c.price,
            traffic: c.traffic,
            regional_share: regional_share(c),
            network_origin: c.network_origin,
            network_destination: c.network_destination,
            metrics: by_mp.get(&(&c.market, c.period)).map(|m| (*m).clone()),
            instruments: by_cell.get(&(&c.carrier, &c.market, c.period)).map(|iv| (*iv).clone()),
        })
        .collect())
}

/// Column positions in the design matrix. Column 0 is the outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Layout {
    pub names: Vec<String>,
    pub endog: Vec<usize>,
    pub inter: Vec<usize>,
    pub exog: Vec<usize>,
    /// Instrument columns per endogenous variable.
    pub iv_sets: Vec<Vec<usize>>,
    /// Explicit fixed-effect indicator columns.
    pub dummies: Vec<usize>,
}

impl Layout {
    pub fn width(&self) -> usize {
        self.names.len()
    }
}

#[derive(Debug, Clone)]
pub struct PanelDesignMatrix {
    pub data: DMatrix<f64>,
    pub layout: Layout,
    pub fe: FixedEffects,
    pub fe_dims: Vec<FeDim>,
    pub clusters: Vec<usize>,
    pub cluster_unit: ClusterUnit,
    pub years: Vec<i32>,
    pub dropped_missing: usize,
    pub dropped_singletons: usize,
}

impl PanelDesignMatrix {
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn n_clusters(&self) -> usize {
        self.clusters.iter().max().map_or(0, |m| m + 1)
    }

    /// Position of the market dimension when it is also the cluster.
    pub fn cluster_dim(&self) -> Option<usize> {
        match self.cluster_unit {
            ClusterUnit::Market => self.fe_dims.iter().position(|d| *d == FeDim::Market),
            ClusterUnit::Observation => None,
        }
    }
}

fn bin_of(bins: &[Bin], year: i32) -> Option<usize> {
    bins.iter().position(|b| b.contains(year))
}

/// Rows with every needed value present, singletons removed, FE ids dense.
pub fn build_design(spec: &RegressionSpec, rows: &[AnalysisRow]) -> Result<PanelDesignMatrix> {
    spec.validate()?;
    let mut names: Vec<String> = vec![spec.dependent.as_str().to_string()];
    let endog: Vec<usize> = (0..spec.endogenous.len()).map(|i| i + 1).collect();
    names.extend(spec.endogenous.iter().cloned());

    // (variable column, bin index) per interaction column
    let mut inter_src: Vec<(usize, usize)> = Vec::new();
    let mut inter = Vec::new();
    for ib in &spec.interactions {
        let v = spec.endogenous.iter().position(|e| *e == ib.variable).unwrap() + 1;
        for (k, b) in ib.bins.iter().enumerate().skip(1) {
            inter.push(names.len());
            names.push(ib.column(b));
            inter_src.push((v, k));
        }
    }
    let exog: Vec<usize> = (0..spec.exogenous.len()).map(|i| names.len() + i).collect();
    names.extend(spec.exogenous.iter().cloned());

    let mut iv_sets = Vec::new();
    if spec.estimator == Estimator::ControlFunction {
        for v in &spec.endogenous {
            let mut set = Vec::new();
            for c in spec.instruments_for(v)? {
                let pos = match names.iter().position(|n| *n == c) {
                    Some(p) => p,
                    None => {
                        names.push(c);
                        names.len() - 1
                    }
                };
                set.push(pos);
            }
            iv_sets.push(set);
        }
    }
    let layout = Layout {
        names,
        endog,
        inter,
        exog,
        iv_sets,
        dummies: Vec::new(),
    };

    // values per row; interactions filled afterwards
    let raw_cols: Vec<(usize, &str)> = layout
        .names
        .iter()
        .enumerate()
        .filter(|(i, _)| !layout.inter.contains(i))
        .map(|(i, n)| (i, n.as_str()))
        .collect();
    let mut kept: Vec<(usize, Vec<f64>)> = Vec::new();
    let mut dropped_missing = 0;
    'rows: for (r, row) in rows.iter().enumerate() {
        let mut vals = vec![0.0; layout.width()];
        for &(i, name) in &raw_cols {
            match row.value(name) {
                Some(v) => vals[i] = v,
                None => {
                    dropped_missing += 1;
                    continue 'rows;
                }
            }
        }
        for (ib_idx, ib) in spec.interactions.iter().enumerate() {
            if bin_of(&ib.bins, row.period.year).is_none() {
                return Err(Error::Spec(format!(
                    "year {} falls in no bin of `{}`",
                    row.period.year, spec.interactions[ib_idx].variable
                )));
            }
        }
        kept.push((r, vals));
    }

    let key_ids = |dim: FeDim, sel: &[(usize, Vec<f64>)]| -> Vec<usize> {
        match dim {
            FeDim::Carrier => densify(&sel.iter().map(|(r, _)| &rows[*r].carrier).collect::<Vec<_>>()),
            FeDim::Market => densify(&sel.iter().map(|(r, _)| &rows[*r].market).collect::<Vec<_>>()),
            FeDim::Year => densify(&sel.iter().map(|(r, _)| rows[*r].period.year).collect::<Vec<_>>()),
        }
    };
    let ids: Vec<Vec<usize>> = spec.fixed_effects.iter().map(|d| key_ids(*d, &kept)).collect();
    let keep = non_singletons(&ids);
    let before = kept.len();
    let kept: Vec<(usize, Vec<f64>)> = kept.into_iter().zip(keep).filter(|(_, k)| *k).map(|(x, _)| x).collect();
    let dropped_singletons = before - kept.len();
    if kept.is_empty() {
        return Err(Error::Spec(format!("no observations left for `{}`", spec.name)));
    }
    let ids: Vec<Vec<usize>> = spec.fixed_effects.iter().map(|d| key_ids(*d, &kept)).collect();
    let years: Vec<i32> = kept.iter().map(|(r, _)| rows[*r].period.year).collect();

    for ib in &spec.interactions {
        for b in &ib.bins {
            if !years.iter().any(|y| b.contains(*y)) {
                return Err(Error::EmptyBin(format!("{}: {}", ib.variable, b.label)));
            }
        }
    }

    let n = kept.len();
    let w = layout.width();
    let mut data = DMatrix::zeros(n, w);
    for (i, (_, vals)) in kept.iter().enumerate() {
        for j in 0..w {
            data[(i, j)] = vals[j];
        }
    }
    let mut col = 0;
    for ib in &spec.interactions {
        for _ in 1..ib.bins.len() {
            let (src, k) = inter_src[col];
            let dst = layout.inter[col];
            for i in 0..n {
                let inside = bin_of(&ib.bins, years[i]) == Some(k);
                data[(i, dst)] = if inside { data[(i, src)] } else { 0.0 };
            }
            col += 1;
        }
    }

    let clusters = match spec.bootstrap.cluster {
        ClusterUnit::Market => densify(&kept.iter().map(|(r, _)| &rows[*r].market).collect::<Vec<_>>()),
        ClusterUnit::Observation => (0..n).collect(),
    };
    Ok(PanelDesignMatrix {
        data,
        layout,
        fe: FixedEffects::new(ids),
        fe_dims: spec.fixed_effects.clone(),
        clusters,
        cluster_unit: spec.bootstrap.cluster,
        years,
        dropped_missing,
        dropped_singletons,
    })
}
