//! Market-period structure measures: common subcontracting (baseline,
//! count, weighted), multimarket contact and regional HHI.
//!
//! Conventions: `n` is the number of majors present in the market in the
//! period; `K_m` is the set of regionals with a positive usage share for some
//! major in the market; a major is linked to a regional in a period if it
//! uses it in at least one market, the current one included.

use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ingest::Table;
use crate::panel::{regional_share, CarrierMarketPeriod, RegionalUsageShare};
use crate::stats;
use crate::types::{Carrier, Market, Period};

/// Regional usage shares within one market: (major, regional) → s.
pub type ShareMatrix = BTreeMap<(Carrier, Carrier), f64>;

/// Major-regional links in one period.
#[derive(Debug, Clone, Default)]
pub struct Links(BTreeSet<(Carrier, Carrier)>);

impl Links {
    pub fn from_usage<'a>(usage: impl IntoIterator<Item = &'a RegionalUsageShare>) -> Self {
        Links(
            usage
                .into_iter()
                .filter(|u| u.share > 0.0)
                .map(|u| (u.major.clone(), u.regional.clone()))
                .collect(),
        )
    }

    pub fn insert(&mut self, major: Carrier, regional: Carrier) {
        self.0.insert((major, regional));
    }

    pub fn linked(&self, major: &Carrier, regional: &Carrier) -> bool {
        self.0.contains(&(major.clone(), regional.clone()))
    }
}

/// Regionals with a positive share in the market.
pub fn active_regionals(shares: &ShareMatrix) -> BTreeSet<&Carrier> {
    shares.iter().filter(|(_, &s)| s > 0.0).map(|((_, k), _)| k).collect()
}

fn share(shares: &ShareMatrix, major: &Carrier, regional: &Carrier) -> f64 {
    shares.get(&(major.clone(), regional.clone())).copied().unwrap_or(0.0)
}

/// Σ_i Σ_{j≠i} Σ_{k∈K_m} s_kj·B_ik / (n(n−1)|K_m|); zero when n < 2 or
/// `K_m` is empty.
pub fn csc_baseline(majors: &[Carrier], shares: &ShareMatrix, links: &Links) -> f64 {
    let n = majors.len();
    let km = active_regionals(shares);
    if n < 2 || km.is_empty() {
        return 0.0;
    }
    let mut total = 0.0;
    for i in majors {
        for j in majors.iter().filter(|j| *j != i) {
            for &k in &km {
                if links.linked(i, k) {
                    total += share(shares, j, k);
                }
            }
        }
    }
    total / (n * (n - 1) * km.len()) as f64
}

/// Fraction of ordered pairs (i, j) for which some regional carrying j's
/// passengers in the market is linked to i.
pub fn csc_count(majors: &[Carrier], shares: &ShareMatrix, links: &Links) -> f64 {
    let n = majors.len();
    if n < 2 {
        return 0.0;
    }
    let km = active_regionals(shares);
    let mut overlapping = 0usize;
    for i in majors {
        for j in majors.iter().filter(|j| *j != i) {
            if km.iter().any(|k| share(shares, j, k) > 0.0 && links.linked(i, k)) {
                overlapping += 1;
            }
        }
    }
    overlapping as f64 / (n * (n - 1)) as f64
}

/// Σ_j ms_j · Σ_{k shared with some i≠j} s_kj / n, with ms_j the passenger
/// share of major j in the market.
pub fn csc_weighted(majors: &[Carrier], shares: &ShareMatrix, links: &Links, market_share: &BTreeMap<Carrier, f64>) -> f64 {
    let n = majors.len();
    if n < 2 {
        return 0.0;
    }
    let km = active_regionals(shares);
    let mut total = 0.0;
    for j in majors {
        let shared: f64 = km
            .iter()
            .filter(|k| majors.iter().any(|i| i != j && links.linked(i, k)))
            .map(|k| share(shares, j, k))
            .sum();
        total += market_share.get(j).copied().unwrap_or(0.0) * shared;
    }
    total / n as f64
}

/// Number of markets in which each unordered major pair is jointly present
/// in one period.
#[derive(Debug, Clone, Default)]
pub struct PairContactLedger {
    contacts: BTreeMap<(Carrier, Carrier), u64>,
}

fn pair(a: &Carrier, b: &Carrier) -> (Carrier, Carrier) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

impl PairContactLedger {
    pub fn from_presence<'a>(markets: impl IntoIterator<Item = &'a [Carrier]>) -> Self {
        let mut contacts = BTreeMap::new();
        for majors in markets {
            for (x, i) in majors.iter().enumerate() {
                for j in &majors[x + 1..] {
                    *contacts.entry(pair(i, j)).or_insert(0) += 1;
                }
            }
        }
        PairContactLedger { contacts }
    }

    pub fn contacts(&self, a: &Carrier, b: &Carrier) -> u64 {
        self.contacts.get(&pair(a, b)).copied().unwrap_or(0)
    }
}

/// Average contacts over ordered pairs of majors present in the market,
/// unscaled. `None` for markets with fewer than two majors.
pub fn mmc(majors: &[Carrier], ledger: &PairContactLedger) -> Option<f64> {
    let n = majors.len();
    if n < 2 {
        return None;
    }
    let mut total = 0u64;
    for i in majors {
        for j in majors.iter().filter(|j| *j != i) {
            total += ledger.contacts(i, j);
        }
    }
    Some(total as f64 / (n * (n - 1)) as f64)
}

/// Σ_k (pax_k / Σ pax)² over active regionals; `None` without any.
pub fn regional_hhi(passengers: &[u64]) -> Option<f64> {
    let total: u64 = passengers.iter().sum();
    if total == 0 {
        return None;
    }
    Some(passengers.iter().map(|&p| (p as f64 / total as f64).powi(2)).sum())
}

/// Scale applied to average contacts in reports and regressions.
pub const MMC_SCALE: f64 = 1000.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketPeriodMetrics {
    pub market: Market,
    pub period: Period,
    pub n_majors: usize,
    pub n_regionals: usize,
    /// `|`-separated codes of active regionals.
    pub regionals: String,
    pub csc_baseline: f64,
    pub csc_count: f64,
    pub csc_weighted: f64,
    /// Average pairwise contacts.
    pub mmc_raw: Option<f64>,
    /// `mmc_raw / 1000`.
    pub mmc: Option<f64>,
    pub regional_hhi: Option<f64>,
}

impl MarketPeriodMetrics {
    pub fn empty(market: Market, period: Period) -> Self {
        MarketPeriodMetrics {
            market,
            period,
            n_majors: 0,
            n_regionals: 0,
            regionals: String::new(),
            csc_baseline: 0.0,
            csc_count: 0.0,
            csc_weighted: 0.0,
            mmc_raw: None,
            mmc: None,
            regional_hhi: None,
        }
    }
}

impl Table for MarketPeriodMetrics {
    const NAME: &'static str = "metrics.csv";
    const COLUMNS: &'static [&'static str] = &[
        "market",
        "period",
        "n_majors",
        "n_regionals",
        "regionals",
        "csc_baseline",
        "csc_count",
        "csc_weighted",
        "mmc_raw",
        "mmc",
        "regional_hhi",
    ];
}

/// Market-period view of the panel used by every metric.
#[derive(Debug, Clone, Default)]
pub struct MarketView {
    pub majors: Vec<Carrier>,
    pub traffic: BTreeMap<Carrier, u64>,
    pub shares: ShareMatrix,
    pub regional_pax: BTreeMap<Carrier, u64>,
}

pub fn market_views(
    cells: &[CarrierMarketPeriod],
    usage: &[RegionalUsageShare],
) -> BTreeMap<Period, BTreeMap<Market, MarketView>> {
    let mut out: BTreeMap<Period, BTreeMap<Market, MarketView>> = BTreeMap::new();
    for c in cells.iter().filter(|c| c.traffic > 0) {
        let v = out.entry(c.period).or_default().entry(c.market.clone()).or_default();
        v.majors.push(c.carrier.clone());
        v.traffic.insert(c.carrier.clone(), c.traffic);
    }
    for u in usage.iter().filter(|u| u.share > 0.0) {
        let Some(v) = out.get_mut(&u.period).and_then(|p| p.get_mut(&u.market)) else {
            continue;
        };
        v.shares.insert((u.major.clone(), u.regional.clone()), u.share);
        *v.regional_pax.entry(u.regional.clone()).or_insert(0) += u.passengers;
    }
    for v in out.values_mut().flat_map(|p| p.values_mut()) {
        v.majors.sort();
        v.majors.dedup();
    }
    out
}

/// All measures for every market-period. Links and contact ledgers are
/// built once per period; markets are then evaluated in parallel.
pub fn compute_metrics(cells: &[CarrierMarketPeriod], usage: &[RegionalUsageShare]) -> Vec<MarketPeriodMetrics> {
    let views = market_views(cells, usage);
    let mut out = Vec::new();
    for (period, markets) in &views {
        let links = Links::from_usage(usage.iter().filter(|u| u.period == *period));
        let ledger = PairContactLedger::from_presence(markets.values().map(|v| v.majors.as_slice()));
        let rows: Vec<MarketPeriodMetrics> = markets
            .par_iter()
            .map(|(market, v)| {
                let total: u64 = v.traffic.values().sum();
                let ms: BTreeMap<Carrier, f64> = v
                    .traffic
                    .iter()
                    .map(|(c, &t)| (c.clone(), t as f64 / total as f64))
                    .collect();
                let km = active_regionals(&v.shares);
                let pax: Vec<u64> = v.regional_pax.values().copied().collect();
                let raw = mmc(&v.majors, &ledger);
                MarketPeriodMetrics {
                    market: market.clone(),
                    period: *period,
                    n_majors: v.majors.len(),
                    n_regionals: km.len(),
                    regionals: km.iter().map(|k| k.as_str()).collect::<Vec<_>>().join("|"),
                    csc_baseline: csc_baseline(&v.majors, &v.shares, &links),
                    csc_count: csc_count(&v.majors, &v.shares, &links),
                    csc_weighted: csc_weighted(&v.majors, &v.shares, &links, &ms),
                    mmc_raw: raw,
                    mmc: raw.map(|r| r / MMC_SCALE),
                    regional_hhi: regional_hhi(&pax),
                }
            })
            .collect();
        out.extend(rows);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub variable: String,
    pub level: String,
    pub n: usize,
    pub mean: f64,
    pub median: f64,
    pub sd: f64,
}

impl Table for SummaryRow {
    const NAME: &'static str = "summary_stats.csv";
    const COLUMNS: &'static [&'static str] = &["variable", "level", "n", "mean", "median", "sd"];
}

fn summarize(variable: &str, level: &str, v: &[f64]) -> Option<SummaryRow> {
    Some(SummaryRow {
        variable: variable.into(),
        level: level.into(),
        n: v.len(),
        mean: stats::mean(v)?,
        median: stats::median(v)?,
        sd: stats::sample_sd(v).unwrap_or(0.0),
    })
}

/// Mean, median and sample sd of each variable at its own level: market
/// measures over market-periods, carrier measures over panel cells. MMC is
/// reported in thousands of contacts.
pub fn summary_stats(cells: &[CarrierMarketPeriod], metrics: &[MarketPeriodMetrics]) -> Vec<SummaryRow> {
    const M: &str = "market";
    const CM: &str = "carrier-market";
    let col = |f: fn(&MarketPeriodMetrics) -> Option<f64>| metrics.iter().filter_map(f).collect::<Vec<_>>();
    let cel = |f: fn(&CarrierMarketPeriod) -> Option<f64>| cells.iter().filter_map(f).collect::<Vec<_>>();
    [
        summarize("Price", CM, &cel(|c| Some(c.price))),
        summarize("Common Subcontracting", M, &col(|m| Some(m.csc_baseline))),
        summarize("Common Subcontracting (count)", M, &col(|m| Some(m.csc_count))),
        summarize("Common Subcontracting (weighted)", M, &col(|m| Some(m.csc_weighted))),
        summarize("Regional Share", CM, &cel(regional_share)),
        summarize("Multimarket Contact", M, &col(|m| m.mmc)),
        summarize("Regional HHI", M, &col(|m| m.regional_hhi)),
        summarize("Network Origin", CM, &cel(|c| Some(c.network_origin))),
        summarize("Network Destination", CM, &cel(|c| Some(c.network_destination))),
        summarize("Traffic", CM, &cel(|c| Some(c.traffic as f64))),
    ]
    .into_iter()
    .flatten()
    .collect()
}

/// Five-number summary per year, the content of a box plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxPlotRow {
    pub variable: String,
    pub year: i32,
    pub n: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

impl Table for BoxPlotRow {
    const NAME: &'static str = "boxplot.csv";
    const COLUMNS: &'static [&'static str] = &["variable", "year", "n", "min", "q1", "median", "q3", "max"];
}

pub fn box_plot_quantiles(metrics: &[MarketPeriodMetrics]) -> Vec<BoxPlotRow> {
    let mut out = Vec::new();
    let series: [(&str, fn(&MarketPeriodMetrics) -> Option<f64>); 2] =
        [("csc", |m| Some(m.csc_baseline)), ("mmc", |m| m.mmc)];
    for (name, f) in series {
        let mut by_year: BTreeMap<i32, Vec<f64>> = BTreeMap::new();
        for m in metrics {
            if let Some(v) = f(m) {
                by_year.entry(m.period.year).or_default().push(v);
            }
        }
        for (year, v) in by_year {
            let q = |p| stats::quantile(&v, p).unwrap_or(f64::NAN);
            out.push(BoxPlotRow {
                variable: name.into(),
                year,
                n: v.len(),
                min: q(0.0),
                q1: q(0.25),
                median: q(0.5),
                q3: q(0.75),
                max: q(1.0),
            });
        }
    }
    out
}
