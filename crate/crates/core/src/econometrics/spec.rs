//! Model definitions and estimation results.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::instruments::{InstrumentVector, COMP_WEATHER, NETWORK, OWN_WEATHER, REGIONAL_NETWORK};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Dependent {
    #[default]
    LogPrice,
    LogTraffic,
}

impl Dependent {
    pub fn as_str(&self) -> &'static str {
        match self {
            Dependent::LogPrice => "log_price",
            Dependent::LogTraffic => "log_traffic",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Least squares with absorbed fixed effects, robust standard errors.
    FeOls,
    /// First-stage residuals added to the outcome equation.
    #[default]
    ControlFunction,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeDim {
    Carrier,
    Market,
    Year,
}

impl FeDim {
    pub fn as_str(&self) -> &'static str {
        match self {
            FeDim::Carrier => "carrier",
            FeDim::Market => "market",
            FeDim::Year => "year",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClusterUnit {
    #[default]
    Market,
    Observation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BootstrapConfig {
    /// 0 disables the bootstrap; otherwise at least 100.
    #[serde(alias = "B")]
    pub replicates: usize,
    /// Falls back to the run seed when absent.
    pub seed: Option<u64>,
    pub cluster: ClusterUnit,
    /// Redraws allowed per replicate before giving up.
    pub max_redraws: usize,
}

impl Default for BootstrapConfig {
    fn default() -> Self {
        BootstrapConfig {
            replicates: 1000,
            seed: None,
            cluster: ClusterUnit::Market,
            max_redraws: 100,
        }
    }
}

/// Year range, inclusive; open ends allowed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub label: String,
    pub from: Option<i32>,
    pub to: Option<i32>,
}

impl Bin {
    pub fn contains(&self, year: i32) -> bool {
        self.from.is_none_or(|f| year >= f) && self.to.is_none_or(|t| year <= t)
    }
}

/// Period bins for one variable. The first bin is the base; the others
/// enter as interactions measured relative to it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionBins {
    pub variable: String,
    pub bins: Vec<Bin>,
}

impl InteractionBins {
    pub fn column(&self, bin: &Bin) -> String {
        format!("{} x {}", self.variable, bin.label)
    }
}

pub const ENDOGENOUS: &[&str] = &["csc", "csc_count", "csc_weighted", "regional_share", "mmc", "regional_hhi"];
pub const EXOGENOUS: &[&str] = &["network_origin", "network_destination"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionSpec {
    pub name: String,
    #[serde(default)]
    pub dependent: Dependent,
    pub endogenous: Vec<String>,
    #[serde(default = "default_exogenous")]
    pub exogenous: Vec<String>,
    #[serde(default = "default_fixed_effects")]
    pub fixed_effects: Vec<FeDim>,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub interactions: Vec<InteractionBins>,
    /// Endogenous variable → instruments. Entries may name instrument
    /// columns or the groups `own_weather`, `competitor_weather`,
    /// `regional_network`, `network`. Missing entries use the defaults.
    #[serde(default)]
    pub iv_map: BTreeMap<String, Vec<String>>,
    #[serde(default)]
    pub bootstrap: BootstrapConfig,
    /// Interquartile ranges for effect reporting, keyed by variable then
    /// bin label (`all` without bins). Computed from the sample when absent.
    #[serde(default)]
    pub iqr: BTreeMap<String, BTreeMap<String, f64>>,
}

fn default_exogenous() -> Vec<String> {
    EXOGENOUS.iter().map(|s| s.to_string()).collect()
}

fn default_fixed_effects() -> Vec<FeDim> {
    vec![FeDim::Carrier, FeDim::Market, FeDim::Year]
}

/// Instrument groups used when the map has no entry for a variable. The
/// multimarket-contact first stage leaves out the regional-specific weather
/// and regional-network instruments.
pub fn default_instruments(variable: &str) -> Vec<String> {
    let groups: &[&str] = match variable {
        "csc" | "csc_count" | "csc_weighted" => &["competitor_weather", "regional_network", "network"],
        "regional_share" => &["own_weather", "regional_network", "network"],
        "mmc" => &["network"],
        "regional_hhi" => &["competitor_weather", "regional_network"],
        _ => &[],
    };
    groups.iter().map(|s| s.to_string()).collect()
}

/// Expands group names into instrument columns, keeping first occurrences.
pub fn expand_instruments(entries: &[String]) -> Result<Vec<String>> {
    let mut out: Vec<String> = Vec::new();
    for e in entries {
        let cols: Vec<&str> = match e.as_str() {
            "own_weather" => OWN_WEATHER.to_vec(),
            "competitor_weather" => COMP_WEATHER.to_vec(),
            "regional_network" => REGIONAL_NETWORK.to_vec(),
            "network" => NETWORK.to_vec(),
            c if InstrumentVector::has_column(c) => vec![c],
            other => return Err(Error::Spec(format!("unknown instrument `{other}`"))),
        };
        for c in cols {
            if !out.iter().any(|x| x == c) {
                out.push(c.to_string());
            }
        }
    }
    Ok(out)
}

impl RegressionSpec {
    pub fn new(name: &str, endogenous: &[&str]) -> Self {
        RegressionSpec {
            name: name.into(),
            dependent: Dependent::default(),
            endogenous: endogenous.iter().map(|s| s.to_string()).collect(),
            exogenous: default_exogenous(),
            fixed_effects: default_fixed_effects(),
            estimator: Estimator::default(),
            interactions: Vec::new(),
            iv_map: BTreeMap::new(),
            bootstrap: BootstrapConfig::default(),
            iqr: BTreeMap::new(),
        }
    }

    /// Instrument columns for one endogenous variable.
    pub fn instruments_for(&self, variable: &str) -> Result<Vec<String>> {
        let entries = self
            .iv_map
            .get(variable)
            .cloned()
            .unwrap_or_else(|| default_instruments(variable));
        let cols = expand_instruments(&entries)?;
        if cols.is_empty() {
            return Err(Error::Spec(format!("no instruments for endogenous variable `{variable}`")));
        }
        Ok(cols)
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() || self.name.contains(['/', '\\']) {
            return Err(Error::Spec(format!("bad specification name `{}`", self.name)));
        }
        if self.endogenous.is_empty() {
            return Err(Error::Spec("no endogenous variables".into()));
        }
        for v in &self.endogenous {
            if !ENDOGENOUS.contains(&v.as_str()) {
                return Err(Error::Spec(format!("unknown endogenous variable `{v}`")));
            }
            if self.estimator == Estimator::ControlFunction {
                self.instruments_for(v)?;
            }
        }
        for v in &self.exogenous {
            if !EXOGENOUS.contains(&v.as_str()) {
                return Err(Error::Spec(format!("unknown exogenous variable `{v}`")));
            }
        }
        if self.fixed_effects.is_empty() {
            return Err(Error::Spec("at least one fixed-effect dimension is required".into()));
        }
        for ib in &self.interactions {
            if !self.endogenous.contains(&ib.variable) {
                return Err(Error::Spec(format!("interaction variable `{}` is not endogenous", ib.variable)));
            }
            if ib.bins.len() < 2 {
                return Err(Error::Spec(format!("`{}` needs at least two bins", ib.variable)));
            }
            for w in ib.bins.windows(2) {
                let ordered = matches!((w[0].to, w[1].from), (Some(t), Some(f)) if t < f);
                if !ordered {
                    return Err(Error::Spec(format!(
                        "bins `{}` and `{}` of `{}` overlap or are out of order",
                        w[0].label, w[1].label, ib.variable
                    )));
                }
            }
        }
        let b = self.bootstrap.replicates;
        if b > 0 && b < 100 {
            return Err(Error::Config(format!("bootstrap replicates must be 0 or at least 100, got {b}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefKind {
    Endogenous,
    Interaction,
    Residual,
    Exogenous,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeKind {
    Classical,
    Robust,
    Bootstrap,
}

/// Two-sided normal critical values at 1%, 5% and 10%.
pub fn stars(estimate: f64, se: f64) -> &'static str {
    let z = (estimate / se).abs();
    if !z.is_finite() {
        ""
    } else if z >= 2.576 {
        "***"
    } else if z >= 1.960 {
        "**"
    } else if z >= 1.645 {
        "*"
    } else {
        ""
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coefficient {
    pub name: String,
    pub kind: CoefKind,
    pub estimate: f64,
    pub se: f64,
    pub se_kind: SeKind,
    pub ci_low: f64,
    pub ci_high: f64,
    pub robust_se: f64,
}

impl Coefficient {
    pub fn stars(&self) -> &'static str {
        stars(self.estimate, self.se)
    }
}

/// F statistics above this are reported as capped.
pub const F_CAP: f64 = 1e12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirstStage {
    pub variable: String,
    pub instruments: Vec<String>,
    pub f_classical: f64,
    /// Heteroskedasticity-robust (HC1).
    pub f_robust: f64,
    /// Robust to correlation within bootstrap clusters.
    pub f_cluster: f64,
    pub capped: bool,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub seed: u64,
    pub redraws: usize,
    pub cluster: ClusterUnit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectRow {
    pub variable: String,
    pub bin: String,
    pub beta: f64,
    pub iqr: f64,
    /// β × IQR × 100.
    pub effect_pct: f64,
    /// (exp(β × IQR) − 1) × 100.
    pub exact_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegressionFit {
    pub name: String,
    pub estimator: Estimator,
    pub dependent: Dependent,
    pub n: usize,
    pub clusters: usize,
    pub fe_groups: Vec<(String, usize)>,
    pub dropped_missing: usize,
    pub dropped_singletons: usize,
    pub r2_within: f64,
    pub sweeps: usize,
    pub coefficients: Vec<Coefficient>,
    pub first_stages: Vec<FirstStage>,
    pub bootstrap: Option<BootstrapSummary>,
    pub effects: Vec<EffectRow>,
}

impl RegressionFit {
    pub fn coefficient(&self, name: &str) -> Option<&Coefficient> {
        self.coefficients.iter().find(|c| c.name == name)
    }

    pub fn first_stage(&self, variable: &str) -> Option<&FirstStage> {
        self.first_stages.iter().find(|f| f.variable == variable)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_map_omits_regional_instruments_for_mmc() {
        let s = RegressionSpec::new("t", &["csc", "regional_share", "mmc"]);
        assert_eq!(s.instruments_for("mmc").unwrap(), NETWORK.to_vec());
        let share = s.instruments_for("regional_share").unwrap();
        assert!(share.starts_with(&OWN_WEATHER.map(String::from)));
        assert_eq!(share.len(), 9);
        assert_eq!(s.instruments_for("csc").unwrap()[0], "comp_precipitation");
        s.validate().unwrap();
    }

    #[test]
    fn validation_errors() {
        let mut s = RegressionSpec::new("t", &["price"]);
        assert!(s.validate().is_err());
        s.endogenous = vec!["csc".into()];
        s.iv_map.insert("csc".into(), vec![]);
        assert!(s.validate().is_err());
        s.iv_map.insert("csc".into(), vec!["rain".into()]);
        assert!(s.validate().is_err());
        s.iv_map.clear();
        s.bootstrap.replicates = 50;
        assert!(matches!(s.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn star_thresholds() {
        assert_eq!(stars(2.6, 1.0), "***");
        assert_eq!(stars(-2.0, 1.0), "**");
        assert_eq!(stars(1.7, 1.0), "*");
        assert_eq!(stars(1.0, 1.0), "");
    }

    #[test]
    fn spec_from_toml() {
        let s: RegressionSpec = toml::from_str(
            r#"
            name = "cf"
            endogenous = ["csc", "regional_share", "mmc"]
            [bootstrap]
            B = 200
            seed = 7
            [[interactions]]
            variable = "csc"
            bins = [{ label = "pre2004", to = 2003 }, { label = "2004-2012", from = 2004, to = 2012 }, { label = "post2012", from = 2013 }]
            "#,
        )
        .unwrap();
        assert_eq!(s.bootstrap.replicates, 200);
        assert_eq!(s.fixed_effects.len(), 3);
        assert!(s.interactions[0].bins[2].contains(2016));
        s.validate().unwrap();
    }
}
