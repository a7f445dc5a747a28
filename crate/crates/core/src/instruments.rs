//! Excluded variables for the first stages: weather extremes along routes
//! (own and competitors'), competitors' regional network sizes, and
//! competitors' network sizes.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::ingest::{AirportWeather, Date, Table};
use crate::panel::{CarrierMarketPeriod, PathAirports, RegionalNetwork, RegionalUsageShare};
use crate::types::{Airport, Carrier, Market, Period};

pub const WEATHER_ELEMENTS: [&str; 4] = ["precipitation", "snowfall", "snow_depth", "min_temperature"];

/// Quarterly means over the days each element was observed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuarterlyAirportWeather {
    pub airport: Airport,
    pub period: Period,
    pub days: usize,
    pub avg_precipitation: Option<f64>,
    pub avg_snowfall: Option<f64>,
    pub avg_snow_depth: Option<f64>,
    pub avg_min_temperature: Option<f64>,
}

impl QuarterlyAirportWeather {
    pub fn values(&self) -> [Option<f64>; 4] {
        [
            self.avg_precipitation,
            self.avg_snowfall,
            self.avg_snow_depth,
            self.avg_min_temperature,
        ]
    }
}

impl Table for QuarterlyAirportWeather {
    const NAME: &'static str = "quarterly_weather.csv";
    const COLUMNS: &'static [&'static str] = &[
        "airport",
        "period",
        "days",
        "avg_precipitation",
        "avg_snowfall",
        "avg_snow_depth",
        "avg_min_temperature",
    ];
}

/// Airport-quarters with no observation day are absent.
pub fn quarterly_weather(weather: &AirportWeather, period: Period) -> BTreeMap<Airport, QuarterlyAirportWeather> {
    let days: BTreeSet<Date> = Date::quarter_days(period).into_iter().collect();
    let mut out = BTreeMap::new();
    for (airport, obs) in &weather.by_airport {
        let mut sums = [0.0; 4];
        let mut counts = [0usize; 4];
        let mut n = 0;
        for o in obs.iter().filter(|o| days.contains(&o.date)) {
            n += 1;
            for (e, v) in o.elements().into_iter().enumerate() {
                if let Some(v) = v {
                    sums[e] += v;
                    counts[e] += 1;
                }
            }
        }
        if n == 0 {
            continue;
        }
        let avg = |e: usize| (counts[e] > 0).then(|| sums[e] / counts[e] as f64);
        out.insert(
            airport.clone(),
            QuarterlyAirportWeather {
                airport: airport.clone(),
                period,
                days: n,
                avg_precipitation: avg(0),
                avg_snowfall: avg(1),
                avg_snow_depth: avg(2),
                avg_min_temperature: avg(3),
            },
        );
    }
    out
}

/// Maximum precipitation, snowfall and snow depth and minimum temperature
/// over the given airports. `None` if some element is unobserved at every
/// airport.
pub fn route_extreme_weather<'a>(
    airports: impl IntoIterator<Item = &'a Airport>,
    qweather: &BTreeMap<Airport, QuarterlyAirportWeather>,
) -> Option<[f64; 4]> {
    let mut ext: [Option<f64>; 4] = [None; 4];
    for a in airports {
        let Some(q) = qweather.get(a) else { continue };
        for (e, v) in q.values().into_iter().enumerate() {
            let Some(v) = v else { continue };
            ext[e] = Some(match ext[e] {
                None => v,
                Some(cur) if e == 3 => cur.min(v),
                Some(cur) => cur.max(v),
            });
        }
    }
    Some([ext[0]?, ext[1]?, ext[2]?, ext[3]?])
}

/// Competitors' extremes summed elementwise, with the number of
/// competitors whose extremes were missing. `None` for monopolies or when
/// no competitor has weather.
pub fn competitor_weather_iv(
    majors: &[Carrier],
    extremes: &BTreeMap<Carrier, Option<[f64; 4]>>,
) -> BTreeMap<Carrier, (Option<[f64; 4]>, usize)> {
    let mut out = BTreeMap::new();
    for j in majors {
        let mut sum = [0.0; 4];
        let (mut avail, mut missing) = (0, 0);
        for i in majors.iter().filter(|i| *i != j) {
            match extremes.get(i).copied().flatten() {
                Some(x) => {
                    avail += 1;
                    for e in 0..4 {
                        sum[e] += x[e];
                    }
                }
                None => missing += 1,
            }
        }
        out.insert(j.clone(), ((avail > 0).then_some(sum), missing));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Sum,
    Mean,
}

/// For each major: competitors' average network size of the regionals they
/// use in the market, aggregated over competitors. A competitor without
/// regionals contributes 0.
pub fn regional_network_iv(
    majors: &[Carrier],
    regionals_used: &BTreeMap<Carrier, BTreeSet<Carrier>>,
    sizes: &BTreeMap<Carrier, f64>,
    aggregation: Aggregation,
) -> BTreeMap<Carrier, f64> {
    let avg_size = |i: &Carrier| -> f64 {
        match regionals_used.get(i) {
            Some(ks) if !ks.is_empty() => {
                ks.iter().map(|k| sizes.get(k).copied().unwrap_or(0.0)).sum::<f64>() / ks.len() as f64
            }
            _ => 0.0,
        }
    };
    majors
        .iter()
        .map(|j| {
            let comps: Vec<f64> = majors.iter().filter(|i| *i != j).map(avg_size).collect();
            let total: f64 = comps.iter().sum();
            let v = match aggregation {
                Aggregation::Sum => total,
                Aggregation::Mean if comps.is_empty() => 0.0,
                Aggregation::Mean => total / comps.len() as f64,
            };
            (j.clone(), v)
        })
        .collect()
}

/// Fixed-arity summary of competitors' origin and destination market counts.
#[derive(Debug, Clone, PartialEq)]
pub struct NetworkFeatures {
    pub origin_sum: f64,
    pub origin_mean: f64,
    pub destination_sum: f64,
    pub destination_mean: f64,
    /// (competitor, origin count, destination count).
    pub raw: Vec<(Carrier, f64, f64)>,
}

/// `counts` maps each major to its (origin, destination) market counts.
/// Monopolies get no features.
pub fn network_iv(majors: &[Carrier], counts: &BTreeMap<Carrier, (f64, f64)>) -> BTreeMap<Carrier, NetworkFeatures> {
    let mut out = BTreeMap::new();
    if majors.len() < 2 {
        return out;
    }
    for j in majors {
        let raw: Vec<(Carrier, f64, f64)> = majors
            .iter()
            .filter(|i| *i != j)
            .map(|i| {
                let (o, d) = counts.get(i).copied().unwrap_or((0.0, 0.0));
                (i.clone(), o, d)
            })
            .collect();
        let k = raw.len() as f64;
        let origin_sum: f64 = raw.iter().map(|r| r.1).sum();
        let destination_sum: f64 = raw.iter().map(|r| r.2).sum();
        out.insert(
            j.clone(),
            NetworkFeatures {
                origin_sum,
                origin_mean: origin_sum / k,
                destination_sum,
                destination_mean: destination_sum / k,
                raw,
            },
        );
    }
    out
}

/// Excluded variables for one panel cell. Weather columns are empty when
/// missing; network columns are empty for monopoly markets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstrumentVector {
    pub carrier: Carrier,
    pub market: Market,
    pub period: Period,
    pub own_precipitation: Option<f64>,
    pub own_snowfall: Option<f64>,
    pub own_snow_depth: Option<f64>,
    pub own_min_temperature: Option<f64>,
    pub comp_precipitation: Option<f64>,
    pub comp_snowfall: Option<f64>,
    pub comp_snow_depth: Option<f64>,
    pub comp_min_temperature: Option<f64>,
    pub comp_weather_missing: usize,
    pub regional_network_iv: Option<f64>,
    pub net_origin_sum: Option<f64>,
    pub net_origin_mean: Option<f64>,
    pub net_destination_sum: Option<f64>,
    pub net_destination_mean: Option<f64>,
    /// `CARRIER:origin:destination` per competitor, `|`-separated.
    pub net_raw: String,
}

impl Table for InstrumentVector {
    const NAME: &'static str = "instruments.csv";
    const COLUMNS: &'static [&'static str] = &[
        "carrier",
        "market",
        "period",
        "own_precipitation",
        "own_snowfall",
        "own_snow_depth",
        "own_min_temperature",
        "comp_precipitation",
        "comp_snowfall",
        "comp_snow_depth",
        "comp_min_temperature",
        "comp_weather_missing",
        "regional_network_iv",
        "net_origin_sum",
        "net_origin_mean",
        "net_destination_sum",
        "net_destination_mean",
        "net_raw",
    ];
}

impl InstrumentVector {
    pub fn empty(carrier: Carrier, market: Market, period: Period) -> Self {
        InstrumentVector {
            carrier,
            market,
            period,
            own_precipitation: None,
            own_snowfall: None,
            own_snow_depth: None,
            own_min_temperature: None,
            comp_precipitation: None,
            comp_snowfall: None,
            comp_snow_depth: None,
            comp_min_temperature: None,
            comp_weather_missing: 0,
            regional_network_iv: None,
            net_origin_sum: None,
            net_origin_mean: None,
            net_destination_sum: None,
            net_destination_mean: None,
            net_raw: String::new(),
        }
    }

    fn slot(&mut self, name: &str) -> Option<&mut Option<f64>> {
        Some(match name {
            "own_precipitation" => &mut self.own_precipitation,
            "own_snowfall" => &mut self.own_snowfall,
            "own_snow_depth" => &mut self.own_snow_depth,
            "own_min_temperature" => &mut self.own_min_temperature,
            "comp_precipitation" => &mut self.comp_precipitation,
            "comp_snowfall" => &mut self.comp_snowfall,
            "comp_snow_depth" => &mut self.comp_snow_depth,
            "comp_min_temperature" => &mut self.comp_min_temperature,
            "regional_network_iv" => &mut self.regional_network_iv,
            "net_origin_sum" => &mut self.net_origin_sum,
            "net_origin_mean" => &mut self.net_origin_mean,
            "net_destination_sum" => &mut self.net_destination_sum,
            "net_destination_mean" => &mut self.net_destination_mean,
            _ => return None,
        })
    }

    /// Sets a named instrument column; false for unknown names.
    pub fn set(&mut self, name: &str, value: Option<f64>) -> bool {
        match self.slot(name) {
            Some(s) => {
                *s = value;
                true
            }
            None => false,
        }
    }

    /// Value of a named instrument column.
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "own_precipitation" => self.own_precipitation,
            "own_snowfall" => self.own_snowfall,
            "own_snow_depth" => self.own_snow_depth,
            "own_min_temperature" => self.own_min_temperature,
            "comp_precipitation" => self.comp_precipitation,
            "comp_snowfall" => self.comp_snowfall,
            "comp_snow_depth" => self.comp_snow_depth,
            "comp_min_temperature" => self.comp_min_temperature,
            "regional_network_iv" => self.regional_network_iv,
            "net_origin_sum" => self.net_origin_sum,
            "net_origin_mean" => self.net_origin_mean,
            "net_destination_sum" => self.net_destination_sum,
            "net_destination_mean" => self.net_destination_mean,
            _ => None,
        }
    }

    pub fn has_column(name: &str) -> bool {
        Self::COLUMNS[3..17].contains(&name) && name != "comp_weather_missing"
    }
}

pub const OWN_WEATHER: [&str; 4] = ["own_precipitation", "own_snowfall", "own_snow_depth", "own_min_temperature"];
pub const COMP_WEATHER: [&str; 4] = ["comp_precipitation", "comp_snowfall", "comp_snow_depth", "comp_min_temperature"];
pub const REGIONAL_NETWORK: [&str; 1] = ["regional_network_iv"];
pub const NETWORK: [&str; 4] = ["net_origin_sum", "net_origin_mean", "net_destination_sum", "net_destination_mean"];

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct InstrumentConfig {
    pub regional_network_aggregation: Aggregation,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct InstrumentReport {
    pub cells: usize,
    pub missing_own_weather: usize,
    pub missing_competitor_weather: usize,
    pub monopoly_cells: usize,
}

/// One vector per panel cell, in panel order.
pub fn build_instruments(
    cells: &[CarrierMarketPeriod],
    usage: &[RegionalUsageShare],
    paths: &[PathAirports],
    regional_networks: &[RegionalNetwork],
    weather: &AirportWeather,
    config: &InstrumentConfig,
) -> (Vec<InstrumentVector>, InstrumentReport) {
    let path_of: BTreeMap<(&Carrier, &Market, Period), BTreeSet<Airport>> =
        paths.iter().map(|p| ((&p.carrier, &p.market, p.period), p.set())).collect();
    let mut used: BTreeMap<(&Market, Period), BTreeMap<Carrier, BTreeSet<Carrier>>> = BTreeMap::new();
    for u in usage.iter().filter(|u| u.share > 0.0) {
        used.entry((&u.market, u.period))
            .or_default()
            .entry(u.major.clone())
            .or_default()
            .insert(u.regional.clone());
    }
    let mut sizes: BTreeMap<Period, BTreeMap<Carrier, f64>> = BTreeMap::new();
    for r in regional_networks {
        sizes.entry(r.period).or_default().insert(r.regional.clone(), r.airports as f64);
    }
    let mut by_market: BTreeMap<(Period, &Market), Vec<&CarrierMarketPeriod>> = BTreeMap::new();
    for c in cells {
        by_market.entry((c.period, &c.market)).or_default().push(c);
    }

    let mut qw_cache: BTreeMap<Period, BTreeMap<Airport, QuarterlyAirportWeather>> = BTreeMap::new();
    let mut report = InstrumentReport::default();
    let mut out: BTreeMap<(Period, &Market, &Carrier), InstrumentVector> = BTreeMap::new();
    let empty_sizes = BTreeMap::new();
    let empty_used = BTreeMap::new();

    for ((period, market), group) in &by_market {
        let qw = qw_cache.entry(*period).or_insert_with(|| quarterly_weather(weather, *period));
        let majors: Vec<Carrier> = group.iter().map(|c| c.carrier.clone()).collect();
        let extremes: BTreeMap<Carrier, Option<[f64; 4]>> = group
            .iter()
            .map(|c| {
                let ap = path_of.get(&(&c.carrier, &c.market, c.period));
                let fallback = [c.market.origin.clone(), c.market.destination.clone()];
                let x = match ap {
                    Some(set) => route_extreme_weather(set, qw),
                    None => route_extreme_weather(&fallback, qw),
                };
                (c.carrier.clone(), x)
            })
            .collect();
        let comp = competitor_weather_iv(&majors, &extremes);
        let rn = regional_network_iv(
            &majors,
            used.get(&(*market, *period)).unwrap_or(&empty_used),
            sizes.get(period).unwrap_or(&empty_sizes),
            config.regional_network_aggregation,
        );
        let counts: BTreeMap<Carrier, (f64, f64)> = group
            .iter()
            .map(|c| {
                let o = (c.network_origin * 100.0).round();
                let d = (c.network_destination * 100.0).round();
                (c.carrier.clone(), (o, d))
            })
            .collect();
        let net = network_iv(&majors, &counts);
        let monopoly = majors.len() < 2;

        for c in group {
            report.cells += 1;
            let own = extremes[&c.carrier];
            let (cw, missing) = comp[&c.carrier];
            if own.is_none() {
                report.missing_own_weather += 1;
            }
            if monopoly {
                report.monopoly_cells += 1;
            } else if cw.is_none() {
                report.missing_competitor_weather += 1;
            }
            let nf = net.get(&c.carrier);
            out.insert(
                (c.period, &c.market, &c.carrier),
                InstrumentVector {
                    carrier: c.carrier.clone(),
                    market: c.market.clone(),
                    period: c.period,
                    own_precipitation: own.map(|x| x[0]),
                    own_snowfall: own.map(|x| x[1]),
                    own_snow_depth: own.map(|x| x[2]),
                    own_min_temperature: own.map(|x| x[3]),
                    comp_precipitation: cw.map(|x| x[0]),
                    comp_snowfall: cw.map(|x| x[1]),
                    comp_snow_depth: cw.map(|x| x[2]),
                    comp_min_temperature: cw.map(|x| x[3]),
                    comp_weather_missing: missing,
                    regional_network_iv: (!monopoly).then(|| rn[&c.carrier]),
                    net_origin_sum: nf.map(|f| f.origin_sum),
                    net_origin_mean: nf.map(|f| f.origin_mean),
                    net_destination_sum: nf.map(|f| f.destination_sum),
                    net_destination_mean: nf.map(|f| f.destination_mean),
                    net_raw: nf
                        .map(|f| {
                            f.raw
                                .iter()
                                .map(|(i, o, d)| format!("{i}:{o}:{d}"))
                                .collect::<Vec<_>>()
                                .join("|")
                        })
                        .unwrap_or_default(),
                },
            );
        }
    }
    (out.into_values().collect(), report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::WeatherObservation;

    fn c(s: &str) -> Carrier {
        Carrier::new(s)
    }

    fn q(airport: &str, vals: [f64; 4]) -> (Airport, QuarterlyAirportWeather) {
        (
            Airport::new(airport),
            QuarterlyAirportWeather {
                airport: Airport::new(airport),
                period: Period::new(2016, 2),
                days: 91,
                avg_precipitation: Some(vals[0]),
                avg_snowfall: Some(vals[1]),
                avg_snow_depth: Some(vals[2]),
                avg_min_temperature: Some(vals[3]),
            },
        )
    }

    fn days(station: &str, f: impl Fn(usize) -> Option<f64>) -> Vec<WeatherObservation> {
        Date::quarter_days(Period::new(2016, 1))
            .into_iter()
            .take(90)
            .enumerate()
            .map(|(i, date)| WeatherObservation {
                station_id: station.into(),
                date,
                precipitation: Some(1.0),
                snowfall: f(i),
                snow_depth: Some(0.0),
                min_temperature: Some(-10.0),
            })
            .collect()
    }

    fn weather(obs: Vec<WeatherObservation>) -> AirportWeather {
        let mut w = AirportWeather::default();
        w.by_airport.insert(Airport::new("CHO"), obs);
        w
    }

    #[test]
    fn quarterly_means_use_available_days() {
        let p = Period::new(2016, 1);
        let w = weather(days("S", |_| Some(10.0)));
        assert_eq!(quarterly_weather(&w, p)[&Airport::new("CHO")].avg_snowfall, Some(10.0));

        let w = weather(days("S", |i| Some(if i < 45 { 0.0 } else { 20.0 })));
        assert_eq!(quarterly_weather(&w, p)[&Airport::new("CHO")].avg_snowfall, Some(10.0));

        let w = weather(days("S", |i| (i >= 10).then_some(9.0)));
        let qw = quarterly_weather(&w, p);
        assert_eq!(qw[&Airport::new("CHO")].avg_snowfall, Some(9.0));
        assert_eq!(qw[&Airport::new("CHO")].days, 90);

        assert!(quarterly_weather(&w, Period::new(2016, 3)).is_empty());
    }

    #[test]
    fn extremes_over_path_airports() {
        let qw: BTreeMap<_, _> = [
            q("CHO", [20.0, 1.0, 3.0, 50.0]),
            q("CLT", [25.0, 0.5, 1.0, 80.0]),
            q("DFW", [31.0, 0.0, 0.0, 110.0]),
        ]
        .into_iter()
        .collect();
        let path = [Airport::new("CHO"), Airport::new("CLT"), Airport::new("DFW")];
        assert_eq!(route_extreme_weather(&path, &qw), Some([31.0, 1.0, 3.0, 50.0]));
        assert_eq!(route_extreme_weather(&path[2..], &qw), Some([31.0, 0.0, 0.0, 110.0]));
        assert_eq!(route_extreme_weather(&[Airport::new("XNA")], &qw), None);
    }

    #[test]
    fn element_missing_everywhere_makes_cell_missing() {
        let (a, mut w) = q("CHO", [1.0, 1.0, 1.0, 1.0]);
        w.avg_snow_depth = None;
        let qw: BTreeMap<_, _> = [(a.clone(), w)].into_iter().collect();
        assert_eq!(route_extreme_weather(&[a], &qw), None);
    }

    #[test]
    fn competitor_sums() {
        let majors = [c("AA"), c("DL"), c("UA")];
        let ext: BTreeMap<_, _> = [
            (c("AA"), Some([1.0; 4])),
            (c("DL"), Some([2.0; 4])),
            (c("UA"), Some([3.0; 4])),
        ]
        .into_iter()
        .collect();
        let iv = competitor_weather_iv(&majors, &ext);
        assert_eq!(iv[&c("AA")], (Some([5.0; 4]), 0));

        let iv = competitor_weather_iv(&majors[..2], &ext);
        assert_eq!(iv[&c("AA")], (Some([2.0; 4]), 0));

        let mut ext = ext;
        ext.insert(c("UA"), None);
        assert_eq!(competitor_weather_iv(&majors, &ext)[&c("AA")], (Some([2.0; 4]), 1));
        assert_eq!(competitor_weather_iv(&majors[..1], &ext)[&c("AA")], (None, 0));
    }

    #[test]
    fn regional_network_average_then_sum() {
        let majors = [c("AA"), c("DL"), c("UA")];
        let sizes: BTreeMap<_, _> = [(c("OO"), 20.0), (c("EV"), 40.0), (c("YV"), 30.0)].into_iter().collect();
        let used: BTreeMap<_, _> = [
            (c("DL"), [c("OO"), c("EV")].into_iter().collect()),
            (c("UA"), [c("OO"), c("EV")].into_iter().collect()),
        ]
        .into_iter()
        .collect();
        let iv = regional_network_iv(&majors, &used, &sizes, Aggregation::Sum);
        assert_eq!(iv[&c("AA")], 60.0);
        assert_eq!(iv[&c("DL")], 30.0);
        assert_eq!(regional_network_iv(&majors, &used, &sizes, Aggregation::Mean)[&c("AA")], 30.0);

        let used: BTreeMap<_, _> = [(c("DL"), [c("YV")].into_iter().collect())].into_iter().collect();
        assert_eq!(regional_network_iv(&majors[..2], &used, &sizes, Aggregation::Sum)[&c("AA")], 30.0);
        assert_eq!(regional_network_iv(&majors[..2], &used, &sizes, Aggregation::Sum)[&c("DL")], 0.0);
    }

    #[test]
    fn network_features() {
        let counts: BTreeMap<_, _> = [(c("AA"), (5.0, 5.0)), (c("DL"), (12.0, 9.0)), (c("UA"), (4.0, 1.0))]
            .into_iter()
            .collect();
        let f = network_iv(&[c("AA"), c("DL")], &counts);
        assert_eq!((f[&c("AA")].origin_sum, f[&c("AA")].destination_sum), (12.0, 9.0));
        let f = network_iv(&[c("AA"), c("DL"), c("UA")], &counts);
        let aa = &f[&c("AA")];
        assert_eq!((aa.origin_sum, aa.origin_mean, aa.destination_sum, aa.destination_mean), (16.0, 8.0, 10.0, 5.0));
        assert_eq!(aa.raw.len(), 2);
        assert!(network_iv(&[c("AA")], &counts).is_empty());
    }
}
