//! Synthetic itinerary, weather and ownership data with a known price
//! equation.
//!
//! Layout of a generated world:
//!
//! * core markets between spoke airports, each served by a fixed set of two
//!   or more majors routed through their own hub, with one independent
//!   regional per market-period shared by every major present;
//! * background duopoly markets between `X` airports, whose number per
//!   carrier pair drives multimarket contact;
//! * monopoly feeder markets from spokes to `F` airports, which drive the
//!   carriers' network sizes;
//! * footprint markets between `W` airports, which set each regional's
//!   network size;
//! * fare and yield outliers on the `Z` airports, sized to be exactly the
//!   observations the percentile trim removes.
//!
//! Regional usage responds to weather on the route, to the regional's
//! network size and to the latent cost shock that also enters prices.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{
    write_table, AirportStateRecord, AirportStationRecord, AirportWeather, CouponRecord, CpiRecord, Date,
    MarketRecord, OwnershipRecord, Table, TicketRecord, WeatherObservation,
};
use crate::instruments::{quarterly_weather, route_extreme_weather, QuarterlyAirportWeather};
use crate::metrics::MMC_SCALE;
use crate::sample::{DropReason, DropRecord};
use crate::types::{Airport, Carrier, Market, Period};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DgpConfig {
    pub seed: u64,
    pub majors: usize,
    pub regionals: usize,
    pub spokes: usize,
    pub markets: usize,
    pub first_year: i32,
    pub periods: usize,
    pub min_majors_per_market: usize,
    pub max_majors_per_market: usize,
    pub min_passengers: u32,
    pub max_passengers: u32,

    pub beta_csc: f64,
    pub beta_share: f64,
    pub beta_mmc: f64,
    pub gamma_origin: f64,
    pub gamma_destination: f64,

    /// Correlation between the latent cost shock and lower regional use.
    pub endogeneity: f64,
    /// Loading of the latent shock in log price.
    pub shock_loading: f64,
    /// Variance share of the latent shock common to all carriers in a
    /// market-period.
    pub market_shock_weight: f64,
    pub weather_strength: f64,
    pub regional_network_strength: f64,
    /// Loading of carrier network shocks on contact and feeder market counts.
    pub network_strength: f64,

    /// Regional use at zero index.
    pub usage_base: f64,
    pub usage_noise: f64,
    pub price_noise: f64,
    pub carrier_shock_sd: f64,
    pub mean_contact_markets: f64,
    pub mean_feeder_markets: f64,
    pub max_feeder_markets: usize,
    pub max_footprint_markets: usize,
    pub background_airports: usize,
    pub weather_missing_rate: f64,
    /// Percentile the outliers are sized for; 0 injects none.
    pub outlier_trim_percent: usize,
    /// Adds one ticket per sample filter plus a roundtrip.
    pub inject_violations: bool,
}

impl Default for DgpConfig {
    fn default() -> Self {
        DgpConfig {
            seed: 1,
            majors: 6,
            regionals: 5,
            spokes: 30,
            markets: 200,
            first_year: 2005,
            periods: 8,
            min_majors_per_market: 2,
            max_majors_per_market: 4,
            min_passengers: 200,
            max_passengers: 600,
            beta_csc: 0.08,
            beta_share: -0.21,
            beta_mmc: 0.023,
            gamma_origin: 0.05,
            gamma_destination: 0.03,
            endogeneity: 0.5,
            shock_loading: 0.2,
            market_shock_weight: 0.8,
            weather_strength: 0.6,
            regional_network_strength: 0.4,
            network_strength: 1.0,
            usage_base: 0.3,
            usage_noise: 0.5,
            price_noise: 0.1,
            carrier_shock_sd: 0.5,
            mean_contact_markets: 20.0,
            mean_feeder_markets: 4.0,
            max_feeder_markets: 25,
            max_footprint_markets: 10,
            background_airports: 80,
            weather_missing_rate: 0.02,
            outlier_trim_percent: 1,
            inject_violations: false,
        }
    }
}

impl DgpConfig {
    /// All instrument channels switched off.
    pub fn without_instruments(mut self) -> Self {
        self.weather_strength = 0.0;
        self.regional_network_strength = 0.0;
        self.network_strength = 0.0;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Infeasible(m));
        if self.majors < 2 {
            return bad(format!("{} majors; at least 2 are needed for contact", self.majors));
        }
        if self.regionals < 1 || self.regionals > 99 {
            return bad(format!("{} regionals; between 1 and 99 supported", self.regionals));
        }
        if self.majors > 9 {
            return bad(format!("{} majors; at most 9 supported", self.majors));
        }
        if self.min_majors_per_market < 2 || self.min_majors_per_market > self.max_majors_per_market {
            return bad("majors per market must satisfy 2 <= min <= max".into());
        }
        if self.max_majors_per_market > self.majors {
            return bad(format!(
                "up to {} majors per market but only {} majors",
                self.max_majors_per_market, self.majors
            ));
        }
        if self.spokes < 3 || self.spokes > 99 {
            return bad(format!("{} spokes; between 3 and 99 supported", self.spokes));
        }
        if self.markets == 0 || self.markets > self.spokes * (self.spokes - 1) {
            return bad(format!(
                "{} markets cannot be placed on {} spokes ({} ordered pairs)",
                self.markets,
                self.spokes,
                self.spokes * (self.spokes - 1)
            ));
        }
        if self.periods < 2 {
            return bad("at least two periods are needed for year effects".into());
        }
        if self.min_passengers < 2 || self.min_passengers > self.max_passengers {
            return bad("passengers per cell must satisfy 2 <= min <= max".into());
        }
        if !(self.endogeneity > -1.0 && self.endogeneity < 1.0) {
            return bad(format!("endogeneity {} outside (-1, 1)", self.endogeneity));
        }
        if !(0.0..=1.0).contains(&self.market_shock_weight) {
            return bad("market shock weight outside [0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.weather_missing_rate) {
            return bad("weather missing rate outside [0, 1)".into());
        }
        if !(self.usage_base > 0.0 && self.usage_base < 1.0) {
            return bad("usage base outside (0, 1)".into());
        }
        if self.background_airports < 2 || self.background_airports > 999 {
            return bad("between 2 and 999 background airports supported".into());
        }
        if self.max_feeder_markets > 99 || self.max_footprint_markets > 99 {
            return bad("at most 99 feeder and footprint markets per carrier".into());
        }
        if self.outlier_trim_percent >= 50 {
            return bad("outlier trim percent must be below 50".into());
        }
        Ok(())
    }
}

/// Realized values for one core cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthCell {
    pub carrier: Carrier,
    pub market: Market,
    pub period: Period,
    pub latent_shock: f64,
    pub usage_probability: f64,
    pub regional_share: f64,
    pub csc: f64,
    pub mmc: f64,
    pub network_origin: f64,
    pub network_destination: f64,
    pub log_price: f64,
}

impl Table for TruthCell {
    const NAME: &'static str = "truth.csv";
    const COLUMNS: &'static [&'static str] = &[
        "carrier",
        "market",
        "period",
        "latent_shock",
        "usage_probability",
        "regional_share",
        "csc",
        "mmc",
        "network_origin",
        "network_destination",
        "log_price",
    ];
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub config: DgpConfig,
    pub cells: Vec<TruthCell>,
    /// Every drop the sample builder should record.
    pub expected_drops: Vec<DropRecord>,
    /// Roundtrip ticket that must come out as two half-fare trips.
    pub roundtrip: Option<(String, f64)>,
}

/// Input files in ingestion schemas.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SynthBundle {
    pub coupons: Vec<CouponRecord>,
    pub tickets: Vec<TicketRecord>,
    pub markets: Vec<MarketRecord>,
    pub ownership: Vec<OwnershipRecord>,
    pub cpi: Vec<CpiRecord>,
    pub airport_states: Vec<AirportStateRecord>,
    pub stations: Vec<AirportStationRecord>,
    pub weather: Vec<WeatherObservation>,
}

pub const BUNDLE_FILES: &[&str] = &[
    "coupons.csv",
    "tickets.csv",
    "markets.csv",
    "ownership.csv",
    "cpi.csv",
    "airport_states.csv",
    "stations.csv",
    "weather.csv",
];

impl SynthBundle {
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_table(&dir.join("coupons.csv"), &self.coupons)?;
        write_table(&dir.join("tickets.csv"), &self.tickets)?;
        write_table(&dir.join("markets.csv"), &self.markets)?;
        write_table(&dir.join("ownership.csv"), &self.ownership)?;
        write_table(&dir.join("cpi.csv"), &self.cpi)?;
        write_table(&dir.join("airport_states.csv"), &self.airport_states)?;
        write_table(&dir.join("stations.csv"), &self.stations)?;
        write_table(&dir.join("weather.csv"), &self.weather)?;
        Ok(())
    }
}

pub fn deflator(year: i32) -> f64 {
    1.025f64.powi(year - 2012)
}

const WEATHER_MEANS: [f64; 4] = [26.46, 1.30, 5.77, 95.94];
/// Signs of each weather element in regional use.
const WEATHER_LOADINGS: [f64; 4] = [1.0, 0.5, 0.5, -0.5];
const BASE_LOG_PRICE: f64 = 5.3;
const LOW_FARE: f64 = 21.0;
const HIGH_FARE: f64 = 20_000.0;

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> usize {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).map_or(0, |p| p.sample(rng) as usize)
}

/// Passengers and real fare of a trip outside the core markets.
fn side_trip(rng: &mut ChaCha8Rng) -> (u32, f64) {
    let pax = rng.random_range(50..=150);
    (pax, (BASE_LOG_PRICE + 0.2 * normal(rng)).exp())
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn zscores(v: &[f64]) -> Vec<f64> {
    let m = crate::stats::mean(v).unwrap_or(0.0);
    let sd = crate::stats::sample_sd(v).unwrap_or(0.0);
    v.iter().map(|x| if sd > 0.0 { (x - m) / sd } else { 0.0 }).collect()
}

/// Smallest `k` with `k = floor((base + 2k) * percent / 100)`.
fn trim_count(base: usize, percent: usize) -> usize {
    let mut k = 0;
    loop {
        let next = (base + 2 * k) * percent / 100;
        if next == k {
            return k;
        }
        k = next;
    }
}

struct Leg<'a> {
    from: &'a Airport,
    to: &'a Airport,
    operator: &'a Carrier,
    distance: f64,
}

#[derive(Default)]
struct Writer {
    bundle: SynthBundle,
    next_id: usize,
    /// Genuine directional trips per period.
    trips: BTreeMap<Period, Vec<f64>>,
}

impl Writer {
    fn id(&mut self, period: Period, tag: &str) -> String {
        self.next_id += 1;
        format!("{}{}-{tag}{:07}", period.year, period.quarter, self.next_id)
    }

    /// One ticket; `legs` split into outbound and return by `n_out`.
    #[allow(clippy::too_many_arguments)]
    fn ticket(
        &mut self,
        id: &str,
        period: Period,
        ticketing: &[&Carrier],
        legs: &[Leg],
        n_out: usize,
        passengers: u32,
        real_fare: f64,
    ) {
        let roundtrip = n_out < legs.len();
        for (i, leg) in legs.iter().enumerate() {
            self.bundle.coupons.push(CouponRecord {
                itinerary_id: id.to_string(),
                sequence: i as u32 + 1,
                ticketing_carrier: ticketing[i.min(ticketing.len() - 1)].clone(),
                operating_carrier: leg.operator.clone(),
                origin: leg.from.clone(),
                destination: leg.to.clone(),
                passengers: passengers as i64,
                distance: leg.distance,
                year: period.year,
                quarter: period.quarter,
            });
        }
        self.bundle.tickets.push(TicketRecord {
            itinerary_id: id.to_string(),
            fare: real_fare * deflator(period.year),
            roundtrip,
            credible: true,
            bulk_fare: false,
            coupons_outbound: n_out as u32,
            coupons_return: (legs.len() - n_out) as u32,
        });
        self.bundle.markets.push(MarketRecord {
            itinerary_id: id.to_string(),
            direction: 1,
            origin: legs[0].from.clone(),
            destination: legs[n_out - 1].to.clone(),
        });
        if roundtrip {
            self.bundle.markets.push(MarketRecord {
                itinerary_id: id.to_string(),
                direction: 2,
                origin: legs[n_out].from.clone(),
                destination: legs[legs.len() - 1].to.clone(),
            });
        }
    }

    /// A one-way trip that stays in the sample.
    fn genuine(&mut self, period: Period, tag: &str, carrier: &Carrier, legs: &[Leg], passengers: u32, fare: f64) {
        let id = self.id(period, tag);
        self.ticket(&id, period, &[carrier], legs, legs.len(), passengers, fare);
        self.trips.entry(period).or_default().push(fare);
    }
}

struct World {
    majors: Vec<Carrier>,
    regionals: Vec<Carrier>,
    hubs: Vec<Airport>,
    spokes: Vec<Airport>,
    coords: BTreeMap<Airport, (f64, f64)>,
}

impl World {
    fn distance(&self, a: &Airport, b: &Airport) -> f64 {
        let (p, q) = (self.coords[a], self.coords[b]);
        ((p.0 - q.0).hypot(p.1 - q.1)).round().max(50.0)
    }
}

fn place(rng: &mut ChaCha8Rng, coords: &mut BTreeMap<Airport, (f64, f64)>, code: String) -> Airport {
    let a = Airport::from(code);
    coords.insert(a.clone(), (rng.random_range(0.0..2500.0), rng.random_range(0.0..2500.0)));
    a
}

/// Draws one synthetic world. The same configuration always produces the
/// same bundle.
pub fn generate(config: &DgpConfig) -> Result<(SynthBundle, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut coords = BTreeMap::new();

    let majors: Vec<Carrier> = (1..=config.majors).map(|i| Carrier::new(format!("M{i}"))).collect();
    let regionals: Vec<Carrier> = (1..=config.regionals).map(|i| Carrier::new(format!("R{i}"))).collect();
    let hubs: Vec<Airport> = (0..config.majors).map(|i| place(&mut rng, &mut coords, format!("H{i:02}"))).collect();
    let spokes: Vec<Airport> = (0..config.spokes).map(|i| place(&mut rng, &mut coords, format!("S{i:02}"))).collect();
    let xs: Vec<Airport> = (0..config.background_airports)
        .map(|i| place(&mut rng, &mut coords, format!("X{i:03}")))
        .collect();
    let feeders: Vec<Vec<Airport>> = (0..config.majors)
        .map(|a| {
            (0..config.max_feeder_markets)
                .map(|k| place(&mut rng, &mut coords, format!("F{}{k:02}", a + 1)))
                .collect()
        })
        .collect();
    let ws: Vec<Airport> = (0..config.regionals * config.max_footprint_markets * 2)
        .map(|i| place(&mut rng, &mut coords, format!("W{i:04}")))
        .collect();
    let z: Vec<Airport> = (1..=2).map(|i| place(&mut rng, &mut coords, format!("Z{i:02}"))).collect();
    let v: Vec<Airport> = (1..=5).map(|i| place(&mut rng, &mut coords, format!("V{i:02}"))).collect();
    let world = World {
        majors,
        regionals,
        hubs,
        spokes,
        coords,
    };

    // Core markets and their fixed carriers.
    let mut pairs: Vec<(usize, usize)> = (0..config.spokes)
        .flat_map(|o| (0..config.spokes).filter(move |&d| d != o).map(move |d| (o, d)))
        .collect();
    pairs.shuffle(&mut rng);
    pairs.truncate(config.markets);
    pairs.sort_unstable();
    let core: Vec<(Market, Vec<usize>)> = pairs
        .iter()
        .map(|&(o, d)| {
            let n = rng.random_range(config.min_majors_per_market..=config.max_majors_per_market);
            let mut idx: Vec<usize> = (0..config.majors).collect();
            idx.shuffle(&mut rng);
            idx.truncate(n);
            idx.sort_unstable();
            (Market::new(world.spokes[o].clone(), world.spokes[d].clone()), idx)
        })
        .collect();
    let mut core_contacts = vec![vec![0usize; config.majors]; config.majors];
    let mut core_counts: BTreeMap<(usize, &Airport), usize> = BTreeMap::new();
    for (m, js) in &core {
        for &a in js {
            *core_counts.entry((a, &m.origin)).or_insert(0) += 1;
            for &b in js {
                if a != b {
                    core_contacts[a][b] += 1;
                }
            }
        }
    }

    let carrier_fe: Vec<f64> = (0..config.majors).map(|_| 0.1 * normal(&mut rng)).collect();
    let market_fe: Vec<f64> = core.iter().map(|_| 0.3 * normal(&mut rng)).collect();

    let mut w = Writer::default();
    let mut truth = Vec::new();
    let mut expected_drops = Vec::new();
    let mut roundtrip = None;
    let mut weather_all = Vec::new();
    let mut stations = Vec::new();
    let weather_airports: Vec<&Airport> = world.spokes.iter().chain(&world.hubs).collect();
    for a in &weather_airports {
        stations.push(AirportStationRecord {
            airport: (*a).clone(),
            station_id: format!("SYN000{a}"),
        });
    }
    let climate: Vec<([f64; 3], f64)> = weather_airports
        .iter()
        .map(|_| {
            let mut c = [0.0; 3];
            for x in &mut c {
                *x = (0.3 * normal(&mut rng) - 0.045).exp();
            }
            (c, 30.0 * normal(&mut rng))
        })
        .collect();

    for t in 0..config.periods {
        let period = Period::new(config.first_year + t as i32, 2);
        let shock: Vec<f64> = (0..config.majors).map(|_| config.carrier_shock_sd * normal(&mut rng)).collect();

        // Weather.
        let mut by_airport = BTreeMap::new();
        for (ai, a) in weather_airports.iter().enumerate() {
            let (c, toff) = climate[ai];
            let level: Vec<f64> = (0..3).map(|e| c[e] * (0.4 * normal(&mut rng) - 0.08).exp()).collect();
            let tshift = toff + 15.0 * normal(&mut rng);
            let station = format!("SYN000{a}");
            let mut rows = Vec::new();
            for date in Date::quarter_days(period) {
                let mut vals = [0.0; 4];
                for e in 0..3 {
                    let x: f64 = Exp1.sample(&mut rng);
                    vals[e] = (WEATHER_MEANS[e] * level[e] * x * 10.0).round() / 10.0;
                }
                vals[3] = ((WEATHER_MEANS[3] + tshift + 40.0 * normal(&mut rng)) * 10.0).round() / 10.0;
                let mut opt = [None; 4];
                for e in 0..4 {
                    if !rng.random_bool(config.weather_missing_rate) {
                        opt[e] = Some(vals[e]);
                    }
                }
                rows.push(WeatherObservation {
                    station_id: station.clone(),
                    date,
                    precipitation: opt[0],
                    snowfall: opt[1],
                    snow_depth: opt[2],
                    min_temperature: opt[3],
                });
            }
            by_airport.insert((*a).clone(), rows);
        }
        let aw = AirportWeather {
            by_airport,
            coverage: Vec::new(),
        };
        let qweather: BTreeMap<Airport, QuarterlyAirportWeather> = quarterly_weather(&aw, period);
        for rows in aw.by_airport.into_values() {
            weather_all.extend(rows);
        }

        // Regional assignment and networks.
        let assigned: Vec<usize> = core.iter().map(|_| rng.random_range(0..config.regionals)).collect();
        let footprint: Vec<usize> = (0..config.regionals)
            .map(|_| rng.random_range(0..=config.max_footprint_markets))
            .collect();
        let mut touched: Vec<BTreeSet<&Airport>> = vec![BTreeSet::new(); config.regionals];
        for ((m, js), &r) in core.iter().zip(&assigned) {
            touched[r].insert(&m.origin);
            touched[r].insert(&m.destination);
            for &j in js {
                touched[r].insert(&world.hubs[j]);
            }
        }
        let sizes: Vec<f64> = (0..config.regionals)
            .map(|r| {
                let base = touched[r].len() + 2 * footprint[r];
                base as f64
            })
            .collect();
        let size_z = zscores(&sizes);

        // Background contact markets.
        let mut background: Vec<(usize, usize, usize)> = Vec::new();
        for a in 0..config.majors {
            for b in a + 1..config.majors {
                let mean = config.mean_contact_markets * (config.network_strength * (shock[a] + shock[b])).exp();
                background.push((a, b, poisson(&mut rng, mean)));
            }
        }
        let capacity = config.background_airports * (config.background_airports - 1);
        let needed: usize = background.iter().map(|x| x.2).sum();
        if needed > capacity {
            return Err(Error::Infeasible(format!(
                "{needed} background contact markets needed in {period} but {} airports allow {capacity}",
                config.background_airports
            )));
        }
        let mut contacts = core_contacts.clone();
        for &(a, b, n) in &background {
            contacts[a][b] += n;
            contacts[b][a] += n;
        }

        // Feeder markets.
        let mut feeder_n: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for a in 0..config.majors {
            for o in 0..config.spokes {
                let n = poisson(&mut rng, config.mean_feeder_markets * (config.network_strength * shock[a]).exp()).min(config.max_feeder_markets);
                feeder_n.insert((a, o), n);
            }
        }
        let spoke_index: BTreeMap<&Airport, usize> = world.spokes.iter().enumerate().map(|(i, a)| (a, i)).collect();
        let count = |a: usize, airport: &Airport| -> f64 {
            let core = core_counts.get(&(a, airport)).copied().unwrap_or(0);
            let feed = spoke_index.get(airport).map_or(0, |&o| feeder_n[&(a, o)]);
            (core + feed) as f64 / 100.0
        };

        // Core cells: usage, prices, tickets.
        struct Draft {
            m: usize,
            j: usize,
            u: f64,
            q: f64,
            p: u32,
            r: u32,
            w: f64,
        }
        let mut drafts = Vec::new();
        let mut extremes = Vec::new();
        for (mi, (m, js)) in core.iter().enumerate() {
            let xi = normal(&mut rng);
            for &j in js {
                let u = config.market_shock_weight.sqrt() * xi + (1.0 - config.market_shock_weight).sqrt() * normal(&mut rng);
                let path = [&m.origin, &world.hubs[j], &m.destination];
                extremes.push(route_extreme_weather(path, &qweather));
                drafts.push(Draft {
                    m: mi,
                    j,
                    u,
                    q: 0.0,
                    p: rng.random_range(config.min_passengers..=config.max_passengers),
                    r: 0,
                    w: 0.0,
                });
            }
        }
        let mut index = vec![0.0; drafts.len()];
        for e in 0..4 {
            let col: Vec<f64> = extremes.iter().map(|x| x.map_or(f64::NAN, |x| x[e])).collect();
            let present: Vec<f64> = col.iter().copied().filter(|x| x.is_finite()).collect();
            let m = crate::stats::mean(&present).unwrap_or(0.0);
            let sd = crate::stats::sample_sd(&present).unwrap_or(1.0).max(1e-12);
            for (ix, x) in index.iter_mut().zip(&col) {
                if x.is_finite() {
                    *ix += WEATHER_LOADINGS[e] * (x - m) / sd / 2.0;
                }
            }
        }
        let rho = config.endogeneity;
        for (d, wi) in drafts.iter_mut().zip(&index) {
            d.w = *wi;
            let nu = -rho * d.u + (1.0 - rho * rho).sqrt() * normal(&mut rng);
            let propensity = (config.usage_base / (1.0 - config.usage_base)).ln()
                + config.weather_strength * d.w
                + config.regional_network_strength * size_z[assigned[d.m]]
                + config.usage_noise * nu;
            d.q = logistic(propensity);
            d.r = ((d.q * d.p as f64).round() as u32).clamp(1, d.p - 1);
        }
        // A major is linked to every regional it uses anywhere in the period.
        let mut linked = vec![vec![false; config.regionals]; config.majors];
        for ((_, js), &r) in core.iter().zip(&assigned) {
            for &j in js {
                linked[j][r] = true;
            }
        }
        for (r, &n) in footprint.iter().enumerate() {
            linked[0][r] |= n > 0;
        }
        let mut csc = vec![0.0; core.len()];
        for d in &drafts {
            let (_, js) = &core[d.m];
            let n = js.len();
            let others = js.iter().filter(|&&i| i != d.j && linked[i][assigned[d.m]]).count();
            csc[d.m] += d.r as f64 / d.p as f64 * others as f64 / (n * (n - 1)) as f64;
        }
        let price_shift = 0.01 * t as f64;
        for d in &drafts {
            let (m, js) = &core[d.m];
            let share = d.r as f64 / d.p as f64;
            let c = csc[d.m];
            let mut pairs_total = 0usize;
            let mut pairs_n = 0usize;
            for &a in js {
                for &b in js {
                    if a != b {
                        pairs_total += contacts[a][b];
                        pairs_n += 1;
                    }
                }
            }
            let mmc = pairs_total as f64 / pairs_n as f64 / MMC_SCALE;
            let (no, nd) = (count(d.j, &m.origin), count(d.j, &m.destination));
            let lp = BASE_LOG_PRICE
                + carrier_fe[d.j]
                + market_fe[d.m]
                + price_shift
                + config.beta_csc * c
                + config.beta_share * share
                + config.beta_mmc * mmc
                + config.gamma_origin * no
                + config.gamma_destination * nd
                + config.shock_loading * d.u
                + config.price_noise * normal(&mut rng);
            let fare = lp.exp();
            if !(fare > 25.0 && fare < 10_000.0) {
                return Err(Error::Infeasible(format!("generated fare {fare:.2} outside (25, 10000)")));
            }
            let carrier = &world.majors[d.j];
            let regional = &world.regionals[assigned[d.m]];
            let hub = &world.hubs[d.j];
            let (d1, d2) = (world.distance(&m.origin, hub), world.distance(hub, &m.destination));
            let legs = |op| {
                [
                    Leg {
                        from: &m.origin,
                        to: hub,
                        operator: op,
                        distance: d1,
                    },
                    Leg {
                        from: hub,
                        to: &m.destination,
                        operator: op,
                        distance: d2,
                    },
                ]
            };
            w.genuine(period, "C", carrier, &legs(carrier), d.p - d.r, fare);
            w.genuine(period, "C", carrier, &legs(regional), d.r, fare);
            truth.push(TruthCell {
                carrier: carrier.clone(),
                market: m.clone(),
                period,
                latent_shock: d.u,
                usage_probability: d.q,
                regional_share: share,
                csc: c,
                mmc,
                network_origin: no,
                network_destination: nd,
                log_price: lp,
            });
        }

        // Background duopolies.
        let mut xpairs: Vec<(usize, usize)> = (0..xs.len())
            .flat_map(|a| (0..xs.len()).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        let mut slot = 0;
        let mut bg_fares = Vec::new();
        for &(a, b, n) in &background {
            for _ in 0..n {
                bg_fares.push((a, b, slot));
                slot += 1;
            }
        }
        xpairs.truncate(slot);
        for (a, b, s) in bg_fares {
            let (x1, x2) = (&xs[xpairs[s].0], &xs[xpairs[s].1]);
            let dist = world.distance(x1, x2);
            for c in [a, b] {
                let carrier = &world.majors[c];
                let leg = [Leg {
                    from: x1,
                    to: x2,
                    operator: carrier,
                    distance: dist,
                }];
                let (pax, fare) = side_trip(&mut rng);
                w.genuine(period, "B", carrier, &leg, pax, fare);
            }
        }

        // Feeders.
        for ((a, o), n) in &feeder_n {
            let carrier = &world.majors[*a];
            let origin = &world.spokes[*o];
            for dest in feeders[*a].iter().take(*n) {
                let leg = [Leg {
                    from: origin,
                    to: dest,
                    operator: carrier,
                    distance: world.distance(origin, dest),
                }];
                let (pax, fare) = side_trip(&mut rng);
                w.genuine(period, "F", carrier, &leg, pax, fare);
            }
        }

        // Regional footprints, sold by the first major.
        for (r, &n) in footprint.iter().enumerate() {
            for k in 0..n {
                let base = (r * config.max_footprint_markets + k) * 2;
                let (a, b) = (&ws[base], &ws[base + 1]);
                let leg = [Leg {
                    from: a,
                    to: b,
                    operator: &world.regionals[r],
                    distance: world.distance(a, b),
                }];
                let (pax, fare) = side_trip(&mut rng);
                w.genuine(period, "W", &world.majors[0], &leg, pax, fare);
            }
        }

        let median = crate::stats::median(&w.trips[&period]).unwrap_or(200.0);
        let lead = &world.majors[0];

        if config.inject_violations && t == 0 {
            let leg = |a: usize, b: usize| Leg {
                from: &v[a],
                to: &v[b],
                operator: lead,
                distance: world.distance(&v[a], &v[b]),
            };

            let id = w.id(period, "V");
            w.ticket(&id, period, &[lead], &[leg(0, 1)], 1, 10, 15.0);
            expected_drops.push(DropRecord {
                itinerary_id: id,
                direction: Some(1),
                reason: DropReason::BelowFloor,
            });

            let id = w.id(period, "V");
            let chain = [leg(0, 1), leg(1, 2), leg(2, 3), leg(3, 4)];
            w.ticket(&id, period, &[lead], &chain, 4, 10, median);
            expected_drops.push(DropRecord {
                itinerary_id: id,
                direction: None,
                reason: DropReason::TooManyCoupons,
            });

            let id = w.id(period, "V");
            let other = &world.majors[1];
            w.ticket(&id, period, &[lead, other], &[leg(0, 1), leg(1, 2)], 2, 10, median);
            expected_drops.push(DropRecord {
                itinerary_id: id,
                direction: None,
                reason: DropReason::Interline,
            });

            let id = w.id(period, "V");
            w.ticket(&id, period, &[lead], &[leg(0, 1), leg(1, 0)], 1, 10, 2.0 * median);
            w.trips.entry(period).or_default().extend([median, median]);
            roundtrip = Some((id, median));
        }

        // Outliers sized so that the trim removes exactly them.
        if config.outlier_trim_percent > 0 {
            let base = w.trips[&period].len();
            let ky = trim_count(base, config.outlier_trim_percent);
            let kf = trim_count(base + 2 * ky, config.outlier_trim_percent);
            let zd = world.distance(&z[0], &z[1]);
            let mut out = |w: &mut Writer, fare: f64, distance: f64, reason: DropReason| {
                let id = w.id(period, "Z");
                let leg = [Leg {
                    from: &z[0],
                    to: &z[1],
                    operator: lead,
                    distance,
                }];
                w.ticket(&id, period, &[lead], &leg, 1, 10, fare);
                expected_drops.push(DropRecord {
                    itinerary_id: id,
                    direction: Some(1),
                    reason,
                });
            };
            for _ in 0..kf {
                out(&mut w, LOW_FARE, zd, DropReason::FarePercentile);
                out(&mut w, HIGH_FARE, zd, DropReason::FarePercentile);
            }
            for _ in 0..ky {
                out(&mut w, median, 1.0, DropReason::YieldPercentile);
                out(&mut w, median, 1e5, DropReason::YieldPercentile);
            }
        }
    }

    let mut bundle = w.bundle;
    bundle.weather = weather_all;
    bundle.stations = stations;
    bundle.cpi = (config.first_year..config.first_year + config.periods as i32)
        .map(|year| CpiRecord {
            year,
            deflator: deflator(year),
        })
        .collect();
    bundle.ownership = world
        .regionals
        .iter()
        .map(|r| OwnershipRecord {
            regional_code: r.clone(),
            carrier_name: format!("Synthetic regional {r}"),
            parent: "Independent".into(),
            owner_major: None,
            start_year: 1990,
            end_year: None,
        })
        .collect();
    const STATES: [&str; 6] = ["TX", "OH", "GA", "CO", "NY", "CA"];
    bundle.airport_states = world
        .coords
        .keys()
        .enumerate()
        .map(|(i, a)| AirportStateRecord {
            airport: a.clone(),
            state: STATES[i % STATES.len()].into(),
        })
        .collect();
    expected_drops.sort_by(|a, b| (&a.itinerary_id, a.direction).cmp(&(&b.itinerary_id, b.direction)));
    Ok((
        bundle,
        GroundTruth {
            config: config.clone(),
            cells: truth,
            expected_drops,
            roundtrip,
        },
    ))
}
