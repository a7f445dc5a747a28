//! Construction of the analysis sample of directional trips.
//!
//! Filters run in a fixed order, since percentile trimming depends on what
//! survived earlier steps:
//!
//! 1. quarter restriction (configured quarters only)
//! 2. contiguous 48 states
//! 3. at most three coupons per direction
//! 4. interline, bulk and non-credible fares
//! 5. roundtrip split at half fare
//! 6. deflation to 2012 dollars
//! 7. $20 floor
//! 8. fare percentile trim within year-quarter
//! 9. yield percentile trim within year-quarter
//!
//! Steps 1-5 are [`build_directional_trips`], 6-9 are [`trim_fares`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::{AirportStates, CouponRecord, CpiTable, MarketRecord, Reject, TicketRecord};
use crate::types::{Airport, Carrier, Market, Period};

/// A nonstop leg as flown by one operating carrier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub origin: Airport,
    pub destination: Airport,
    pub operating_carrier: Carrier,
    /// Nautical miles.
    pub distance: f64,
}

/// One directional trip on one ticket.
#[derive(Debug, Clone, PartialEq)]
pub struct TicketObservation {
    pub itinerary_id: String,
    /// 1 outbound, 2 return.
    pub direction: u8,
    pub ticketing_carrier: Carrier,
    pub market: Market,
    pub segments: Vec<Segment>,
    pub passengers: u32,
    /// One-way fare per passenger. Nominal out of [`build_directional_trips`],
    /// 2012 dollars out of [`trim_fares`].
    pub fare: f64,
    pub period: Period,
}

impl TicketObservation {
    pub fn distance(&self) -> f64 {
        self.segments.iter().map(|s| s.distance).sum()
    }

    /// Fare per nautical mile.
    pub fn fare_yield(&self) -> f64 {
        self.fare / self.distance()
    }

    pub fn airports(&self) -> impl Iterator<Item = &Airport> {
        std::iter::once(&self.market.origin).chain(self.segments.iter().map(|s| &s.destination))
    }

    /// Segments chain and the path endpoints equal the market endpoints.
    pub fn chain_holds(&self) -> bool {
        let (Some(first), Some(last)) = (self.segments.first(), self.segments.last()) else {
            return false;
        };
        first.origin == self.market.origin
            && last.destination == self.market.destination
            && self.segments.windows(2).all(|w| w[0].destination == w[1].origin)
    }

    fn sort_key(&self) -> (Period, &Market, &Carrier, &str, u8) {
        (self.period, &self.market, &self.ticketing_carrier, &self.itinerary_id, self.direction)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropReason {
    Quarter,
    NonContiguous,
    TooManyCoupons,
    Interline,
    BulkFare,
    NotCredible,
    BelowFloor,
    FarePercentile,
    YieldPercentile,
}

impl fmt::Display for DropReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            DropReason::Quarter => "quarter not selected",
            DropReason::NonContiguous => "airport outside contiguous 48 states",
            DropReason::TooManyCoupons => "more than three coupons in a direction",
            DropReason::Interline => "interline ticket",
            DropReason::BulkFare => "bulk fare",
            DropReason::NotCredible => "fare not credible",
            DropReason::BelowFloor => "fare below floor",
            DropReason::FarePercentile => "fare outside year-quarter percentile band",
            DropReason::YieldPercentile => "yield outside year-quarter percentile band",
        };
        f.write_str(s)
    }
}

/// A dropped itinerary (`direction` = None) or directional observation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub itinerary_id: String,
    pub direction: Option<u8>,
    pub reason: DropReason,
}

impl crate::ingest::Table for DropRecord {
    const NAME: &'static str = "drops.csv";
    const COLUMNS: &'static [&'static str] = &["itinerary_id", "direction", "reason"];
}

#[derive(Debug, Clone, Default)]
pub struct SampleReport {
    pub itineraries_in: usize,
    pub observations_out: usize,
    pub dropped: Vec<DropRecord>,
    /// Itineraries that could not be assembled (missing coupons, broken
    /// chains and the like).
    pub rejects: Vec<Reject>,
}

impl SampleReport {
    pub fn counts(&self) -> BTreeMap<DropReason, usize> {
        let mut out = BTreeMap::new();
        for d in &self.dropped {
            *out.entry(d.reason).or_insert(0) += 1;
        }
        out
    }

    fn drop(&mut self, id: &str, direction: Option<u8>, reason: DropReason) {
        self.dropped.push(DropRecord {
            itinerary_id: id.to_string(),
            direction,
            reason,
        });
    }

    fn reject(&mut self, id: &str, reason: impl Into<String>) {
        self.rejects.push(Reject {
            line: 0,
            reason: reason.into(),
            raw: id.to_string(),
        });
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SampleConfig {
    /// Quarters kept; empty keeps all.
    pub quarters: Vec<u8>,
    /// Fare floor in 2012 dollars.
    pub min_fare: f64,
    /// Percent trimmed from each tail of the year-quarter fare and yield
    /// distributions.
    pub trim_percent: usize,
    pub max_coupons_per_direction: usize,
}

impl Default for SampleConfig {
    fn default() -> Self {
        SampleConfig {
            quarters: vec![2],
            min_fare: 20.0,
            trim_percent: 1,
            max_coupons_per_direction: 3,
        }
    }
}

/// Assembles itineraries and splits them into directional trips, applying
/// the per-itinerary filters. Fares in the output are nominal.
pub fn build_directional_trips(
    coupons: &[CouponRecord],
    tickets: &[TicketRecord],
    markets: &[MarketRecord],
    states: &AirportStates,
    config: &SampleConfig,
) -> (Vec<TicketObservation>, SampleReport) {
    let mut by_itin: HashMap<&str, Vec<&CouponRecord>> = HashMap::new();
    for c in coupons {
        by_itin.entry(c.itinerary_id.as_str()).or_default().push(c);
    }
    let mut market_of: HashMap<(&str, u8), &MarketRecord> = HashMap::new();
    for m in markets {
        market_of.insert((m.itinerary_id.as_str(), m.direction), m);
    }

    let mut report = SampleReport::default();
    let mut sorted: Vec<&TicketRecord> = tickets.iter().collect();
    sorted.sort_by(|a, b| a.itinerary_id.cmp(&b.itinerary_id));
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();

    for t in sorted {
        let id = t.itinerary_id.as_str();
        report.itineraries_in += 1;
        if !seen.insert(id) {
            report.reject(id, "duplicate ticket record");
            continue;
        }
        let Some(cs) = by_itin.get_mut(id) else {
            report.reject(id, "ticket has no coupons");
            continue;
        };
        cs.sort_by_key(|c| c.sequence);
        if let Err(reason) = check_coupons(cs, t) {
            report.reject(id, reason);
            continue;
        }
        let period = cs[0].period();
        if !config.quarters.is_empty() && !config.quarters.contains(&period.quarter) {
            report.drop(id, None, DropReason::Quarter);
            continue;
        }

        let n_out = t.coupons_outbound as usize;
        let mut legs: Vec<(u8, &[&CouponRecord])> = vec![(1, &cs[..n_out])];
        if t.roundtrip {
            legs.push((2, &cs[n_out..]));
        }
        let mut directions = Vec::with_capacity(2);
        let mut broken = None;
        for &(dir, cps) in &legs {
            let Some(m) = market_of.get(&(id, dir)) else {
                broken = Some(format!("no market record for direction {dir}"));
                break;
            };
            let obs = TicketObservation {
                itinerary_id: id.to_string(),
                direction: dir,
                ticketing_carrier: cps[0].ticketing_carrier.clone(),
                market: Market::new(m.origin.clone(), m.destination.clone()),
                segments: cps
                    .iter()
                    .map(|c| Segment {
                        origin: c.origin.clone(),
                        destination: c.destination.clone(),
                        operating_carrier: c.operating_carrier.clone(),
                        distance: c.distance,
                    })
                    .collect(),
                passengers: cps[0].passengers as u32,
                fare: if t.roundtrip { t.fare / 2.0 } else { t.fare },
                period,
            };
            if !obs.chain_holds() {
                broken = Some(format!("direction {dir} segments do not chain {}", obs.market));
                break;
            }
            directions.push(obs);
        }
        if let Some(reason) = broken {
            report.reject(id, reason);
            continue;
        }

        if cs.iter().any(|c| !states.is_contiguous(&c.origin) || !states.is_contiguous(&c.destination)) {
            report.drop(id, None, DropReason::NonContiguous);
            continue;
        }
        if legs.iter().any(|(_, cps)| cps.len() > config.max_coupons_per_direction) {
            report.drop(id, None, DropReason::TooManyCoupons);
            continue;
        }
        if cs.iter().any(|c| c.ticketing_carrier != cs[0].ticketing_carrier) {
            report.drop(id, None, DropReason::Interline);
            continue;
        }
        if t.bulk_fare {
            report.drop(id, None, DropReason::BulkFare);
            continue;
        }
        if !t.credible {
            report.drop(id, None, DropReason::NotCredible);
            continue;
        }
        out.extend(directions);
    }

    let mut orphans: Vec<&str> = by_itin.keys().filter(|id| !seen.contains(*id)).copied().collect();
    orphans.sort_unstable();
    for id in orphans {
        report.reject(id, "coupons without a ticket record");
    }

    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    report.observations_out = out.len();
    (out, report)
}

fn check_coupons(cs: &[&CouponRecord], t: &TicketRecord) -> std::result::Result<(), String> {
    for (i, c) in cs.iter().enumerate() {
        if c.sequence as usize != i + 1 {
            return Err("coupon sequence not contiguous from 1".into());
        }
    }
    let expected = (t.coupons_outbound + t.coupons_return) as usize;
    if cs.len() != expected {
        return Err(format!("ticket declares {expected} coupons, found {}", cs.len()));
    }
    if t.roundtrip && t.coupons_return == 0 {
        return Err("roundtrip ticket without return coupons".into());
    }
    let first = cs[0];
    if cs.iter().any(|c| c.passengers != first.passengers) {
        return Err("passenger count differs across coupons".into());
    }
    if cs.iter().any(|c| c.period() != first.period()) {
        return Err("coupons span several quarters".into());
    }
    if first.passengers > u32::MAX as i64 {
        return Err("passenger count out of range".into());
    }
    Ok(())
}

/// Bounds of the symmetric nearest-rank percentile band: with `n` sorted
/// values and `k = n * percent / 100`, the band is `[v[k], v[n-1-k]]`.
/// Exactly `k` distinct extreme values fall outside on each side; ties with
/// a bound are kept.
pub fn percentile_band(values: &[f64], percent: usize) -> Option<(f64, f64)> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let k = n * percent / 100;
    Some((v[k], v[n - 1 - k]))
}

/// Deflates, applies the fare floor, then trims fares and yields within
/// each year-quarter. Aborts if a year has no deflator.
pub fn trim_fares(
    obs: Vec<TicketObservation>,
    cpi: &CpiTable,
    config: &SampleConfig,
    report: &mut SampleReport,
) -> Result<Vec<TicketObservation>> {
    let mut by_period: BTreeMap<Period, Vec<TicketObservation>> = BTreeMap::new();
    for mut o in obs {
        o.fare = cpi.to_real(o.period.year, o.fare)?;
        if o.fare < config.min_fare {
            report.drop(&o.itinerary_id, Some(o.direction), DropReason::BelowFloor);
            continue;
        }
        by_period.entry(o.period).or_default().push(o);
    }

    let mut out = Vec::new();
    for (_, group) in by_period {
        let group = trim_by(group, config.trim_percent, TicketObservation::fare_ok, DropReason::FarePercentile, report);
        let group = trim_by(group, config.trim_percent, TicketObservation::yield_ok, DropReason::YieldPercentile, report);
        out.extend(group);
    }
    out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    report.observations_out = out.len();
    Ok(out)
}

impl TicketObservation {
    fn fare_ok(&self) -> f64 {
        self.fare
    }

    fn yield_ok(&self) -> f64 {
        self.fare_yield()
    }
}

fn trim_by(
    group: Vec<TicketObservation>,
    percent: usize,
    key: fn(&TicketObservation) -> f64,
    reason: DropReason,
    report: &mut SampleReport,
) -> Vec<TicketObservation> {
    let values: Vec<f64> = group.iter().map(key).collect();
    let Some((lo, hi)) = percentile_band(&values, percent) else {
        return group;
    };
    group
        .into_iter()
        .filter(|o| {
            let v = key(o);
            let keep = v >= lo && v <= hi;
            if !keep {
                report.drop(&o.itinerary_id, Some(o.direction), reason);
            }
            keep
        })
        .collect()
}

/// Both halves of sample construction.
pub fn build_sample(
    coupons: &[CouponRecord],
    tickets: &[TicketRecord],
    markets: &[MarketRecord],
    states: &AirportStates,
    cpi: &CpiTable,
    config: &SampleConfig,
) -> Result<(Vec<TicketObservation>, SampleReport)> {
    let (obs, mut report) = build_directional_trips(coupons, tickets, markets, states, config);
    let obs = trim_fares(obs, cpi, config, &mut report)?;
    Ok((obs, report))
}

/// Flat row form of an observation, used for the `sample.csv` checkpoint.
/// The path is encoded as `ORIG-DEST:OP:DIST` segments joined by `|`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationRow {
    pub itinerary_id: String,
    pub direction: u8,
    pub ticketing_carrier: Carrier,
    pub origin: Airport,
    pub destination: Airport,
    pub year: i32,
    pub quarter: u8,
    pub passengers: u32,
    pub fare: f64,
    pub path: String,
}

impl crate::ingest::Table for ObservationRow {
    const NAME: &'static str = "sample.csv";
    const COLUMNS: &'static [&'static str] = &[
        "itinerary_id",
        "direction",
        "ticketing_carrier",
        "origin",
        "destination",
        "year",
        "quarter",
        "passengers",
        "fare",
        "path",
    ];

    fn validate(&self) -> std::result::Result<(), String> {
        TicketObservation::try_from(self.clone()).map(|_| ())
    }
}

impl From<&TicketObservation> for ObservationRow {
    fn from(o: &TicketObservation) -> Self {
        let path = o
            .segments
            .iter()
            .map(|s| format!("{}-{}:{}:{}", s.origin, s.destination, s.operating_carrier, s.distance))
            .collect::<Vec<_>>()
            .join("|");
        ObservationRow {
            itinerary_id: o.itinerary_id.clone(),
            direction: o.direction,
            ticketing_carrier: o.ticketing_carrier.clone(),
            origin: o.market.origin.clone(),
            destination: o.market.destination.clone(),
            year: o.period.year,
            quarter: o.period.quarter,
            passengers: o.passengers,
            fare: o.fare,
            path,
        }
    }
}

impl TryFrom<ObservationRow> for TicketObservation {
    type Error = String;

    fn try_from(r: ObservationRow) -> std::result::Result<Self, String> {
        let mut segments = Vec::new();
        for part in r.path.split('|') {
            let mut it = part.split(':');
            let (Some(pair), Some(op), Some(dist), None) = (it.next(), it.next(), it.next(), it.next()) else {
                return Err(format!("bad path segment `{part}`"));
            };
            let m = Market::parse(pair).ok_or_else(|| format!("bad segment airports `{pair}`"))?;
            let distance: f64 = dist.parse().map_err(|_| format!("bad segment distance `{dist}`"))?;
            segments.push(Segment {
                origin: m.origin,
                destination: m.destination,
                operating_carrier: Carrier::new(op),
                distance,
            });
        }
        let o = TicketObservation {
            itinerary_id: r.itinerary_id,
            direction: r.direction,
            ticketing_carrier: r.ticketing_carrier,
            market: Market::new(r.origin, r.destination),
            segments,
            passengers: r.passengers,
            fare: r.fare,
            period: Period::new(r.year, r.quarter),
        };
        if !o.chain_holds() {
            return Err("path does not chain".into());
        }
        Ok(o)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::CpiRecord;

    fn coupon(id: &str, seq: u32, tk: &str, op: &str, o: &str, d: &str, pax: i64, dist: f64) -> CouponRecord {
        CouponRecord {
            itinerary_id: id.into(),
            sequence: seq,
            ticketing_carrier: tk.into(),
            operating_carrier: op.into(),
            origin: o.into(),
            destination: d.into(),
            passengers: pax,
            distance: dist,
            year: 2016,
            quarter: 2,
        }
    }

    fn ticket(id: &str, fare: f64, out: u32, ret: u32) -> TicketRecord {
        TicketRecord {
            itinerary_id: id.into(),
            fare,
            roundtrip: ret > 0,
            credible: true,
            bulk_fare: false,
            coupons_outbound: out,
            coupons_return: ret,
        }
    }

    fn market(id: &str, dir: u8, o: &str, d: &str) -> MarketRecord {
        MarketRecord {
            itinerary_id: id.into(),
            direction: dir,
            origin: o.into(),
            destination: d.into(),
        }
    }

    fn build(c: &[CouponRecord], t: &[TicketRecord], m: &[MarketRecord]) -> (Vec<TicketObservation>, SampleReport) {
        build_directional_trips(c, t, m, &AirportStates::builtin(), &SampleConfig::default())
    }

    #[test]
    fn roundtrip_splits_at_half_fare() {
        let c = vec![
            coupon("1", 1, "AA", "OO", "CHO", "CLT", 1, 150.0),
            coupon("1", 2, "AA", "AA", "CLT", "DFW", 1, 300.0),
            coupon("1", 3, "AA", "AA", "DFW", "CLT", 1, 300.0),
            coupon("1", 4, "AA", "OO", "CLT", "CHO", 1, 150.0),
        ];
        let (obs, rep) = build(&c, &[ticket("1", 400.0, 2, 2)], &[market("1", 1, "CHO", "DFW"), market("1", 2, "DFW", "CHO")]);
        assert_eq!(obs.len(), 2);
        assert!(obs.iter().all(|o| o.fare == 200.0 && o.chain_holds()));
        assert_eq!(obs[0].market, Market::new("CHO", "DFW"));
        assert_eq!(obs[1].market, Market::new("DFW", "CHO"));
        assert!(rep.dropped.is_empty() && rep.rejects.is_empty());
    }

    #[test]
    fn one_way_single_coupon() {
        let (obs, _) = build(
            &[coupon("1", 1, "DL", "DL", "ATL", "DFW", 1, 630.0)],
            &[ticket("1", 150.0, 1, 0)],
            &[market("1", 1, "ATL", "DFW")],
        );
        assert_eq!(obs.len(), 1);
        assert_eq!(obs[0].fare, 150.0);
    }

    #[test]
    fn four_coupon_direction_dropped() {
        let c = vec![
            coupon("1", 1, "AA", "AA", "CHO", "CLT", 1, 100.0),
            coupon("1", 2, "AA", "AA", "CLT", "ATL", 1, 100.0),
            coupon("1", 3, "AA", "AA", "ATL", "MEM", 1, 100.0),
            coupon("1", 4, "AA", "AA", "MEM", "DFW", 1, 100.0),
        ];
        let (obs, rep) = build(&c, &[ticket("1", 300.0, 4, 0)], &[market("1", 1, "CHO", "DFW")]);
        assert!(obs.is_empty());
        assert_eq!(rep.dropped[0].reason, DropReason::TooManyCoupons);
    }

    #[test]
    fn interline_bulk_credibility_and_noncontiguous() {
        let c = vec![
            coupon("1", 1, "AA", "AA", "CHO", "CLT", 1, 100.0),
            coupon("1", 2, "US", "US", "CLT", "DFW", 1, 100.0),
            coupon("2", 1, "AA", "AA", "CHO", "CLT", 1, 100.0),
            coupon("3", 1, "AA", "AA", "CHO", "CLT", 1, 100.0),
            coupon("4", 1, "AA", "AA", "SEA", "ANC", 1, 100.0),
        ];
        let mut t2 = ticket("2", 100.0, 1, 0);
        t2.bulk_fare = true;
        let mut t3 = ticket("3", 100.0, 1, 0);
        t3.credible = false;
        let (obs, rep) = build(
            &c,
            &[ticket("1", 100.0, 2, 0), t2, t3, ticket("4", 100.0, 1, 0)],
            &[
                market("1", 1, "CHO", "DFW"),
                market("2", 1, "CHO", "CLT"),
                market("3", 1, "CHO", "CLT"),
                market("4", 1, "SEA", "ANC"),
            ],
        );
        assert!(obs.is_empty());
        let reasons: Vec<_> = rep.dropped.iter().map(|d| d.reason).collect();
        assert_eq!(
            reasons,
            [DropReason::Interline, DropReason::BulkFare, DropReason::NotCredible, DropReason::NonContiguous]
        );
    }

    #[test]
    fn missing_coupons_and_broken_chain_are_rejects() {
        let c = vec![
            coupon("2", 1, "AA", "AA", "CHO", "CLT", 1, 100.0),
            coupon("2", 2, "AA", "AA", "ATL", "DFW", 1, 100.0),
            coupon("3", 2, "AA", "AA", "CHO", "CLT", 1, 100.0),
        ];
        let (obs, rep) = build(
            &c,
            &[ticket("1", 100.0, 1, 0), ticket("2", 100.0, 2, 0), ticket("3", 100.0, 1, 0)],
            &[market("2", 1, "CHO", "DFW"), market("3", 1, "CHO", "CLT")],
        );
        assert!(obs.is_empty());
        assert_eq!(rep.rejects.len(), 3);
        assert_eq!(rep.rejects[0].reason, "ticket has no coupons");
    }

    #[test]
    fn percentile_band_drops_k_per_tail() {
        let v: Vec<f64> = (0..1000).map(|i| 20.0 + i as f64).collect();
        let (lo, hi) = percentile_band(&v, 1).unwrap();
        assert_eq!(v.iter().filter(|&&x| x < lo).count(), 10);
        assert_eq!(v.iter().filter(|&&x| x > hi).count(), 10);
        assert_eq!(percentile_band(&[5.0; 300], 1), Some((5.0, 5.0)));
        assert_eq!(percentile_band(&[1.0, 2.0, 3.0], 1), Some((1.0, 3.0)));
    }

    fn one_way(id: usize, fare: f64, dist: f64) -> TicketObservation {
        TicketObservation {
            itinerary_id: format!("{id:05}"),
            direction: 1,
            ticketing_carrier: "AA".into(),
            market: Market::new("CHO", "DFW"),
            segments: vec![Segment {
                origin: "CHO".into(),
                destination: "DFW".into(),
                operating_carrier: "AA".into(),
                distance: dist,
            }],
            passengers: 1,
            fare,
            period: Period::new(2016, 2),
        }
    }

    fn cpi() -> CpiTable {
        CpiTable::from_records(&[CpiRecord { year: 2016, deflator: 1.0 }])
    }

    #[test]
    fn floor_then_percentiles() {
        let mut obs = vec![one_way(0, 15.0, 500.0)];
        obs.extend((1..=1000).map(|i| one_way(i, 100.0 + i as f64, 500.0)));
        let mut rep = SampleReport::default();
        let out = trim_fares(obs, &cpi(), &SampleConfig::default(), &mut rep).unwrap();
        let counts = rep.counts();
        assert_eq!(counts[&DropReason::BelowFloor], 1);
        assert_eq!(counts[&DropReason::FarePercentile], 20);
        // Identical distances make yields proportional to fares, so the
        // yield pass trims 980 / 100 = 9 more from each tail.
        assert_eq!(counts[&DropReason::YieldPercentile], 18);
        assert_eq!(out.len(), 962);
    }

    #[test]
    fn identical_fares_survive_trimming() {
        let obs: Vec<_> = (0..500).map(|i| one_way(i, 250.0, 800.0)).collect();
        let mut rep = SampleReport::default();
        let out = trim_fares(obs, &cpi(), &SampleConfig::default(), &mut rep).unwrap();
        assert_eq!(out.len(), 500);
    }

    #[test]
    fn missing_cpi_year_aborts() {
        let mut o = one_way(0, 100.0, 100.0);
        o.period = Period::new(1990, 2);
        let err = trim_fares(vec![o], &cpi(), &SampleConfig::default(), &mut SampleReport::default()).unwrap_err();
        assert!(matches!(err, crate::Error::MissingCpiYear(1990)));
    }

    #[test]
    fn observation_row_round_trip() {
        let o = one_way(7, 123.5, 456.0);
        let back = TicketObservation::try_from(ObservationRow::from(&o)).unwrap();
        assert_eq!(back, o);
    }
}
