//! Aggregation of directional trips into the carrier-market-period panel,
//! regional usage shares and network sizes.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::ingest::Table;
use crate::registry::{classify_regional, CarrierClass, OwnershipRegistry};
use crate::sample::TicketObservation;
use crate::types::{Airport, Carrier, Market, Period};

/// One (ticketing carrier, market, period) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierMarketPeriod {
    pub carrier: Carrier,
    pub market: Market,
    pub period: Period,
    /// Passenger-weighted average one-way fare.
    pub price: f64,
    pub traffic: u64,
    pub pax_seat_miles_total: f64,
    /// Passenger-miles on segments operated by independent regionals.
    pub pax_seat_miles_regional: f64,
    /// Markets the carrier serves out of the origin airport, in hundreds.
    pub network_origin: f64,
    /// Markets the carrier serves out of the destination airport, in hundreds.
    pub network_destination: f64,
}

impl CarrierMarketPeriod {
    pub fn revenue(&self) -> f64 {
        self.price * self.traffic as f64
    }
}

impl Table for CarrierMarketPeriod {
    const NAME: &'static str = "panel.csv";
    const COLUMNS: &'static [&'static str] = &[
        "carrier",
        "market",
        "period",
        "price",
        "traffic",
        "pax_seat_miles_total",
        "pax_seat_miles_regional",
        "network_origin",
        "network_destination",
    ];
}

/// Regional passenger-miles over total passenger-miles; `None` when the cell
/// has no passenger-miles.
pub fn regional_share(cell: &CarrierMarketPeriod) -> Option<f64> {
    (cell.pax_seat_miles_total > 0.0).then(|| cell.pax_seat_miles_regional / cell.pax_seat_miles_total)
}

/// Share of a major's passengers in a market carried by one independent
/// regional on at least one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalUsageShare {
    pub market: Market,
    pub period: Period,
    pub major: Carrier,
    pub regional: Carrier,
    pub share: f64,
    /// Passengers of `major` in the market who flew `regional`.
    pub passengers: u64,
}

impl Table for RegionalUsageShare {
    const NAME: &'static str = "usage_shares.csv";
    const COLUMNS: &'static [&'static str] = &["market", "period", "major", "regional", "share", "passengers"];
}

/// Airports on the paths a carrier uses in a market.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathAirports {
    pub carrier: Carrier,
    pub market: Market,
    pub period: Period,
    /// `|`-separated, sorted.
    pub airports: String,
}

impl PathAirports {
    pub fn set(&self) -> BTreeSet<Airport> {
        self.airports.split('|').filter(|a| !a.is_empty()).map(Airport::from).collect()
    }
}

impl Table for PathAirports {
    const NAME: &'static str = "paths.csv";
    const COLUMNS: &'static [&'static str] = &["carrier", "market", "period", "airports"];
}

/// Distinct airports an independent regional touches in a period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionalNetwork {
    pub regional: Carrier,
    pub period: Period,
    pub airports: u64,
}

impl Table for RegionalNetwork {
    const NAME: &'static str = "regional_networks.csv";
    const COLUMNS: &'static [&'static str] = &["regional", "period", "airports"];
}

/// (carrier, period) → airport → distinct markets with that origin.
pub type NetworkSizes = BTreeMap<(Carrier, Period), BTreeMap<Airport, usize>>;

pub fn network_sizes(obs: &[TicketObservation]) -> NetworkSizes {
    let mut markets: BTreeMap<(Carrier, Period), BTreeSet<&Market>> = BTreeMap::new();
    for o in obs {
        markets
            .entry((o.ticketing_carrier.clone(), o.period))
            .or_default()
            .insert(&o.market);
    }
    markets
        .into_iter()
        .map(|(key, ms)| {
            let mut counts: BTreeMap<Airport, usize> = BTreeMap::new();
            for m in ms {
                *counts.entry(m.origin.clone()).or_insert(0) += 1;
            }
            (key, counts)
        })
        .collect()
}

/// Memoized classification of operating carriers. Ticketing carriers seen
/// in the input join the majors set.
struct Classes<'a> {
    registry: OwnershipRegistry,
    cache: HashMap<(&'a Carrier, i32), CarrierClass>,
}

impl<'a> Classes<'a> {
    fn new(obs: &'a [TicketObservation], registry: &OwnershipRegistry) -> Self {
        let majors: BTreeSet<Carrier> = obs.iter().map(|o| o.ticketing_carrier.clone()).collect();
        Classes {
            registry: registry.clone().with_majors(majors),
            cache: HashMap::new(),
        }
    }

    fn independent(&mut self, carrier: &'a Carrier, year: i32) -> Result<bool> {
        if let Some(c) = self.cache.get(&(carrier, year)) {
            return Ok(*c == CarrierClass::IndependentRegional);
        }
        let c = classify_regional(carrier, year, &self.registry)?;
        self.cache.insert((carrier, year), c);
        Ok(c == CarrierClass::IndependentRegional)
    }
}

/// Everything the later stages need from the trip table.
#[derive(Debug, Clone, Default)]
pub struct MarketStructure {
    pub cells: Vec<CarrierMarketPeriod>,
    pub usage: Vec<RegionalUsageShare>,
    pub paths: Vec<PathAirports>,
    pub regional_networks: Vec<RegionalNetwork>,
}

#[derive(Default)]
struct CellAcc<'a> {
    revenue: f64,
    traffic: u64,
    miles: f64,
    regional_miles: f64,
    by_regional: BTreeMap<&'a Carrier, u64>,
    airports: BTreeSet<&'a Airport>,
}

/// One pass over the trips. Output is sorted by (period, market, carrier)
/// and does not depend on input order.
pub fn market_structure(obs: &[TicketObservation], registry: &OwnershipRegistry) -> Result<MarketStructure> {
    let mut classes = Classes::new(obs, registry);
    let mut cells: BTreeMap<(Period, &Market, &Carrier), CellAcc> = BTreeMap::new();
    let mut reg_airports: BTreeMap<(&Carrier, Period), BTreeSet<&Airport>> = BTreeMap::new();

    for o in obs {
        let acc = cells.entry((o.period, &o.market, &o.ticketing_carrier)).or_default();
        let pax = o.passengers as u64;
        acc.revenue += o.fare * pax as f64;
        acc.traffic += pax;
        let mut used: BTreeSet<&Carrier> = BTreeSet::new();
        for s in &o.segments {
            let miles = pax as f64 * s.distance;
            acc.miles += miles;
            acc.airports.insert(&s.origin);
            acc.airports.insert(&s.destination);
            if s.operating_carrier != o.ticketing_carrier && classes.independent(&s.operating_carrier, o.period.year)? {
                acc.regional_miles += miles;
                used.insert(&s.operating_carrier);
                let touched = reg_airports.entry((&s.operating_carrier, o.period)).or_default();
                touched.insert(&s.origin);
                touched.insert(&s.destination);
            }
        }
        for k in used {
            *acc.by_regional.entry(k).or_insert(0) += pax;
        }
    }

    let networks = network_sizes(obs);
    let net = |c: &Carrier, p: Period, a: &Airport| -> f64 {
        networks
            .get(&(c.clone(), p))
            .and_then(|m| m.get(a))
            .copied()
            .unwrap_or(0) as f64
            / 100.0
    };

    let mut out = MarketStructure::default();
    for ((period, market, carrier), acc) in cells {
        out.cells.push(CarrierMarketPeriod {
            carrier: carrier.clone(),
            market: market.clone(),
            period,
            price: acc.revenue / acc.traffic as f64,
            traffic: acc.traffic,
            pax_seat_miles_total: acc.miles,
            pax_seat_miles_regional: acc.regional_miles,
            network_origin: net(carrier, period, &market.origin),
            network_destination: net(carrier, period, &market.destination),
        });
        for (k, pax) in acc.by_regional {
            out.usage.push(RegionalUsageShare {
                market: market.clone(),
                period,
                major: carrier.clone(),
                regional: k.clone(),
                share: pax as f64 / acc.traffic as f64,
                passengers: pax,
            });
        }
        out.paths.push(PathAirports {
            carrier: carrier.clone(),
            market: market.clone(),
            period,
            airports: acc.airports.iter().map(|a| a.as_str()).collect::<Vec<_>>().join("|"),
        });
    }
    out.regional_networks = reg_airports
        .into_iter()
        .map(|((k, period), a)| RegionalNetwork {
            regional: k.clone(),
            period,
            airports: a.len() as u64,
        })
        .collect();
    Ok(out)
}

pub fn aggregate_panel(obs: &[TicketObservation], registry: &OwnershipRegistry) -> Result<Vec<CarrierMarketPeriod>> {
    Ok(market_structure(obs, registry)?.cells)
}

pub fn usage_shares(obs: &[TicketObservation], registry: &OwnershipRegistry) -> Result<Vec<RegionalUsageShare>> {
    Ok(market_structure(obs, registry)?.usage)
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::sample::Segment;

    pub(crate) fn trip(id: &str, tk: &str, pax: u32, fare: f64, legs: &[(&str, &str, &str, f64)]) -> TicketObservation {
        let segments: Vec<Segment> = legs
            .iter()
            .map(|&(o, d, op, dist)| Segment {
                origin: o.into(),
                destination: d.into(),
                operating_carrier: op.into(),
                distance: dist,
            })
            .collect();
        TicketObservation {
            itinerary_id: id.into(),
            direction: 1,
            ticketing_carrier: tk.into(),
            market: Market::new(segments[0].origin.clone(), segments.last().unwrap().destination.clone()),
            segments,
            passengers: pax,
            fare,
            period: Period::new(2016, 2),
        }
    }

    /// The three CHO-DFW segment paths.
    pub(crate) fn cho_dfw(pa: f64, pb: f64, pc: f64) -> Vec<TicketObservation> {
        vec![
            trip("a", "AA", 100, pa, &[("CHO", "CLT", "OO", 150.0), ("CLT", "DFW", "AA", 300.0)]),
            trip("b", "AA", 50, pb, &[("CHO", "PHL", "AA", 50.0), ("PHL", "DFW", "AA", 450.0)]),
            trip("c", "DL", 200, pc, &[("CHO", "ATL", "DL", 200.0), ("ATL", "DFW", "DL", 250.0)]),
        ]
    }

    fn cell<'a>(cells: &'a [CarrierMarketPeriod], c: &str) -> &'a CarrierMarketPeriod {
        cells.iter().find(|x| x.carrier.as_str() == c).unwrap()
    }

    #[test]
    fn cho_dfw_panel() {
        let ms = market_structure(&cho_dfw(300.0, 240.0, 280.0), &OwnershipRegistry::builtin()).unwrap();
        let aa = cell(&ms.cells, "AA");
        assert_eq!(aa.traffic, 150);
        assert!((aa.price - (100.0 * 300.0 + 50.0 * 240.0) / 150.0).abs() < 1e-12);
        assert_eq!(aa.pax_seat_miles_total, 70_000.0);
        assert_eq!(aa.pax_seat_miles_regional, 15_000.0);
        assert!((regional_share(aa).unwrap() - 15.0 / 70.0).abs() < 1e-15);
        assert_eq!(regional_share(cell(&ms.cells, "DL")), Some(0.0));

        assert_eq!(ms.usage.len(), 1);
        assert_eq!(ms.usage[0].regional, Carrier::new("OO"));
        assert!((ms.usage[0].share - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(ms.paths[0].set().len(), 4);
    }

    #[test]
    fn subsidiary_miles_are_not_regional() {
        let obs = vec![trip("a", "AA", 10, 100.0, &[("CHO", "CLT", "MQ", 150.0), ("CLT", "DFW", "AA", 300.0)])];
        let ms = market_structure(&obs, &OwnershipRegistry::builtin()).unwrap();
        assert_eq!(ms.cells[0].pax_seat_miles_regional, 0.0);
        assert_eq!(ms.cells[0].pax_seat_miles_total, 4500.0);
        assert!(ms.usage.is_empty());
    }

    #[test]
    fn all_regional_share_is_one() {
        let obs = vec![trip("a", "AA", 10, 100.0, &[("CHO", "CLT", "OO", 150.0), ("CLT", "DFW", "EV", 300.0)])];
        let ms = market_structure(&obs, &OwnershipRegistry::builtin()).unwrap();
        assert_eq!(regional_share(&ms.cells[0]), Some(1.0));
        assert_eq!(ms.usage.len(), 2);
    }

    #[test]
    fn same_regional_twice_counts_once() {
        let obs = vec![
            trip("a", "AA", 30, 100.0, &[("CHO", "CLT", "OO", 150.0), ("CLT", "DFW", "OO", 300.0)]),
            trip("b", "AA", 70, 100.0, &[("CHO", "DFW", "AA", 900.0)]),
        ];
        let ms = market_structure(&obs, &OwnershipRegistry::builtin()).unwrap();
        assert_eq!(ms.usage.len(), 1);
        assert_eq!(ms.usage[0].passengers, 30);
        assert!((ms.usage[0].share - 0.3).abs() < 1e-15);
    }

    #[test]
    fn network_counts_by_origin() {
        let obs = vec![
            trip("a", "AA", 1, 100.0, &[("CHO", "DFW", "AA", 900.0)]),
            trip("b", "AA", 1, 100.0, &[("CHO", "MCO", "AA", 600.0)]),
            trip("c", "AA", 1, 100.0, &[("CHO", "MCO", "AA", 600.0)]),
        ];
        let n = network_sizes(&obs);
        assert_eq!(n[&(Carrier::new("AA"), Period::new(2016, 2))][&Airport::new("CHO")], 2);
        let ms = market_structure(&obs, &OwnershipRegistry::builtin()).unwrap();
        assert_eq!(ms.cells[0].network_origin, 0.02);
        assert_eq!(ms.cells[0].network_destination, 0.0);
    }

    #[test]
    fn hub_with_k_destinations() {
        let dests = ["ATL", "BOS", "DEN", "MIA", "SEA"];
        let mut obs = Vec::new();
        for d in dests {
            obs.push(trip("x", "UA", 1, 100.0, &[("ORD", d, "UA", 500.0)]));
            obs.push(trip("y", "UA", 1, 100.0, &[(d, "ORD", "UA", 500.0)]));
        }
        let n = network_sizes(&obs);
        assert_eq!(n[&(Carrier::new("UA"), Period::new(2016, 2))][&Airport::new("ORD")], 5);
    }

    #[test]
    fn unknown_operating_carrier_is_an_error() {
        let obs = vec![trip("a", "AA", 1, 100.0, &[("CHO", "DFW", "QQ", 900.0)])];
        assert!(market_structure(&obs, &OwnershipRegistry::builtin()).is_err());
    }
}
