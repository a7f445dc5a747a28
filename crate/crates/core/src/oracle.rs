//! Brute-force reference implementations of the market measures for small
//! instances, and a generator of such instances. Everything here scans flat
//! tables with plain loops; nothing is indexed or cached.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ingest::OwnershipRecord;
use crate::metrics::MMC_SCALE;
use crate::registry::OwnershipRegistry;
use crate::sample::{Segment, TicketObservation};
use crate::types::{Airport, Carrier, Market, Period};

/// Passengers of `major` in `market`, flown on `regional` for part of the
/// trip or entirely on the major when `regional` is `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct UsageRow {
    pub market: Market,
    pub major: Carrier,
    pub regional: Option<Carrier>,
    pub passengers: u64,
}

fn markets(rows: &[UsageRow]) -> Vec<Market> {
    let mut out: Vec<Market> = Vec::new();
    for r in rows {
        if !out.contains(&r.market) {
            out.push(r.market.clone());
        }
    }
    out.sort();
    out
}

fn majors_in(rows: &[UsageRow], m: &Market) -> Vec<Carrier> {
    let mut out: Vec<Carrier> = Vec::new();
    for r in rows {
        if r.market == *m && r.passengers > 0 && !out.contains(&r.major) {
            out.push(r.major.clone());
        }
    }
    out
}

fn share(rows: &[UsageRow], m: &Market, major: &Carrier, regional: &Carrier) -> f64 {
    let mut total = 0u64;
    let mut on_k = 0u64;
    for r in rows {
        if r.market == *m && r.major == *major {
            total += r.passengers;
            if r.regional.as_ref() == Some(regional) {
                on_k += r.passengers;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        on_k as f64 / total as f64
    }
}

fn linked(rows: &[UsageRow], major: &Carrier, regional: &Carrier) -> bool {
    rows.iter()
        .any(|r| r.major == *major && r.regional.as_ref() == Some(regional) && r.passengers > 0)
}

fn active_in(rows: &[UsageRow], m: &Market) -> Vec<Carrier> {
    let mut out: Vec<Carrier> = Vec::new();
    for r in rows {
        if let Some(k) = &r.regional {
            if r.market == *m && r.passengers > 0 && !out.contains(k) {
                out.push(k.clone());
            }
        }
    }
    out
}

/// Triple sum over majors i, competitors j ≠ i and active regionals k of
/// j's share on k, counted when i also uses k somewhere in the period.
pub fn oracle_csc(rows: &[UsageRow]) -> BTreeMap<Market, f64> {
    let mut out = BTreeMap::new();
    for m in markets(rows) {
        let majors = majors_in(rows, &m);
        let ks = active_in(rows, &m);
        let n = majors.len();
        if n < 2 || ks.is_empty() {
            out.insert(m, 0.0);
            continue;
        }
        let mut total = 0.0;
        for i in &majors {
            for j in &majors {
                if i == j {
                    continue;
                }
                for k in &ks {
                    if linked(rows, i, k) {
                        total += share(rows, &m, j, k);
                    }
                }
            }
        }
        out.insert(m, total / (n * (n - 1) * ks.len()) as f64);
    }
    out
}

/// Average over ordered pairs of co-present majors of the markets the pair
/// shares, divided by 1,000. `None` with fewer than two majors.
pub fn oracle_mmc(presence: &[(Market, Carrier)]) -> BTreeMap<Market, Option<f64>> {
    let present = |m: &Market, c: &Carrier| presence.iter().any(|(pm, pc)| pm == m && pc == c);
    let mut ms: Vec<&Market> = presence.iter().map(|(m, _)| m).collect();
    ms.sort();
    ms.dedup();
    let mut out = BTreeMap::new();
    for m in &ms {
        let mut majors: Vec<&Carrier> = presence.iter().filter(|(pm, _)| pm == *m).map(|(_, c)| c).collect();
        majors.sort();
        majors.dedup();
        let n = majors.len();
        if n < 2 {
            out.insert((*m).clone(), None);
            continue;
        }
        let mut total = 0u64;
        for i in &majors {
            for j in &majors {
                if i == j {
                    continue;
                }
                for other in &ms {
                    if present(other, i) && present(other, j) {
                        total += 1;
                    }
                }
            }
        }
        out.insert((*m).clone(), Some(total as f64 / (n * (n - 1)) as f64 / MMC_SCALE));
    }
    out
}

/// Sum of squared regional passenger shares. `None` without regional
/// passengers.
pub fn oracle_hhi(rows: &[UsageRow]) -> BTreeMap<Market, Option<f64>> {
    let mut out = BTreeMap::new();
    for m in markets(rows) {
        let ks = active_in(rows, &m);
        let mut pax = Vec::new();
        for k in &ks {
            let mut p = 0u64;
            for r in rows {
                if r.market == m && r.regional.as_ref() == Some(k) {
                    p += r.passengers;
                }
            }
            pax.push(p);
        }
        let total: u64 = pax.iter().sum();
        if total == 0 {
            out.insert(m, None);
            continue;
        }
        let mut h = 0.0;
        for p in pax {
            let s = p as f64 / total as f64;
            h += s * s;
        }
        out.insert(m, Some(h));
    }
    out
}

/// Majors present in each market, as the presence list for [`oracle_mmc`].
pub fn presence(rows: &[UsageRow]) -> Vec<(Market, Carrier)> {
    let mut out = Vec::new();
    for m in markets(rows) {
        for c in majors_in(rows, &m) {
            out.push((m.clone(), c));
        }
    }
    out
}

/// A random instance with up to `majors` majors, `regionals` regionals and
/// `markets` markets.
pub fn random_instance(seed: u64, majors: usize, regionals: usize, markets: usize) -> Vec<UsageRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n_maj = rng.random_range(2..=majors.max(2));
    let n_reg = rng.random_range(1..=regionals.max(1));
    let n_mkt = rng.random_range(1..=markets.max(1));
    let airports: Vec<Airport> = (0..6).map(|i| Airport::new(format!("A{i}"))).collect();
    let mut pairs: Vec<Market> = Vec::new();
    for o in &airports {
        for d in &airports {
            if o != d {
                pairs.push(Market::new(o.clone(), d.clone()));
            }
        }
    }
    let mut rows = Vec::new();
    for _ in 0..n_mkt {
        let m = pairs.swap_remove(rng.random_range(0..pairs.len()));
        for j in 1..=n_maj {
            if !rng.random_bool(0.7) {
                continue;
            }
            let major = Carrier::new(format!("J{j}"));
            rows.push(UsageRow {
                market: m.clone(),
                major: major.clone(),
                regional: None,
                passengers: rng.random_range(1..50),
            });
            for k in 1..=n_reg {
                if rng.random_bool(0.4) {
                    rows.push(UsageRow {
                        market: m.clone(),
                        major: major.clone(),
                        regional: Some(Carrier::new(format!("K{k}"))),
                        passengers: rng.random_range(1..50),
                    });
                }
            }
        }
    }
    rows
}

/// One trip per row through a connecting airport, the first leg operated by
/// the row's regional.
pub fn instance_observations(rows: &[UsageRow], period: Period) -> Vec<TicketObservation> {
    let hub = Airport::new("HUB");
    rows.iter()
        .enumerate()
        .map(|(i, r)| {
            let first = r.regional.clone().unwrap_or_else(|| r.major.clone());
            TicketObservation {
                itinerary_id: format!("T{i}"),
                direction: 1,
                ticketing_carrier: r.major.clone(),
                market: r.market.clone(),
                segments: vec![
                    Segment {
                        origin: r.market.origin.clone(),
                        destination: hub.clone(),
                        operating_carrier: first,
                        distance: 300.0,
                    },
                    Segment {
                        origin: hub.clone(),
                        destination: r.market.destination.clone(),
                        operating_carrier: r.major.clone(),
                        distance: 400.0,
                    },
                ],
                passengers: r.passengers as u32,
                fare: 150.0,
                period,
            }
        })
        .collect()
}

/// Registry in which every `K` carrier of an instance is independent.
pub fn instance_registry(regionals: usize) -> OwnershipRegistry {
    let records = (1..=regionals).map(|k| OwnershipRecord {
        regional_code: Carrier::new(format!("K{k}")),
        carrier_name: format!("Regional {k}"),
        parent: "Independent".into(),
        owner_major: None,
        start_year: 1990,
        end_year: None,
    });
    OwnershipRegistry::from_records(records).expect("distinct codes")
}
