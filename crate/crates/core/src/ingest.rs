//! Typed loading of the delimited input families.
//!
//! Every table is a comma-separated file with a fixed header. Reading is
//! total: each data row ends up either as a typed record or as a
//! [`Reject`] carrying its line number and a reason, so
//! `records.len() + rejects.len() == rows_in` always holds. A header that
//! does not match the documented column list aborts the load.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs::File;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

use crate::error::{Error, Result};
use crate::types::{Airport, Carrier, Period};

/// A table with a documented header and row-level validation.
pub trait Table: DeserializeOwned + Serialize {
    /// Canonical file name, used in error messages.
    const NAME: &'static str;
    const COLUMNS: &'static [&'static str];
    /// Whether `#`-prefixed lines are comments.
    const COMMENTS: bool = false;

    fn validate(&self) -> std::result::Result<(), String> {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reject {
    pub line: u64,
    pub reason: String,
    pub raw: String,
}

#[derive(Debug, Clone)]
pub struct Parsed<T> {
    pub records: Vec<T>,
    pub rejects: Vec<Reject>,
    pub rows_in: usize,
}

impl<T> Parsed<T> {
    pub fn is_total(&self) -> bool {
        self.records.len() + self.rejects.len() == self.rows_in
    }
}

pub fn read_table<T: Table>(path: &Path) -> Result<Parsed<T>> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_table_from(file, &path.display().to_string())
}

pub fn read_table_from<T: Table, R: Read>(reader: R, source: &str) -> Result<Parsed<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .comment(T::COMMENTS.then_some(b'#'))
        .from_reader(reader);
    let headers = rdr.headers().map_err(|e| Error::csv(source, e))?.clone();
    let found: Vec<&str> = headers.iter().map(str::trim).collect();
    if found != T::COLUMNS {
        return Err(Error::Schema {
            file: source.to_string(),
            expected: T::COLUMNS.join(","),
            found: found.join(","),
        });
    }
    let headers = csv::StringRecord::from(found);

    let mut out = Parsed {
        records: Vec::new(),
        rejects: Vec::new(),
        rows_in: 0,
    };
    let mut record = csv::StringRecord::new();
    loop {
        let line_hint = rdr.position().line() + 1;
        match rdr.read_record(&mut record) {
            Ok(false) => break,
            Ok(true) => {}
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(line_hint);
                match e.kind() {
                    csv::ErrorKind::Utf8 { .. } => {
                        out.rows_in += 1;
                        out.rejects.push(Reject {
                            line,
                            reason: "invalid utf-8".into(),
                            raw: String::new(),
                        });
                        continue;
                    }
                    _ => return Err(Error::csv(source, e)),
                }
            }
        }
        out.rows_in += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(line_hint);
        let raw = record.iter().collect::<Vec<_>>().join(",");
        if record.len() != T::COLUMNS.len() {
            out.rejects.push(Reject {
                line,
                reason: format!("expected {} fields, found {}", T::COLUMNS.len(), record.len()),
                raw,
            });
            continue;
        }
        record.trim();
        match record.deserialize::<T>(Some(&headers)) {
            Err(e) => out.rejects.push(Reject {
                line,
                reason: format!("unparseable field: {}", deser_message(&e)),
                raw,
            }),
            Ok(rec) => match rec.validate() {
                Ok(()) => out.records.push(rec),
                Err(reason) => out.rejects.push(Reject { line, reason, raw }),
            },
        }
    }
    Ok(out)
}

fn deser_message(e: &csv::Error) -> String {
    match e.kind() {
        csv::ErrorKind::Deserialize { err, .. } => match err.field() {
            Some(i) => format!("field {}: {}", i + 1, err.kind()),
            None => err.kind().to_string(),
        },
        _ => e.to_string(),
    }
}

/// Writes records with the table's canonical header.
pub fn write_table<T: Table>(path: &Path, records: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    if records.is_empty() {
        w.write_record(T::COLUMNS)
            .map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    for r in records {
        w.serialize(r).map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// `<input>.rejects.csv` next to the input.
pub fn rejects_path(input: &Path) -> PathBuf {
    let mut name = input.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".rejects.csv");
    input.with_file_name(name)
}

pub fn write_rejects(path: &Path, rejects: &[Reject]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::csv(path.display().to_string(), e))?;
    w.write_record(["line", "reason", "raw"])
        .map_err(|e| Error::csv(path.display().to_string(), e))?;
    for r in rejects {
        w.write_record([r.line.to_string().as_str(), &r.reason, &r.raw])
            .map_err(|e| Error::csv(path.display().to_string(), e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Accepts `true/false`, `1/0`, `1.0/0.0`, `t/f`, `y/n`.
fn flag<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<bool, D::Error> {
    let s = String::deserialize(d)?;
    match s.trim().to_ascii_lowercase().as_str() {
        "true" | "t" | "1" | "1.0" | "y" | "yes" => Ok(true),
        "false" | "f" | "0" | "0.0" | "n" | "no" => Ok(false),
        other => Err(serde::de::Error::custom(format!("not a boolean: `{other}`"))),
    }
}

fn nonempty(s: &str, what: &str) -> std::result::Result<(), String> {
    if s.trim().is_empty() {
        Err(format!("empty {what}"))
    } else {
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CouponRecord {
    pub itinerary_id: String,
    pub sequence: u32,
    pub ticketing_carrier: Carrier,
    pub operating_carrier: Carrier,
    pub origin: Airport,
    pub destination: Airport,
    pub passengers: i64,
    pub distance: f64,
    pub year: i32,
    pub quarter: u8,
}

impl CouponRecord {
    pub fn period(&self) -> Period {
        Period::new(self.year, self.quarter)
    }
}

impl Table for CouponRecord {
    const NAME: &'static str = "coupons.csv";
    const COLUMNS: &'static [&'static str] = &[
        "itinerary_id",
        "sequence",
        "ticketing_carrier",
        "operating_carrier",
        "origin",
        "destination",
        "passengers",
        "distance",
        "year",
        "quarter",
    ];

    fn validate(&self) -> std::result::Result<(), String> {
        nonempty(&self.itinerary_id, "itinerary id")?;
        nonempty(self.ticketing_carrier.as_str(), "ticketing carrier")?;
        nonempty(self.operating_carrier.as_str(), "operating carrier")?;
        nonempty(self.origin.as_str(), "origin")?;
        nonempty(self.destination.as_str(), "destination")?;
        if self.sequence == 0 {
            return Err("sequence must start at 1".into());
        }
        if self.passengers < 1 {
            return Err("nonpositive passengers".into());
        }
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return Err("nonpositive distance".into());
        }
        if self.origin == self.destination {
            return Err("origin equals destination".into());
        }
        if !(1..=4).contains(&self.quarter) {
            return Err(format!("quarter {} out of range", self.quarter));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TicketRecord {
    pub itinerary_id: String,
    pub fare: f64,
    #[serde(deserialize_with = "flag")]
    pub roundtrip: bool,
    #[serde(deserialize_with = "flag")]
    pub credible: bool,
    #[serde(deserialize_with = "flag")]
    pub bulk_fare: bool,
    pub coupons_outbound: u32,
    pub coupons_return: u32,
}

impl Table for TicketRecord {
    const NAME: &'static str = "tickets.csv";
    const COLUMNS: &'static [&'static str] = &[
        "itinerary_id",
        "fare",
        "roundtrip",
        "credible",
        "bulk_fare",
        "coupons_outbound",
        "coupons_return",
    ];

    fn validate(&self) -> std::result::Result<(), String> {
        nonempty(&self.itinerary_id, "itinerary id")?;
        if !(self.fare.is_finite() && self.fare >= 0.0) {
            return Err("negative fare".into());
        }
        if self.coupons_outbound == 0 {
            return Err("no outbound coupons".into());
        }
        if !self.roundtrip && self.coupons_return != 0 {
            return Err("one-way ticket with return coupons".into());
        }
        Ok(())
    }
}

/// One directional market record of an itinerary (`direction` 1 = outbound,
/// 2 = return).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarketRecord {
    pub itinerary_id: String,
    pub direction: u8,
    pub origin: Airport,
    pub destination: Airport,
}

impl Table for MarketRecord {
    const NAME: &'static str = "markets.csv";
    const COLUMNS: &'static [&'static str] = &["itinerary_id", "direction", "origin", "destination"];

    fn validate(&self) -> std::result::Result<(), String> {
        nonempty(&self.itinerary_id, "itinerary id")?;
        if !(1..=2).contains(&self.direction) {
            return Err(format!("direction {} is not 1 or 2", self.direction));
        }
        if self.origin == self.destination {
            return Err("origin equals destination".into());
        }
        Ok(())
    }
}

/// Ownership of a regional carrier code over an inclusive year interval.
/// An empty `owner_major` means the owner is not a major airline or its
/// holding company; an empty `end_year` means the interval is open.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OwnershipRecord {
    pub regional_code: Carrier,
    pub carrier_name: String,
    pub parent: String,
    pub owner_major: Option<Carrier>,
    pub start_year: i32,
    pub end_year: Option<i32>,
}

impl OwnershipRecord {
    pub fn covers(&self, year: i32) -> bool {
        year >= self.start_year && self.end_year.is_none_or(|e| year <= e)
    }
}

impl Table for OwnershipRecord {
    const NAME: &'static str = "ownership.csv";
    const COLUMNS: &'static [&'static str] = &[
        "regional_code",
        "carrier_name",
        "parent",
        "owner_major",
        "start_year",
        "end_year",
    ];
    const COMMENTS: bool = true;

    fn validate(&self) -> std::result::Result<(), String> {
        nonempty(self.regional_code.as_str(), "regional code")?;
        if let Some(end) = self.end_year {
            if end < self.start_year {
                return Err(format!("end year {end} precedes start year {}", self.start_year));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CpiRecord {
    pub year: i32,
    pub deflator: f64,
}

impl Table for CpiRecord {
    const NAME: &'static str = "cpi.csv";
    const COLUMNS: &'static [&'static str] = &["year", "deflator"];

    fn validate(&self) -> std::result::Result<(), String> {
        if !(self.deflator.is_finite() && self.deflator > 0.0) {
            return Err("nonpositive deflator".into());
        }
        Ok(())
    }
}

/// Price deflators relative to the 2012 base (2012 = 1.0).
#[derive(Debug, Clone, Default)]
pub struct CpiTable {
    by_year: BTreeMap<i32, f64>,
}

impl CpiTable {
    pub fn from_records(records: &[CpiRecord]) -> Self {
        CpiTable {
            by_year: records.iter().map(|r| (r.year, r.deflator)).collect(),
        }
    }

    pub fn deflator(&self, year: i32) -> Result<f64> {
        self.by_year.get(&year).copied().ok_or(Error::MissingCpiYear(year))
    }

    /// Nominal to 2012 dollars.
    pub fn to_real(&self, year: i32, nominal: f64) -> Result<f64> {
        Ok(nominal / self.deflator(year)?)
    }

    pub fn records(&self) -> Vec<CpiRecord> {
        self.by_year
            .iter()
            .map(|(&year, &deflator)| CpiRecord { year, deflator })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirportStateRecord {
    pub airport: Airport,
    pub state: String,
}

impl Table for AirportStateRecord {
    const NAME: &'static str = "airport_states.csv";
    const COLUMNS: &'static [&'static str] = &["airport", "state"];
    const COMMENTS: bool = true;
}

const CONTIGUOUS_48_AND_DC: &[&str] = &[
    "AL", "AZ", "AR", "CA", "CO", "CT", "DE", "DC", "FL", "GA", "ID", "IL", "IN", "IA", "KS",
    "KY", "LA", "ME", "MD", "MA", "MI", "MN", "MS", "MO", "MT", "NE", "NV", "NH", "NJ", "NM",
    "NY", "NC", "ND", "OH", "OK", "OR", "PA", "RI", "SC", "SD", "TN", "TX", "UT", "VT", "VA",
    "WA", "WV", "WI", "WY",
];

/// Airport to state lookup deciding membership in the contiguous 48 states.
#[derive(Debug, Clone, Default)]
pub struct AirportStates {
    state: BTreeMap<Airport, String>,
}

impl AirportStates {
    pub fn from_records(records: &[AirportStateRecord]) -> Self {
        AirportStates {
            state: records
                .iter()
                .map(|r| (r.airport.clone(), r.state.to_ascii_uppercase()))
                .collect(),
        }
    }

    /// The table shipped with the crate (large US airports).
    pub fn builtin() -> Self {
        let parsed: Parsed<AirportStateRecord> =
            read_table_from(include_str!("../data/airport_states.csv").as_bytes(), "builtin")
                .expect("builtin airport table is well-formed");
        Self::from_records(&parsed.records)
    }

    pub fn extend(&mut self, records: &[AirportStateRecord]) {
        for r in records {
            self.state.insert(r.airport.clone(), r.state.to_ascii_uppercase());
        }
    }

    /// Unknown airports are treated as outside the contiguous 48.
    pub fn is_contiguous(&self, airport: &Airport) -> bool {
        self.state
            .get(airport)
            .is_some_and(|s| CONTIGUOUS_48_AND_DC.contains(&s.as_str()))
    }

    pub fn records(&self) -> Vec<AirportStateRecord> {
        self.state
            .iter()
            .map(|(a, s)| AirportStateRecord {
                airport: a.clone(),
                state: s.clone(),
            })
            .collect()
    }
}

/// Calendar date in `YYYY-MM-DD` form.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Date {
    pub year: i32,
    pub month: u8,
    pub day: u8,
}

impl Date {
    pub fn quarter(&self) -> u8 {
        (self.month - 1) / 3 + 1
    }

    pub fn period(&self) -> Period {
        Period::new(self.year, self.quarter())
    }

    fn days_in_month(year: i32, month: u8) -> u8 {
        match month {
            1 | 3 | 5 | 7 | 8 | 10 | 12 => 31,
            4 | 6 | 9 | 11 => 30,
            _ if (year % 4 == 0 && year % 100 != 0) || year % 400 == 0 => 29,
            _ => 28,
        }
    }

    /// All dates of a quarter in order.
    pub fn quarter_days(period: Period) -> Vec<Date> {
        let first = (period.quarter - 1) * 3 + 1;
        (first..first + 3)
            .flat_map(|month| {
                (1..=Self::days_in_month(period.year, month)).map(move |day| Date {
                    year: period.year,
                    month,
                    day,
                })
            })
            .collect()
    }
}

impl fmt::Display for Date {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}-{:02}", self.year, self.month, self.day)
    }
}

impl FromStr for Date {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let bad = || format!("not a YYYY-MM-DD date: `{s}`");
        let mut it = s.trim().splitn(3, '-');
        let year: i32 = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let month: u8 = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        let day: u8 = it.next().and_then(|v| v.parse().ok()).ok_or_else(bad)?;
        if !(1..=12).contains(&month) || day == 0 || day > Self::days_in_month(year, month) {
            return Err(bad());
        }
        Ok(Date { year, month, day })
    }
}

impl TryFrom<String> for Date {
    type Error = String;

    fn try_from(s: String) -> std::result::Result<Self, String> {
        s.parse()
    }
}

impl From<Date> for String {
    fn from(d: Date) -> String {
        d.to_string()
    }
}

/// Daily station record. Missing elements are `None`, never zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeatherObservation {
    pub station_id: String,
    pub date: Date,
    /// Tenths of mm.
    pub precipitation: Option<f64>,
    /// mm.
    pub snowfall: Option<f64>,
    /// mm.
    pub snow_depth: Option<f64>,
    /// Tenths of degrees Celsius.
    pub min_temperature: Option<f64>,
}

impl WeatherObservation {
    pub fn elements(&self) -> [Option<f64>; 4] {
        [
            self.precipitation,
            self.snowfall,
            self.snow_depth,
            self.min_temperature,
        ]
    }
}

impl Table for WeatherObservation {
    const NAME: &'static str = "weather.csv";
    const COLUMNS: &'static [&'static str] = &[
        "station_id",
        "date",
        "precipitation",
        "snowfall",
        "snow_depth",
        "min_temperature",
    ];

    fn validate(&self) -> std::result::Result<(), String> {
        nonempty(&self.station_id, "station id")?;
        let nonneg = [
            ("precipitation", self.precipitation),
            ("snowfall", self.snowfall),
            ("snow depth", self.snow_depth),
        ];
        for (name, v) in nonneg {
            if let Some(v) = v {
                if !(v.is_finite() && v >= 0.0) {
                    return Err(format!("negative {name}"));
                }
            }
        }
        if self.min_temperature.is_some_and(|t| !t.is_finite()) {
            return Err("non-finite minimum temperature".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AirportStationRecord {
    pub airport: Airport,
    pub station_id: String,
}

impl Table for AirportStationRecord {
    const NAME: &'static str = "airport_stations.csv";
    const COLUMNS: &'static [&'static str] = &["airport", "station_id"];

    fn validate(&self) -> std::result::Result<(), String> {
        nonempty(self.airport.as_str(), "airport")?;
        nonempty(&self.station_id, "station id")
    }
}

pub fn parse_coupons(path: &Path) -> Result<Parsed<CouponRecord>> {
    read_table(path)
}

pub fn parse_tickets(path: &Path) -> Result<Parsed<TicketRecord>> {
    read_table(path)
}

pub fn parse_markets(path: &Path) -> Result<Parsed<MarketRecord>> {
    read_table(path)
}

/// Weather rows; a repeated (station, date) is rejected after the first.
pub fn parse_weather(path: &Path) -> Result<Parsed<WeatherObservation>> {
    let parsed = read_table(path)?;
    Ok(reject_duplicate_days(parsed))
}

pub fn reject_duplicate_days(mut parsed: Parsed<WeatherObservation>) -> Parsed<WeatherObservation> {
    let mut seen = HashSet::new();
    let mut keep = Vec::with_capacity(parsed.records.len());
    for (i, obs) in parsed.records.into_iter().enumerate() {
        if seen.insert((obs.station_id.clone(), obs.date)) {
            keep.push(obs);
        } else {
            parsed.rejects.push(Reject {
                line: 0,
                reason: format!("duplicate station-date {} {} (record {})", obs.station_id, obs.date, i + 1),
                raw: String::new(),
            });
        }
    }
    parsed.records = keep;
    parsed
}

/// One station per airport.
#[derive(Debug, Clone, Default)]
pub struct AirportStationMap {
    station: BTreeMap<Airport, String>,
}

impl AirportStationMap {
    pub fn from_records(records: &[AirportStationRecord]) -> Result<Self> {
        let mut station = BTreeMap::new();
        for r in records {
            if let Some(prev) = station.insert(r.airport.clone(), r.station_id.clone()) {
                if prev != r.station_id {
                    return Err(Error::StationMap(format!(
                        "airport {} mapped to both {prev} and {}",
                        r.airport, r.station_id
                    )));
                }
            }
        }
        Ok(AirportStationMap { station })
    }

    pub fn station(&self, airport: &Airport) -> Option<&str> {
        self.station.get(airport).map(String::as_str)
    }

    pub fn airports(&self) -> impl Iterator<Item = &Airport> {
        self.station.keys()
    }

    pub fn records(&self) -> Vec<AirportStationRecord> {
        self.station
            .iter()
            .map(|(a, s)| AirportStationRecord {
                airport: a.clone(),
                station_id: s.clone(),
            })
            .collect()
    }
}

pub fn parse_station_map(path: &Path) -> Result<AirportStationMap> {
    let parsed: Parsed<AirportStationRecord> = read_table(path)?;
    if let Some(r) = parsed.rejects.first() {
        return Err(Error::StationMap(format!("line {}: {}", r.line, r.reason)));
    }
    AirportStationMap::from_records(&parsed.records)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageEntry {
    pub airport: Airport,
    pub station_id: Option<String>,
    pub days: usize,
    pub missing_precipitation: usize,
    pub missing_snowfall: usize,
    pub missing_snow_depth: usize,
    pub missing_min_temperature: usize,
}

/// Station observations re-keyed by airport.
#[derive(Debug, Clone, Default)]
pub struct AirportWeather {
    pub by_airport: BTreeMap<Airport, Vec<WeatherObservation>>,
    pub coverage: Vec<CoverageEntry>,
}

impl AirportWeather {
    pub fn rows(&self) -> usize {
        self.by_airport.values().map(Vec::len).sum()
    }
}

/// Joins observations to airports through the station map. `airports`
/// lists the airports the caller needs; when empty, every mapped airport is
/// used. Airports without a station get a coverage entry and no rows.
pub fn load_weather(
    observations: &[WeatherObservation],
    map: &AirportStationMap,
    airports: &[Airport],
) -> AirportWeather {
    let wanted: BTreeSet<Airport> = if airports.is_empty() {
        map.airports().cloned().collect()
    } else {
        airports.iter().cloned().collect()
    };
    let mut by_station: BTreeMap<&str, Vec<&WeatherObservation>> = BTreeMap::new();
    for obs in observations {
        by_station.entry(obs.station_id.as_str()).or_default().push(obs);
    }

    let mut out = AirportWeather::default();
    for airport in wanted {
        let station = map.station(&airport);
        let mut rows: Vec<WeatherObservation> = station
            .and_then(|s| by_station.get(s))
            .map(|v| v.iter().map(|o| (*o).clone()).collect())
            .unwrap_or_default();
        rows.sort_by_key(|o| o.date);
        let missing = |f: fn(&WeatherObservation) -> Option<f64>| rows.iter().filter(|o| f(o).is_none()).count();
        out.coverage.push(CoverageEntry {
            airport: airport.clone(),
            station_id: station.map(str::to_string),
            days: rows.len(),
            missing_precipitation: missing(|o| o.precipitation),
            missing_snowfall: missing(|o| o.snowfall),
            missing_snow_depth: missing(|o| o.snow_depth),
            missing_min_temperature: missing(|o| o.min_temperature),
        });
        if !rows.is_empty() {
            out.by_airport.insert(airport, rows);
        }
    }
    out
}
