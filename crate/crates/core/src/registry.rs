//! Carrier classification: major, subsidiary regional, or independent
//! regional, as a pure function of (code, year, registry).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{read_table, read_table_from, OwnershipRecord, Parsed};
use crate::types::Carrier;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum CarrierClass {
    IndependentRegional,
    SubsidiaryRegional,
    Major,
}

/// What to do with a code that is neither a major nor covered by the
/// registry in the requested year.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnknownCarrierPolicy {
    #[default]
    Reject,
    /// Classify as a major and log a warning.
    Major,
}

/// Ticketing carriers treated as majors even if they do not appear as
/// ticketing carriers in the input.
pub const DEFAULT_MAJORS: &[&str] = &["AA", "AS", "B6", "CO", "DL", "HP", "NW", "TW", "UA", "US", "WN"];

#[derive(Debug, Clone)]
pub struct OwnershipRegistry {
    by_code: BTreeMap<Carrier, Vec<OwnershipRecord>>,
    majors: BTreeSet<Carrier>,
    policy: UnknownCarrierPolicy,
}

impl OwnershipRegistry {
    /// Fails if two intervals of the same code overlap.
    pub fn from_records(records: impl IntoIterator<Item = OwnershipRecord>) -> Result<Self> {
        let mut by_code: BTreeMap<Carrier, Vec<OwnershipRecord>> = BTreeMap::new();
        for r in records {
            by_code.entry(r.regional_code.clone()).or_default().push(r);
        }
        for (code, rows) in by_code.iter_mut() {
            rows.sort_by_key(|r| r.start_year);
            for pair in rows.windows(2) {
                let (a, b) = (&pair[0], &pair[1]);
                if a.end_year.is_none_or(|end| end >= b.start_year) {
                    return Err(Error::Registry(format!(
                        "{code}: interval starting {} overlaps interval starting {}",
                        a.start_year, b.start_year
                    )));
                }
            }
        }
        Ok(OwnershipRegistry {
            by_code,
            majors: DEFAULT_MAJORS.iter().map(|&c| Carrier::new(c)).collect(),
            policy: UnknownCarrierPolicy::default(),
        })
    }

    /// The registry shipped with the crate.
    pub fn builtin() -> Self {
        let parsed: Parsed<OwnershipRecord> =
            read_table_from(include_str!("../data/ownership.csv").as_bytes(), "builtin ownership")
                .expect("builtin ownership table parses");
        assert!(parsed.rejects.is_empty(), "builtin ownership table has rejects");
        Self::from_records(parsed.records).expect("builtin ownership table is consistent")
    }

    /// Loads a registry file. Any rejected row is an error: a silently
    /// dropped ownership row would misclassify a carrier.
    pub fn load(path: &Path) -> Result<Self> {
        let parsed: Parsed<OwnershipRecord> = read_table(path)?;
        if let Some(r) = parsed.rejects.first() {
            return Err(Error::Registry(format!(
                "{} line {}: {}",
                path.display(),
                r.line,
                r.reason
            )));
        }
        Self::from_records(parsed.records)
    }

    pub fn with_policy(mut self, policy: UnknownCarrierPolicy) -> Self {
        self.policy = policy;
        self
    }

    /// Adds ticketing carriers to the majors set.
    pub fn with_majors<I, C>(mut self, majors: I) -> Self
    where
        I: IntoIterator<Item = C>,
        C: Into<Carrier>,
    {
        self.majors.extend(majors.into_iter().map(Into::into));
        self
    }

    pub fn policy(&self) -> UnknownCarrierPolicy {
        self.policy
    }

    pub fn majors(&self) -> &BTreeSet<Carrier> {
        &self.majors
    }

    pub fn owner_at(&self, code: &Carrier, year: i32) -> Option<&OwnershipRecord> {
        self.by_code.get(code)?.iter().find(|r| r.covers(year))
    }

    pub fn records(&self) -> impl Iterator<Item = &OwnershipRecord> {
        self.by_code.values().flatten()
    }
}

impl Default for OwnershipRegistry {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Majors take precedence over registry rows. A regional whose owner in
/// `year` is a major's holding company is a subsidiary; any other owner
/// makes it independent.
pub fn classify_regional(carrier: &Carrier, year: i32, registry: &OwnershipRegistry) -> Result<CarrierClass> {
    if registry.majors.contains(carrier) {
        return Ok(CarrierClass::Major);
    }
    match registry.owner_at(carrier, year) {
        Some(r) if r.owner_major.as_ref().is_some_and(|m| !m.as_str().is_empty()) => {
            Ok(CarrierClass::SubsidiaryRegional)
        }
        Some(_) => Ok(CarrierClass::IndependentRegional),
        None => match registry.policy {
            UnknownCarrierPolicy::Reject => Err(Error::UnknownCarrier {
                code: carrier.to_string(),
                year,
            }),
            UnknownCarrierPolicy::Major => {
                log::warn!("carrier {carrier} unknown in {year}; classified as major");
                Ok(CarrierClass::Major)
            }
        },
    }
}
