//! Identifiers shared by every stage: carriers, airports, markets, periods.

use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! code_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(code: impl Into<String>) -> Self {
                $name(code.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{}", self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                $name(s.to_string())
            }
        }
    };
}

code_type!(
    /// Two- or three-character airline designator (`AA`, `OO`, `9E`).
    Carrier
);
code_type!(
    /// Airport code (`CHO`, `DFW`).
    Airport
);

/// A calendar quarter. Serialized as `2016Q2`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Period {
    pub year: i32,
    pub quarter: u8,
}

impl Period {
    pub fn new(year: i32, quarter: u8) -> Self {
        Period { year, quarter }
    }

    pub fn parse(s: &str) -> Option<Self> {
        let (y, q) = s.split_once('Q')?;
        let quarter: u8 = q.parse().ok()?;
        (1..=4).contains(&quarter).then_some(())?;
        Some(Period::new(y.parse().ok()?, quarter))
    }
}

impl TryFrom<String> for Period {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        Period::parse(&s).ok_or_else(|| format!("not a period: `{s}`"))
    }
}

impl From<Period> for String {
    fn from(p: Period) -> String {
        p.to_string()
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}Q{}", self.year, self.quarter)
    }
}

impl fmt::Debug for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A unidirectional airport pair, irrespective of intermediate stops.
/// Serialized as `CHO-DFW`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Market {
    pub origin: Airport,
    pub destination: Airport,
}

impl Market {
    pub fn new(origin: impl Into<Airport>, destination: impl Into<Airport>) -> Self {
        Market {
            origin: origin.into(),
            destination: destination.into(),
        }
    }

    /// Parses the `ORIGIN-DEST` form used in checkpoint files.
    pub fn parse(s: &str) -> Option<Self> {
        let (o, d) = s.split_once('-')?;
        if o.is_empty() || d.is_empty() || d.contains('-') {
            return None;
        }
        Some(Market::new(o, d))
    }
}

impl TryFrom<String> for Market {
    type Error = String;

    fn try_from(s: String) -> Result<Self, String> {
        Market::parse(&s).ok_or_else(|| format!("not a market: `{s}`"))
    }
}

impl From<Market> for String {
    fn from(m: Market) -> String {
        m.to_string()
    }
}

impl From<String> for Airport {
    fn from(s: String) -> Self {
        Airport(s)
    }
}

impl fmt::Display for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.origin, self.destination)
    }
}

impl fmt::Debug for Market {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
