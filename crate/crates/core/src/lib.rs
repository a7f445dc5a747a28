//! Airline market-structure measures, instruments and fixed-effects
//! control-function estimation.

pub mod econometrics;
pub mod error;
pub mod ingest;
pub mod instruments;
pub mod registry;
pub mod metrics;
pub mod oracle;
pub mod panel;
pub mod pipeline;
pub mod report;
pub mod sample;
pub mod stats;
pub mod synth;
pub mod types;

pub use error::{Error, Result};
pub use types::{Airport, Carrier, Market, Period};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/sample.md")]
    mod sample {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/instruments.md")]
    mod instruments {}
    #[doc = include_str!("../../../book/src/estimation.md")]
    mod estimation {}
    #[doc = include_str!("../../../book/src/synthetic.md")]
    mod synthetic {}
    #[doc = include_str!("../../../book/src/manifest.md")]
    mod manifest {}
}
