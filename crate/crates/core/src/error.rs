use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error in {file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },

    #[error("{file}: header mismatch, expected [{expected}], found [{found}]")]
    Schema {
        file: String,
        expected: String,
        found: String,
    },

    #[error("missing input file: {0}")]
    MissingFile(PathBuf),

    #[error("unknown carrier code {code} in {year}")]
    UnknownCarrier { code: String, year: i32 },

    #[error("ownership registry: {0}")]
    Registry(String),

    #[error("cpi table has no deflator for year {0}")]
    MissingCpiYear(i32),

    #[error("airport-station map: {0}")]
    StationMap(String),

    #[error("fixed-effect demeaning did not converge after {iterations} sweeps (max group mean {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("rank-deficient design: collinear columns [{}]", .columns.join(", "))]
    RankDeficient { columns: Vec<String> },

    #[error("interaction bin `{0}` has no observations")]
    EmptyBin(String),

    #[error("invalid specification: {0}")]
    Spec(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("infeasible synthetic configuration: {0}")]
    Infeasible(String),

    #[error("degenerate design: {0}")]
    Degenerate(String),

    #[error("stage `{stage}` failed: {source}")]
    Stage {
        stage: String,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(file: impl Into<String>, source: csv::Error) -> Self {
        Error::Csv {
            file: file.into(),
            source,
        }
    }

    pub fn in_stage(self, stage: &str) -> Self {
        match self {
            e @ Error::Stage { .. } => e,
            e => Error::Stage {
                stage: stage.to_string(),
                source: Box::new(e),
            },
        }
    }
}
