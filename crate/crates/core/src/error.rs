use std::path::PathBuf;

use thiserror::Error;

use crate::model::{ExpenseLevel, Stratum};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid money amount {text:?}: {reason}")]
    Money { text: String, reason: &'static str },

    #[error("reference date {reference} precedes birth date {birth}")]
    ReferenceBeforeBirth {
        birth: chrono::NaiveDate,
        reference: chrono::NaiveDate,
    },

    #[error("person born {birth} is outside ages 21-65 for the whole window {first_year}-{last_year}")]
    NoAgeRange {
        birth: chrono::NaiveDate,
        first_year: i32,
        last_year: i32,
    },

    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate person-year ({person_id}, {year})")]
    DuplicatePersonYear {
        line: u64,
        person_id: String,
        year: i32,
    },

    #[error("person {person_id}: inconsistent sex or birth_date across records")]
    InconsistentPerson { person_id: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("empty cohort")]
    EmptyCohort,

    #[error("empty estimation set")]
    EmptyEstimationSet,

    #[error("invalid year selection: {0}")]
    InvalidYears(String),

    #[error("empty stratum {0}")]
    EmptyStratum(Stratum),

    #[error("no expense values at level {level} for {stratum} or any fallback pool")]
    SamplerExhausted {
        stratum: Stratum,
        level: ExpenseLevel,
    },

    #[error("empty initial-life pool: no cohort members in age range 25-30 in the final study year")]
    EmptyInitialPool,

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("snapshot age {age} is outside the simulated ages {first}-{last}")]
    SnapshotAge { age: u32, first: u32, last: u32 },

    #[error("empty input")]
    EmptyInput,

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
