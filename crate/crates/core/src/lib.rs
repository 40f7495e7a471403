//! Order-2 Markov expense-level models and Monte Carlo simulation of health
//! savings accounts backed by catastrophic insurance.

pub mod error;
pub mod hsa;
pub mod ingest;
pub mod markov;
pub mod model;
pub mod money;
pub mod report;
pub mod sampler;
pub mod seed;
pub mod sim;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
pub use model::{AgeRange, ExpenseLevel, LevelBreaks, PersonYearRecord, Sex, Stratum};
pub use money::Money;
