//! Description lengths, implicit priors and optimal problem instances for
//! community-detection objectives that depend on a partition only through
//! its block summary.

pub mod dos;
pub mod error;
pub mod graph;
pub mod instances;
pub mod mdl;
pub mod metrics;
pub mod numeric;
pub mod optimizer;
pub mod priors;
pub mod quality;
pub mod rng;
pub mod validation;

pub use error::{Error, Result};
