//! Classify free-text ledger lines into the 66 US EEIO summary commodity
//! classes and turn classified spend into Scope 3 emission estimates.

pub mod classifiers;
pub mod cli;
pub mod corpus;
pub mod emission;
pub mod encoder;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod plot;
pub mod taxonomy;
pub mod text;

pub use error::{Error, Result};
