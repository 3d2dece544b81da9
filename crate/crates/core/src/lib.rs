//! Interpretable feature recommendation for binary classification of
//! time-series signals.

pub mod dataset;
pub mod error;
pub mod features;
pub mod interpret;
pub mod models;
pub mod partition;
pub mod selection;
pub mod stats;
pub mod transforms;

pub use error::{Error, ErrorKind, Result};
