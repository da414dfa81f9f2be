//! Scenario-sampling validation and quantification of controlled invariant sets.

pub mod error;
pub mod geometry;
pub mod scenario;
pub mod oracle;
pub mod quantification;
pub mod validation;

pub use error::{Error, Result};
