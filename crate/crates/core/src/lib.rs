//! Three-party semi-honest secure computation over `Z_2^64` fixed-point shares,
//! plus four privacy-preserving missing-data imputation methods built on top of it.
//!
//! Two computing parties hold additive shares of the data and of an availability
//! mask (1 = present, 0 = missing); a helper party deals correlated randomness
//! and never sees data shares. All imputation methods run obliviously: control
//! flow and communication volume depend only on public shapes, never on values
//! or on which cells are missing.

pub mod dataset;
pub mod error;
pub mod experiment;
pub mod fixedpoint;
pub mod gadgets;
pub mod imputation;
pub mod oracle;
pub mod party;
pub mod randomness;
pub mod sharing;
pub mod sortnet;
pub mod transport;

pub use error::{Error, Result};
pub use fixedpoint::{FxConfig, Ring64};
pub use party::{PartyCtx, PartyId, SessionConfig, TransportKind};
pub use sharing::{SharedBits, SharedMatrix, SharedVector};
