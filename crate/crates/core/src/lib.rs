//! Minimal gaps and additive energy of dilated real sequences `alpha * x_n mod 1`.
//!
//! Numeric routines are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the common double-precision instantiations.

pub mod dd;
pub mod diophantine;
pub mod energy;
pub mod error;
pub mod exact;
pub mod fit;
pub mod gap_stats;
pub mod harmonic;
pub mod metric_mc;
pub mod quad;
pub mod scalar;
pub mod sequences;

pub use error::{Error, Result};
pub use scalar::Real;
pub use sequences::{EtaSchedule, Family, SequenceSpec, SpacingMode, SpacingReport};

pub type GapResult64 = gap_stats::GapResult<f64>;
pub type SpacingReport64 = SpacingReport<f64>;
pub type Dd64 = dd::Dd<f64>;
