//! Coherent-state quantization on a truncated Fock space.
//!
//! * [`fock`]: ladder operators, the canonical pair, spectral exponentials.
//! * [`coherent`]: Weyl operators, coherent states, the resolution of unity.
//! * [`quantize`]: antinormal ordering of polynomial symbols and phase-space
//!   metrics.
//! * [`dynamics`]: Hamilton's equations, boundary-value taxonomy, exact
//!   propagators.
//! * [`wiener`]: Monte Carlo evaluation of the Wiener-regularized phase-space
//!   path integral.

pub mod coherent;
pub mod dynamics;
pub mod error;
pub mod fock;
pub mod quantize;
pub mod symbol;
pub mod wiener;

pub use coherent::{CoherentFamily, CoherentLabel, FiducialSpec, QuadratureGrid};
pub use dynamics::{BvpClass, BvpReport, MomentumScan, PhasePath, PropagatorReport};
pub use error::{ErrorClass, MetriqError, Result};
pub use fock::{HilbertDim, OperatorMatrix, StateVector};
pub use quantize::PhaseMetric;
pub use symbol::PolySymbol;
pub use wiener::{BridgeSpec, CoordMap, EstimatorResult};

/// Version string with the git revision when it was available at build time.
pub fn version_string() -> String {
    match option_env!("METRIQ_GIT_REV") {
        Some(rev) => format!("{} ({rev})", env!("CARGO_PKG_VERSION")),
        None => env!("CARGO_PKG_VERSION").to_string(),
    }
}
