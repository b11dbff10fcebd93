//! Wiener-regularized phase-space path integral.
//!
//! The propagator is estimated as
//! `2πħ e^{νT/2ħ} ∫ exp{(i/ħ)∫[p dq − H dt]} dμ_W^ν`, where `μ_W^ν` is the
//! unnormalized pinned Wiener measure with diffusion ν. Its total mass is
//! [`pinned_mass`], and paths are drawn from the normalized bridge law.

mod bridge;
mod dump;
mod estimator;
mod integrals;
mod transform;

pub use bridge::{fill_bridge, sample_bridge, sample_pinned_bridge, sample_rng, BridgeBuffers, BridgeSpec, MIN_STEPS};
pub use dump::{read_dump, write_dump, DumpHeader};
pub use estimator::{
    check_feasibility, estimate_propagator, estimate_propagator_with, map_bridges, nu_sweep, path_statistic,
    pinned_mass, regularization_prefactor, samples_sweep, steps_sweep, ComplexSums, ConvergenceRow,
    ConvergenceTable, EstimateOptions, EstimatorResult, RealStats, CHUNK, DEFAULT_GUARD, MIN_SAMPLES,
};
pub use integrals::{action_phase, hamiltonian_integral, ito_pdq, pdq, stratonovich_pdq, Rule};
pub use transform::{covariance_check, transform_path, CoordMap, CovarianceReport};
