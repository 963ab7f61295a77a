//! Numerical laboratory for two-component Bose mixtures on a periodic 1D
//! lattice: exact many-body propagation at desk scale, information-propagation
//! and correlation-growth envelopes with their measured counterparts, an exact
//! projector decomposition of equal-time correlations, and the effective
//! one-body (Hartree) dynamics the mixture factorizes into.
//!
//! The first-quantized tensor space is `(C^M)^{(N1+N2)}` with all A-slots
//! before all B-slots and row-major indexing (A-slot 1 slowest). Everything
//! downstream — embeddings, Hamiltonians, propagation, observables — shares
//! that one convention, defined in [`space`].

pub mod bounds;
pub mod config;
pub mod embed;
pub mod error;
pub mod experiments;
pub mod hamiltonian;
pub mod hartree;
pub mod linalg;
pub mod observables;
pub mod propagator;
pub mod space;
pub mod state;
pub mod witness;

pub use bounds::{commutator_bound, correlation_bound, validity_horizon, LrLayout};
pub use config::{ExperimentConfig, LayoutSection, Preset};
pub use embed::{EmbeddedOperator, SlotSet};
pub use error::{Error, Result};
pub use experiments::{
    run_corr_sweep, run_decomposition_check, run_hartree_compare, run_lr_sweep, SweepOutput,
};
pub use hamiltonian::{
    assemble_full, assemble_modified, bound_params, dft_l1_norm, one_body, BoundParams,
    HamiltonianKind, PotentialSet, SparseHamiltonian,
};
pub use hartree::{convolve, factorization_gap, mass, HartreeFlow, Stepper};
pub use observables::{
    commutator_norm, correlation, kernel_norm_product, layout_operators,
    projector_decomposition, ratio_of, DecompositionReport, ProjectorChains,
};
pub use propagator::{evolve, heisenberg_dense, propagate, Method, PropagatorConfig};
pub use space::{LatticeGrid, Species, SpeciesConfig, MAX_DIMENSION};
pub use state::MixtureState;
pub use witness::{seeded_orbital, witness_kernel, witness_kernels};
