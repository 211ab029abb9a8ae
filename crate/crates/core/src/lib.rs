//! Schrödinger evolution on finite graphs and recovery of the initial state
//! from the vertex intensities `|u(t, x)|²`.
//!
//! The pipeline is: build `H = -Δ + W` ([`graph`]), eigendecompose and test
//! the two hypotheses that make the intensities injective up to a global
//! phase ([`spectral`]), simulate ([`evolution`]), and invert ([`retrieval`]).
//! [`counterexamples`] constructs indistinguishable pairs when the hypotheses
//! fail and [`experiments`] measures how often they hold on random graphs.

pub mod counterexamples;
pub mod error;
pub mod evolution;
pub mod experiments;
pub mod expm;
pub mod graph;
pub mod io;
pub mod retrieval;
pub mod spectral;

pub use num_complex::Complex64;

pub use error::{Error, Result};
pub use evolution::{
    evolve, evolve_direct, from_coefficients, retrieval_grid, sample_intensity, to_coefficients,
    CoefficientVector, IntensityTrace,
};
pub use graph::{build_hamiltonian, Graph, GraphFile, Hamiltonian, Potential};
pub use retrieval::{
    phase_aligned_distance, reconstruct, recover_cross_terms, retrieve, CrossTermTensor,
    Diagnostics, RetrievalResult, Tolerances,
};
pub use spectral::{
    check_dissociated, check_property_s, eigendecompose, spectrum_report, support_graph,
    Dissociation, EigenSystem, SpectrumReport, SupportGraph,
};
