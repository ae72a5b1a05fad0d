//! Numerical laboratory for disordered gradient interface models on Z^d.
//!
//! Exact Gaussian engines (Dirichlet Laplacian solves), MCMC for general
//! potentials, surface tension estimators and scenario runners.

pub mod disorder;
pub mod experiments;
pub mod gaussian_exact;
pub mod greens;
pub mod lattice;
pub mod linalg;
pub mod model;
pub mod par;
pub mod quadrature;
pub mod sampler;
pub mod spectral;
pub mod stats;
pub mod surface;
