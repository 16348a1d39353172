//! Approximate principal component projection without eigendecomposition.
//!
//! Given G = AᵀA with unit spectral norm, a threshold λ and a gap γ, the
//! projection onto the eigenspace of G with eigenvalues ≥ λ is approximated by
//! `½(χ + g_n(f(G))χ)`, where `f` is a spectrum filter that sends λ to 0 and
//! `g_n` is a Chebyshev approximation of the sign function.

pub mod admissible;
pub mod bench;
pub mod chebyshev;
pub mod engine;
pub mod error;
pub mod mmio;
pub mod model;
pub mod operator;
pub mod testbed;

pub use error::{PcpError, Result};
