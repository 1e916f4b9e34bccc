//! Finite matrix models and Monte Carlo verification tools for random
//! operators of the form
//!
//! ```text
//!     P = Σ_n κ_n ⟨·, ψ_n⟩ ψ_n ,
//! ```
//!
//! where the `ψ_n` are unit vectors whose Gram matrix `⟨ψ_n, ψ_m⟩` depends
//! only on `n − m` (a Laurent/two-sided-Toeplitz matrix with symbol `φ`) and
//! the couplings `κ_n` are i.i.d. positive random variables.
//!
//! The crate builds the finite truncations and exact circulant analogues of
//! these operators, estimates the integrated density of states (IDS) by
//! seeded Monte Carlo, and checks spectrum location, moment identities,
//! Wegner-type density bounds, Lifshitz tail behaviour at the spectral edge,
//! the point-mass dichotomy for plateau symbols, and fractional-moment
//! localization diagnostics at desk scale.
//!
//! Modules follow the pipeline:
//!
//! - [`symbols`]: the symbol `φ` of the Gram matrix and derived symbols
//! - [`couplings`]: single-site coupling distributions and seeded streams
//! - [`operators`]: dense truncations, circulant pairs, bracketing blocks
//! - [`spectra`]: symmetric eigendecomposition, counting, resolvent rows
//! - [`ids`]: IDS Monte Carlo and the statistical identity checks
//! - [`edges`]: Lifshitz-tail bracketing and the point-mass experiment
//! - [`localization`]: fractional moments, Möbius forms, IPR profiles
//!
//! Everything is deterministic given a master seed: per-realization RNG
//! streams are derived from `(master_seed, realization_index)` and Monte
//! Carlo reductions are performed in realization-index order.

pub mod couplings;
pub mod edges;
pub mod ids;
pub mod localization;
pub mod operators;
pub mod spectra;
pub mod symbols;

mod util;

pub use couplings::{CouplingDistribution, SeededStream};
pub use operators::{CirculantPair, SymmetricMatrix};
pub use spectra::SpectralDecomposition;
pub use symbols::{Symbol, SymbolRange};

/// Crate-wide error type.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// An input violated a documented invariant or precondition.
    #[error("validation: {0}")]
    Validation(String),
    /// The requested check requires a hypothesis the inputs do not satisfy
    /// (e.g. a Wegner check for a distribution with atoms).
    #[error("hypothesis violated: {0}")]
    HypothesisViolated(String),
    /// A numerical routine broke down beyond its accuracy contract.
    #[error("numeric failure: {0}")]
    Numeric(String),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Maps `count` indices through `f`, in parallel when the `parallel` feature
/// is enabled. Results are collected in index order either way, so the output
/// does not depend on thread scheduling.
pub(crate) fn indexed_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..count).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..count).map(f).collect()
    }
}
