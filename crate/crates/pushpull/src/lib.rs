//! Push-pull gradient method for distributed convex optimization over
//! directed graphs.
//!
//! Agents hold private strongly convex objectives and cooperate to minimize
//! their sum. Decision variables are pushed through a row-stochastic mixing
//! matrix `R` while gradient trackers are pulled through a column-stochastic
//! matrix `C`; no doubly stochastic weights (and hence no weight balancing)
//! are ever required. The crate covers the full pipeline:
//!
//! - [`graph`]: digraph topologies, root sets, generators, time-varying
//!   sequences with leader masking;
//! - [`mixing`]: `R`/`C` construction, Perron vectors, assumption checks;
//! - [`norms`]: weighted contraction norms with certified factors;
//! - [`objectives`]: quadratic and Huber agent ensembles with exact
//!   gradients and optimum oracles;
//! - [`solver`]: the push-pull iteration, its half-communication variant, a
//!   centralized baseline, and trace recording;
//! - [`analysis`]: the 3×3 transition matrix, step-size certificates, and
//!   along-trace verification of the contraction inequality;
//! - [`harness`]: experiment configs, presets, and report serialization
//!   backing the CLI.
//!
//! All randomness flows through explicitly seeded ChaCha8 generators, so
//! every experiment is bit-reproducible. With the default `parallel` feature
//! the data-parallel inner loops (per-agent gradients, step-size sweeps,
//! sampling checks) run on rayon; disabling the feature yields a fully
//! sequential build with identical outputs.

pub mod analysis;
pub mod error;
pub mod graph;
pub mod harness;
mod linalg;
pub mod mixing;
pub mod norms;
pub mod objectives;
pub mod solver;

pub use error::{Error, Result};
pub use linalg::{spectral_radius, two_norm};

/// Maps `f` over `0..n`, in parallel when the `parallel` feature is enabled.
/// Output order is by index either way, so results are deterministic.
pub(crate) fn map_indices<T: Send>(n: usize, f: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}
