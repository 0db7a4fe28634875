//! Tempered MCMC by data subsampling.
//!
//! Parallel tempering and tempered transitions heat a Bayesian posterior
//! either by raising the likelihood to a power `beta < 1` or by evaluating
//! it on a nested random subsample of `round(beta N)` observations. This
//! crate provides both flavours of both schedulers around random-walk
//! Metropolis and Hamiltonian Monte Carlo kernels, two benchmark models,
//! multi-chain convergence diagnostics, a closed-form cost model, and an
//! experiment harness.

pub mod costmodel;
pub mod data;
pub mod diagnostics;
pub mod error;
pub mod harness;
pub mod kernels;
pub mod ladder;
pub mod linalg;
pub mod models;
pub mod rng;
pub mod tempering;

pub use data::{draw_nested_subsamples, Dataset, IndexSet, SubsampleFamily};
pub use error::{Error, Result};
pub use kernels::{KernelConfig, KernelKind, LevelState, TransitionStats};
pub use ladder::{make_geometric_ladder, subsample_sizes, Ladder};
pub use models::{GpRegressionModel, LogTarget, MvnMeanModel};
pub use rng::RngStream;
pub use tempering::{run_chain, ChainRunner, ChainTrace, Method, SamplerConfig, TemperedTarget};
