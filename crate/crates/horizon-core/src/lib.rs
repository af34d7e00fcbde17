//! Stochastic laboratory for markets observed up to (and after) a random time.
//!
//! The crate simulates two complete market models — geometric Brownian motion
//! `dS = σS dW` and the compensated-Poisson exponential `dS = ψS₋ dM` — together
//! with a family of random times τ built from those paths (last passage times,
//! times of supremum, a pseudo-stopping time, and combinations of jump times).
//! For each (model, time) pair it evaluates the Azéma supermartingale
//! `Z_t = P(τ > t | F_t)`, its left variant Z̃, the dual optional projection A°
//! and the martingale `m = Z + A°` in closed form, integrates the associated
//! predictable trading strategies pathwise, and builds the local-martingale
//! deflators that certify NUPBR before and after τ.
//!
//! Everything is deterministic given a seed: per-path generators are derived by
//! mixing `(seed, path_index)`, so serial and parallel ensembles agree bit for bit.

pub mod azema;
pub mod deflator;
pub mod emery;
pub mod error;
pub mod model;
pub mod path;
pub mod report;
pub mod ruin;
pub mod special;
pub mod strategy;
pub mod suplaw;
pub mod times;
pub mod val;

pub use error::{Error, Result};
pub use model::{MarketModel, ModelKind};
pub use path::{BrownianPath, PoissonPath, SamplePath};
pub use times::{RandomTimeSpec, RealizedTime};
pub use val::Val;
