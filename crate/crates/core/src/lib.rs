//! Information directed sampling for linear partial monitoring.
//!
//! The crate is organised around a [`game::Game`] (actions plus observation
//! operators), a regularized least-squares [`estimator::EstimatorState`], the
//! decision rules in [`policy`], the regime [`classifier`], contextual and
//! kernelized variants, and a seeded simulation [`harness`].

pub mod classifier;
pub mod contextual;
pub mod error;
pub mod estimator;
pub mod game;
pub mod harness;
pub mod kernel;
pub mod linalg;
pub mod lp;
pub mod policy;

pub use error::{Error, Result};
pub use estimator::EstimatorState;
pub use game::{build_game, Environment, Game, NoiseModel, PresetSpec};
pub use policy::{decide, PolicyDecision, PolicyKind};
