//! Belief-weighted value profiles for discrete active inference.
//!
//! Agents act in a two-armed bandit whose volatility regime is hidden.
//! A shared factorized world model drives categorical filtering; control
//! parameters (outcome preferences, policy-prior logits, precision) are
//! either global (`M1`), entropy-coupled (`M2`) or mixed from value
//! profiles by the inferred context (`M3`). Two value-learning baselines
//! complete the generator set.
//!
//! Around the agents sit the fitting harness (grid search with
//! within-run cross-validation), the model-recovery experiment, and the
//! analyses of profile dynamics in fitted models.

pub mod agents;
pub mod analysis;
pub mod beliefs;
pub mod cli;
pub mod env;
pub mod error;
pub mod fitting;
pub mod math;
pub mod model;
pub mod policy;
pub mod profiles;
pub mod recovery;
pub mod simulation;
pub mod svg;

pub use agents::{AgentSpec, AgentState, Controller, ModelKind};
pub use env::{Action, Context, EnvState, Environment, Observation, TaskConfig};
pub use error::{Error, Result};
pub use fitting::{cross_validate, grid_search, sequence_loglik, FitResult, Fitter};
pub use model::{GenerativeModel, ModelHyperParams};
pub use recovery::{run_recovery, ExperimentConfig, RecoveryOutput};
