//! Deterministic gridworld workbench for adaptive area-of-interest (AoI)
//! exploration with a simulated UAV.
//!
//! The crate is organised bottom-up:
//!
//! - [`rng`]: fixed, portable pseudo-random number generation.
//! - [`neural`]: a small hand-rolled neural network engine (dense layers, an
//!   LSTM with backpropagation through time, Adam) sized for the two
//!   recurrent networks used by the agents.
//! - [`env`]: ground-truth scenario maps, procedural generation, UAV motion
//!   and the 5×5 local observation model.
//! - [`mapping`]: the agent's evolving belief map, visit counts and the
//!   region grid used to schedule exploration.
//! - [`policy`]: target selection, network input assembly, reward shaping and
//!   phase-termination rules.
//! - [`agents`]: replay buffer, double-DQN navigation learner, advantage
//!   actor-critic exploration learner, and the staged training pipelines.
//! - [`baselines`]: sweeping, random and curiosity-driven reference policies.
//! - [`harness`]: config parsing, experiment runner, metrics, rendering and
//!   the command-line interface.

pub mod agents;
pub mod baselines;
pub mod env;
pub mod error;
pub mod harness;
pub mod mapping;
pub mod neural;
pub mod policy;
pub mod rng;

pub use error::{Error, Result};
