//! Toy arcade-style environments with sticky actions, three learning agents
//! and a seeded evaluation harness.

pub mod agent;
pub mod brute;
pub mod dqn;
pub mod env;
pub mod error;
pub mod eval;
pub mod experiment;
pub mod rng;
pub mod td_linear;
pub mod wrappers;
