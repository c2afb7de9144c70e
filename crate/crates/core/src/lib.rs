//! A deterministic benchmark suite for robust imitation learning.
//!
//! A robot drives around a 2×2 top-down workspace, pushing coloured blocks and
//! driving over goal regions. Eight tasks each come with a fixed demonstration
//! layout and up to seven randomized test variants. The crate provides the
//! simulator, task samplers, scoring functions, a software renderer, trajectory
//! recording and replay, image augmentations, an evaluation harness and a
//! line-oriented remote-control server.

pub mod augment;
pub mod env;
pub mod error;
pub mod eval;
pub mod hash;
pub mod render;
pub mod scoring;
pub mod sim;
pub mod tasks;
pub mod wire;

pub use error::{Error, Result};
