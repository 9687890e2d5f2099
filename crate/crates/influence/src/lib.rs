//! Adaptive influence maximization under the independent cascade model,
//! where a seeding budget must be spent across a fixed number of diffusion
//! rounds.
//!
//! The crate is organised around a partially observed cascade: a [`diffusion::Status`]
//! records which nodes are active and which edges have already revealed
//! themselves as live or dead. Seeding policies ([`policy`]) decide how many
//! seeds to commit at each round, estimators ([`rrset`], [`diffusion`])
//! score candidate seed sets, and a brute-force oracle ([`oracle`]) provides
//! ground truth on instances small enough to enumerate.

pub mod diffusion;
pub mod graph;
pub mod oracle;
pub mod policy;
pub mod rng;
pub mod rrset;
pub mod runner;
pub mod verify;
