//! Quantum channels that destroy discord.
//!
//! The crate builds, applies and classifies channels on bipartite systems
//! `ℋ^A ⊗ ℋ^B` (A is the measured, "classical" side):
//!
//! * discord-breaking channels acting on A (quantum-classical channels) and on
//!   B (point channels),
//! * discord-annihilating channels acting on AB: an arbitrary pre-channel
//!   followed by an orthogonal pinching on A with conditional point or
//!   identity channels on B,
//! * convex sets of classical-quantum states and their closure under mixing.
//!
//! Everything is dense and double precision and meant for small dimensions.
//! Entropies and discord are in bits.

pub mod annihilators;
pub mod basis;
pub mod channel;
pub mod classify;
pub mod discord;
pub mod error;
pub mod io;
pub mod linalg;
pub mod optimize;
pub mod probes;
pub mod random;
pub mod state;
pub mod structures;

pub use basis::HermitianBasis;
pub use channel::{QuantumChannel, TransferMatrix, UnitalQubitParams};
pub use discord::{discord, is_cq_exact, DiscordResult, ProjectiveMeasurement, Strategy};
pub use error::{Error, Result};
pub use state::{BipartiteState, DensityOperator, Subsystem};
