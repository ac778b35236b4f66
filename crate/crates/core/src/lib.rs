//! Dwell-time stability certificates and controller synthesis for linear
//! stochastic impulsive systems.
//!
//! The crate works on the second moment `E[x xᵀ]` of systems with
//! multiplicative Wiener noise during flows and random multiplicative jumps at
//! impulse times. It offers exact spectral tests, clock-dependent LMI
//! certificates, dwell-time searches, state-feedback synthesis and a
//! Monte-Carlo simulator used as an independent check.

pub mod benchmarks;
pub mod clockcond;
pub mod dtsearch;
pub mod error;
pub mod matalg;
pub mod model;
pub mod moments;
pub mod sde_sim;
pub mod sdp;
pub mod synthesis;

pub use error::{Error, Result};
pub use matalg::{Mat, SpectralReport};
pub use model::{DwellTimeSpec, ImpulsiveSystem, Issue, Mode, MultiJumpImpulsiveSystem, SampledDataSystem, SwitchedSystem};
pub use sdp::{LmiBlock, LmiProgram, LmiTerm, LmiVar, LmiVerdict, SolveOptions, VarId, VarKind, Witness};
