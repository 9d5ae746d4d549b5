//! Simulation and estimation library for cross-device overlap measurements.
//!
//! The crate is organized bottom-up:
//!
//! * [`linalg`]: dense complex matrices, eigendecomposition, bit plumbing;
//! * [`states`]: validated quantum states, Pauli strings, physicality projection;
//! * `circuit`: gate-level circuits with layer timing;
//! * `noise`: depolarizing, relaxation and readout error models;
//! * `sim`: density-matrix evolution and shot sampling;
//! * `measure`: measurement settings and pre-rotations;
//! * `protocols`: overlap estimators (tomography, randomized bases, parity);
//! * `analysis`: bootstrap variance, power-law fits, error budgets;
//! * `study`: multi-protocol sampling-cost studies.

pub mod analysis;
pub mod study;
pub mod circuit;
pub mod error;
pub mod linalg;
pub mod measure;
pub mod noise;
pub mod protocols;
pub mod sim;
pub mod states;

pub use error::{Error, Result};
pub use linalg::{C64, CMat, CVec};
pub use states::{DensityMatrix, PauliString, PureState, UnitaryOp};
