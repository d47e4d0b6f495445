//! Hybrid quantum-classical neural networks on an exact statevector simulator.
//!
//! The crate provides the building blocks for training and probing small
//! variational quantum models entirely on a classical machine:
//!
//! * [`statevector`] — dense complex statevector simulation with RX/RY/RZ
//!   rotations, CNOT, and projector observables.
//! * [`circuits`] — data encoders and the layered ansatz (encode, trainable
//!   rotations, entangler), evaluated either as one depth-`L` circuit with
//!   data re-uploading or as individual depth-1 circuits.
//! * [`gradients`] — exact parameter-shift derivatives for every trainable
//!   angle and encoding input, plus a finite-difference oracle for testing.
//! * [`network`] — dense classical layers, the ensemble quantum layer with
//!   simplex-constrained mixing weights, MSE loss, Adam, and the training
//!   loop of the full hybrid model.
//! * [`diagnostics`] — Monte-Carlo estimates of gradient mean/variance
//!   (barren-plateau scans), cost-function concentration, and the t=1
//!   expressibility norm with its concentration bound.
//! * [`dense`] — a slow full-matrix reference evaluator used to cross-check
//!   the stride-indexed simulator.
//!
//! Everything is deterministic given a seed: randomness is drawn from
//! counter-indexed ChaCha streams (see [`rng`]), so results do not depend on
//! evaluation order.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature simply forwards to the std implementations of the float math.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod circuits;
pub mod dense;
pub mod diagnostics;
pub mod error;
pub mod gradients;
pub mod mat;
pub mod network;
pub mod rng;
pub mod statevector;

pub use error::{Error, Result};
pub use mat::Mat;
pub use statevector::{Gate, Observable, StateVector};
