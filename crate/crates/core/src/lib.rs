//! Gap-informed schedule learning for QAOA.
//!
//! The pipeline has two phases. The learning phase diagonalizes the
//! interpolating Hamiltonian `H(s) = (1 - s) H0 + s H1` over an ensemble of
//! small random QUBOs, aggregates the instantaneous gap profiles and fits
//! them with Bezier curves. The evaluation phase turns a fitted gap curve and
//! two hyperparameters `(kappa, q)` into a full set of QAOA angles through
//! the schedule law `ds/dt = kappa * g(s)^q`, simulates the resulting circuit
//! on larger instances and compares it against vanilla QAOA.
//!
//! Conventions used throughout the crate:
//!
//! * bit `i` of a basis index is qubit `i`;
//! * a zero bit is spin `z = +1`, a one bit is spin `z = -1`;
//! * `H0 = -sum_i X_i`, so `|+>^n` is its ground state.

pub mod error;
pub mod harness;
pub mod optimize;
pub mod problems;
pub mod schedule;
pub mod simulator;
pub mod spectrum;

pub use error::{Error, Result};
