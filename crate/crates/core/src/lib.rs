//! Valley splitting of conduction electrons in Si quantum wells whose Ge
//! concentration oscillates along the growth direction ("Wiggle Well").
//!
//! The pipeline has three layers:
//!
//! - [`epm`] solves a local empirical pseudopotential Hamiltonian on the
//!   59-vector reciprocal-lattice basis of [`crystal_basis`] and builds the
//!   disorder-averaged intervalley density matrix.
//! - [`envelope`] turns that density matrix into a valley-coupling potential
//!   and solves the two-component envelope problem for the device potential
//!   of [`device`]; the splitting is the gap between the two lowest levels.
//! - [`sweep`] runs parameter sweeps over the oscillation wavevector and the
//!   mean Ge fraction, detects peaks and fits their scaling exponents.
//!
//! [`selection_rule`] checks numerically that ordered crystals cannot couple
//! the valleys through the long-wavelength oscillation, and [`perturbation`]
//! is an independent first-order estimate of the splitting.

// `!(x > y)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod crystal_basis;
pub mod device;
pub mod envelope;
pub mod epm;
pub mod error;
pub mod perturbation;
pub mod selection_rule;
pub mod sweep;
pub mod units;

pub use error::{Error, Result};
