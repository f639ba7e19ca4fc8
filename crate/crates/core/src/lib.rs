//! Finite-dimensional KMS-detailed-balance Gibbs samplers on truncated bosonic Fock space.
//!
//! Everything here works on dense matrices. Superoperators act on column-stacked
//! vectorizations, `vec(AXB) = (Bᵀ ⊗ A) vec(X)`, and are stored in the energy
//! eigenbasis of the truncated Hamiltonian.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod birthdeath;
pub mod coercivity;
pub mod dynamics;
pub mod error;
pub mod filters;
pub mod fock;
pub mod lindblad;
pub mod linalg;
pub mod model;
pub mod quadrature;
pub mod spectral;
pub mod spectrum;
pub mod truncation;

pub use error::{Error, Result};

pub type C64 = num_complex::Complex64;
pub type CMatrix = nalgebra::DMatrix<C64>;
pub type RMatrix = nalgebra::DMatrix<f64>;
