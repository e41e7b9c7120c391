//! Exact diagonalization of spin-1/2 Heisenberg models on arbitrary graphs,
//! with the machinery needed to probe decoherence at the level of
//! individual eigenstates:
//!
//! * magnetization-sector bases over bitstring configurations ([`basis`]),
//! * symbolic Pauli-string operators and Hamiltonian sector blocks ([`operators`]),
//! * per-sector dense eigensolves merged into a global spectrum ([`spectral`]),
//! * transition reduced density matrices `tr_B |n><m|` ([`reduced`]),
//! * quantumness witnesses and pairwise eigenstate scans ([`witness`]),
//! * quench dynamics of the subsystem density matrix ([`dynamics`]).
//!
//! Conventions shared by every module: site `i` is bit `i` of a configuration
//! (least significant bit is site 0), a set bit means spin up (`sigma^z = +1`),
//! and subsystem density matrices are indexed by the subsystem bits packed in
//! the order of the subsystem site list.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod basis;
pub mod config;
pub mod dynamics;
mod error;
pub mod operators;
pub mod oracle;
pub mod reduced;
pub mod spectral;
pub mod witness;

pub use error::{Error, Result};

/// Complex scalar used throughout.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector (full-space or sector states).
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix (subsystem density matrices, sector blocks).
pub type CMatrix = nalgebra::DMatrix<C64>;
