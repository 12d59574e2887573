//! Zero modes of the two-dimensional Pauli operator for a smooth compactly
//! supported magnetic field plus finitely many Aharonov–Bohm solenoids.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod flux;
pub mod potential;
pub mod zero_modes;
pub mod numerics;
pub mod boundary;
pub mod cli;
