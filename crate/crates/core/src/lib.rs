// SPDX-License-Identifier: Apache-2.0

//! Symbolic-numeric kernel for second-order ODE systems on `TR^n`: semi-sprays,
//! nonlinear connections, Berwald frames, curvature, Dirac structures on the big
//! tangent bundle, constants of motion and Hamiltonian certificates.
//!
//! The crate is `no_std` with `alloc`; file formats and the command-line front
//! end live in the companion `spraydirac` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod ansatz;
pub mod dirac;
pub mod expr;
pub mod fields;
pub mod forms;
pub mod integrate;
pub mod linalg;
pub mod motion;
pub mod sample;
pub mod spray;
