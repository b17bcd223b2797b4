//! Laplace-type semiclassical asymptotics for coherent-state averages of
//! polynomial Bose Hamiltonians.
//!
//! For `F(0) = a^{†m}|α0⟩⟨α0|a^q` the average `⟨α|F(t)|α⟩` is approximated by
//! `e^{S/ℏ} b₀`, where the real phase `S` solves a Hamilton–Jacobi equation by
//! characteristics and `b₀` solves the leading transport equation along them.
//! An exact truncated Fock-space oracle and closed forms for the Kerr
//! oscillator are provided for validation.
//!
//! The crate is `no_std` (with `alloc`); IO and the command-line front end
//! live in the `semiclassical` crate.

#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod characteristics;
pub mod error;
pub mod fock;
pub mod kerr;
pub mod linalg;
pub mod ode;
pub mod phase;
pub mod quadrature;
pub mod transport;
pub mod verification;
pub mod wick;

pub use error::{Error, Result};
pub use num_complex::Complex64;
