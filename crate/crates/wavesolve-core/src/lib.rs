//! Wavelet-preconditioned linear systems for periodic elliptic problems,
//! together with a dense statevector simulator for the associated quantum circuits.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
extern crate alloc;

pub mod blockenc;
pub mod dwt;
pub mod error;
pub mod fdm;
pub mod filters;
pub mod linalg;
pub mod observable;
pub mod polyapprox;
pub mod precond;
pub mod qmi;
pub mod qsim;
pub mod solver;

pub use error::{Error, Result};
