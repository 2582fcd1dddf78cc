//! Spectral toolkit for one-dimensional Schrödinger operators with a slow
//! cosine modulation on top of a 1-periodic background potential,
//!
//! ```text
//!     H = -d²/dx² + V(x) + α·cos(εx + ζ),        V(x + 1) = V(x).
//! ```
//!
//! The crate computes, for an energy window in which the modulation couples
//! two consecutive bands of the background operator across one open gap:
//!
//! * the band structure, Bloch quasi-momentum and related functionals of the
//!   periodic part ([`hill`], [`finite_gap`]),
//! * the complex momentum `κ(ζ) = k(E - α·cos ζ)`, its branch points and the
//!   real iso-energy branches ([`momentum`]),
//! * phase integrals, vertical/horizontal action integrals and tunneling
//!   coefficients ([`actions`]),
//! * quantized energy sequences, predicted spectral intervals, resonance
//!   analysis and Lyapunov-exponent profiles ([`wkb`]),
//! * direct transfer-matrix ground truth: Lyapunov exponents, integrated
//!   density of states and spectral-support scans ([`oracle`]).
//!
//! Everything is pure computation over owned data; the companion CLI crate
//! adds file formats and parallel parameter scans.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod actions;
pub mod finite_gap;
pub mod hill;
pub mod magnus;
pub mod momentum;
pub mod oracle;
pub mod quad;
pub mod wkb;

mod error;

pub use error::{Error, Result};

pub use num_complex::Complex64;
