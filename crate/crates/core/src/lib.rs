//! Conditioned von Neumann measurements, computed two ways.
//!
//! A finite-dimensional system observable `A` is coupled impulsively to a
//! one-dimensional pointer through `U_g = exp(-i g A ⊗ p / ħ)`. After the
//! interaction the system is post-selected with a positive operator `P_f` and
//! the pointer position or momentum is read out. This crate computes the
//! conditioned pointer statistics
//!
//! * by brute force on a discretized pointer grid ([`vonneumann`]), and
//! * from generalized weak values, either on the joint space or reduced to
//!   the system through the pointer's Fourier-transformed Wigner function
//!   ([`weakvalue`]), including closed forms for Hermite-Gauss pointers.
//!
//! The two routes agree for every coupling strength.
//!
//! Modules:
//!
//! * [`hilbert`]: operators, density matrices, partial traces and the
//!   superoperator calculus (`ad[A]`, `L[A] = -ad[A]²/2`, functions of them).
//! * [`detector`]: pointer grids and states, Hermite-Gauss modes, Wigner
//!   functions, Laguerre and `D^m_n` polynomials, decoherence kernels.
//! * [`vonneumann`]: the grid oracle.
//! * [`weakvalue`]: weak values and the closed-form expressions.
//! * [`scenario`] and [`cli`]: declarative scenario files, reports, sweeps
//!   and figure data.

pub mod cli;
pub mod detector;
pub mod error;
pub mod hilbert;
pub mod scenario;
pub mod vonneumann;
pub mod weakvalue;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

/// Dense complex matrix used for system operators and superoperators.
pub type CMatrix = nalgebra::DMatrix<C64>;
