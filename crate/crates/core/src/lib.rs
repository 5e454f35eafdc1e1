//! Periodic steady-state analysis of one-port networks built from maximal
//! monotone resistors and LTI capacitors and inductors.
//!
//! A trajectory over one period is a vector in ℝ^N. Devices become relations
//! on that space, interconnections become sums and inverses of relations, and
//! the steady state is a zero of the incremental port relation, found with
//! forward-step or Douglas-Rachford iterations.
//!
//! ```
//! use monoport_core::network::{DriveKind, DriveProblem, Element, OnePort};
//! use monoport_core::signal::{sample_drive, DriveSpec, Sinusoid};
//! use monoport_core::solvers::{solve_problem, SolverConfig};
//!
//! let rc = OnePort::parallel(vec![
//!     OnePort::resistor(1.0),
//!     OnePort::capacitor(1.0),
//! ]).unwrap();
//! let drive = sample_drive(&DriveSpec::sine(1.0, 1.0), 64, 1.0).unwrap();
//! let problem = DriveProblem::new(rc, drive, DriveKind::Current).unwrap();
//! let out = solve_problem(&problem, &SolverConfig::default()).unwrap();
//! assert!(out.report.converged);
//! # let _ = Element::Capacitor { c: 1.0 };
//! ```
#![no_std]
// `!(x > lo)` is how NaN is rejected along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod diagnostics;
pub mod elements;
mod error;
pub mod network;
pub mod operators;
pub mod signal;
pub mod solvers;

pub use error::{Error, Result};
pub use signal::{PeriodicSignal, Vector};
