//! Blind two-dimensional super-resolution for multiple-input single-output
//! linear time-varying systems.
//!
//! A single length-`L` output vector is a superposition of time-frequency
//! shifted copies of `N_I` unknown inputs, each living in a known
//! low-dimensional subspace. This crate recovers the continuous shift pairs,
//! the amplitude magnitudes and the input magnitudes through two routes:
//!
//! * the lifted atomic-norm dual, solved as a semidefinite program
//!   ([`sdp`], [`solver::solve_sdp`]) whose dual polynomials localize the
//!   shifts ([`localization`]), followed by least squares ([`estimation`]);
//! * a grid-based nuclear-norm program with correlation-based support
//!   detection ([`grid`]).
//!
//! [`experiment`] wires both pipelines into reproducible runs with
//! JSON/CSV artifacts; the `blindsr2d` binary is a thin front end over it.
//!
//! Index conventions used everywhere:
//!
//! * samples and subspace rows are indexed `-N..=N`, stored at offset `+N`;
//! * lifted vectors of length `L²` use a two-dimensional index
//!   `(outer, inner)` flattened as `(outer + N) * L + (inner + N)`; the outer
//!   index always belongs to the frequency axis (`nu`) and the inner index to
//!   the time axis (`tau`). See [`model::lifted_index`].

pub mod error;
pub mod estimation;
pub mod experiment;
pub mod grid;
pub mod linalg;
pub mod localization;
pub mod model;
pub mod sdp;
pub mod solver;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
