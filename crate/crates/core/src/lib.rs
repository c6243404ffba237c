//! Spectral simulation of a quantum particle in a one-dimensional box observed
//! through a coarse-grained, two-outcome position measurement.
//!
//! Evolution is exact in the energy eigenbasis: every energy-basis matrix
//! element only acquires a phase, and because the spectrum is quadratic in an
//! integer index all phases return after the ground-state period `T_g`. The
//! crate computes how distinguishable the evolving state is from its dephased
//! (time-averaged) counterpart when all one learns is whether the particle sits
//! inside a spatial window.
//!
//! Module map:
//!
//! - [`spectrum`]: constants, eigenbasis, Gaussian and uniform initial states.
//! - [`window`]: projector matrix elements for interval windows.
//! - [`dynamics`]: dephased state, distinguishability, time averages, densities.
//! - [`closed_form`]: analytic approximations, time scales and log-log fits.
//! - [`grid`]: independent position-space evaluation used for cross-checks.
//! - [`cli`]: configuration and CSV producing commands behind the `boxeq` binary.

pub mod cli;
pub mod closed_form;
pub mod dynamics;
mod error;
pub mod grid;
pub mod quadrature;
pub mod spectrum;
mod trig;
pub mod window;

pub use error::{Error, Result};
pub use spectrum::{BoxConfig, EnergyState, GaussianMode, StateKind};
pub use window::{Window, WindowMatrix};
