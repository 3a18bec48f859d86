//! Entangling the momentum states of atoms by Bragg deflection from a cavity
//! field prepared in a superposition of vacuum and a Fock state.
//!
//! - [`params`]: physical inputs and derived frequency scales
//! - [`ladder`]: numerical evolution on the truncated momentum ladder
//! - [`adiabatic`]: the reduced two-level model and its exact solution
//! - [`entangle`]: joint atom-field states, field measurement, Bell/GHZ
//!   targets, fidelity and concurrence
//! - [`validation`]: ladder-vs-two-level comparisons and parameter sweeps
//! - [`config`]: `key = value` parameter files and overrides
//! - [`cli`]: the `bragg` command-line front end

// `!(x > 0.0)` style guards reject NaN on purpose
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adiabatic;
pub mod cli;
pub mod config;
pub mod entangle;
pub mod error;
pub mod ladder;
pub mod params;
pub mod validation;

pub use error::{Error, Result};
