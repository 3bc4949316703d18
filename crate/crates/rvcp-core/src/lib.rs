//! Uncertainty-aware conformal prediction with empirical-Bayes r-values.
//!
//! The library turns per-candidate score samples (items x candidates x
//! posterior/perturbation samples) into conformal prediction sets under
//! three interchangeable nonconformity scores:
//!
//! * `cp`: standard split CP on one score realization;
//! * `cp_avg`: split CP on the per-candidate mean score;
//! * `cp_rvalue`: split CP on r-values, which fold each candidate's
//!   score *variability* into its rank, either through a Normal-Normal
//!   empirical-Bayes model (parametric) or through rank frequencies across
//!   samples (nonparametric).
//!
//! A seeded simulator generates data from the matching Normal-Normal world
//! and packages the experiments used to validate coverage, set-size, and
//! asymptotic-rejection behavior; `io` adds the file formats behind the
//! `rvcp` CLI.

// Frozen reference constants are kept at the full precision their
// generators printed; f64 rounds them once, visibly, at the literal.
#![allow(clippy::excessive_precision)]

pub mod conformal;
pub mod eb;
pub mod error;
pub mod io;
pub mod normal;
pub mod rvalue;
pub mod simulator;
pub mod types;

pub use error::{Error, Result};
