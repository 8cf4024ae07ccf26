//! Exact simulation and verification of non-clairvoyant scheduling for
//! phase-structured malleable jobs.
//!
//! All quantities are exact rationals. The [`engine`] runs policies from
//! [`schedulers`] on instances from [`model`]; [`reduction`], [`adversary`]
//! and [`bounds`] build the worst-case instances, transformations and
//! inequality checks on top of it.

// Errors carry exact rationals; boxing them buys nothing here.
#![allow(clippy::result_large_err)]

pub mod model;
pub mod engine;
pub mod schedulers;
pub mod reduction;
pub mod adversary;
pub mod bounds;
pub mod random;
