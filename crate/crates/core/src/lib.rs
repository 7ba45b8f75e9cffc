//! Solver library for joint semantic-compression and radio-resource
//! allocation in task-oriented semantic communication.
//!
//! Given per-user link budgets and a fitted accuracy-versus-compression
//! curve, the library maximizes the total effective accuracy (success
//! probability times task accuracy) over bandwidth, power, and per-user
//! compression ratios:
//!
//! - [`models`] — closed-form link and performance formulas plus a
//!   Monte-Carlo oracle,
//! - [`fitting`] — gradient-descent fitting of the accuracy curve,
//! - [`compression`] — per-user ratio enumeration at fixed resources,
//! - [`resource`] — the slack-variable convexification and interior-point
//!   allocation solver,
//! - [`crra`] — the alternating driver and the FCR/FRA/MSR baselines,
//! - [`harness`] — scenarios, sweeps, validation, and CSV/SVG emission.

pub mod compression;
pub mod crra;
pub mod error;
pub mod fitting;
pub mod harness;
pub mod models;
pub mod resource;

pub use error::{Error, Result};
