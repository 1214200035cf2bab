//! Configuration-driven runner for the contact-thermo integrators.
//!
//! Each experiment writes its trajectory as CSV, a law audit as JSON and a short
//! plain-text summary.

pub mod config;
pub mod run;
