//! Analysis of self-oscillations in discrete-time relay feedback systems
//! with a symmetric dead zone.
//!
//! The loop is `u(t) = -Σ_k g(k) rel(u)(t - k)` with `g(t) = g0(t - Pd)`.
//! Modules, bottom up:
//!
//! - [`variation`]: sign variations, cyclic variations, relay, sign patterns.
//! - [`lti`]: impulse responses, periodic summation, circulant algebra.
//! - [`tp`]: variation-bounding certificates for circulant operators.
//! - [`analyzer`]: fixed-point search, period bounds, exhaustive oracle.
//! - [`simulator`]: forward simulation and steady-state detection.
//! - [`config`], [`report`], [`cli`]: plant files, output, command line.

pub mod analyzer;
pub mod cli;
pub mod config;
pub mod error;
pub mod lti;
pub mod report;
pub mod simulator;
pub mod tp;
pub mod variation;

pub use analyzer::{
    brute_force_fixed_points, check_absence, chi0_threshold, compute_ps, enumerate_unimodal_patterns,
    exists_2pd, find_oscillations, period_bounds, subharmonic_periods, verify_fixed_point,
    AnalysisOptions, OscillationRecord, OscillationReport, PeriodBounds,
};
pub use error::{Error, Result};
pub use lti::{ImpulseResponse, ImpulseSpec, PeriodicSignal, PlantSpec};
pub use simulator::{detect_period, simulate, Trajectory};
pub use variation::SignPattern;
