//! Experiment harness for edge-labeled two-module network inference.
//!
//! Builds on `lsbm-core` to run reproducible experiment campaigns: analytic
//! phase sweeps, overlap measurements along a swept ensemble parameter, and
//! single learning trajectories with spectral stability diagnostics. The
//! `lsbm` binary exposes the same runners behind a JSON-configured CLI.
//!
//! Reproducibility contract: every runner is a pure function of its
//! configuration and one base seed. Per-cell seeds are split off the base
//! seed by grid coordinates ([`seeding::split_seed`]), so reruns are
//! byte-identical regardless of thread count.

pub mod experiments;
pub mod seeding;
