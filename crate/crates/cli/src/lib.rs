//! Experiment harness behind the `latkern` binary: convergence and
//! dimension studies over the two lattice criteria, cross-evaluation of
//! each construction's vector under the other criterion, slope fitting,
//! and deterministic CSV / plot-file emission.

pub mod config;
pub mod experiments;
