//! Lyapunov-function search for continuous-time optimization flows.
//!
//! The pipeline: build the initial matrix pair of an ODE ([`pq_core`]),
//! apply every admissible operation sequence and group identical pairs
//! ([`enumerate`]), then maximise the rate parameter subject to positive
//! semidefiniteness ([`analyze`]). [`simulate`] integrates the flows
//! numerically and checks the results against trajectories.

pub mod catalog;
pub mod enumerate;
pub mod pq_core;
pub mod symexpr;
pub mod analyze;
pub mod simulate;
pub mod cli;
pub mod gen;
