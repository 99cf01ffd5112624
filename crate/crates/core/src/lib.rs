//! Circuit switch scheduling with switching delays.
//!
//! A circuit switch sends data along one bipartite matching at a time, and
//! every change of matching costs a fixed delay during which nothing flows.
//! Given a demand matrix, the delay and a time window, the offline problem is
//! to pick configurations `(matching, duration)` that move as much demand as
//! possible within the window. The crate provides:
//!
//! * [`greedy`]: data-per-unit-time greedy with final truncation,
//! * [`lp`]: configuration LP over duration profiles, solved by column
//!   generation and rounded independently per slot,
//! * [`hybrid`]: dispatch between the two by the delay/window ratio,
//! * [`online`]: the no-delay online greedy and the blocked reduction of the
//!   online problem to any offline solver,
//! * [`oracle`]: exhaustive solvers used to certify all of the above.
//!
//! All arithmetic is exact ([`rational::Rational`]).

pub mod bench;
pub mod error;
pub mod gen;
pub mod greedy;
pub mod hybrid;
pub mod io;
pub mod lp;
pub mod matching;
pub mod model;
pub mod online;
pub mod oracle;
pub mod par;
pub mod rational;
pub mod rng;
pub mod simplex;

pub use error::{Error, Result};
pub use model::{
    evaluate_throughput, is_feasible, residual, shrink_schedule, Configuration, DemandMatrix, Instance,
    Matching, Schedule,
};
pub use rational::Rational;
