//! Whittle and Gittins indices of two-action Markov decision processes.
//!
//! The crate is organised bottom-up:
//!
//! * [`mdp`] holds the arm model, policy evaluation (gain/bias and discounted
//!   values), activation advantages, chain diameters and instance generators.
//! * [`index`] computes indices with the extended WISC sweep, which stays
//!   well defined on non-indexable arms, plus explicit index bounds.
//! * [`oracle`] is the brute-force ground truth used by the test suites:
//!   policy enumeration and penalty scans.
//! * [`learner`] learns indices from a simulator by estimating the arm and
//!   re-running the sweep on a geometric schedule.
//! * [`baselines`] contains the tabular two-timescale Q-learning baselines.
//! * [`experiments`] builds the benchmark instances.

pub mod baselines;
pub mod experiments;
pub mod index;
pub mod learner;
pub mod mdp;
pub mod oracle;

pub use index::{classify_indexability, ewisc, IndexComputation, Indexability};
pub use mdp::{Arm, MdpError, Policy};
