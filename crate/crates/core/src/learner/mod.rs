//! Model-based index learning from a simulator.

mod blinq;
mod counts;
mod schedule;
mod simulator;
mod trace;

pub use blinq::{blinq_run, run_streams, BlinqConfig, Reference};
pub use counts::{estimate_arm, ArmEstimate, EmpiricalCounts};
pub use schedule::{Schedule, ScheduleState};
pub use simulator::{ArmBackedSimulator, ArmSimulator};
pub use trace::{
    abs_errors, error_metrics, log_spaced_steps, order_statistics, write_metrics_csv,
    write_trace_csv, ErrorMetrics, LearningTrace, TraceRecord,
};

use thiserror::Error;

use crate::mdp::MdpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearnError {
    #[error("state {state} action {action} has never been sampled")]
    InsufficientSamples { state: usize, action: usize },
    #[error(transparent)]
    Mdp(#[from] MdpError),
}
