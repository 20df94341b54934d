//! Two-action arm model and the policy-evaluation machinery built on it.

mod advantage;
mod arm;
mod chain;
mod evaluate;
mod generate;
pub mod linalg;
mod policy;

pub use advantage::{
    advantage_definitional, advantage_lines, lines_from_inverse, system_matrix, AdvantageLine,
};
pub use arm::{matrix_inf_norm, Arm, ArmJson, ROW_REPAIR_TOLERANCE};
pub use chain::{
    diameter, is_strongly_connected, is_unichain, recurrent_classes, stationary_distribution,
    validate_arm,
    ValidationReport, EXACT_UNICHAIN_MAX_STATES, SAMPLED_POLICIES,
};
pub use evaluate::{gain_bias, value_discounted, GainBias};
pub use generate::{
    dirichlet_row, generate_dirichlet_arm, random_dense_arm, RewardLaw, GITTINS_DISCOUNT,
};
pub use policy::Policy;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MdpError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("row {row} of {matrix} is not stochastic (row sum {sum}, min entry {min})")]
    NotStochastic {
        matrix: &'static str,
        row: usize,
        sum: f64,
        min: f64,
    },
    #[error("discount factor {0} is outside (0, 1)")]
    InvalidDiscount(f64),
    #[error("linear system is singular or numerically degenerate")]
    SingularSystem,
    #[error("chain has {0} recurrent classes, expected exactly one")]
    NotUnichain(usize),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}
