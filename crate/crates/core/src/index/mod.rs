//! Index computation: the extended WISC sweep, its rank-1 inverse updates,
//! indexability classification and explicit index bounds.

mod bounds;
mod ewisc;
mod sherman_morrison;

pub use bounds::{index_bounds, span, IndexBounds};
pub use ewisc::{
    classify_indexability, ewisc, ewisc_with, iteration_limit, EwiscOptions, EwiscStats,
    IndexComputation, Indexability, InverseUpdate,
};
pub use sherman_morrison::{sherman_morrison_in_place, sherman_morrison_update, DEGENERACY_THRESHOLD};

use thiserror::Error;

use crate::mdp::MdpError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IndexError {
    #[error("no state outside the buffer crosses zero at or above {mu} with {remaining} active states left")]
    NoCrossing { mu: f64, remaining: usize },
    #[error("sweep exceeded {0} iterations")]
    IterationLimit(usize),
    #[error("rank-1 update denominator {0:e} is degenerate")]
    DegenerateUpdate(f64),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}
