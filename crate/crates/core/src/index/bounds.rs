use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::mdp::{diameter, matrix_inf_norm, Arm, MdpError};

/// An interval that contains every index of an arm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IndexBounds {
    pub lower: f64,
    pub upper: f64,
}

impl IndexBounds {
    pub fn contains(&self, x: f64) -> bool {
        self.lower <= x && x <= self.upper
    }
}

/// `max - min` of a vector.
pub fn span(v: &DVector<f64>) -> f64 {
    v.max() - v.min()
}

/// Below `lower` the all-active policy is optimal, above `upper` the
/// all-passive one is:
///
/// `lower = -||r1 - r0|| - span(r1) D(P1) ||P1 - P0|| / 2`,
/// `upper = ||r1 - r0|| + span(r0) D(P0) ||P1 - P0|| / 2`.
///
/// A term whose reward span is zero vanishes without computing the
/// diameter, so rested arms (passive kernel = identity, constant passive
/// reward) get a finite upper bound. Discounted arms use the same
/// expressions: discounting only shrinks the value span.
pub fn index_bounds(arm: &Arm) -> Result<IndexBounds, MdpError> {
    let dr = (arm.r_active() - arm.r_passive()).amax();
    let dp = matrix_inf_norm(&arm.transition_gap());
    let term = |r: &DVector<f64>, a: usize| -> Result<f64, MdpError> {
        let sp = span(r);
        if sp == 0.0 || dp == 0.0 {
            return Ok(0.0);
        }
        Ok(0.5 * sp * diameter(arm.transition(a))? * dp)
    };
    Ok(IndexBounds {
        lower: -dr - term(arm.r_active(), 1)?,
        upper: dr + term(arm.r_passive(), 0)?,
    })
}
