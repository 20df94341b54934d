use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{gain_bias, linalg, value_discounted, Arm, MdpError, Policy};

/// Activation advantage of one state as an affine function of the penalty:
/// `alpha(lambda) = intercept + slope * lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvantageLine {
    pub intercept: f64,
    pub slope: f64,
}

impl AdvantageLine {
    pub fn eval(&self, lambda: f64) -> f64 {
        self.intercept + self.slope * lambda
    }
}

/// Activation advantages computed from their definition: evaluate the
/// `lambda`-penalised policy (bias or discounted value), then compare the
/// two one-step lookaheads.
pub fn advantage_definitional(
    arm: &Arm,
    policy: &Policy,
    lambda: f64,
) -> Result<Vec<f64>, MdpError> {
    let p = arm.policy_transition(policy);
    let r = arm.policy_reward(policy, lambda);
    let gap = arm.transition_gap();
    let lookahead = match arm.discount() {
        None => {
            let gb = gain_bias(&p, &r)?;
            &gap * DVector::from_vec(gb.bias)
        }
        Some(beta) => &gap * value_discounted(&p, &r, beta)? * beta,
    };
    Ok((0..arm.num_states())
        .map(|s| arm.r_active()[s] - lambda - arm.r_passive()[s] + lookahead[s])
        .collect())
}

/// The matrix whose inverse maps policy rewards to the evaluation vector:
/// the gain/bias system (gain in column 0) for average-reward arms,
/// `I - beta P^pi` for discounted arms.
pub fn system_matrix(arm: &Arm, policy: &Policy) -> DMatrix<f64> {
    let s = arm.num_states();
    match arm.discount() {
        None => DMatrix::from_fn(s, s, |i, j| {
            if j == 0 {
                1.0
            } else {
                (i == j) as u8 as f64 - arm.transition(policy.action(i))[(i, j)]
            }
        }),
        Some(beta) => DMatrix::from_fn(s, s, |i, j| {
            (i == j) as u8 as f64 - beta * arm.transition(policy.action(i))[(i, j)]
        }),
    }
}

/// Advantage lines of every state given the inverse of [`system_matrix`].
///
/// For average-reward arms the first component of `K r` is the gain rather
/// than `b_0 = 0`, so it is zeroed before the lookahead.
pub fn lines_from_inverse(
    arm: &Arm,
    gap: &DMatrix<f64>,
    policy: &Policy,
    inverse: &DMatrix<f64>,
) -> Vec<AdvantageLine> {
    let scale = arm.discount().unwrap_or(1.0);
    let r = arm.policy_reward(policy, 0.0);
    let bin = DVector::from_vec(policy.indicator());
    let mut kr = inverse * r;
    let mut kbin = inverse * bin;
    if arm.discount().is_none() {
        kr[0] = 0.0;
        kbin[0] = 0.0;
    }
    let through_r = gap * kr;
    let through_bin = gap * kbin;
    (0..arm.num_states())
        .map(|s| AdvantageLine {
            intercept: arm.r_active()[s] - arm.r_passive()[s] + scale * through_r[s],
            slope: -1.0 - scale * through_bin[s],
        })
        .collect()
}

/// Per-state advantage lines under `policy`, together with the inverse
/// system matrix they were computed from.
pub fn advantage_lines(
    arm: &Arm,
    policy: &Policy,
) -> Result<(Vec<AdvantageLine>, DMatrix<f64>), MdpError> {
    let inverse = linalg::inverse(system_matrix(arm, policy))?;
    let lines = lines_from_inverse(arm, &arm.transition_gap(), policy, &inverse);
    Ok((lines, inverse))
}
