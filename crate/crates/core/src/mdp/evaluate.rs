use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{linalg, MdpError};

/// Gain and bias of a unichain Markov reward process, with `bias[0] == 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainBias {
    pub gain: f64,
    pub bias: Vec<f64>,
}

impl GainBias {
    /// Largest violation of `g + b_s = r_s + sum_s' P_ss' b_s'`.
    pub fn residual(&self, transition: &DMatrix<f64>, reward: &DVector<f64>) -> f64 {
        let b = DVector::from_column_slice(&self.bias);
        let lhs = b.add_scalar(self.gain);
        let rhs = reward + transition * &b;
        (lhs - rhs).amax()
    }
}

fn check_square(transition: &DMatrix<f64>, reward: &DVector<f64>) -> Result<usize, MdpError> {
    let s = reward.len();
    if transition.nrows() != s || transition.ncols() != s || s == 0 {
        return Err(MdpError::DimensionMismatch(format!(
            "transition is {}x{}, reward has length {s}",
            transition.nrows(),
            transition.ncols()
        )));
    }
    Ok(s)
}

/// Solves the gain/bias equation in the unknowns `(g, b_1, ..., b_{S-1})`.
///
/// Column 0 of the system carries the gain, so `b_0` is pinned to zero.
/// Fails with `SingularSystem` when the chain has several recurrent classes.
pub fn gain_bias(transition: &DMatrix<f64>, reward: &DVector<f64>) -> Result<GainBias, MdpError> {
    let s = check_square(transition, reward)?;
    let a = DMatrix::from_fn(s, s, |i, j| {
        if j == 0 {
            1.0
        } else {
            (i == j) as u8 as f64 - transition[(i, j)]
        }
    });
    let x = linalg::solve(a, reward)?;
    let mut bias: Vec<f64> = x.iter().copied().collect();
    let gain = bias[0];
    bias[0] = 0.0;
    Ok(GainBias { gain, bias })
}

/// `v = (I - beta P)^{-1} r`.
pub fn value_discounted(
    transition: &DMatrix<f64>,
    reward: &DVector<f64>,
    beta: f64,
) -> Result<DVector<f64>, MdpError> {
    let s = check_square(transition, reward)?;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(MdpError::InvalidDiscount(beta));
    }
    let a = DMatrix::identity(s, s) - transition * beta;
    linalg::solve(a, reward)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::random_dense_arm;
    use crate::mdp::Policy;

    fn swap2() -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0])
    }

    #[test]
    fn periodic_two_cycle() {
        let gb = gain_bias(&swap2(), &DVector::from_vec(vec![0.0, 1.0])).unwrap();
        assert!((gb.gain - 0.5).abs() < 1e-14);
        assert!((gb.bias[1] - 0.5).abs() < 1e-14);
        assert_eq!(gb.bias[0], 0.0);
    }

    #[test]
    fn constant_reward_has_zero_bias() {
        let s = 4;
        let p = DMatrix::from_element(s, s, 1.0 / s as f64);
        let gb = gain_bias(&p, &DVector::from_element(s, 2.5)).unwrap();
        assert!((gb.gain - 2.5).abs() < 1e-14);
        assert!(gb.bias.iter().all(|b| b.abs() < 1e-14));
    }

    #[test]
    fn random_chain_residual() {
        for seed in 0..10 {
            let arm = random_dense_arm(5, seed, None);
            let pi = Policy::from_mask(5, seed);
            let p = arm.policy_transition(&pi);
            let r = arm.policy_reward(&pi, 0.3);
            let gb = gain_bias(&p, &r).unwrap();
            assert!(gb.residual(&p, &r) < 1e-10);
        }
    }

    #[test]
    fn two_absorbing_states_are_singular() {
        let p = DMatrix::identity(2, 2);
        assert_eq!(
            gain_bias(&p, &DVector::from_vec(vec![0.0, 1.0])),
            Err(MdpError::SingularSystem)
        );
    }

    #[test]
    fn discounted_values() {
        let p = DMatrix::from_element(1, 1, 1.0);
        let v = value_discounted(&p, &DVector::from_element(1, 1.0), 0.9).unwrap();
        assert!((v[0] - 10.0).abs() < 1e-12);

        let v = value_discounted(&swap2(), &DVector::from_vec(vec![0.0, 1.0]), 0.5).unwrap();
        assert!((v[0] - 2.0 / 3.0).abs() < 1e-14 && (v[1] - 4.0 / 3.0).abs() < 1e-14);

        let arm = random_dense_arm(6, 3, Some(0.9));
        let r = arm.r_active().clone();
        let v = value_discounted(arm.p_active(), &r, 0.9).unwrap();
        let fixed = &r + arm.p_active() * &v * 0.9;
        assert!((fixed - &v).amax() < 1e-10);
    }
}
