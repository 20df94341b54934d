use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};

use super::Arm;

/// Discount factor used by the generated Gittins instances.
pub const GITTINS_DISCOUNT: f64 = 0.9;

/// Active-reward profile of generated Gittins arms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RewardLaw {
    /// `r^1_s = 5 + (s + 1) / 10`
    FivePlus,
    /// `r^1_s = 0.9^(s + 1)`
    Geometric,
}

impl RewardLaw {
    pub fn reward(self, state: usize) -> f64 {
        match self {
            RewardLaw::FivePlus => 5.0 + (state as f64 + 1.0) / 10.0,
            RewardLaw::Geometric => 0.9f64.powi(state as i32 + 1),
        }
    }
}

/// One Dirichlet(concentration, ..., concentration) draw.
///
/// Gamma variates with shape below one are drawn as
/// `Gamma(shape + 1) * U^(1/shape)` in log space, so the tiny components of
/// a sparse Dirichlet do not underflow before normalisation.
pub fn dirichlet_row<R: Rng>(rng: &mut R, len: usize, concentration: f64) -> Vec<f64> {
    let gamma = Gamma::new(concentration + 1.0, 1.0).expect("positive shape");
    let logs: Vec<f64> = (0..len)
        .map(|_| {
            let g: f64 = gamma.sample(rng);
            let u: f64 = rng.random::<f64>().max(f64::MIN_POSITIVE);
            g.ln() + u.ln() / concentration
        })
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

/// Rested (Gittins) arm: passive action freezes the state and earns nothing;
/// each active row is Dirichlet with every parameter `1 / S`. Discounted with
/// [`GITTINS_DISCOUNT`].
pub fn generate_dirichlet_arm(num_states: usize, seed: u64, law: RewardLaw) -> Arm {
    assert!(num_states >= 2, "need at least two states");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let concentration = 1.0 / num_states as f64;
    let rows: Vec<Vec<f64>> = (0..num_states)
        .map(|_| dirichlet_row(&mut rng, num_states, concentration))
        .collect();
    let p_active = DMatrix::from_fn(num_states, num_states, |i, j| rows[i][j]);
    Arm::new(
        DMatrix::identity(num_states, num_states),
        p_active,
        DVector::zeros(num_states),
        DVector::from_fn(num_states, |i, _| law.reward(i)),
        Some(GITTINS_DISCOUNT),
    )
    .expect("generated rows are stochastic")
}

/// Arm with strictly positive transition entries (hence unichain under every
/// policy) and rewards uniform in `[0, 1)`.
pub fn random_dense_arm(num_states: usize, seed: u64, discount: Option<f64>) -> Arm {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stochastic = |rng: &mut ChaCha8Rng| {
        let mut m = DMatrix::from_fn(num_states, num_states, |_, _| 0.05 + rng.random::<f64>());
        for mut row in m.row_iter_mut() {
            let sum = row.sum();
            row /= sum;
        }
        m
    };
    let p0 = stochastic(&mut rng);
    let p1 = stochastic(&mut rng);
    let r0 = DVector::from_fn(num_states, |_, _| rng.random::<f64>());
    let r1 = DVector::from_fn(num_states, |_, _| rng.random::<f64>());
    Arm::new(p0, p1, r0, r1, discount).expect("generated rows are stochastic")
}
