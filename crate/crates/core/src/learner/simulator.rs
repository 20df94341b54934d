use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::mdp::Arm;

/// Black-box access to an arm: sample a transition and observe its reward.
pub trait ArmSimulator {
    fn num_states(&self) -> usize;

    fn initial_state(&self) -> usize {
        0
    }

    /// Takes `action` in `state`, returning the next state and the reward.
    fn step(&self, state: usize, action: usize, rng: &mut ChaCha8Rng) -> (usize, f64);

    /// The underlying arm, when the simulator is backed by one. Used only
    /// for structural checks, never for learning.
    fn known_arm(&self) -> Option<&Arm> {
        None
    }
}

/// Simulator that samples from a known arm by inverse-CDF lookup.
#[derive(Debug, Clone)]
pub struct ArmBackedSimulator {
    arm: Arm,
    cumulative: [Vec<Vec<f64>>; 2],
    initial: usize,
}

impl ArmBackedSimulator {
    pub fn new(arm: Arm) -> Self {
        let cdf = |action: usize| -> Vec<Vec<f64>> {
            arm.transition(action)
                .row_iter()
                .map(|row| {
                    let mut acc = 0.0;
                    row.iter()
                        .map(|p| {
                            acc += p;
                            acc
                        })
                        .collect()
                })
                .collect()
        };
        let cumulative = [cdf(0), cdf(1)];
        ArmBackedSimulator {
            arm,
            cumulative,
            initial: 0,
        }
    }

    pub fn with_initial_state(mut self, state: usize) -> Self {
        assert!(state < self.arm.num_states());
        self.initial = state;
        self
    }

    pub fn arm(&self) -> &Arm {
        &self.arm
    }
}

impl ArmSimulator for ArmBackedSimulator {
    fn num_states(&self) -> usize {
        self.arm.num_states()
    }

    fn initial_state(&self) -> usize {
        self.initial
    }

    fn step(&self, state: usize, action: usize, rng: &mut ChaCha8Rng) -> (usize, f64) {
        let row = &self.cumulative[action][state];
        let u: f64 = rng.random::<f64>() * row[row.len() - 1];
        // First index whose cumulative mass exceeds u, skipping zero-mass
        // entries that share the same cumulative value.
        let next = row.partition_point(|&c| c <= u).min(row.len() - 1);
        (next, self.arm.reward(state, action))
    }

    fn known_arm(&self) -> Option<&Arm> {
        Some(&self.arm)
    }
}
