use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::mdp::Arm;

/// Visit and transition counters `N_t(s, a)` and `N_t(s, a, s')`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmpiricalCounts {
    num_states: usize,
    n_sa: Vec<u64>,
    n_sas: Vec<u64>,
    t: u64,
    unvisited: usize,
}

impl EmpiricalCounts {
    pub fn new(num_states: usize) -> Self {
        EmpiricalCounts {
            num_states,
            n_sa: vec![0; 2 * num_states],
            n_sas: vec![0; 2 * num_states * num_states],
            t: 0,
            unvisited: 2 * num_states,
        }
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_sa(&self, state: usize, action: usize) -> u64 {
        self.n_sa[2 * state + action]
    }

    pub fn n_sas(&self, state: usize, action: usize, next: usize) -> u64 {
        self.n_sas[(2 * state + action) * self.num_states + next]
    }

    pub fn record(&mut self, state: usize, action: usize, next: usize) {
        let pair = 2 * state + action;
        if self.n_sa[pair] == 0 {
            self.unvisited -= 1;
        }
        self.n_sa[pair] += 1;
        self.n_sas[pair * self.num_states + next] += 1;
        self.t += 1;
    }

    /// Every state-action pair has been tried at least once.
    pub fn covered(&self) -> bool {
        self.unvisited == 0
    }

    /// First pair never tried, if any.
    pub fn first_unvisited(&self) -> Option<(usize, usize)> {
        self.n_sa.iter().position(|&n| n == 0).map(|p| (p / 2, p % 2))
    }

    /// The counters add up: pair counts sum to `t` and transition counts
    /// sum to their pair count.
    pub fn is_consistent(&self) -> bool {
        let s = self.num_states;
        self.n_sa.iter().sum::<u64>() == self.t
            && (0..2 * s).all(|p| self.n_sas[p * s..(p + 1) * s].iter().sum::<u64>() == self.n_sa[p])
    }

    /// Empirical transition matrix of `action`; unvisited rows are zero.
    pub fn transition_estimate(&self, action: usize) -> DMatrix<f64> {
        let s = self.num_states;
        DMatrix::from_fn(s, s, |i, j| {
            let n = self.n_sa(i, action);
            if n == 0 {
                0.0
            } else {
                self.n_sas(i, action, j) as f64 / n as f64
            }
        })
    }
}

/// Estimated arm together with the counts it was built from.
#[derive(Debug, Clone)]
pub struct ArmEstimate<'a> {
    pub arm: Arm,
    pub source_counts: &'a EmpiricalCounts,
}

/// `P^a_{s s'} = N(s, a, s') / N(s, a)` with the known rewards copied over.
pub fn estimate_arm<'a>(
    counts: &'a EmpiricalCounts,
    r_passive: &DVector<f64>,
    r_active: &DVector<f64>,
    discount: Option<f64>,
) -> Result<ArmEstimate<'a>, LearnError> {
    if let Some((state, action)) = counts.first_unvisited() {
        return Err(LearnError::InsufficientSamples { state, action });
    }
    let arm = Arm::new(
        counts.transition_estimate(0),
        counts.transition_estimate(1),
        r_passive.clone(),
        r_active.clone(),
        discount,
    )?;
    Ok(ArmEstimate {
        arm,
        source_counts: counts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ratio_estimate() {
        let mut c = EmpiricalCounts::new(2);
        for next in [1, 1, 1, 0] {
            c.record(0, 0, next);
        }
        for (s, a) in [(0, 1), (1, 0), (1, 1)] {
            c.record(s, a, 0);
        }
        assert!(c.covered() && c.is_consistent());
        let est = estimate_arm(&c, &DVector::zeros(2), &DVector::zeros(2), None).unwrap();
        assert_eq!(est.arm.p_passive().row(0).iter().copied().collect::<Vec<_>>(), vec![0.25, 0.75]);
        assert_eq!(est.source_counts.t(), 7);
    }

    #[test]
    fn unvisited_pair_is_an_error() {
        let mut c = EmpiricalCounts::new(2);
        c.record(0, 0, 1);
        assert!(!c.covered());
        assert_eq!(
            estimate_arm(&c, &DVector::zeros(2), &DVector::zeros(2), None).unwrap_err(),
            LearnError::InsufficientSamples { state: 0, action: 1 }
        );
    }
}
