//! Brute-force ground truth for small arms: Bellman-optimal policy sets by
//! enumeration, penalty scans of the optimal advantage, and a random search
//! for non-indexable arms.
//!
//! Nothing here goes through the sweep's inverse updates; every advantage is
//! obtained from a fresh policy evaluation.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::index::{index_bounds, IndexBounds};
use crate::mdp::{
    advantage_definitional, dirichlet_row, validate_arm, value_discounted, AdvantageLine, Arm,
    MdpError, Policy,
};

/// Largest state count accepted by the enumerating routines.
pub const MAX_ORACLE_STATES: usize = 12;
/// Sign tolerance of the optimality test.
const SIGN_TOL: f64 = 1e-9;
/// Bisection stops on intervals narrower than this.
const BISECT_WIDTH: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("{0} states is too many for policy enumeration (max {MAX_ORACLE_STATES})")]
    TooLarge(usize),
    #[error("no non-indexable arm found in {0} trials")]
    NotFound(usize),
    #[error("grid of {got} points is too coarse, need at least {need}")]
    GridTooCoarse { got: usize, need: usize },
    #[error("state {0} has no zero crossing inside the scanned interval")]
    MissingZero(usize),
    #[error(transparent)]
    Mdp(#[from] MdpError),
}

/// Per-policy advantage lines (and value lines for discounted arms), all
/// obtained from direct evaluation at two penalties.
struct PolicyTable {
    policies: Vec<Policy>,
    advantage: Vec<Vec<AdvantageLine>>,
    value: Option<Vec<Vec<AdvantageLine>>>,
}

fn lines_through(at0: &[f64], at1: &[f64]) -> Vec<AdvantageLine> {
    at0.iter()
        .zip(at1)
        .map(|(&a, &b)| AdvantageLine { intercept: a, slope: b - a })
        .collect()
}

impl PolicyTable {
    fn build(arm: &Arm) -> Result<Self, OracleError> {
        let s = arm.num_states();
        if s > MAX_ORACLE_STATES {
            return Err(OracleError::TooLarge(s));
        }
        let policies: Vec<Policy> = (0..1u64 << s).map(|m| Policy::from_mask(s, m)).collect();
        let mut advantage = Vec::with_capacity(policies.len());
        let mut value = arm.discount().map(|_| Vec::with_capacity(policies.len()));
        for pi in &policies {
            let a0 = advantage_definitional(arm, pi, 0.0)?;
            let a1 = advantage_definitional(arm, pi, 1.0)?;
            advantage.push(lines_through(&a0, &a1));
            if let (Some(beta), Some(value)) = (arm.discount(), value.as_mut()) {
                let p = arm.policy_transition(pi);
                let v0 = value_discounted(&p, &arm.policy_reward(pi, 0.0), beta)?;
                let v1 = value_discounted(&p, &arm.policy_reward(pi, 1.0), beta)?;
                value.push(lines_through(v0.as_slice(), v1.as_slice()));
            }
        }
        Ok(PolicyTable { policies, advantage, value })
    }

    /// Indices (into `policies`) of the Bellman-optimal policies at `lambda`.
    fn optimal_at(&self, lambda: f64) -> Vec<usize> {
        let sign_ok = |i: usize| {
            let pi = &self.policies[i];
            self.advantage[i].iter().enumerate().all(|(s, l)| {
                let a = l.eval(lambda);
                if pi.contains(s) {
                    a >= -SIGN_TOL
                } else {
                    a <= SIGN_TOL
                }
            })
        };
        match &self.value {
            None => (0..self.policies.len()).filter(|&i| sign_ok(i)).collect(),
            Some(value) => {
                let n = value[0].len();
                let best: Vec<f64> = (0..n)
                    .map(|s| {
                        value
                            .iter()
                            .map(|v| v[s].eval(lambda))
                            .fold(f64::NEG_INFINITY, f64::max)
                    })
                    .collect();
                (0..self.policies.len())
                    .filter(|&i| {
                        value[i].iter().zip(&best).all(|(l, &b)| {
                            l.eval(lambda) >= b - SIGN_TOL * b.abs().max(1.0)
                        }) && sign_ok(i)
                    })
                    .collect()
            }
        }
    }

    fn alpha(&self, policy: usize, lambda: f64) -> Vec<f64> {
        self.advantage[policy].iter().map(|l| l.eval(lambda)).collect()
    }

    /// Appends the zeros of the optimal advantage on `[a, b]` to `zeros`.
    fn zeros_between(&self, a: f64, b: f64, bo_a: &[usize], bo_b: &[usize], zeros: &mut [Vec<f64>]) {
        // A policy optimal at both ends is optimal on the whole interval
        // (its optimality region is convex), so the optimal advantage is
        // exactly that policy's lines there.
        if let Some(&common) = bo_a.iter().find(|i| bo_b.contains(i)) {
            for (s, l) in self.advantage[common].iter().enumerate() {
                if l.slope.abs() > 0.0 {
                    let z = -l.intercept / l.slope;
                    if a <= z && z <= b {
                        zeros[s].push(z);
                    }
                }
            }
            return;
        }
        if b - a < BISECT_WIDTH {
            let (fa, fb) = (self.alpha(bo_a[0], a), self.alpha(bo_b[0], b));
            for s in 0..zeros.len() {
                let (x, y) = (fa[s], fb[s]);
                if (x <= 0.0 && y >= 0.0 || x >= 0.0 && y <= 0.0) && !(x == 0.0 && y == 0.0) {
                    zeros[s].push(a + (b - a) * x / (x - y));
                }
            }
            return;
        }
        let m = 0.5 * (a + b);
        let bo_m = self.optimal_at(m);
        self.zeros_between(a, m, bo_a, &bo_m, zeros);
        self.zeros_between(m, b, &bo_m, bo_b, zeros);
    }
}

/// All Bellman-optimal policies of the `lambda`-penalised arm.
pub fn bo_policies_at(arm: &Arm, lambda: f64) -> Result<Vec<Policy>, OracleError> {
    let table = PolicyTable::build(arm)?;
    Ok(table
        .optimal_at(lambda)
        .into_iter()
        .map(|i| table.policies[i].clone())
        .collect())
}

/// Scan of the optimal advantage over a penalty grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LambdaScan {
    pub grid: Vec<f64>,
    pub bo_policies: Vec<Vec<Policy>>,
    /// `optimal_advantage[k][s]` is the optimal advantage of `s` at `grid[k]`.
    pub optimal_advantage: Vec<Vec<f64>>,
    /// Sorted zero crossings of each state's optimal advantage.
    pub per_state_zeros: Vec<Vec<f64>>,
    /// Mean of each state's zeros.
    pub indices: Vec<f64>,
    /// Every state has exactly one zero.
    pub indexable: bool,
}

/// Scans `grid_size` evenly spaced penalties over `[bounds.lower,
/// bounds.upper]` and locates every zero of the optimal advantage.
pub fn lambda_scan(arm: &Arm, bounds: IndexBounds, grid_size: usize) -> Result<LambdaScan, OracleError> {
    let s = arm.num_states();
    if s > MAX_ORACLE_STATES {
        return Err(OracleError::TooLarge(s));
    }
    let need = (4 * s).max(2);
    if grid_size < need {
        return Err(OracleError::GridTooCoarse { got: grid_size, need });
    }
    let table = PolicyTable::build(arm)?;
    let step = (bounds.upper - bounds.lower) / (grid_size - 1) as f64;
    let grid: Vec<f64> = (0..grid_size)
        .map(|k| if k + 1 == grid_size { bounds.upper } else { bounds.lower + step * k as f64 })
        .collect();
    let optimal: Vec<Vec<usize>> = grid.iter().map(|&l| table.optimal_at(l)).collect();

    let mut zeros = vec![Vec::new(); s];
    for k in 0..grid_size - 1 {
        table.zeros_between(grid[k], grid[k + 1], &optimal[k], &optimal[k + 1], &mut zeros);
    }
    for z in zeros.iter_mut() {
        z.sort_by(f64::total_cmp);
        z.dedup_by(|b, a| (*b - *a).abs() <= 1e-9 * a.abs().max(1.0));
    }
    if let Some(missing) = zeros.iter().position(Vec::is_empty) {
        return Err(OracleError::MissingZero(missing));
    }
    let indices = zeros
        .iter()
        .map(|z| z.iter().sum::<f64>() / z.len() as f64)
        .collect();
    let indexable = zeros.iter().all(|z| z.len() == 1);
    Ok(LambdaScan {
        optimal_advantage: grid
            .iter()
            .zip(&optimal)
            .map(|(&l, bo)| table.alpha(bo[0], l))
            .collect(),
        bo_policies: optimal
            .iter()
            .map(|bo| bo.iter().map(|&i| table.policies[i].clone()).collect())
            .collect(),
        grid,
        per_state_zeros: zeros,
        indices,
        indexable,
    })
}

/// The index bounds padded by one on each side.
pub fn scan_bounds(arm: &Arm) -> Result<IndexBounds, OracleError> {
    let b = index_bounds(arm)?;
    Ok(IndexBounds {
        lower: b.lower - 1.0,
        upper: b.upper + 1.0,
    })
}

/// [`lambda_scan`] over [`scan_bounds`] with `grid_size.max(4 S)` points.
pub fn scan_arm(arm: &Arm, grid_size: usize) -> Result<LambdaScan, OracleError> {
    lambda_scan(arm, scan_bounds(arm)?, grid_size.max(4 * arm.num_states()))
}

/// Default sampler of the search: average-reward arm whose transition rows
/// are Dirichlet(1/2) and rewards uniform in `[0, 1)`.
pub fn sample_search_arm(rng: &mut ChaCha8Rng, num_states: usize) -> Arm {
    let matrix = |rng: &mut ChaCha8Rng| {
        let rows: Vec<Vec<f64>> = (0..num_states)
            .map(|_| dirichlet_row(rng, num_states, 0.5))
            .collect();
        DMatrix::from_fn(num_states, num_states, |i, j| rows[i][j])
    };
    let p0 = matrix(rng);
    let p1 = matrix(rng);
    let r0 = DVector::from_fn(num_states, |_, _| rng.random::<f64>());
    let r1 = DVector::from_fn(num_states, |_, _| rng.random::<f64>());
    Arm::new(p0, p1, r0, r1, None).expect("Dirichlet rows are stochastic")
}

/// First non-indexable arm produced by `sample`, checked with [`scan_arm`].
///
/// Trial `t` draws from its own ChaCha8 stream `t` of `seed`, so the result
/// does not depend on how many draws earlier trials consumed. Samples that
/// are not unichain under every policy are skipped.
pub fn search_with<F>(seed: u64, max_trials: usize, mut sample: F) -> Result<Arm, OracleError>
where
    F: FnMut(&mut ChaCha8Rng) -> Arm,
{
    for trial in 0..max_trials {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(trial as u64);
        let arm = sample(&mut rng);
        if arm.num_states() > 8 {
            return Err(OracleError::TooLarge(arm.num_states()));
        }
        if !validate_arm(&arm).unichain_all_policies {
            continue;
        }
        match scan_arm(&arm, 64) {
            Ok(scan) if !scan.indexable => return Ok(arm),
            Ok(_) | Err(OracleError::Mdp(_)) | Err(OracleError::MissingZero(_)) => {}
            Err(e) => return Err(e),
        }
    }
    Err(OracleError::NotFound(max_trials))
}

/// Random search for a unichain, non-indexable arm with `num_states` states.
pub fn search_non_indexable(seed: u64, num_states: usize, max_trials: usize) -> Result<Arm, OracleError> {
    if num_states > 8 {
        return Err(OracleError::TooLarge(num_states));
    }
    search_with(seed, max_trials, |rng| sample_search_arm(rng, num_states))
}
