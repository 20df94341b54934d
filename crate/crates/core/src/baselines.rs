//! Tabular two-timescale Q-learning baselines.
//!
//! Both learners follow one uniformly explored trajectory. For every
//! reference state `k` they keep a Q-table of the arm penalised by the
//! current estimate `lambda_k`, updated on the fast timescale, and move
//! `lambda_k` on the slow timescale toward the penalty at which acting and
//! resting in `k` are equally good.
//!
//! * QWI learns `Q_k(s, a)` for both actions. With a discount the target is
//!   `r - lambda_k a + beta max_b Q_k(s', b)`; without one it is relative
//!   Q-learning, subtracting `Q_k(0, 0)`.
//! * QGI is specialised to rested discounted arms (passive action freezes
//!   the state and earns nothing). There `V_k(s) = max(0, Q_k(s, 1))`, so only
//!   the active values are learned, from active samples:
//!   `Q_k(s, 1) <- r - lambda_k + beta max(0, Q_k(s', 1))`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::learner::{abs_errors, log_spaced_steps, run_streams, ArmSimulator, LearningTrace, TraceRecord};

/// Fast (Q-value) learning rate as a function of the pair's visit count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FastRate {
    Zero,
    /// `1 / ceil(n / width)`.
    Stepped { width: f64 },
}

impl FastRate {
    pub fn at(&self, visits: u64) -> f64 {
        match *self {
            FastRate::Zero => 0.0,
            FastRate::Stepped { width } => 1.0 / (visits as f64 / width).ceil().max(1.0),
        }
    }
}

/// Slow (index) learning rate as a function of the step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum SlowRate {
    Zero,
    /// `c / (1 + t ln t / scale)`.
    LogDecay { c: f64, scale: f64 },
}

impl SlowRate {
    pub fn at(&self, t: u64) -> f64 {
        match *self {
            SlowRate::Zero => 0.0,
            SlowRate::LogDecay { c, scale } => {
                let t = t.max(1) as f64;
                c / (1.0 + t * t.ln() / scale)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearningParams {
    pub fast: FastRate,
    pub slow: SlowRate,
    pub initial_index: f64,
    /// Index snapshots per decade of steps (the horizon is always recorded).
    pub records_per_decade: usize,
}

impl Default for QLearningParams {
    fn default() -> Self {
        QLearningParams {
            fast: FastRate::Stepped { width: 20.0 },
            slow: SlowRate::LogDecay { c: 0.001, scale: 100_000.0 },
            initial_index: 0.0,
            records_per_decade: 10,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BaselineError {
    #[error("arm structure mismatch: {0}")]
    StructureMismatch(String),
}

/// Learner state shared by both baselines.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QLearnerState {
    /// `q[k]` is the table for reference state `k`, indexed `2 s + a`.
    pub q: Vec<Vec<f64>>,
    pub lambda_hat: Vec<f64>,
    /// Visits per `(s, a)`, indexed `2 s + a`.
    pub visits: Vec<u64>,
}

impl QLearnerState {
    fn new(num_states: usize, initial_index: f64) -> Self {
        QLearnerState {
            q: vec![vec![0.0; 2 * num_states]; num_states],
            lambda_hat: vec![initial_index; num_states],
            visits: vec![0; 2 * num_states],
        }
    }

    /// Fast update of every reference table on `(s, a, r, s')`.
    pub fn qwi_update(&mut self, s: usize, a: usize, r: f64, next: usize, discount: Option<f64>, rate: f64) {
        for (q, &lambda) in self.q.iter_mut().zip(&self.lambda_hat) {
            let future = q[2 * next].max(q[2 * next + 1]);
            let target = match discount {
                Some(beta) => r - lambda * a as f64 + beta * future,
                None => r - lambda * a as f64 + future - q[0],
            };
            q[2 * s + a] += rate * (target - q[2 * s + a]);
        }
    }

    /// Fast update of the active values on an active sample `(s, r, s')`.
    pub fn qgi_update(&mut self, s: usize, r: f64, next: usize, beta: f64, rate: f64) {
        for (q, &lambda) in self.q.iter_mut().zip(&self.lambda_hat) {
            let target = r - lambda + beta * q[2 * next + 1].max(0.0);
            q[2 * s + 1] += rate * (target - q[2 * s + 1]);
        }
    }
}

fn record(t: u64, indices: &[f64], truth: Option<&[f64]>) -> TraceRecord {
    TraceRecord {
        t,
        indices: indices.to_vec(),
        abs_errors: truth.map(|tr| abs_errors(indices, tr)),
        model_error: None,
        ewisc_ms: None,
        indexable: None,
        error: None,
    }
}

enum Variant {
    Qwi,
    Qgi { beta: f64 },
}

fn run<S: ArmSimulator + ?Sized>(
    sim: &S,
    variant: Variant,
    discount: Option<f64>,
    params: &QLearningParams,
    horizon: u64,
    seed: u64,
    truth: Option<&[f64]>,
) -> LearningTrace {
    let n = sim.num_states();
    let name = match variant {
        Variant::Qwi => "qwi",
        Variant::Qgi { .. } => "qgi",
    };
    let mut trace = LearningTrace::new(name, n, horizon, seed);
    let (mut action_rng, mut sim_rng) = run_streams(seed);
    let mut st = QLearnerState::new(n, params.initial_index);
    let checkpoints = log_spaced_steps(horizon, params.records_per_decade);
    let mut next_checkpoint = 0;
    let mut state = sim.initial_state();

    for t in 1..=horizon {
        let action = action_rng.random::<bool>() as usize;
        let (next, reward) = sim.step(state, action, &mut sim_rng);
        let pair = 2 * state + action;
        st.visits[pair] += 1;
        let rate = params.fast.at(st.visits[pair]);
        match variant {
            Variant::Qwi => st.qwi_update(state, action, reward, next, discount, rate),
            Variant::Qgi { beta } => {
                if action == 1 {
                    st.qgi_update(state, reward, next, beta, rate);
                }
            }
        }
        let gamma = params.slow.at(t);
        if gamma != 0.0 {
            for k in 0..n {
                let gap = match variant {
                    Variant::Qwi => st.q[k][2 * k + 1] - st.q[k][2 * k],
                    Variant::Qgi { beta } => {
                        let g = st.q[k][2 * k + 1];
                        g - beta * g.max(0.0)
                    }
                };
                st.lambda_hat[k] += gamma * gap;
            }
        }
        state = next;
        if next_checkpoint < checkpoints.len() && checkpoints[next_checkpoint] == t {
            next_checkpoint += 1;
            trace.push(record(t, &st.lambda_hat, truth));
        }
    }
    trace
}

/// Two-timescale Q-learning of Whittle indices. `discount = None` selects
/// the relative (average-reward) variant.
pub fn qwi_run<S: ArmSimulator + ?Sized>(
    sim: &S,
    discount: Option<f64>,
    params: &QLearningParams,
    horizon: u64,
    seed: u64,
    truth: Option<&[f64]>,
) -> LearningTrace {
    run(sim, Variant::Qwi, discount, params, horizon, seed, truth)
}

/// Two-timescale Q-learning of Gittins indices. The arm must be rested;
/// this is checked when the simulator exposes its arm.
pub fn qgi_run<S: ArmSimulator + ?Sized>(
    sim: &S,
    discount: Option<f64>,
    params: &QLearningParams,
    horizon: u64,
    seed: u64,
    truth: Option<&[f64]>,
) -> Result<LearningTrace, BaselineError> {
    if sim.known_arm().is_some_and(|arm| !arm.is_rested()) {
        return Err(BaselineError::StructureMismatch(
            "passive action must keep the state and earn nothing".into(),
        ));
    }
    let beta = discount
        .ok_or_else(|| BaselineError::StructureMismatch("a discount factor is required".into()))?;
    Ok(run(sim, Variant::Qgi { beta }, discount, params, horizon, seed, truth))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learner::ArmBackedSimulator;
    use crate::mdp::{random_dense_arm, Arm};
    use nalgebra::{DMatrix, DVector};

    fn frozen() -> QLearningParams {
        QLearningParams {
            fast: FastRate::Zero,
            slow: SlowRate::Zero,
            initial_index: 0.25,
            records_per_decade: 3,
        }
    }

    #[test]
    fn zero_rates_freeze_the_estimates() {
        let arm = random_dense_arm(3, 1, Some(0.9));
        let sim = ArmBackedSimulator::new(arm);
        let trace = qwi_run(&sim, Some(0.9), &frozen(), 1000, 0, None);
        assert!(trace.records.iter().all(|r| r.indices == vec![0.25; 3]));

        let rested = Arm::new(
            DMatrix::identity(3, 3),
            DMatrix::from_element(3, 3, 1.0 / 3.0),
            DVector::zeros(3),
            DVector::from_element(3, 1.0),
            Some(0.9),
        )
        .unwrap();
        let sim = ArmBackedSimulator::new(rested);
        let trace = qgi_run(&sim, Some(0.9), &frozen(), 1000, 0, None).unwrap();
        assert!(trace.records.iter().all(|r| r.indices == vec![0.25; 3]));
        assert_eq!(trace.records.last().unwrap().t, 1000);
    }

    #[test]
    fn single_fast_update() {
        let mut st = QLearnerState::new(2, 0.5);
        st.qwi_update(0, 1, 2.0, 1, Some(0.9), 1.0);
        // Q = r - lambda * a + beta * max Q(s', .) = 2 - 0.5 + 0.
        assert_eq!(st.q[0][1], 1.5);
        assert_eq!(st.q[1][1], 1.5);
        let mut st = QLearnerState::new(2, 0.5);
        st.q[0][0] = 0.25;
        st.qwi_update(1, 0, 1.0, 1, None, 1.0);
        // Relative variant subtracts Q_k(0, 0).
        assert_eq!(st.q[0][2], 0.75);
        assert_eq!(st.q[1][2], 1.0);
    }

    #[test]
    fn structure_mismatch() {
        let arm = random_dense_arm(3, 1, Some(0.9));
        let sim = ArmBackedSimulator::new(arm);
        assert!(matches!(
            qgi_run(&sim, Some(0.9), &QLearningParams::default(), 10, 0, None),
            Err(BaselineError::StructureMismatch(_))
        ));
        let rested = Arm::new(
            DMatrix::identity(2, 2),
            DMatrix::from_element(2, 2, 0.5),
            DVector::zeros(2),
            DVector::from_element(2, 1.0),
            None,
        )
        .unwrap();
        let sim = ArmBackedSimulator::new(rested);
        assert!(matches!(
            qgi_run(&sim, None, &QLearningParams::default(), 10, 0, None),
            Err(BaselineError::StructureMismatch(_))
        ));
    }

    #[test]
    fn rates() {
        let fast = FastRate::Stepped { width: 500.0 };
        assert_eq!(fast.at(1), 1.0);
        assert_eq!(fast.at(500), 1.0);
        assert_eq!(fast.at(501), 0.5);
        let slow = SlowRate::LogDecay { c: 1.0, scale: 1000.0 };
        assert_eq!(slow.at(1), 1.0);
        assert!(slow.at(100_000) < slow.at(1000));
    }
}
