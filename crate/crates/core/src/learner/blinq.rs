use std::time::Instant;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{abs_errors, estimate_arm, ArmSimulator, EmpiricalCounts, LearningTrace, Schedule, TraceRecord};
use crate::index::ewisc;
use crate::mdp::Arm;

/// Known ground truth used to annotate a trace with errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Reference {
    pub indices: Vec<f64>,
    pub arm: Option<Arm>,
}

impl Reference {
    /// Reference built from an arm and its computed indices.
    pub fn from_arm(arm: &Arm) -> Result<Self, crate::index::IndexError> {
        Ok(Reference {
            indices: ewisc(arm)?.indices,
            arm: Some(arm.clone()),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlinqConfig {
    pub r_passive: Vec<f64>,
    pub r_active: Vec<f64>,
    pub discount: Option<f64>,
    pub schedule: Schedule,
    pub horizon: u64,
    pub seed: u64,
}

impl BlinqConfig {
    /// Config taking rewards and discount from a known arm.
    pub fn for_arm(arm: &Arm, horizon: u64, seed: u64) -> Self {
        BlinqConfig {
            r_passive: arm.r_passive().iter().copied().collect(),
            r_active: arm.r_active().iter().copied().collect(),
            discount: arm.discount(),
            schedule: Schedule::default(),
            horizon,
            seed,
        }
    }
}

/// Separate generators for exploration and transitions, both derived from
/// `seed`.
pub fn run_streams(seed: u64) -> (ChaCha8Rng, ChaCha8Rng) {
    let mut actions = ChaCha8Rng::seed_from_u64(seed);
    actions.set_stream(0);
    let mut transitions = ChaCha8Rng::seed_from_u64(seed);
    transitions.set_stream(1);
    (actions, transitions)
}

/// Model-based index learning: explore uniformly, count transitions, and
/// recompute indices on the estimated arm whenever the schedule fires (and
/// once more at the horizon).
///
/// A failed index computation on an intermediate estimate is recorded as a
/// flagged entry and learning goes on.
pub fn blinq_run<S: ArmSimulator + ?Sized>(
    sim: &S,
    config: &BlinqConfig,
    reference: Option<&Reference>,
) -> LearningTrace {
    let n = sim.num_states();
    let r0 = DVector::from_column_slice(&config.r_passive);
    let r1 = DVector::from_column_slice(&config.r_active);
    let (mut action_rng, mut sim_rng) = run_streams(config.seed);
    let mut counts = EmpiricalCounts::new(n);
    let mut schedule = config.schedule.start();
    let mut trace = LearningTrace::new("blinq", n, config.horizon, config.seed);
    let mut state = sim.initial_state();

    for t in 1..=config.horizon {
        let action = action_rng.random::<bool>() as usize;
        let (next, _) = sim.step(state, action, &mut sim_rng);
        counts.record(state, action, next);
        state = next;

        let covered = counts.covered();
        if covered && trace.covered_at.is_none() {
            trace.covered_at = Some(t);
        }
        let due = schedule.fires(t, covered);
        if due || (covered && t == config.horizon) {
            trace.index_calls += 1;
            let record = index_record(t, &counts, &r0, &r1, config.discount, reference);
            trace.push(record);
        }
    }
    trace
}

fn index_record(
    t: u64,
    counts: &EmpiricalCounts,
    r0: &DVector<f64>,
    r1: &DVector<f64>,
    discount: Option<f64>,
    reference: Option<&Reference>,
) -> TraceRecord {
    let mut record = TraceRecord {
        t,
        indices: Vec::new(),
        abs_errors: None,
        model_error: None,
        ewisc_ms: None,
        indexable: None,
        error: None,
    };
    let estimate = match estimate_arm(counts, r0, r1, discount) {
        Ok(e) => e,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    if let Some(arm) = reference.and_then(|r| r.arm.as_ref()) {
        record.model_error = arm.distance(&estimate.arm).ok();
    }
    let start = Instant::now();
    let result = ewisc(&estimate.arm);
    record.ewisc_ms = Some(start.elapsed().as_secs_f64() * 1e3);
    match result {
        Ok(c) => {
            record.abs_errors = reference.map(|r| abs_errors(&c.indices, &r.indices));
            record.indexable = Some(c.indexable);
            record.indices = c.indices;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}
