//! The benchmark instances shipped with the crate.
//!
//! * `ex1`: the five-state restart arm (active action returns to state 0
//!   with no reward, passive action moves one state up with probability 0.9
//!   and earns `0.9^(s+1)`), learned with discount 0.9.
//! * `ex2`: a five-state rested arm with Dirichlet(1/5) active rows and
//!   active rewards `0.9^(s+1)`, discount 0.9.
//! * `ex8`: a fifty-state rested arm with Dirichlet(1/50) active rows and
//!   active rewards `5 + (s+1)/10`, discount 0.9.
//!
//! Sparse Dirichlet rows often leave some states with a vanishing share of
//! the uniform-exploration trajectory, and such arms cannot be learned by
//! any method within a desk-scale horizon. The generated instances are
//! therefore the first seeds whose exploration chain `(P0 + P1) / 2` gives
//! every state a stationary mass of at least [`MIN_EXPLORATION_MASS`]` / S`.

use crate::mdp::{generate_dirichlet_arm, stationary_distribution, Arm, RewardLaw};

/// The restart arm under the average-reward criterion.
pub const RESTART5_JSON: &str = include_str!("../fixtures/restart5.json");

/// Minimum stationary mass per state, relative to the uniform `1 / S`.
pub const MIN_EXPLORATION_MASS: f64 = 0.05;

pub fn restart5_arm() -> Arm {
    serde_json::from_str(RESTART5_JSON).expect("bundled fixture parses")
}

pub fn ex1_arm() -> Arm {
    restart5_arm().with_discount(Some(0.9)).expect("valid discount")
}

/// Smallest stationary mass of the uniform-exploration chain, times `S`.
pub fn exploration_mass(arm: &Arm) -> f64 {
    let chain = (arm.p_passive() + arm.p_active()) * 0.5;
    match stationary_distribution(&chain) {
        Ok(pi) => pi.min() * arm.num_states() as f64,
        Err(_) => 0.0,
    }
}

/// First seed (and its arm) passing the exploration-mass filter.
pub fn well_explored_dirichlet_arm(num_states: usize, law: RewardLaw) -> (u64, Arm) {
    (0u64..)
        .map(|seed| (seed, generate_dirichlet_arm(num_states, seed, law)))
        .find(|(_, arm)| exploration_mass(arm) >= MIN_EXPLORATION_MASS)
        .expect("some seed passes")
}

pub fn ex2_arm() -> (u64, Arm) {
    well_explored_dirichlet_arm(5, RewardLaw::Geometric)
}

pub fn ex8_arm() -> (u64, Arm) {
    well_explored_dirichlet_arm(50, RewardLaw::FivePlus)
}
