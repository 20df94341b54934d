use std::fmt;

use serde::{Deserialize, Serialize};

/// The set of states in which the active action is chosen.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Policy {
    active: Vec<bool>,
}

impl Policy {
    pub fn empty(num_states: usize) -> Self {
        Policy {
            active: vec![false; num_states],
        }
    }

    pub fn full(num_states: usize) -> Self {
        Policy {
            active: vec![true; num_states],
        }
    }

    pub fn from_states(num_states: usize, states: &[usize]) -> Self {
        let mut p = Policy::empty(num_states);
        for &s in states {
            p.active[s] = true;
        }
        p
    }

    /// Bit `i` of `mask` selects state `i`.
    pub fn from_mask(num_states: usize, mask: u64) -> Self {
        Policy {
            active: (0..num_states).map(|i| mask >> i & 1 == 1).collect(),
        }
    }

    pub fn mask(&self) -> u64 {
        self.active
            .iter()
            .enumerate()
            .fold(0, |m, (i, &a)| if a { m | 1 << i } else { m })
    }

    pub fn num_states(&self) -> usize {
        self.active.len()
    }

    pub fn contains(&self, state: usize) -> bool {
        self.active[state]
    }

    pub fn action(&self, state: usize) -> usize {
        self.active[state] as usize
    }

    pub fn toggle(&mut self, state: usize) {
        self.active[state] = !self.active[state];
    }

    pub fn is_empty(&self) -> bool {
        !self.active.iter().any(|&a| a)
    }

    pub fn len(&self) -> usize {
        self.active.iter().filter(|&&a| a).count()
    }

    pub fn states(&self) -> Vec<usize> {
        (0..self.active.len()).filter(|&i| self.active[i]).collect()
    }

    pub fn indicator(&self) -> Vec<f64> {
        self.active.iter().map(|&a| a as u8 as f64).collect()
    }

    /// Non-strict inclusion.
    pub fn is_subset_of(&self, other: &Policy) -> bool {
        self.active
            .iter()
            .zip(&other.active)
            .all(|(&a, &b)| !a || b)
    }
}

impl fmt::Debug for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.states()).finish()
    }
}

impl Serialize for Policy {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.states().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Policy {
    /// Deserialises a list of active states; the state count is taken as one
    /// past the largest member, so callers that need a fixed size should
    /// rebuild with [`Policy::from_states`].
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let states = Vec::<usize>::deserialize(deserializer)?;
        let n = states.iter().max().map_or(0, |m| m + 1);
        Ok(Policy::from_states(n, &states))
    }
}
