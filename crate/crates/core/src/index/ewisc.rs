use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use nalgebra::DVector;
use serde::de::Error as _;
use serde::ser::SerializeMap;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::{sherman_morrison_in_place, IndexError};
use crate::mdp::{lines_from_inverse, linalg, system_matrix, AdvantageLine, Arm, Policy};

/// Relative tolerance used to decide that two thresholds coincide.
const THRESHOLD_TOL: f64 = 1e-9;
/// Lines flatter than this are treated as constant.
const FLAT_SLOPE: f64 = 1e-12;

fn tolerance(mu: f64) -> f64 {
    THRESHOLD_TOL * mu.abs().max(1.0)
}

/// Upper bound on the number of sweep iterations for `num_states` states.
pub fn iteration_limit(num_states: usize) -> usize {
    (8 * num_states * num_states).max(64)
}

/// Output of the sweep.
///
/// `policies[0]` is the full state set, `policies[i]` the policy optimal on
/// `[thresholds[i - 1], thresholds[i]]`, and the last entry is empty. Each
/// step toggles exactly one state; `crossings[s]` lists the thresholds at
/// which `s` was toggled and `indices[s]` is their mean.
#[derive(Debug, Clone, PartialEq)]
pub struct IndexComputation {
    pub thresholds: Vec<f64>,
    pub policies: Vec<Policy>,
    pub crossings: Vec<Vec<f64>>,
    pub indices: Vec<f64>,
    pub indexable: bool,
    pub num_steps: usize,
}

impl IndexComputation {
    pub fn num_states(&self) -> usize {
        self.indices.len()
    }

    /// Policies shrink by one state per step and never grow back.
    pub fn strictly_nested(&self) -> bool {
        self.policies
            .windows(2)
            .all(|w| w[1].is_subset_of(&w[0]) && w[1].len() + 1 == w[0].len())
    }
}

struct CrossingMap<'a>(&'a [Vec<f64>]);

impl Serialize for CrossingMap<'_> {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (s, c) in self.0.iter().enumerate() {
            map.serialize_entry(&s.to_string(), c)?;
        }
        map.end()
    }
}

impl Serialize for IndexComputation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(6))?;
        map.serialize_entry("indexable", &self.indexable)?;
        map.serialize_entry("indices", &self.indices)?;
        map.serialize_entry("thresholds", &self.thresholds)?;
        map.serialize_entry("policies", &self.policies)?;
        map.serialize_entry("crossings", &CrossingMap(&self.crossings))?;
        map.serialize_entry("num_steps", &self.num_steps)?;
        map.end()
    }
}

#[derive(Deserialize)]
struct IndexComputationJson {
    indexable: bool,
    indices: Vec<f64>,
    thresholds: Vec<f64>,
    policies: Vec<Vec<usize>>,
    crossings: BTreeMap<String, Vec<f64>>,
    #[serde(default)]
    num_steps: Option<usize>,
}

impl<'de> Deserialize<'de> for IndexComputation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = IndexComputationJson::deserialize(deserializer)?;
        let n = raw.indices.len();
        let mut crossings = vec![Vec::new(); n];
        for (key, list) in raw.crossings {
            let s: usize = key.parse().map_err(D::Error::custom)?;
            if s >= n {
                return Err(D::Error::custom(format!("crossing state {s} out of range")));
            }
            crossings[s] = list;
        }
        let policies = raw
            .policies
            .iter()
            .map(|states| {
                if states.iter().any(|&s| s >= n) {
                    Err(D::Error::custom("policy state out of range"))
                } else {
                    Ok(Policy::from_states(n, states))
                }
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(IndexComputation {
            num_steps: raw.num_steps.unwrap_or(raw.thresholds.len()),
            thresholds: raw.thresholds,
            policies,
            crossings,
            indices: raw.indices,
            indexable: raw.indexable,
        })
    }
}

/// How the inverse system matrix follows each single-state toggle.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum InverseUpdate {
    /// Rank-1 updates, re-factorised every `S` updates or when degenerate.
    #[default]
    ShermanMorrison,
    /// Fresh factorisation on every iteration.
    Refactorize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct EwiscOptions {
    pub inverse_update: InverseUpdate,
}

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct EwiscStats {
    pub initial_factorization: Duration,
    /// Time spent in the sweep loop, after the first factorisation.
    pub sweep: Duration,
    pub iterations: usize,
    pub rank_one_updates: usize,
    pub refactorizations: usize,
}

/// Index computation with default options.
pub fn ewisc(arm: &Arm) -> Result<IndexComputation, IndexError> {
    ewisc_with(arm, &EwiscOptions::default()).map(|(c, _)| c)
}

/// First zero of `line` at or above `mu` (anywhere when `mu` is `None`).
fn first_zero(line: &AdvantageLine, mu: Option<f64>) -> Option<f64> {
    if line.slope.abs() < FLAT_SLOPE {
        let m = mu?;
        return (line.eval(m).abs() <= tolerance(m)).then_some(m);
    }
    let z = -line.intercept / line.slope;
    match mu {
        None => Some(z),
        Some(m) if z >= m - tolerance(m) => Some(z.max(m)),
        Some(_) => None,
    }
}

pub fn ewisc_with(
    arm: &Arm,
    options: &EwiscOptions,
) -> Result<(IndexComputation, EwiscStats), IndexError> {
    let s = arm.num_states();
    let gap = arm.transition_gap();
    let limit = iteration_limit(s);
    let mut stats = EwiscStats::default();

    let mut pi = Policy::full(s);
    let start = Instant::now();
    let mut inverse = linalg::inverse(system_matrix(arm, &pi))?;
    stats.initial_factorization = start.elapsed();
    let start = Instant::now();

    let mut mu: Option<f64> = None;
    let mut buff = vec![false; s];
    let mut thresholds = Vec::new();
    let mut policies = vec![pi.clone()];
    let mut crossings = vec![Vec::new(); s];
    let mut updates_since_factorization = 0;

    while !pi.is_empty() {
        if thresholds.len() >= limit {
            return Err(IndexError::IterationLimit(limit));
        }
        let lines = lines_from_inverse(arm, &gap, &pi, &inverse);
        let zeros: Vec<Option<f64>> = lines
            .iter()
            .enumerate()
            .map(|(i, l)| if buff[i] { None } else { first_zero(l, mu) })
            .collect();
        let z_min = zeros
            .iter()
            .flatten()
            .copied()
            .fold(f64::INFINITY, f64::min);
        if !z_min.is_finite() {
            return Err(IndexError::NoCrossing {
                mu: mu.unwrap_or(f64::NEG_INFINITY),
                remaining: pi.len(),
            });
        }
        // Smallest state index among the (near-)minimal zeros.
        let (sigma, z) = zeros
            .iter()
            .enumerate()
            .find_map(|(i, z)| z.filter(|&z| z <= z_min + tolerance(z_min)).map(|z| (i, z)))
            .expect("z_min is attained");

        match mu {
            Some(m) if (z - m).abs() <= tolerance(m) => buff[sigma] = true,
            _ => {
                buff.iter_mut().for_each(|b| *b = false);
                buff[sigma] = true;
            }
        }
        mu = Some(z);
        thresholds.push(z);
        crossings[sigma].push(z);

        let from = pi.action(sigma);
        pi.toggle(sigma);
        let to = pi.action(sigma);

        let refactor = options.inverse_update == InverseUpdate::Refactorize
            || updates_since_factorization >= s
            || {
                let q = row_change(arm, sigma, from, to);
                let mut e = DVector::zeros(s);
                e[sigma] = 1.0;
                match sherman_morrison_in_place(&mut inverse, &e, &q) {
                    Ok(()) => {
                        stats.rank_one_updates += 1;
                        updates_since_factorization += 1;
                        false
                    }
                    Err(IndexError::DegenerateUpdate(_)) => true,
                    Err(e) => return Err(e),
                }
            };
        if refactor && !pi.is_empty() {
            inverse = linalg::inverse(system_matrix(arm, &pi))?;
            stats.refactorizations += 1;
            updates_since_factorization = 0;
        }
        policies.push(pi.clone());
    }

    stats.sweep = start.elapsed();
    stats.iterations = thresholds.len();
    let indices = crossings
        .iter()
        .map(|c| c.iter().sum::<f64>() / c.len() as f64)
        .collect();
    let indexable = crossings.iter().all(|c| c.len() == 1);
    let computation = IndexComputation {
        num_steps: thresholds.len(),
        thresholds,
        policies,
        crossings,
        indices,
        indexable,
    };
    Ok((computation, stats))
}

/// Change of row `state` of the system matrix when its action goes from
/// `from` to `to`. Column 0 of the average-reward system holds the gain
/// coefficient and never changes.
fn row_change(arm: &Arm, state: usize, from: usize, to: usize) -> DVector<f64> {
    let s = arm.num_states();
    let (p_from, p_to) = (arm.transition(from), arm.transition(to));
    match arm.discount() {
        None => DVector::from_fn(s, |j, _| {
            if j == 0 {
                0.0
            } else {
                p_from[(state, j)] - p_to[(state, j)]
            }
        }),
        Some(beta) => DVector::from_fn(s, |j, _| beta * (p_from[(state, j)] - p_to[(state, j)])),
    }
}

/// Indexability verdict with the computed indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum Indexability {
    Indexable {
        indices: Vec<f64>,
    },
    NonIndexable {
        crossings: Vec<Vec<f64>>,
        indices: Vec<f64>,
    },
}

impl Indexability {
    pub fn is_indexable(&self) -> bool {
        matches!(self, Indexability::Indexable { .. })
    }

    pub fn indices(&self) -> &[f64] {
        match self {
            Indexability::Indexable { indices } | Indexability::NonIndexable { indices, .. } => {
                indices
            }
        }
    }
}

impl fmt::Display for Indexability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Indexability::Indexable { .. } => write!(f, "indexable"),
            Indexability::NonIndexable { .. } => write!(f, "non-indexable"),
        }
    }
}

impl From<&IndexComputation> for Indexability {
    fn from(c: &IndexComputation) -> Self {
        if c.indexable {
            Indexability::Indexable {
                indices: c.indices.clone(),
            }
        } else {
            Indexability::NonIndexable {
                crossings: c.crossings.clone(),
                indices: c.indices.clone(),
            }
        }
    }
}

pub fn classify_indexability(arm: &Arm) -> Result<Indexability, IndexError> {
    ewisc(arm).map(|c| Indexability::from(&c))
}
