use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{MdpError, Policy};

/// Rows whose sum is within this distance of 1 are renormalised on input.
pub const ROW_REPAIR_TOLERANCE: f64 = 1e-9;
const NEGATIVE_TOLERANCE: f64 = -1e-15;

/// A two-action MDP: action 0 is passive, action 1 is active.
///
/// The discount factor is optional; without it the arm is evaluated under
/// the long-run average reward criterion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ArmJson", into = "ArmJson")]
pub struct Arm {
    p_passive: DMatrix<f64>,
    p_active: DMatrix<f64>,
    r_passive: DVector<f64>,
    r_active: DVector<f64>,
    discount: Option<f64>,
}

/// Canonical JSON interchange form of an [`Arm`] (row-major matrices).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmJson {
    pub num_states: usize,
    pub p_passive: Vec<Vec<f64>>,
    pub p_active: Vec<Vec<f64>>,
    pub r_passive: Vec<f64>,
    pub r_active: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub discount: Option<f64>,
}

impl Arm {
    /// Builds an arm after checking dimensions and stochasticity.
    ///
    /// Rows within [`ROW_REPAIR_TOLERANCE`] of summing to one are rescaled to
    /// sum to one; tiny negative entries (above `-1e-15`) are clamped to zero.
    pub fn new(
        p_passive: DMatrix<f64>,
        p_active: DMatrix<f64>,
        r_passive: DVector<f64>,
        r_active: DVector<f64>,
        discount: Option<f64>,
    ) -> Result<Self, MdpError> {
        let s = r_passive.len();
        if s == 0 {
            return Err(MdpError::DimensionMismatch("arm needs at least one state".into()));
        }
        if r_active.len() != s {
            return Err(MdpError::DimensionMismatch(format!(
                "r_active has length {}, expected {s}",
                r_active.len()
            )));
        }
        for (name, m) in [("p_passive", &p_passive), ("p_active", &p_active)] {
            if m.nrows() != s || m.ncols() != s {
                return Err(MdpError::DimensionMismatch(format!(
                    "{name} is {}x{}, expected {s}x{s}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        if r_passive.iter().chain(r_active.iter()).any(|x| !x.is_finite()) {
            return Err(MdpError::NonFinite("rewards"));
        }
        if let Some(beta) = discount {
            if !(beta > 0.0 && beta < 1.0) {
                return Err(MdpError::InvalidDiscount(beta));
            }
        }
        let p_passive = repair_stochastic("p_passive", p_passive)?;
        let p_active = repair_stochastic("p_active", p_active)?;
        Ok(Arm {
            p_passive,
            p_active,
            r_passive,
            r_active,
            discount,
        })
    }

    pub fn num_states(&self) -> usize {
        self.r_passive.len()
    }

    pub fn p_passive(&self) -> &DMatrix<f64> {
        &self.p_passive
    }

    pub fn p_active(&self) -> &DMatrix<f64> {
        &self.p_active
    }

    pub fn r_passive(&self) -> &DVector<f64> {
        &self.r_passive
    }

    pub fn r_active(&self) -> &DVector<f64> {
        &self.r_active
    }

    pub fn discount(&self) -> Option<f64> {
        self.discount
    }

    pub fn transition(&self, action: usize) -> &DMatrix<f64> {
        if action == 0 {
            &self.p_passive
        } else {
            &self.p_active
        }
    }

    pub fn reward(&self, state: usize, action: usize) -> f64 {
        if action == 0 {
            self.r_passive[state]
        } else {
            self.r_active[state]
        }
    }

    /// Same dynamics, with a different discount factor (or none).
    pub fn with_discount(&self, discount: Option<f64>) -> Result<Self, MdpError> {
        Arm::new(
            self.p_passive.clone(),
            self.p_active.clone(),
            self.r_passive.clone(),
            self.r_active.clone(),
            discount,
        )
    }

    /// Same dynamics, different rewards.
    pub fn with_rewards(
        &self,
        r_passive: DVector<f64>,
        r_active: DVector<f64>,
    ) -> Result<Self, MdpError> {
        Arm::new(
            self.p_passive.clone(),
            self.p_active.clone(),
            r_passive,
            r_active,
            self.discount,
        )
    }

    /// Transition matrix of the chain induced by `policy`.
    pub fn policy_transition(&self, policy: &Policy) -> DMatrix<f64> {
        let s = self.num_states();
        DMatrix::from_fn(s, s, |i, j| {
            if policy.contains(i) {
                self.p_active[(i, j)]
            } else {
                self.p_passive[(i, j)]
            }
        })
    }

    /// Reward vector induced by `policy` in the `lambda`-penalised arm.
    pub fn policy_reward(&self, policy: &Policy, lambda: f64) -> DVector<f64> {
        DVector::from_fn(self.num_states(), |i, _| {
            if policy.contains(i) {
                self.r_active[i] - lambda
            } else {
                self.r_passive[i]
            }
        })
    }

    /// `P^1 - P^0`.
    pub fn transition_gap(&self) -> DMatrix<f64> {
        &self.p_active - &self.p_passive
    }

    /// `max_a ||P^a - Q^a||_inf + max_a ||r^a - q^a||_inf`.
    pub fn distance(&self, other: &Arm) -> Result<f64, MdpError> {
        if self.num_states() != other.num_states() {
            return Err(MdpError::DimensionMismatch(
                "arms have different state counts".into(),
            ));
        }
        let p = matrix_inf_norm(&(&self.p_passive - &other.p_passive))
            .max(matrix_inf_norm(&(&self.p_active - &other.p_active)));
        let r = (&self.r_passive - &other.r_passive)
            .amax()
            .max((&self.r_active - &other.r_active).amax());
        Ok(p + r)
    }

    /// True when the passive action freezes the state and earns nothing.
    pub fn is_rested(&self) -> bool {
        let s = self.num_states();
        (0..s).all(|i| {
            self.r_passive[i] == 0.0
                && (0..s).all(|j| self.p_passive[(i, j)] == if i == j { 1.0 } else { 0.0 })
        })
    }
}

/// `max_i sum_j |m_ij|`.
pub fn matrix_inf_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

fn repair_stochastic(name: &'static str, mut m: DMatrix<f64>) -> Result<DMatrix<f64>, MdpError> {
    for i in 0..m.nrows() {
        let mut row = m.row_mut(i);
        if row.iter().any(|x| !x.is_finite()) {
            return Err(MdpError::NonFinite(name));
        }
        let min = row.iter().copied().fold(f64::INFINITY, f64::min);
        let sum: f64 = row.iter().sum();
        if min < NEGATIVE_TOLERANCE || (sum - 1.0).abs() > ROW_REPAIR_TOLERANCE {
            return Err(MdpError::NotStochastic {
                matrix: name,
                row: i,
                sum,
                min,
            });
        }
        row.iter_mut().for_each(|x| *x = x.max(0.0));
        let sum: f64 = row.iter().sum();
        if sum != 1.0 {
            row.iter_mut().for_each(|x| *x /= sum);
        }
    }
    Ok(m)
}

impl TryFrom<ArmJson> for Arm {
    type Error = MdpError;

    fn try_from(raw: ArmJson) -> Result<Self, MdpError> {
        let s = raw.num_states;
        let to_matrix = |name: &str, rows: &[Vec<f64>]| -> Result<DMatrix<f64>, MdpError> {
            if rows.len() != s || rows.iter().any(|r| r.len() != s) {
                return Err(MdpError::DimensionMismatch(format!(
                    "{name} must be {s}x{s}"
                )));
            }
            Ok(DMatrix::from_fn(s, s, |i, j| rows[i][j]))
        };
        let p_passive = to_matrix("p_passive", &raw.p_passive)?;
        let p_active = to_matrix("p_active", &raw.p_active)?;
        if raw.r_passive.len() != s || raw.r_active.len() != s {
            return Err(MdpError::DimensionMismatch(format!(
                "reward vectors must have length {s}"
            )));
        }
        Arm::new(
            p_passive,
            p_active,
            DVector::from_vec(raw.r_passive),
            DVector::from_vec(raw.r_active),
            raw.discount,
        )
    }
}

impl From<Arm> for ArmJson {
    fn from(arm: Arm) -> Self {
        let rows = |m: &DMatrix<f64>| -> Vec<Vec<f64>> {
            m.row_iter().map(|r| r.iter().copied().collect()).collect()
        };
        ArmJson {
            num_states: arm.num_states(),
            p_passive: rows(&arm.p_passive),
            p_active: rows(&arm.p_active),
            r_passive: arm.r_passive.iter().copied().collect(),
            r_active: arm.r_active.iter().copied().collect(),
            discount: arm.discount,
        }
    }
}
