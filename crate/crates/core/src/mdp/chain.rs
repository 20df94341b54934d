use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{linalg, Arm, MdpError, Policy};

/// Largest state count for which every policy is checked for unichainness.
pub const EXACT_UNICHAIN_MAX_STATES: usize = 12;
/// Number of random policies checked above [`EXACT_UNICHAIN_MAX_STATES`].
pub const SAMPLED_POLICIES: usize = 256;

fn support_graph(transition: &DMatrix<f64>) -> DiGraph<(), ()> {
    let n = transition.nrows();
    let mut g = DiGraph::with_capacity(n, n * n);
    let nodes: Vec<_> = (0..n).map(|_| g.add_node(())).collect();
    for i in 0..n {
        for j in 0..n {
            if transition[(i, j)] > 0.0 {
                g.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    g
}

/// Closed communicating classes of the chain, each sorted, in increasing
/// order of their smallest state.
pub fn recurrent_classes(transition: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let g = support_graph(transition);
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&g)
        .into_iter()
        .map(|c| {
            let mut c: Vec<usize> = c.into_iter().map(|n| n.index()).collect();
            c.sort_unstable();
            c
        })
        .filter(|class| {
            class.iter().all(|&i| {
                (0..transition.ncols())
                    .all(|j| transition[(i, j)] <= 0.0 || class.binary_search(&j).is_ok())
            })
        })
        .collect();
    classes.sort_by_key(|c| c[0]);
    classes
}

pub fn is_unichain(transition: &DMatrix<f64>) -> bool {
    recurrent_classes(transition).len() == 1
}

pub fn is_strongly_connected(transition: &DMatrix<f64>) -> bool {
    tarjan_scc(&support_graph(transition)).len() == 1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub stochastic: bool,
    /// The uniform-exploration chain `(P^0 + P^1) / 2` is irreducible.
    pub communicating: bool,
    pub unichain_all_policies: bool,
    /// False when unichainness was checked on sampled policies only.
    pub unichain_exact: bool,
}

/// Structural checks on an arm. Shape and stochasticity are enforced by
/// [`Arm::new`], so `stochastic` re-verifies the row sums only.
pub fn validate_arm(arm: &Arm) -> ValidationReport {
    let s = arm.num_states();
    let stochastic = [arm.p_passive(), arm.p_active()].iter().all(|m| {
        m.row_iter()
            .all(|r| (r.sum() - 1.0).abs() <= 1e-12 && r.iter().all(|&x| x >= 0.0))
    });
    let exploration = (arm.p_passive() + arm.p_active()) * 0.5;
    let communicating = is_strongly_connected(&exploration);
    let unichain_exact = s <= EXACT_UNICHAIN_MAX_STATES;
    let unichain_all_policies = if unichain_exact {
        (0..1u64 << s).all(|m| is_unichain(&arm.policy_transition(&Policy::from_mask(s, m))))
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        (0..SAMPLED_POLICIES).all(|_| {
            let mut pi = Policy::empty(s);
            for i in 0..s {
                if rng.random::<bool>() {
                    pi.toggle(i);
                }
            }
            is_unichain(&arm.policy_transition(&pi))
        })
    };
    ValidationReport {
        stochastic,
        communicating,
        unichain_all_policies,
        unichain_exact,
    }
}

/// Largest expected hitting time from any state into any state of the
/// unique recurrent class, with `tau(s, s) = 0`.
pub fn diameter(transition: &DMatrix<f64>) -> Result<f64, MdpError> {
    let classes = recurrent_classes(transition);
    if classes.len() != 1 {
        return Err(MdpError::NotUnichain(classes.len()));
    }
    let n = transition.nrows();
    let mut worst: f64 = 0.0;
    for &target in &classes[0] {
        // Unknowns are the hitting times of every state except the target.
        let others: Vec<usize> = (0..n).filter(|&i| i != target).collect();
        if others.is_empty() {
            continue;
        }
        let m = others.len();
        let a = DMatrix::from_fn(m, m, |i, j| {
            (i == j) as u8 as f64 - transition[(others[i], others[j])]
        });
        let h = linalg::solve(a, &DVector::from_element(m, 1.0))?;
        worst = worst.max(h.max());
    }
    Ok(worst)
}

/// Stationary distribution of a unichain chain.
pub fn stationary_distribution(transition: &DMatrix<f64>) -> Result<DVector<f64>, MdpError> {
    let n = transition.nrows();
    // pi^T (I - P) = 0 with the last equation replaced by sum(pi) = 1.
    let mut a = (DMatrix::identity(n, n) - transition).transpose();
    a.row_mut(n - 1).fill(1.0);
    let mut b = DVector::zeros(n);
    b[n - 1] = 1.0;
    linalg::solve(a, &b)
}
