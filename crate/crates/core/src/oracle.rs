//! Reference evaluators used to check the estimators and planners.
//!
//! Everything here is written for clarity over speed: the entropy estimator is
//! transcribed loop by loop, and tree values come from a plain recursive
//! backup over an explicit sparse-sampling tree.

use std::sync::Arc;

use rand::Rng;

use crate::abstraction::ClusterPartition;
use crate::error::{Error, Result};
use crate::filter::{posterior, predict, sample_observation_set, ParticleBelief, PredictedBelief};
use crate::planner::BeliefNode;
use crate::pomdp::{compose_reward, ActionId, ObservationVec, PomdpModel, RewardSpec};
use crate::scalar::{log_floor, Scalar};

/// Expected entropy over an explicit likelihood matrix `z[m][i]`:
/// `−η Σ_m Σ_i z_mi q_i ln(z_mi Σ_j T(s_i|s'_j,a) q_j / Σ_k z_mk q_k)`
/// with `η = 1 / Σ_m Σ_i z_mi q_i`.
pub fn naive_entropy_from_matrix<T: Scalar, M: PomdpModel<T>>(bp: &PredictedBelief<T>, z: &[Vec<T>], model: &M) -> T {
    let q = bp.weights();
    let prev = bp.prior().states();
    let next = bp.propagated();
    let n = next.len();
    let mut eta_inv = T::zero();
    for row in z {
        for i in 0..n {
            eta_inv = eta_inv + row[i] * q[i];
        }
    }
    let mut sum = T::zero();
    for row in z {
        let mut p_m = T::zero();
        for k in 0..n {
            p_m = p_m + row[k] * q[k];
        }
        if p_m == T::zero() {
            continue;
        }
        for i in 0..n {
            if row[i] * q[i] == T::zero() {
                continue;
            }
            let mut tau = T::zero();
            for j in 0..n {
                tau = tau + model.transition_density(&next[i], &prev[j], bp.action()) * q[j];
            }
            let arg = (row[i] * tau / p_m).max(log_floor());
            sum = sum + row[i] * q[i] * arg.ln();
        }
    }
    -(sum / eta_inv)
}

/// Expected state reward `η Σ_m Σ_i z_mi q_i r(s_i, a)` over an explicit matrix.
pub fn naive_state_reward_from_matrix<T: Scalar, M: PomdpModel<T>>(bp: &PredictedBelief<T>, z: &[Vec<T>], model: &M) -> T {
    let q = bp.weights();
    let next = bp.propagated();
    let mut num = T::zero();
    let mut den = T::zero();
    for row in z {
        for i in 0..next.len() {
            num = num + row[i] * q[i] * model.state_reward(&next[i], bp.action());
            den = den + row[i] * q[i];
        }
    }
    num / den
}

pub fn naive_likelihoods<T: Scalar, M: PomdpModel<T>>(bp: &PredictedBelief<T>, obs: &[ObservationVec<T>], model: &M) -> Vec<Vec<T>> {
    let mut z = Vec::with_capacity(obs.len());
    for o in obs {
        let mut row = Vec::with_capacity(bp.len());
        for s in bp.propagated() {
            row.push(model.observation_density(o, s));
        }
        z.push(row);
    }
    z
}

/// Full `M`-row abstract likelihood matrix: every sample's row is replaced by
/// the mean row of its cluster.
pub fn naive_abstract_likelihoods<T: Scalar, M: PomdpModel<T>>(
    bp: &PredictedBelief<T>,
    obs: &[ObservationVec<T>],
    partition: ClusterPartition,
    model: &M,
) -> Vec<Vec<T>> {
    let z = naive_likelihoods(bp, obs, model);
    let k = partition.cluster_size();
    let mut out = Vec::with_capacity(z.len());
    for m in 0..z.len() {
        let c = m / k;
        let mut row = vec![T::zero(); bp.len()];
        for member in &z[c * k..(c + 1) * k] {
            for (acc, v) in row.iter_mut().zip(member) {
                *acc = *acc + *v;
            }
        }
        for v in &mut row {
            *v = *v / T::from_count(k);
        }
        out.push(row);
    }
    out
}

pub fn naive_expected_entropy<T: Scalar, M: PomdpModel<T>>(bp: &PredictedBelief<T>, obs: &[ObservationVec<T>], model: &M) -> T {
    naive_entropy_from_matrix(bp, &naive_likelihoods(bp, obs, model), model)
}

pub fn naive_abstract_expected_entropy<T: Scalar, M: PomdpModel<T>>(
    bp: &PredictedBelief<T>,
    obs: &[ObservationVec<T>],
    partition: ClusterPartition,
    model: &M,
) -> T {
    naive_entropy_from_matrix(bp, &naive_abstract_likelihoods(bp, obs, partition, model), model)
}

/// Belief node of an explicit sparse-sampling tree.
#[derive(Debug, Clone)]
pub struct SampledBelief<T> {
    pub belief: Arc<ParticleBelief<T>>,
    /// One entry per action, indexed by action id; empty at the leaves.
    pub actions: Vec<SampledAction<T>>,
}

#[derive(Debug, Clone)]
pub struct SampledAction<T> {
    pub predicted: PredictedBelief<T>,
    /// Observation samples the reward is estimated from.
    pub observations: Vec<ObservationVec<T>>,
    pub children: Vec<SampledBelief<T>>,
}

impl<T: Scalar> SampledBelief<T> {
    /// Full sparse-sampling tree: every action, `m` observation samples per
    /// action node, one posterior child per sample, down to `depth`.
    pub fn generate<M: PomdpModel<T>, R: Rng + ?Sized>(
        model: &M,
        belief: Arc<ParticleBelief<T>>,
        depth: usize,
        m: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut actions = Vec::new();
        if depth > 0 {
            for a in model.actions() {
                let predicted = predict(&belief, a, model, rng);
                let observations = sample_observation_set(&predicted, m, model, rng)?;
                let mut children = Vec::with_capacity(m);
                for o in &observations {
                    let post = posterior(&predicted, o, model)?;
                    children.push(Self::generate(model, Arc::new(post), depth - 1, m, rng)?);
                }
                actions.push(SampledAction {
                    predicted,
                    observations,
                    children,
                });
            }
        }
        Ok(Self { belief, actions })
    }

    /// Copies the samples of a planner tree. Fails unless every expanded node
    /// has all actions and all observation children.
    pub fn from_planner(node: &BeliefNode<T>) -> Result<Self> {
        let mut actions = Vec::with_capacity(node.actions().len());
        for anode in node.actions() {
            if !anode.pending_observations().is_empty() {
                return Err(Error::InvalidArgument("planner tree is not exhaustive".into()));
            }
            let children = anode.children().iter().map(Self::from_planner).collect::<Result<Vec<_>>>()?;
            actions.push(SampledAction {
                predicted: anode.predicted().clone(),
                observations: anode.observations().to_vec(),
                children,
            });
        }
        Ok(Self {
            belief: Arc::clone(node.belief()),
            actions,
        })
    }

    pub fn count_belief_nodes(&self) -> usize {
        1 + self
            .actions
            .iter()
            .flat_map(|a| &a.children)
            .map(Self::count_belief_nodes)
            .sum::<usize>()
    }
}

/// Root value and per-action values of a sampled tree.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeValue<T> {
    pub value: T,
    pub q: Vec<T>,
}

fn tree_value<T, M, F>(node: &SampledBelief<T>, model: &M, gamma: T, reward: &F) -> TreeValue<T>
where
    T: Scalar,
    M: PomdpModel<T>,
    F: Fn(&SampledAction<T>) -> T,
{
    if node.actions.is_empty() {
        return TreeValue {
            value: T::zero(),
            q: Vec::new(),
        };
    }
    let q: Vec<T> = node
        .actions
        .iter()
        .map(|a| {
            let mut future = T::zero();
            for child in &a.children {
                future = future + tree_value(child, model, gamma, reward).value;
            }
            if !a.children.is_empty() {
                future = future / T::from_count(a.children.len());
            }
            reward(a) + gamma * future
        })
        .collect();
    let value = q.iter().copied().fold(T::neg_infinity(), T::max);
    TreeValue { value, q }
}

fn composed<T: Scalar>(state: T, entropy: T, spec: &RewardSpec<T>) -> T {
    compose_reward(state, entropy, spec).expect("finite estimator terms")
}

/// Sparse-sampling value with exact (unabstracted) rewards.
pub fn exact_tree_value<T: Scalar, M: PomdpModel<T>>(
    tree: &SampledBelief<T>,
    model: &M,
    spec: &RewardSpec<T>,
    gamma: T,
) -> TreeValue<T> {
    tree_value(tree, model, gamma, &|a: &SampledAction<T>| {
        let z = naive_likelihoods(&a.predicted, &a.observations, model);
        let state = naive_state_reward_from_matrix(&a.predicted, &z, model);
        composed(state, naive_entropy_from_matrix(&a.predicted, &z, model), spec)
    })
}

/// Sparse-sampling value with every reward replaced by its abstract counterpart.
pub fn abstract_tree_value<T: Scalar, M: PomdpModel<T>>(
    tree: &SampledBelief<T>,
    model: &M,
    spec: &RewardSpec<T>,
    gamma: T,
    cluster_size: usize,
) -> Result<TreeValue<T>> {
    let mut bad = None;
    tree.walk_actions(&mut |a| {
        if a.observations.len() % cluster_size != 0 {
            bad = Some(a.observations.len());
        }
    });
    if let Some(actual) = bad {
        return Err(Error::InvalidArgument(format!(
            "{actual} samples cannot be split into clusters of {cluster_size}"
        )));
    }
    Ok(tree_value(tree, model, gamma, &|a: &SampledAction<T>| {
        let partition = ClusterPartition::new(a.observations.len() / cluster_size, cluster_size)
            .expect("cluster counts checked above");
        let z = naive_abstract_likelihoods(&a.predicted, &a.observations, partition, model);
        let state = naive_state_reward_from_matrix(&a.predicted, &z, model);
        composed(state, naive_entropy_from_matrix(&a.predicted, &z, model), spec)
    }))
}

impl<T> SampledBelief<T> {
    fn walk_actions(&self, f: &mut impl FnMut(&SampledAction<T>)) {
        for a in &self.actions {
            f(a);
            for c in &a.children {
                c.walk_actions(f);
            }
        }
    }
}

/// `ActionId` of the best action under `value`, lowest index on ties.
pub fn best_action<T: Scalar>(value: &TreeValue<T>) -> Option<ActionId> {
    crate::scalar::argmax_by_key(value.q.iter().copied()).map(ActionId)
}
