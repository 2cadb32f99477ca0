//! Abstract observation model and the reward bounds it induces.
//!
//! The `M = C·K` observation samples of an action node are grouped into `C`
//! clusters of `K` consecutive samples. Within a cluster every member gets the
//! cluster-mean likelihood `Z̄(o|s) = (1/K) Σ_{k∈c} Z(o_k|s)`, so the expected
//! reward needs one evaluation per cluster (weighted by `K`) instead of one per
//! sample. The abstract expected entropy is never below the plain estimate and
//! exceeds it by at most `ln K`; the expected state reward is unchanged.

use crate::error::{Error, Result};
use crate::filter::{entropy_from_rows, likelihood_matrix, state_reward_from_rows, PredictedBelief};
use crate::pomdp::{compose_reward, ActionId, ObservationVec, PomdpModel, RewardSpec};
use crate::scalar::Scalar;

/// Order-based partition: sample `m` belongs to cluster `m / K`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterPartition {
    clusters: usize,
    cluster_size: usize,
}

impl ClusterPartition {
    pub fn new(clusters: usize, cluster_size: usize) -> Result<Self> {
        if clusters == 0 || cluster_size == 0 {
            return Err(Error::InvalidArgument("cluster count and size must be positive".into()));
        }
        Ok(Self {
            clusters,
            cluster_size,
        })
    }

    pub fn clusters(&self) -> usize {
        self.clusters
    }

    pub fn cluster_size(&self) -> usize {
        self.cluster_size
    }

    /// Total number of observations `C·K`.
    pub fn total(&self) -> usize {
        self.clusters * self.cluster_size
    }

    pub fn cluster_of(&self, m: usize) -> usize {
        m / self.cluster_size
    }

    pub fn members(&self, c: usize) -> std::ops::Range<usize> {
        c * self.cluster_size..(c + 1) * self.cluster_size
    }

    /// Observation index → cluster index.
    pub fn assignment(&self) -> Vec<usize> {
        (0..self.total()).map(|m| self.cluster_of(m)).collect()
    }
}

/// Cluster-uniform likelihoods over the propagated particles of one predicted belief.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractObsModel<T> {
    cluster_rows: Vec<Vec<T>>,
    partition: ClusterPartition,
}

impl<T: Scalar> AbstractObsModel<T> {
    pub fn partition(&self) -> &ClusterPartition {
        &self.partition
    }

    pub fn num_particles(&self) -> usize {
        self.cluster_rows.first().map_or(0, Vec::len)
    }

    /// `Z̄(o_m | s_i)`.
    pub fn likelihood(&self, m: usize, i: usize) -> T {
        self.cluster_rows[self.partition.cluster_of(m)][i]
    }

    /// The cluster row shared by every member of cluster `c`.
    pub fn cluster_row(&self, c: usize) -> &[T] {
        &self.cluster_rows[c]
    }

    /// The full `M × N` matrix with cluster rows repeated.
    pub fn matrix(&self) -> Vec<Vec<T>> {
        (0..self.partition.total())
            .map(|m| self.cluster_rows[self.partition.cluster_of(m)].clone())
            .collect()
    }

    fn weighted_rows(&self) -> impl Iterator<Item = (&[T], T)> {
        let k = T::from_count(self.partition.cluster_size);
        self.cluster_rows.iter().map(move |r| (r.as_slice(), k))
    }

    fn check_consistent(&self, bp: &PredictedBelief<T>) -> Result<()> {
        if self.num_particles() != bp.len() {
            return Err(Error::SizeMismatch {
                expected: bp.len(),
                actual: self.num_particles(),
            });
        }
        Ok(())
    }
}

pub fn build_abstract_model<T, M>(
    bp: &PredictedBelief<T>,
    obs: &[ObservationVec<T>],
    partition: ClusterPartition,
    model: &M,
) -> Result<AbstractObsModel<T>>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    if obs.len() != partition.total() {
        return Err(Error::SizeMismatch {
            expected: partition.total(),
            actual: obs.len(),
        });
    }
    let k = T::from_count(partition.cluster_size);
    let cluster_rows = (0..partition.clusters)
        .map(|c| {
            let members = &obs[partition.members(c)];
            bp.propagated()
                .iter()
                .map(|s| members.iter().fold(T::zero(), |acc, o| acc + model.observation_density(o, s)) / k)
                .collect()
        })
        .collect();
    Ok(AbstractObsModel {
        cluster_rows,
        partition,
    })
}

/// Abstract expected entropy: one Θ(N²) evaluation per cluster, weighted by `K`.
pub fn abstract_expected_entropy<T, M>(bp: &PredictedBelief<T>, amodel: &AbstractObsModel<T>, model: &M) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    amodel.check_consistent(bp)?;
    entropy_from_rows(bp, amodel.weighted_rows(), model)
}

/// Expected state reward under the abstract model; equal to the plain value.
pub fn abstract_expected_state_reward<T, M>(
    bp: &PredictedBelief<T>,
    amodel: &AbstractObsModel<T>,
    a: ActionId,
    model: &M,
) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    amodel.check_consistent(bp)?;
    state_reward_from_rows(bp, amodel.weighted_rows(), a, model)
}

/// Interval guaranteed to contain the unabstracted expected reward.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RewardBounds<T> {
    pub lb: T,
    pub ub: T,
    pub k: usize,
}

impl<T: Scalar> RewardBounds<T> {
    pub fn exact(value: T) -> Self {
        Self {
            lb: value,
            ub: value,
            k: 1,
        }
    }

    pub fn width(&self) -> T {
        self.ub - self.lb
    }

    pub fn contains(&self, value: T, slack: T) -> bool {
        value >= self.lb - slack && value <= self.ub + slack
    }
}

/// Bounds around an abstract expected reward. The abstract entropy
/// overestimates by at most `ln K`, so the bracket extends by `|w2| ln K` on the
/// side the entropy weight pushes towards.
pub fn reward_bounds<T: Scalar>(abstract_reward: T, k: usize, spec: &RewardSpec<T>) -> RewardBounds<T> {
    assert!(k >= 1, "cluster size must be positive");
    let log_k = T::from_count(k).ln();
    RewardBounds {
        lb: abstract_reward - spec.omega2.max(T::zero()) * log_k,
        ub: abstract_reward + (-spec.omega2).max(T::zero()) * log_k,
        k,
    }
}

/// Swaps the abstract entropy contribution of a stored reward for the exact one.
pub fn refine_reward<T: Scalar>(r_old: T, exact_exp_entropy: T, abstract_exp_entropy: T, spec: &RewardSpec<T>) -> T {
    r_old + spec.omega2 * (exact_exp_entropy - abstract_exp_entropy)
}

/// Both terms of an expected reward together with its composed value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedReward<T> {
    pub state: T,
    pub entropy: T,
    pub value: T,
}

/// Abstract expected reward of an action node.
pub fn abstract_expected_reward<T, M>(
    bp: &PredictedBelief<T>,
    amodel: &AbstractObsModel<T>,
    model: &M,
    spec: &RewardSpec<T>,
) -> Result<ExpectedReward<T>>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    let state = abstract_expected_state_reward(bp, amodel, bp.action(), model)?;
    let entropy = abstract_expected_entropy(bp, amodel, model)?;
    Ok(ExpectedReward {
        state,
        entropy,
        value: compose_reward(state, entropy, spec)?,
    })
}

/// Unabstracted expected reward over the given observation samples.
pub fn exact_expected_reward<T, M>(
    bp: &PredictedBelief<T>,
    obs: &[ObservationVec<T>],
    model: &M,
    spec: &RewardSpec<T>,
) -> Result<ExpectedReward<T>>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    if obs.is_empty() {
        return Err(Error::InvalidArgument("need at least one observation sample".into()));
    }
    let rows = likelihood_matrix(bp, obs, model);
    let rows = || rows.iter().map(|r| (r.as_slice(), T::one()));
    let state = state_reward_from_rows(bp, rows(), bp.action(), model)?;
    let entropy = entropy_from_rows(bp, rows(), model)?;
    Ok(ExpectedReward {
        state,
        entropy,
        value: compose_reward(state, entropy, spec)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_based_partition() {
        let p = ClusterPartition::new(3, 2).unwrap();
        assert_eq!(p.total(), 6);
        assert_eq!(p.assignment(), vec![0, 0, 1, 1, 2, 2]);
        assert_eq!(p.members(2), 4..6);
        assert!(ClusterPartition::new(0, 2).is_err());
    }

    #[test]
    fn bounds_examples() {
        let spec = RewardSpec::entropy_penalty();
        let b = reward_bounds(-3.0, 1, &spec);
        assert_eq!((b.lb, b.ub), (-3.0, -3.0));
        let b = reward_bounds(-3.0, 4, &spec);
        assert_eq!(b.lb, -3.0);
        assert!((b.ub - (-3.0 + 4f64.ln())).abs() < 1e-15);
        let pos = RewardSpec::new(1.0, 2.0).unwrap();
        let b = reward_bounds(1.0, 4, &pos);
        assert!((b.lb - (1.0 - 2.0 * 4f64.ln())).abs() < 1e-15);
        assert_eq!(b.ub, 1.0);
    }

    #[test]
    fn refine_reward_examples() {
        let spec = RewardSpec::entropy_penalty();
        assert_eq!(refine_reward(-1.25, 0.7, 0.7, &spec), -1.25);
        assert!((refine_reward(-1.0f64, 1.0, 1.2, &spec) - (-0.8)).abs() < 1e-15);
    }
}
