use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::abstraction::ClusterPartition;
use crate::error::{Error, Result};
use crate::pomdp::RewardSpec;
use crate::scalar::Scalar;

/// How `Simulate` picks among the already expanded actions of a belief node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ActionSelection {
    /// Optimistic: highest upper bound, lowest index on ties.
    #[default]
    UpperBound,
    /// Fewest visits, lowest index on ties. Tree growth then never looks at
    /// rewards, so engines with different cluster sizes build identical trees.
    LeastVisited,
}

/// Double progressive widening parameters of the PFT-DPW baseline.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PftParams<T> {
    /// UCB exploration constant.
    pub c_ucb: T,
    pub k_o: T,
    pub alpha_o: T,
}

impl<T: Scalar> Default for PftParams<T> {
    fn default() -> Self {
        Self {
            c_ucb: T::one(),
            k_o: T::lit(4.0),
            alpha_o: T::lit(0.014),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig<T> {
    /// Simulate iterations per planning call.
    pub iterations: usize,
    pub depth: usize,
    /// Clusters per action node (`C`).
    pub clusters: usize,
    /// Observations per cluster (`K`); `1` disables abstraction.
    pub cluster_size: usize,
    /// Discount; `None` uses the model's own.
    pub gamma: Option<T>,
    pub spec: RewardSpec<T>,
    /// Wall-clock limit on the Simulate loop, checked between iterations.
    pub budget: Option<Duration>,
    /// Rollout on the first visit of an action node instead of descending.
    pub rollouts: bool,
    pub selection: ActionSelection,
    pub pft: PftParams<T>,
    /// Fresh observations tried when a sampled one is impossible under the belief.
    pub max_observation_retries: usize,
}

impl<T: Scalar> Default for PlannerConfig<T> {
    fn default() -> Self {
        Self {
            iterations: 1000,
            depth: 3,
            clusters: 4,
            cluster_size: 1,
            gamma: None,
            spec: RewardSpec::entropy_penalty(),
            budget: None,
            rollouts: true,
            selection: ActionSelection::default(),
            pft: PftParams::default(),
            max_observation_retries: 10,
        }
    }
}

impl<T: Scalar> PlannerConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 || self.depth == 0 || self.clusters == 0 || self.cluster_size == 0 {
            return Err(Error::InvalidConfig(
                "iterations, depth, clusters and cluster_size must all be at least 1".into(),
            ));
        }
        if let Some(g) = self.gamma {
            if !(g > T::zero() && g <= T::one()) {
                return Err(Error::InvalidConfig("discount must lie in (0, 1]".into()));
            }
        }
        self.spec.validate()
    }

    /// Observations sampled per action node, `C·K`.
    pub fn branching(&self) -> usize {
        self.clusters * self.cluster_size
    }

    pub fn partition(&self) -> Result<ClusterPartition> {
        ClusterPartition::new(self.clusters, self.cluster_size)
    }

    /// The unabstracted counterpart with the same observation branching:
    /// `C·K` clusters of one observation.
    pub fn unabstracted(&self) -> Self {
        Self {
            clusters: self.branching(),
            cluster_size: 1,
            ..self.clone()
        }
    }
}
