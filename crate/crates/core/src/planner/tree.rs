//! Nodes of the FSSS / AI-FSSS search tree.

use std::sync::Arc;

use crate::abstraction::{AbstractObsModel, ExpectedReward, RewardBounds};
use crate::filter::{ParticleBelief, PredictedBelief};
use crate::pomdp::{ActionId, ObservationVec};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct BeliefNode<T> {
    pub(crate) belief: Arc<ParticleBelief<T>>,
    /// Observation that produced this posterior; `None` at the root.
    pub(crate) observation: Option<ObservationVec<T>>,
    pub(crate) visits: usize,
    pub(crate) lower: T,
    pub(crate) upper: T,
    /// Expanded actions; `actions[i]` holds `ActionId(i)`.
    pub(crate) actions: Vec<ActionNode<T>>,
    /// Remaining search depth below this node.
    pub(crate) depth: usize,
    pub(crate) subtree_exact: bool,
}

#[derive(Debug, Clone)]
pub struct ActionNode<T> {
    pub(crate) action: ActionId,
    pub(crate) predicted: PredictedBelief<T>,
    pub(crate) visits: usize,
    pub(crate) lower: T,
    pub(crate) upper: T,
    pub(crate) bounds: RewardBounds<T>,
    /// Abstract reward while `is_abstract`, the exact one afterwards.
    pub(crate) reward: ExpectedReward<T>,
    /// All `C·K` samples drawn at expansion; children consume them in order.
    pub(crate) observations: Vec<ObservationVec<T>>,
    pub(crate) next_pending: usize,
    pub(crate) children: Vec<BeliefNode<T>>,
    pub(crate) is_abstract: bool,
    pub(crate) amodel: Option<AbstractObsModel<T>>,
    pub(crate) rollout: Option<T>,
    pub(crate) subtree_exact: bool,
}

impl<T: Scalar> BeliefNode<T> {
    pub(crate) fn new(belief: Arc<ParticleBelief<T>>, observation: Option<ObservationVec<T>>, depth: usize) -> Self {
        Self {
            belief,
            observation,
            visits: 0,
            lower: T::zero(),
            upper: T::zero(),
            actions: Vec::new(),
            depth,
            subtree_exact: true,
        }
    }

    pub fn belief(&self) -> &Arc<ParticleBelief<T>> {
        &self.belief
    }

    pub fn observation(&self) -> Option<&ObservationVec<T>> {
        self.observation.as_ref()
    }

    pub fn visits(&self) -> usize {
        self.visits
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    pub fn gap(&self) -> T {
        self.upper - self.lower
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn actions(&self) -> &[ActionNode<T>] {
        &self.actions
    }

    /// No abstract reward remains anywhere below this node.
    pub fn is_exact(&self) -> bool {
        self.subtree_exact
    }

    /// `LB(b) = max_a LB(ba)`, `UB(b) = max_a UB(ba)` over expanded actions.
    pub(crate) fn update_bounds(&mut self) {
        if self.actions.is_empty() {
            return;
        }
        self.lower = self.actions.iter().map(|a| a.lower).fold(T::neg_infinity(), T::max);
        self.upper = self.actions.iter().map(|a| a.upper).fold(T::neg_infinity(), T::max);
        self.subtree_exact = self.actions.iter().all(|a| a.subtree_exact);
    }

    pub fn count_belief_nodes(&self) -> usize {
        1 + self
            .actions
            .iter()
            .flat_map(|a| a.children.iter())
            .map(BeliefNode::count_belief_nodes)
            .sum::<usize>()
    }

    pub fn count_action_nodes(&self) -> usize {
        self.actions
            .iter()
            .map(|a| 1 + a.children.iter().map(BeliefNode::count_action_nodes).sum::<usize>())
            .sum()
    }

    /// Visits every belief node, parents before children.
    pub fn walk(&self, f: &mut impl FnMut(&BeliefNode<T>)) {
        f(self);
        for a in &self.actions {
            for c in &a.children {
                c.walk(f);
            }
        }
    }
}

impl<T: Scalar> ActionNode<T> {
    pub fn action(&self) -> ActionId {
        self.action
    }

    pub fn predicted(&self) -> &PredictedBelief<T> {
        &self.predicted
    }

    pub fn visits(&self) -> usize {
        self.visits
    }

    pub fn lower(&self) -> T {
        self.lower
    }

    pub fn upper(&self) -> T {
        self.upper
    }

    pub fn gap(&self) -> T {
        self.upper - self.lower
    }

    pub fn reward_bounds(&self) -> RewardBounds<T> {
        self.bounds
    }

    pub fn reward(&self) -> ExpectedReward<T> {
        self.reward
    }

    pub fn observations(&self) -> &[ObservationVec<T>] {
        &self.observations
    }

    pub fn pending_observations(&self) -> &[ObservationVec<T>] {
        &self.observations[self.next_pending..]
    }

    pub fn children(&self) -> &[BeliefNode<T>] {
        &self.children
    }

    pub fn is_abstract(&self) -> bool {
        self.is_abstract
    }

    pub fn abstract_model(&self) -> Option<&AbstractObsModel<T>> {
        self.amodel.as_ref()
    }

    pub fn rollout_value(&self) -> Option<T> {
        self.rollout
    }

    pub fn is_exact(&self) -> bool {
        self.subtree_exact
    }

    /// Reward bracket plus the discounted mean of the children's bounds (or
    /// the rollout estimate while no child exists yet).
    pub(crate) fn update_bounds(&mut self, gamma: T) {
        let (lo, hi) = if self.children.is_empty() {
            let v = self.rollout.unwrap_or_else(T::zero);
            (v, v)
        } else {
            let n = T::from_count(self.children.len());
            let lo = self.children.iter().fold(T::zero(), |acc, c| acc + c.lower) / n;
            let hi = self.children.iter().fold(T::zero(), |acc, c| acc + c.upper) / n;
            (lo, hi)
        };
        self.lower = self.bounds.lb + gamma * lo;
        self.upper = self.bounds.ub + gamma * hi;
        self.subtree_exact = !self.is_abstract && self.children.iter().all(|c| c.subtree_exact);
    }
}
