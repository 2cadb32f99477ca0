//! Forward-search sparse sampling over beliefs with abstracted rewards
//! (AI-FSSS), plus the bound refinement that recovers the unabstracted choice.
//!
//! With `cluster_size = 1` the same engine is plain FSSS with information
//! rewards.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use super::config::{ActionSelection, PlannerConfig};
use super::rollout::rollout_from_belief;
use super::tree::{ActionNode, BeliefNode};
use crate::abstraction::{
    abstract_expected_reward, build_abstract_model, exact_expected_reward, reward_bounds, ClusterPartition,
    RewardBounds,
};
use crate::error::{Error, Result};
use crate::filter::{posterior, predict, sample_observation_set, ParticleBelief, PredictedBelief};
use crate::pomdp::{ActionId, ObservationVec, PomdpModel};
use crate::scalar::{argmax_by_key, argmin_by_key, Scalar};

/// Engine configuration bound to a model.
#[derive(Debug)]
pub struct Fsss<'m, T, M> {
    cfg: PlannerConfig<T>,
    model: &'m M,
    partition: ClusterPartition,
    gamma: T,
}

impl<T: Clone, M> Clone for Fsss<'_, T, M> {
    fn clone(&self) -> Self {
        Self {
            cfg: self.cfg.clone(),
            model: self.model,
            partition: self.partition,
            gamma: self.gamma.clone(),
        }
    }
}

/// A built search tree together with the settings that produced it.
#[derive(Debug)]
pub struct SearchTree<'m, T, M> {
    engine: Fsss<'m, T, M>,
    root: BeliefNode<T>,
    iterations: usize,
    refine_calls: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutcome<T> {
    pub action: ActionId,
    pub iterations: usize,
    pub refine_calls: usize,
    /// Root `UB − LB` after bounds adaptation.
    pub root_gap: T,
    pub root_lower: T,
    pub root_upper: T,
}

impl<'m, T: Scalar, M: PomdpModel<T>> Fsss<'m, T, M> {
    pub fn new(cfg: PlannerConfig<T>, model: &'m M) -> Result<Self> {
        cfg.validate()?;
        let partition = cfg.partition()?;
        let gamma = cfg.gamma.unwrap_or_else(|| model.discount());
        Ok(Self {
            cfg,
            model,
            partition,
            gamma,
        })
    }

    pub fn config(&self) -> &PlannerConfig<T> {
        &self.cfg
    }

    /// Runs the Simulate loop from `root` (iteration count and wall-clock
    /// budget permitting, at least one iteration) without adapting bounds.
    pub fn build<R: Rng + ?Sized>(&self, root: Arc<ParticleBelief<T>>, rng: &mut R) -> Result<SearchTree<'m, T, M>> {
        let started = Instant::now();
        let mut node = BeliefNode::new(root, None, self.cfg.depth);
        let mut iterations = 0;
        while iterations < self.cfg.iterations {
            if iterations > 0 {
                if let Some(budget) = self.cfg.budget {
                    if started.elapsed() >= budget {
                        break;
                    }
                }
            }
            self.simulate(&mut node, self.cfg.depth, rng)?;
            iterations += 1;
        }
        Ok(SearchTree {
            engine: self.clone(),
            root: node,
            iterations,
            refine_calls: 0,
        })
    }

    /// Builds the tree, adapts bounds and returns the chosen root action.
    pub fn solve<R: Rng + ?Sized>(&self, root: Arc<ParticleBelief<T>>, rng: &mut R) -> Result<SolveOutcome<T>> {
        let mut tree = self.build(root, rng)?;
        let action = tree.adapt_bounds()?;
        Ok(tree.outcome(action))
    }

    /// Next untried action (enumeration order) and its `C·K` observation samples.
    pub fn gen<R: Rng + ?Sized>(
        &self,
        node: &BeliefNode<T>,
        rng: &mut R,
    ) -> Result<(ActionId, PredictedBelief<T>, Vec<ObservationVec<T>>)> {
        let next = node.actions.len();
        assert!(next < self.model.num_actions(), "gen called on a fully expanded node");
        let a = ActionId(next);
        let predicted = predict(&node.belief, a, self.model, rng);
        let obs = sample_observation_set(&predicted, self.partition.total(), self.model, rng)?;
        Ok((a, predicted, obs))
    }

    fn expand<R: Rng + ?Sized>(&self, node: &BeliefNode<T>, rng: &mut R) -> Result<ActionNode<T>> {
        let (action, predicted, observations) = self.gen(node, rng)?;
        let amodel = build_abstract_model(&predicted, &observations, self.partition, self.model)?;
        let reward = abstract_expected_reward(&predicted, &amodel, self.model, &self.cfg.spec)?;
        let k = self.partition.cluster_size();
        let bounds = reward_bounds(reward.value, k, &self.cfg.spec);
        let is_abstract = k > 1;
        Ok(ActionNode {
            action,
            predicted,
            visits: 0,
            lower: bounds.lb,
            upper: bounds.ub,
            bounds,
            reward,
            observations,
            next_pending: 0,
            children: Vec::new(),
            is_abstract,
            amodel: is_abstract.then_some(amodel),
            rollout: None,
            subtree_exact: !is_abstract,
        })
    }

    fn select(&self, node: &BeliefNode<T>) -> usize {
        let picked = match self.cfg.selection {
            ActionSelection::UpperBound => argmax_by_key(node.actions.iter().map(|a| a.upper)),
            ActionSelection::LeastVisited => argmin_by_key(node.actions.iter().map(|a| a.visits)),
        };
        picked.expect("select called on a node without actions")
    }

    /// Posterior for `o`, retrying with fresh samples when `o` is impossible
    /// under every particle.
    fn child_posterior<R: Rng + ?Sized>(
        &self,
        predicted: &PredictedBelief<T>,
        mut o: ObservationVec<T>,
        rng: &mut R,
    ) -> Result<(ParticleBelief<T>, ObservationVec<T>)> {
        let mut attempt = 0;
        loop {
            match posterior(predicted, &o, self.model) {
                Ok(b) => return Ok((b, o)),
                Err(Error::DegenerateBelief(_)) if attempt < self.cfg.max_observation_retries => {
                    attempt += 1;
                    o = sample_observation_set(predicted, 1, self.model, rng)?.remove(0);
                }
                Err(e) => return Err(e),
            }
        }
    }

    /// One Simulate pass; returns the node's `(LB, UB)`.
    pub(crate) fn simulate<R: Rng + ?Sized>(&self, node: &mut BeliefNode<T>, d: usize, rng: &mut R) -> Result<(T, T)> {
        if d == 0 {
            return Ok((T::zero(), T::zero()));
        }
        let idx = if node.actions.len() < self.model.num_actions() {
            let anode = self.expand(node, rng)?;
            node.actions.push(anode);
            node.actions.len() - 1
        } else {
            self.select(node)
        };
        let anode = &mut node.actions[idx];
        if anode.visits == 0 && self.cfg.rollouts {
            let (b, _) = self.child_posterior(&anode.predicted, anode.observations[0].clone(), rng)?;
            let v = rollout_from_belief(Arc::new(b), d - 1, self.model, &self.cfg, self.gamma, rng)?;
            anode.rollout = Some(v);
        } else if anode.next_pending < anode.observations.len() {
            let o = anode.observations[anode.next_pending].clone();
            anode.next_pending += 1;
            let (b, o) = self.child_posterior(&anode.predicted, o, rng)?;
            anode.children.push(BeliefNode::new(Arc::new(b), Some(o), d - 1));
            let child = anode.children.last_mut().expect("just pushed");
            self.simulate(child, d - 1, rng)?;
        } else {
            let ci = argmin_by_key(anode.children.iter().map(|c| c.visits)).expect("saturated node has children");
            self.simulate(&mut anode.children[ci], d - 1, rng)?;
        }
        anode.update_bounds(self.gamma);
        anode.visits += 1;
        node.visits += 1;
        node.update_bounds();
        Ok((node.lower, node.upper))
    }

    /// Replaces an abstract reward by the exact one over the stored samples.
    fn refine_reward_of(&self, anode: &mut ActionNode<T>) -> Result<()> {
        // The exact reward is recomputed from scratch rather than patched
        // incrementally, so a refined node carries exactly the value an
        // unabstracted engine computes for the same samples.
        let exact = exact_expected_reward(&anode.predicted, &anode.observations, self.model, &self.cfg.spec)?;
        anode.reward = exact;
        anode.bounds = RewardBounds::exact(exact.value);
        anode.is_abstract = false;
        anode.amodel = None;
        Ok(())
    }

    fn refine_action(&self, anode: &mut ActionNode<T>, d: usize) -> Result<()> {
        if d == 0 {
            return Ok(());
        }
        if anode.is_abstract {
            self.refine_reward_of(anode)?;
        }
        let candidate = argmax_by_key(
            anode
                .children
                .iter()
                .map(|c| if c.subtree_exact { T::neg_infinity() } else { c.gap() }),
        );
        if let Some(ci) = candidate.filter(|&ci| !anode.children[ci].subtree_exact) {
            self.refine_belief(&mut anode.children[ci], d - 1)?;
        }
        anode.update_bounds(self.gamma);
        Ok(())
    }

    fn refine_belief(&self, node: &mut BeliefNode<T>, d: usize) -> Result<()> {
        if d == 0 || node.actions.is_empty() {
            return Ok(());
        }
        let candidate = argmax_by_key(
            node.actions
                .iter()
                .map(|a| if a.subtree_exact { T::neg_infinity() } else { a.gap() }),
        );
        if let Some(ai) = candidate.filter(|&ai| !node.actions[ai].subtree_exact) {
            self.refine_action(&mut node.actions[ai], d)?;
        }
        node.update_bounds();
        Ok(())
    }

    fn refine_all_action(&self, anode: &mut ActionNode<T>, d: usize) -> Result<()> {
        if anode.is_abstract {
            self.refine_reward_of(anode)?;
        }
        for child in &mut anode.children {
            self.refine_all_belief(child, d - 1)?;
        }
        anode.update_bounds(self.gamma);
        Ok(())
    }

    fn refine_all_belief(&self, node: &mut BeliefNode<T>, d: usize) -> Result<()> {
        for anode in &mut node.actions {
            self.refine_all_action(anode, d)?;
        }
        node.update_bounds();
        Ok(())
    }
}

impl<'m, T: Scalar, M: PomdpModel<T>> SearchTree<'m, T, M> {
    pub fn root(&self) -> &BeliefNode<T> {
        &self.root
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    pub fn refine_calls(&self) -> usize {
        self.refine_calls
    }

    /// Runs further Simulate iterations on the existing tree.
    pub fn extend<R: Rng + ?Sized>(&mut self, iterations: usize, rng: &mut R) -> Result<()> {
        for _ in 0..iterations {
            self.engine.simulate(&mut self.root, self.engine.cfg.depth, rng)?;
            self.iterations += 1;
        }
        Ok(())
    }

    /// Current root choice: highest lower bound, lowest index on ties.
    pub fn best_lower(&self) -> Option<ActionId> {
        argmax_by_key(self.root.actions.iter().map(|a| a.lower)).map(|i| self.root.actions[i].action)
    }

    /// An action other than `best` whose upper bound still reaches `best`'s
    /// lower bound (strictly above it for higher indices, at or above it for
    /// lower ones, matching lowest-index tie-breaking). The one with the
    /// highest upper bound is returned.
    fn challenger(&self, best: usize) -> Option<usize> {
        let lb = self.root.actions[best].lower;
        let overlapping = |i: usize, a: &ActionNode<T>| i != best && (a.upper > lb || (i < best && a.upper >= lb));
        let mut pick: Option<usize> = None;
        for (i, a) in self.root.actions.iter().enumerate() {
            if overlapping(i, a) && pick.is_none_or(|p| a.upper > self.root.actions[p].upper) {
                pick = Some(i);
            }
        }
        pick
    }

    /// Refines along one root action's most uncertain path.
    pub fn refine(&mut self, action: ActionId) -> Result<()> {
        let d = self.engine.cfg.depth;
        let anode = self
            .root
            .actions
            .get_mut(action.0)
            .ok_or_else(|| Error::InvalidArgument(format!("{action} not expanded")))?;
        self.engine.refine_action(anode, d)?;
        self.root.update_bounds();
        self.refine_calls += 1;
        Ok(())
    }

    /// Refines until the best lower bound dominates every other action's
    /// upper bound, then returns that action.
    pub fn adapt_bounds(&mut self) -> Result<ActionId> {
        loop {
            let best = argmax_by_key(self.root.actions.iter().map(|a| a.lower))
                .ok_or_else(|| Error::InternalConsistency("root has no expanded action".into()))?;
            let Some(rival) = self.challenger(best) else {
                return Ok(self.root.actions[best].action);
            };
            let target = if !self.root.actions[best].subtree_exact {
                best
            } else if !self.root.actions[rival].subtree_exact {
                rival
            } else {
                return Err(Error::InternalConsistency(
                    "bounds still overlap although both actions are fully refined".into(),
                ));
            };
            self.refine(ActionId(target))?;
        }
    }

    /// Replaces every abstract reward in the tree by its exact value.
    pub fn refine_all(&mut self) -> Result<()> {
        let d = self.engine.cfg.depth;
        self.engine.refine_all_belief(&mut self.root, d)
    }

    pub fn outcome(&self, action: ActionId) -> SolveOutcome<T> {
        SolveOutcome {
            action,
            iterations: self.iterations,
            refine_calls: self.refine_calls,
            root_gap: self.root.gap(),
            root_lower: self.root.lower,
            root_upper: self.root.upper,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::LinearGaussian;
    use crate::pomdp::StateVec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn model() -> LinearGaussian<f64> {
        LinearGaussian::new(
            vec![StateVec::new([1.0]), StateVec::new([-1.0])],
            vec![0.2],
            vec![0.5],
            StateVec::new([2.0]),
        )
        .unwrap()
    }

    fn root(n: usize) -> Arc<ParticleBelief<f64>> {
        let states = (0..n).map(|i| StateVec::new([i as f64 / n as f64])).collect();
        Arc::new(ParticleBelief::uniform(states).unwrap())
    }

    #[test]
    fn depth_zero_returns_zero_bounds() {
        let m = model();
        let engine = Fsss::new(PlannerConfig::default(), &m).unwrap();
        let mut node = BeliefNode::new(root(4), None, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(engine.simulate(&mut node, 0, &mut rng).unwrap(), (0.0, 0.0));
        assert!(node.actions.is_empty());
    }

    #[test]
    fn gen_enumerates_actions_and_samples_c_times_k() {
        let m = model();
        let cfg = PlannerConfig {
            clusters: 4,
            cluster_size: 4,
            ..Default::default()
        };
        let engine = Fsss::new(cfg, &m).unwrap();
        let node = BeliefNode::new(root(5), None, 3);
        let (a, predicted, obs) = engine.gen(&node, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(a, ActionId(0));
        assert_eq!(predicted.action(), ActionId(0));
        assert_eq!(obs.len(), 16);
        let (_, _, again) = engine.gen(&node, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(obs, again);
    }

    #[test]
    fn simulate_keeps_visit_counts_consistent() {
        let m = model();
        let cfg = PlannerConfig {
            clusters: 2,
            cluster_size: 2,
            ..Default::default()
        };
        let engine = Fsss::new(cfg, &m).unwrap();
        let mut node = BeliefNode::new(root(6), None, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..40 {
            engine.simulate(&mut node, 3, &mut rng).unwrap();
        }
        fn check(node: &BeliefNode<f64>) {
            if !node.actions.is_empty() {
                assert_eq!(node.visits, node.actions.iter().map(|a| a.visits).sum::<usize>());
            }
            for a in &node.actions {
                assert!(a.lower <= a.upper + 1e-9);
                assert_eq!(a.children.len() + a.pending_observations().len(), 4);
                a.children.iter().for_each(check);
            }
        }
        check(&node);
    }
}
