//! Particle Filter Tree with double progressive widening: a belief-MDP MCTS
//! baseline whose observation branching grows with the visit count.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use super::config::PlannerConfig;
use super::rollout::rollout_from_belief;
use crate::abstraction::exact_expected_reward;
use crate::error::{Error, Result};
use crate::filter::{posterior, predict, sample_observation_set, ParticleBelief};
use crate::pomdp::{ActionId, PomdpModel};
use crate::scalar::{argmax_by_key, Scalar};

#[derive(Debug, Clone)]
struct PftBelief<T> {
    belief: Arc<ParticleBelief<T>>,
    visits: usize,
    actions: Vec<PftAction<T>>,
}

#[derive(Debug, Clone)]
struct PftAction<T> {
    visits: usize,
    value: T,
    /// Posterior children with the immediate reward of reaching each.
    children: Vec<(PftBelief<T>, T)>,
}

impl<T: Scalar> PftBelief<T> {
    fn new(belief: Arc<ParticleBelief<T>>, num_actions: usize) -> Self {
        Self {
            belief,
            visits: 0,
            actions: (0..num_actions)
                .map(|_| PftAction {
                    visits: 0,
                    value: T::zero(),
                    children: Vec::new(),
                })
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PftOutcome<T> {
    pub action: ActionId,
    pub iterations: usize,
    /// Mean return of every root action, by action index.
    pub values: Vec<T>,
}

/// Number of observation children an action node with `visits` visits may hold.
pub fn widening_limit<T: Scalar>(cfg: &PlannerConfig<T>, visits: usize) -> usize {
    let raw = cfg.pft.k_o * T::from_count(visits).powf(cfg.pft.alpha_o);
    raw.floor().to_usize().unwrap_or(usize::MAX).max(1)
}

#[derive(Debug)]
pub struct PftDpw<'m, T, M> {
    cfg: PlannerConfig<T>,
    model: &'m M,
    gamma: T,
}

impl<'m, T: Scalar, M: PomdpModel<T>> PftDpw<'m, T, M> {
    pub fn new(cfg: PlannerConfig<T>, model: &'m M) -> Result<Self> {
        cfg.validate()?;
        let gamma = cfg.gamma.unwrap_or_else(|| model.discount());
        Ok(Self { cfg, model, gamma })
    }

    pub fn plan<R: Rng + ?Sized>(&self, root: Arc<ParticleBelief<T>>, rng: &mut R) -> Result<PftOutcome<T>> {
        let started = Instant::now();
        let mut node = PftBelief::new(root, self.model.num_actions());
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
        let values: Vec<T> = node.actions.iter().map(|a| a.value).collect();
        let best = argmax_by_key(
            node.actions
                .iter()
                .map(|a| if a.visits > 0 { a.value } else { T::neg_infinity() }),
        )
        .expect("model has at least one action");
        Ok(PftOutcome {
            action: ActionId(best),
            iterations,
            values,
        })
    }

    fn select(&self, node: &PftBelief<T>) -> usize {
        if let Some(untried) = node.actions.iter().position(|a| a.visits == 0) {
            return untried;
        }
        let log_n = T::from_count(node.visits).ln();
        argmax_by_key(
            node.actions
                .iter()
                .map(|a| a.value + self.cfg.pft.c_ucb * (log_n / T::from_count(a.visits)).sqrt()),
        )
        .expect("model has at least one action")
    }

    /// A fresh posterior child of `b` under `a` and the reward of reaching it.
    fn new_child<R: Rng + ?Sized>(&self, b: &Arc<ParticleBelief<T>>, a: ActionId, rng: &mut R) -> Result<(ParticleBelief<T>, T)> {
        let bp = predict(b, a, self.model, rng);
        for _ in 0..=self.cfg.max_observation_retries {
            let o = sample_observation_set(&bp, 1, self.model, rng)?;
            match posterior(&bp, &o[0], self.model) {
                Ok(post) => {
                    let r = exact_expected_reward(&bp, &o, self.model, &self.cfg.spec)?;
                    return Ok((post, r.value));
                }
                Err(Error::DegenerateBelief(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        Err(Error::DegenerateBelief("no usable observation after retries"))
    }

    fn simulate<R: Rng + ?Sized>(&self, node: &mut PftBelief<T>, d: usize, rng: &mut R) -> Result<T> {
        if d == 0 {
            return Ok(T::zero());
        }
        let ai = self.select(node);
        let num_actions = self.model.num_actions();
        let belief = Arc::clone(&node.belief);
        let anode = &mut node.actions[ai];
        anode.visits += 1;
        let ret = if anode.children.len() < widening_limit(&self.cfg, anode.visits) {
            let (post, r) = self.new_child(&belief, ActionId(ai), rng)?;
            let post = Arc::new(post);
            let tail = rollout_from_belief(Arc::clone(&post), d - 1, self.model, &self.cfg, self.gamma, rng)?;
            anode.children.push((PftBelief::new(post, num_actions), r));
            r + self.gamma * tail
        } else {
            let ci = rng.random_range(0..anode.children.len());
            let (child, r) = &mut anode.children[ci];
            let r = *r;
            r + self.gamma * self.simulate(child, d - 1, rng)?
        };
        anode.value = anode.value + (ret - anode.value) / T::from_count(anode.visits);
        node.visits += 1;
        Ok(ret)
    }
}
