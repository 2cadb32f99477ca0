//! Benchmark environments and small verification models.

mod discrete;
mod light_dark;
mod linear_gaussian;

pub use discrete::{DiscreteGridPomdp, ObservationTable};
pub use light_dark::{
    LightDark2D, LightDarkConfig, Rect, RewardContext, ACTION_COUNT as LIGHT_DARK_ACTIONS, NULL_ACTION,
};
pub use linear_gaussian::LinearGaussian;

use rand::Rng;

use crate::pomdp::{ActionId, ObservationVec, PomdpModel, StateVec};
use crate::scalar::Scalar;

/// Exposes a subset of another model's actions, renumbered `0..k`.
#[derive(Debug, Clone)]
pub struct RestrictedActions<M> {
    inner: M,
    actions: Vec<ActionId>,
}

impl<M> RestrictedActions<M> {
    pub fn new(inner: M, actions: Vec<ActionId>) -> Self {
        assert!(!actions.is_empty(), "need at least one action");
        Self { inner, actions }
    }

    pub fn inner(&self) -> &M {
        &self.inner
    }

    /// Action of the wrapped model behind local action `a`.
    pub fn original(&self, a: ActionId) -> ActionId {
        self.actions[a.0]
    }
}

impl<T: Scalar, M: PomdpModel<T>> PomdpModel<T> for RestrictedActions<M> {
    fn num_actions(&self) -> usize {
        self.actions.len()
    }

    fn discount(&self) -> T {
        self.inner.discount()
    }

    fn sample_transition<R: Rng + ?Sized>(&self, s: &StateVec<T>, a: ActionId, rng: &mut R) -> StateVec<T> {
        self.inner.sample_transition(s, self.original(a), rng)
    }

    fn transition_density(&self, next: &StateVec<T>, s: &StateVec<T>, a: ActionId) -> T {
        self.inner.transition_density(next, s, self.original(a))
    }

    fn sample_observation<R: Rng + ?Sized>(&self, s: &StateVec<T>, rng: &mut R) -> ObservationVec<T> {
        self.inner.sample_observation(s, rng)
    }

    fn observation_density(&self, o: &ObservationVec<T>, s: &StateVec<T>) -> T {
        self.inner.observation_density(o, s)
    }

    fn state_reward(&self, s: &StateVec<T>, a: ActionId) -> T {
        self.inner.state_reward(s, self.original(a))
    }
}
