//! POMDP model interface, reward composition and the small value types shared
//! across the crate.
//!
//! A model is the tuple (S, A, O, T, Z, r, gamma) exposed through generative
//! samplers and density evaluators. The belief-level reward is
//!
//! ```text
//! R(b, a, b') = w1 * E_{s ~ b'}[r(s, a)] + w2 * H(b')
//! ```
//!
//! where `H` is the (differential) entropy and `w2` is signed, so entropy can be
//! penalized (`w2 < 0`) or rewarded (`w2 > 0`).

use std::ops::{Deref, DerefMut};

use rand::Rng;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Inline storage for low-dimensional state and observation vectors.
pub type Coords<T> = SmallVec<[T; 4]>;

macro_rules! coord_vector {
    ($name:ident) => {
        #[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
        pub struct $name<T>(pub Coords<T>);

        impl<T: Scalar> $name<T> {
            pub fn new(coords: impl IntoIterator<Item = T>) -> Self {
                Self(coords.into_iter().collect())
            }

            pub fn from_slice(coords: &[T]) -> Self {
                Self(Coords::from_slice(coords))
            }

            pub fn zeros(dim: usize) -> Self {
                Self(smallvec::smallvec![T::zero(); dim])
            }

            pub fn dim(&self) -> usize {
                self.0.len()
            }

            pub fn is_finite(&self) -> bool {
                self.0.iter().all(|c| c.is_finite())
            }

            pub fn distance_sq(&self, other: &[T]) -> T {
                self.0
                    .iter()
                    .zip(other)
                    .map(|(a, b)| (*a - *b) * (*a - *b))
                    .fold(T::zero(), |acc, d| acc + d)
            }

            pub fn distance(&self, other: &[T]) -> T {
                self.distance_sq(other).sqrt()
            }
        }

        impl<T> Deref for $name<T> {
            type Target = [T];
            fn deref(&self) -> &[T] {
                &self.0
            }
        }

        impl<T> DerefMut for $name<T> {
            fn deref_mut(&mut self) -> &mut [T] {
                &mut self.0
            }
        }
    };
}

coord_vector!(StateVec);
coord_vector!(ObservationVec);

/// Index into a model's finite action set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ActionId(pub usize);

impl ActionId {
    pub fn index(self) -> usize {
        self.0
    }
}

impl std::fmt::Display for ActionId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a{}", self.0)
    }
}

/// Action/observation history. When `minus` is set the last action has not
/// received its observation yet (the `H⁻` history a predicted belief conditions on).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct History<T> {
    actions: Vec<ActionId>,
    observations: Vec<ObservationVec<T>>,
}

impl<T: Scalar> History<T> {
    pub fn new() -> Self {
        Self {
            actions: Vec::new(),
            observations: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.actions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.actions.is_empty()
    }

    /// True when the history ends with an action lacking its observation.
    pub fn is_minus(&self) -> bool {
        self.actions.len() == self.observations.len() + 1
    }

    pub fn push_action(&mut self, a: ActionId) -> Result<()> {
        if self.is_minus() {
            return Err(Error::InvalidArgument(
                "previous action still awaits its observation".into(),
            ));
        }
        self.actions.push(a);
        Ok(())
    }

    pub fn push_observation(&mut self, o: ObservationVec<T>) -> Result<()> {
        if !self.is_minus() {
            return Err(Error::InvalidArgument(
                "observation without a pending action".into(),
            ));
        }
        self.observations.push(o);
        Ok(())
    }

    /// Drops the last observation, turning `H` into `H⁻`.
    pub fn strip_observation(&mut self) -> Option<ObservationVec<T>> {
        if self.is_minus() || self.observations.is_empty() {
            return None;
        }
        self.observations.pop()
    }

    pub fn steps(&self) -> impl Iterator<Item = (ActionId, Option<&ObservationVec<T>>)> {
        self.actions
            .iter()
            .enumerate()
            .map(|(i, a)| (*a, self.observations.get(i)))
    }
}

/// Weights of the belief-level reward: `w1` on the expected state reward, `w2`
/// (signed) on the entropy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RewardSpec<T> {
    pub omega1: T,
    pub omega2: T,
}

impl<T: Scalar> RewardSpec<T> {
    pub fn new(omega1: T, omega2: T) -> Result<Self> {
        let spec = Self { omega1, omega2 };
        spec.validate()?;
        Ok(spec)
    }

    /// Distance-to-goal reward with an entropy penalty: `w1 = 1`, `w2 = -1`.
    pub fn entropy_penalty() -> Self {
        Self {
            omega1: T::one(),
            omega2: -T::one(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.omega1.is_finite() || !self.omega2.is_finite() {
            return Err(Error::NonFinite("reward weights"));
        }
        if self.omega1 == T::zero() && self.omega2 == T::zero() {
            return Err(Error::InvalidConfig(
                "at least one reward weight must be nonzero".into(),
            ));
        }
        Ok(())
    }
}

/// `w1 * exp_state_reward + w2 * exp_entropy`.
pub fn compose_reward<T: Scalar>(exp_state_reward: T, exp_entropy: T, spec: &RewardSpec<T>) -> Result<T> {
    if !exp_state_reward.is_finite() || !exp_entropy.is_finite() {
        return Err(Error::NonFinite("reward terms"));
    }
    Ok(spec.omega1 * exp_state_reward + spec.omega2 * exp_entropy)
}

/// Generative and density view of a POMDP.
///
/// Samplers must be deterministic given the rng state. Densities are with
/// respect to the model's base measure (Lebesgue for continuous spaces,
/// counting for discrete ones).
pub trait PomdpModel<T: Scalar>: Sync {
    fn num_actions(&self) -> usize;

    fn actions(&self) -> Vec<ActionId> {
        (0..self.num_actions()).map(ActionId).collect()
    }

    fn discount(&self) -> T;

    fn sample_transition<R: Rng + ?Sized>(&self, s: &StateVec<T>, a: ActionId, rng: &mut R) -> StateVec<T>;

    fn transition_density(&self, next: &StateVec<T>, s: &StateVec<T>, a: ActionId) -> T;

    fn sample_observation<R: Rng + ?Sized>(&self, s: &StateVec<T>, rng: &mut R) -> ObservationVec<T>;

    fn observation_density(&self, o: &ObservationVec<T>, s: &StateVec<T>) -> T;

    fn state_reward(&self, s: &StateVec<T>, a: ActionId) -> T;
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn compose_reward_examples() {
        let spec = RewardSpec::entropy_penalty();
        assert_eq!(compose_reward(0.0, 0.0, &spec).unwrap(), 0.0);
        assert_eq!(compose_reward(-2.0, 1.5, &spec).unwrap(), -3.5);
        let entropy_only = RewardSpec::new(0.0, -1.0).unwrap();
        for r in [-5.0, 0.0, 12.0] {
            assert_eq!(compose_reward(r, 2.25, &entropy_only).unwrap(), -2.25);
        }
    }

    #[test]
    fn compose_reward_rejects_non_finite() {
        let spec = RewardSpec::entropy_penalty();
        assert!(compose_reward(f64::NAN, 0.0, &spec).is_err());
        assert!(compose_reward(0.0, f64::INFINITY, &spec).is_err());
    }

    #[test]
    fn reward_spec_requires_a_nonzero_weight() {
        assert!(RewardSpec::new(0.0f64, 0.0).is_err());
        assert!(RewardSpec::new(0.0f64, 1.0).is_ok());
    }

    #[test]
    fn history_minus_round_trip() {
        let mut h = History::<f64>::new();
        h.push_action(ActionId(2)).unwrap();
        assert!(h.is_minus());
        assert!(h.push_action(ActionId(1)).is_err());
        h.push_observation(ObservationVec::new([1.0, 2.0])).unwrap();
        assert!(!h.is_minus());
        let o = h.strip_observation().unwrap();
        assert!(h.is_minus());
        h.push_observation(o.clone()).unwrap();
        assert_eq!(h.steps().last().unwrap().1, Some(&o));
        assert!(h.push_observation(o).is_err());
    }

    proptest! {
        #[test]
        fn compose_reward_is_linear(
            w1 in -5.0f64..5.0, w2 in -5.0f64..5.0,
            r1 in -10.0f64..10.0, r2 in -10.0f64..10.0,
            h1 in -10.0f64..10.0, h2 in -10.0f64..10.0, c in -3.0f64..3.0,
        ) {
            prop_assume!(w1 != 0.0 || w2 != 0.0);
            let spec = RewardSpec { omega1: w1, omega2: w2 };
            let lhs = compose_reward(r1 + c * r2, h1 + c * h2, &spec).unwrap();
            let rhs = compose_reward(r1, h1, &spec).unwrap() + c * compose_reward(r2, h2, &spec).unwrap();
            prop_assert!((lhs - rhs).abs() <= 1e-9 * (1.0 + lhs.abs()));
        }
    }
}
