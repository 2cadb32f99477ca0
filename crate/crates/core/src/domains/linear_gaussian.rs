//! Linear-Gaussian model with per-axis independent noise: `x' = x + u_a + w`,
//! `o = x + v`. Its expected posterior entropy has a closed form, which makes
//! it the reference model for checking the particle entropy estimator.

use std::f64::consts::{E, PI};

use rand::Rng;

use crate::error::{Error, Result};
use crate::pomdp::{ActionId, ObservationVec, PomdpModel, StateVec};
use crate::scalar::{standard_normal, Scalar};

#[derive(Debug, Clone)]
pub struct LinearGaussian<T> {
    controls: Vec<StateVec<T>>,
    process_std: Vec<T>,
    obs_std: Vec<T>,
    goal: StateVec<T>,
    discount: T,
}

impl<T: Scalar> LinearGaussian<T> {
    pub fn new(controls: Vec<StateVec<T>>, process_std: Vec<T>, obs_std: Vec<T>, goal: StateVec<T>) -> Result<Self> {
        let dim = process_std.len();
        if controls.is_empty() {
            return Err(Error::InvalidConfig("need at least one control".into()));
        }
        if obs_std.len() != dim || goal.dim() != dim || controls.iter().any(|u| u.dim() != dim) {
            return Err(Error::InvalidConfig("dimension mismatch".into()));
        }
        if process_std.iter().chain(&obs_std).any(|s| !(*s > T::zero())) {
            return Err(Error::InvalidConfig("noise scales must be positive".into()));
        }
        Ok(Self {
            controls,
            process_std,
            obs_std,
            goal,
            discount: T::one(),
        })
    }

    pub fn with_discount(mut self, gamma: T) -> Self {
        self.discount = gamma;
        self
    }

    pub fn dim(&self) -> usize {
        self.process_std.len()
    }

    /// Differential entropy of the posterior after one predict/update cycle
    /// from a Gaussian prior with per-axis variances `prior_var`. It does not
    /// depend on the observation, so it is also the expected posterior entropy.
    pub fn closed_form_expected_entropy(&self, prior_var: &[f64]) -> f64 {
        prior_var
            .iter()
            .zip(self.process_std.iter().zip(&self.obs_std))
            .map(|(p, (w, v))| {
                let predicted = p + w.as_f64().powi(2);
                let r = v.as_f64().powi(2);
                let posterior = predicted * r / (predicted + r);
                0.5 * (2.0 * PI * E * posterior).ln()
            })
            .sum()
    }
}

fn diag_gauss<T: Scalar>(delta: impl Iterator<Item = T>, std: &[T]) -> T {
    let two_pi = T::lit(2.0 * PI);
    delta.zip(std).fold(T::one(), |acc, (d, s)| {
        let z = d / *s;
        acc * (-(z * z) / T::lit(2.0)).exp() / (two_pi.sqrt() * *s)
    })
}

impl<T: Scalar> PomdpModel<T> for LinearGaussian<T> {
    fn num_actions(&self) -> usize {
        self.controls.len()
    }

    fn discount(&self) -> T {
        self.discount
    }

    fn sample_transition<R: Rng + ?Sized>(&self, s: &StateVec<T>, a: ActionId, rng: &mut R) -> StateVec<T> {
        let u = &self.controls[a.0];
        StateVec::new(
            s.iter()
                .zip(u.iter())
                .zip(&self.process_std)
                .map(|((x, u), w)| *x + *u + *w * standard_normal::<T, _>(rng)),
        )
    }

    fn transition_density(&self, next: &StateVec<T>, s: &StateVec<T>, a: ActionId) -> T {
        let u = &self.controls[a.0];
        let delta = next.iter().zip(s.iter()).zip(u.iter()).map(|((n, x), u)| *n - *x - *u);
        diag_gauss(delta, &self.process_std)
    }

    fn sample_observation<R: Rng + ?Sized>(&self, s: &StateVec<T>, rng: &mut R) -> ObservationVec<T> {
        ObservationVec::new(
            s.iter()
                .zip(&self.obs_std)
                .map(|(x, v)| *x + *v * standard_normal::<T, _>(rng)),
        )
    }

    fn observation_density(&self, o: &ObservationVec<T>, s: &StateVec<T>) -> T {
        diag_gauss(o.iter().zip(s.iter()).map(|(o, x)| *o - *x), &self.obs_std)
    }

    fn state_reward(&self, s: &StateVec<T>, _a: ActionId) -> T {
        -self.goal.distance(s)
    }
}
