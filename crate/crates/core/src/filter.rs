//! Weighted particle beliefs, the particle-filter prediction/correction steps
//! and the particle estimator of expected differential entropy.
//!
//! For a predicted belief with prior weights `q_j`, prior states `s'_j`,
//! propagated states `s_i` and observation samples `o_1..o_M` the estimator is
//!
//! ```text
//! E[H] ≈ -η Σ_m Σ_i Z(o_m|s_i) q_i · ln( Z(o_m|s_i) Σ_j T(s_i|s'_j, a) q_j / Σ_i' Z(o_m|s_i') q_i' )
//! η    = 1 / Σ_m Σ_i Z(o_m|s_i) q_i
//! ```
//!
//! The predictive density `Σ_j T(s_i|s'_j, a) q_j` is evaluated inside the
//! per-observation loop, so one observation row costs Θ(N²) and the full
//! estimate Θ(M·N²). Abstracted rows (see [`crate::abstraction`]) reuse the
//! same kernels, which keeps the `K = 1` abstraction bit-identical to the
//! plain estimator.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::pomdp::{ActionId, ObservationVec, PomdpModel, StateVec};
use crate::scalar::{log_floor, unit_uniform, Scalar};

#[derive(Debug, Clone, PartialEq)]
pub struct ParticleBelief<T> {
    states: Vec<StateVec<T>>,
    weights: Vec<T>,
    generation: usize,
}

impl<T: Scalar> ParticleBelief<T> {
    /// Builds a belief, checking that weights are nonnegative and sum to one.
    pub fn new(states: Vec<StateVec<T>>, weights: Vec<T>, generation: usize) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::InvalidArgument("belief needs at least one particle".into()));
        }
        if states.len() != weights.len() {
            return Err(Error::SizeMismatch {
                expected: states.len(),
                actual: weights.len(),
            });
        }
        if !states.iter().all(|s| s.is_finite()) {
            return Err(Error::NonFinite("particle state"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < T::zero()) {
            return Err(Error::InvalidArgument("particle weights must be finite and nonnegative".into()));
        }
        let total: T = weights.iter().copied().sum();
        if (total - T::one()).abs() > T::mass_tolerance() {
            return Err(Error::InvalidArgument(format!("particle weights sum to {total}, not 1")));
        }
        Ok(Self {
            states,
            weights,
            generation,
        })
    }

    /// Equally weighted particles.
    pub fn uniform(states: Vec<StateVec<T>>) -> Result<Self> {
        let n = states.len().max(1);
        let w = T::one() / T::from_count(n);
        let weights = vec![w; states.len()];
        Self::new(states, weights, 0)
    }

    /// Normalizes arbitrary nonnegative weights. Fails when they are all zero.
    pub fn from_unnormalized(states: Vec<StateVec<T>>, raw: Vec<T>, generation: usize) -> Result<Self> {
        let total: T = raw.iter().copied().sum();
        if !(total > T::zero()) || !total.is_finite() {
            return Err(Error::DegenerateBelief("all particle weights vanished"));
        }
        let weights = raw.into_iter().map(|w| w / total).collect();
        Self::new(states, weights, generation)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[StateVec<T>] {
        &self.states
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn generation(&self) -> usize {
        self.generation
    }

    pub fn iter(&self) -> impl Iterator<Item = (&StateVec<T>, T)> {
        self.states.iter().zip(self.weights.iter().copied())
    }

    /// Weighted mean of the particle states.
    pub fn mean(&self) -> StateVec<T> {
        let dim = self.states[0].dim();
        let mut m = StateVec::zeros(dim);
        for (s, w) in self.iter() {
            for (acc, c) in m.iter_mut().zip(s.iter()) {
                *acc = *acc + w * *c;
            }
        }
        m
    }

    /// `Σ_i q_i f(s_i)`.
    pub fn expectation(&self, mut f: impl FnMut(&StateVec<T>) -> T) -> T {
        self.iter().fold(T::zero(), |acc, (s, w)| acc + w * f(s))
    }

    /// Effective sample size `1 / Σ q_i²`.
    pub fn effective_sample_size(&self) -> T {
        let sq: T = self.weights.iter().map(|w| *w * *w).sum();
        T::one() / sq
    }

    /// Systematic resampling to an equally weighted set of the same size.
    pub fn resample_systematic<R: Rng + ?Sized>(&self, rng: &mut R) -> Self {
        let n = self.len();
        let step = T::one() / T::from_count(n);
        let start = unit_uniform::<T, _>(rng) * step;
        let mut states = Vec::with_capacity(n);
        let mut cumulative = self.weights[0];
        let mut j = 0;
        for k in 0..n {
            let u = start + T::from_count(k) * step;
            while u > cumulative && j + 1 < n {
                j += 1;
                cumulative = cumulative + self.weights[j];
            }
            states.push(self.states[j].clone());
        }
        Self {
            states,
            weights: vec![step; n],
            generation: self.generation,
        }
    }

    /// Resamples when the effective sample size drops below `N / 2`.
    pub fn resample_if_degenerate<R: Rng + ?Sized>(self, rng: &mut R) -> Self {
        let half = T::from_count(self.len()) / T::lit(2.0);
        if self.effective_sample_size() < half {
            self.resample_systematic(rng)
        } else {
            self
        }
    }

    /// Draws a particle index with probability proportional to its weight.
    pub fn sample_index<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u = unit_uniform::<T, _>(rng);
        let mut cumulative = T::zero();
        for (i, w) in self.weights.iter().enumerate() {
            cumulative = cumulative + *w;
            if u < cumulative {
                return i;
            }
        }
        // Rounding left `u` above the final cumulative sum: pick the last positive weight.
        self.weights.iter().rposition(|w| *w > T::zero()).unwrap_or(self.len() - 1)
    }
}

/// A belief after applying an action's transition but before the next
/// observation. Prior weights are kept unnormalized-by-observation.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictedBelief<T> {
    prior: Arc<ParticleBelief<T>>,
    action: ActionId,
    propagated: Vec<StateVec<T>>,
}

impl<T: Scalar> PredictedBelief<T> {
    pub fn new(prior: Arc<ParticleBelief<T>>, action: ActionId, propagated: Vec<StateVec<T>>) -> Result<Self> {
        if propagated.len() != prior.len() {
            return Err(Error::SizeMismatch {
                expected: prior.len(),
                actual: propagated.len(),
            });
        }
        Ok(Self {
            prior,
            action,
            propagated,
        })
    }

    pub fn prior(&self) -> &ParticleBelief<T> {
        &self.prior
    }

    pub fn action(&self) -> ActionId {
        self.action
    }

    pub fn propagated(&self) -> &[StateVec<T>] {
        &self.propagated
    }

    /// Prior particle weights `q_i`, carried over unchanged by the transition.
    pub fn weights(&self) -> &[T] {
        self.prior.weights()
    }

    pub fn len(&self) -> usize {
        self.propagated.len()
    }

    pub fn is_empty(&self) -> bool {
        self.propagated.is_empty()
    }

    /// The predicted belief itself as a weighted particle set.
    pub fn as_belief(&self) -> ParticleBelief<T> {
        ParticleBelief {
            states: self.propagated.clone(),
            weights: self.prior.weights().to_vec(),
            generation: self.prior.generation() + 1,
        }
    }

    /// `Σ_j T(s_i | s'_j, a) q_j`: the mixture density of the predicted belief at particle `i`.
    pub fn predictive_density<M: PomdpModel<T>>(&self, i: usize, model: &M) -> T {
        let target = &self.propagated[i];
        self.prior
            .iter()
            .fold(T::zero(), |acc, (src, q)| acc + model.transition_density(target, src, self.action) * q)
    }
}

/// Propagates every particle through the transition sampler; weights are copied.
pub fn predict<T, M, R>(b: &Arc<ParticleBelief<T>>, a: ActionId, model: &M, rng: &mut R) -> PredictedBelief<T>
where
    T: Scalar,
    M: PomdpModel<T>,
    R: Rng + ?Sized,
{
    let propagated = b.states().iter().map(|s| model.sample_transition(s, a, rng)).collect();
    PredictedBelief {
        prior: Arc::clone(b),
        action: a,
        propagated,
    }
}

/// Bayes correction: `q_i ∝ Z(o|s_i) q_i`, renormalized. No resampling.
pub fn posterior<T, M>(bp: &PredictedBelief<T>, o: &ObservationVec<T>, model: &M) -> Result<ParticleBelief<T>>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    let raw: Vec<T> = bp
        .propagated
        .iter()
        .zip(bp.weights())
        .map(|(s, q)| model.observation_density(o, s) * *q)
        .collect();
    let total: T = raw.iter().copied().sum();
    if !(total > T::zero()) {
        return Err(Error::DegenerateBelief("observation has zero likelihood under every particle"));
    }
    if !total.is_finite() {
        return Err(Error::NonFinite("posterior normalizer"));
    }
    let weights = raw.into_iter().map(|w| w / total).collect();
    Ok(ParticleBelief {
        states: bp.propagated.clone(),
        weights,
        generation: bp.prior.generation() + 1,
    })
}

/// Samples `m` observations: a particle is drawn proportionally to its weight,
/// then an observation is drawn from `Z(·|s)`.
pub fn sample_observation_set<T, M, R>(
    bp: &PredictedBelief<T>,
    m: usize,
    model: &M,
    rng: &mut R,
) -> Result<Vec<ObservationVec<T>>>
where
    T: Scalar,
    M: PomdpModel<T>,
    R: Rng + ?Sized,
{
    if m == 0 {
        return Err(Error::InvalidArgument("observation count must be at least 1".into()));
    }
    Ok((0..m)
        .map(|_| {
            let i = bp.prior.sample_index(rng);
            model.sample_observation(&bp.propagated[i], rng)
        })
        .collect())
}

/// Likelihood matrix `Z[m][i] = Z(o_m | s_i)` over the propagated particles.
pub fn likelihood_matrix<T, M>(bp: &PredictedBelief<T>, obs: &[ObservationVec<T>], model: &M) -> Vec<Vec<T>>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    obs.iter()
        .map(|o| bp.propagated.iter().map(|s| model.observation_density(o, s)).collect())
        .collect()
}

/// Core of the entropy estimator over likelihood rows, each carrying a
/// multiplicity (1 for plain rows, `K` for an abstract cluster row).
pub(crate) fn entropy_from_rows<'a, T, M, I>(bp: &PredictedBelief<T>, rows: I, model: &M) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
    I: IntoIterator<Item = (&'a [T], T)>,
{
    let q = bp.weights();
    let floor = log_floor::<T>();
    let mut total = T::zero();
    let mut norm = T::zero();
    for (row, multiplicity) in rows {
        debug_assert_eq!(row.len(), q.len());
        let evidence = row.iter().zip(q).fold(T::zero(), |acc, (z, w)| acc + *z * *w);
        if !(evidence > T::zero()) {
            continue;
        }
        let mut acc = T::zero();
        for (i, (z, w)) in row.iter().zip(q).enumerate() {
            let mass = *z * *w;
            if mass == T::zero() {
                continue;
            }
            let joint = (*z * bp.predictive_density(i, model)).max(floor);
            acc = acc + mass * (joint / evidence).ln();
        }
        total = total + multiplicity * acc;
        norm = norm + multiplicity * evidence;
    }
    if !(norm > T::zero()) {
        return Err(Error::DegenerateBelief("observation samples have zero total likelihood"));
    }
    let estimate = -(total / norm);
    if !estimate.is_finite() {
        return Err(Error::NonFinite("entropy estimate"));
    }
    Ok(estimate)
}

/// Expected state reward `η Σ_m Σ_i Z q_i r(s_i, a)` over likelihood rows.
pub(crate) fn state_reward_from_rows<'a, T, M, I>(bp: &PredictedBelief<T>, rows: I, a: ActionId, model: &M) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
    I: IntoIterator<Item = (&'a [T], T)>,
{
    let q = bp.weights();
    let rewards: Vec<T> = bp.propagated.iter().map(|s| model.state_reward(s, a)).collect();
    let mut total = T::zero();
    let mut norm = T::zero();
    for (row, multiplicity) in rows {
        let mut acc = T::zero();
        let mut evidence = T::zero();
        for ((z, w), r) in row.iter().zip(q).zip(&rewards) {
            let mass = *z * *w;
            evidence = evidence + mass;
            acc = acc + mass * *r;
        }
        total = total + multiplicity * acc;
        norm = norm + multiplicity * evidence;
    }
    if !(norm > T::zero()) {
        return Err(Error::DegenerateBelief("observation samples have zero total likelihood"));
    }
    Ok(total / norm)
}

/// Particle estimate of the expected posterior differential entropy given
/// observation samples drawn from the predicted belief.
pub fn expected_entropy_estimate<T, M>(bp: &PredictedBelief<T>, obs: &[ObservationVec<T>], model: &M) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    if obs.is_empty() {
        return Err(Error::InvalidArgument("need at least one observation sample".into()));
    }
    let rows = likelihood_matrix(bp, obs, model);
    entropy_from_rows(bp, rows.iter().map(|r| (r.as_slice(), T::one())), model)
}

/// Expected state reward over the posteriors of the given observation samples.
pub fn expected_state_reward_estimate<T, M>(
    bp: &PredictedBelief<T>,
    obs: &[ObservationVec<T>],
    a: ActionId,
    model: &M,
) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    if obs.is_empty() {
        return Err(Error::InvalidArgument("need at least one observation sample".into()));
    }
    let rows = likelihood_matrix(bp, obs, model);
    state_reward_from_rows(bp, rows.iter().map(|r| (r.as_slice(), T::one())), a, model)
}

/// Entropy estimate of a single posterior belief (the `M = 1` estimator).
pub fn posterior_entropy<T, M>(bp: &PredictedBelief<T>, o: &ObservationVec<T>, model: &M) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    expected_entropy_estimate(bp, std::slice::from_ref(o), model)
}

/// Entropy estimate of `next`, the posterior reached from `prev` through action
/// `a`, recovered from the weights alone: since `Z(o|s_i)/P(o) = w_i / q_i`,
/// no access to the observation is needed. Particles of `next` must be the
/// propagated particles of `prev` in the same order (no resampling in between).
pub fn transition_entropy<T, M>(prev: &Arc<ParticleBelief<T>>, a: ActionId, next: &ParticleBelief<T>, model: &M) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
{
    if prev.len() != next.len() {
        return Err(Error::SizeMismatch {
            expected: prev.len(),
            actual: next.len(),
        });
    }
    let bp = PredictedBelief::new(Arc::clone(prev), a, next.states().to_vec())?;
    let floor = log_floor::<T>();
    let mut acc = T::zero();
    for (i, (w, q)) in next.weights().iter().zip(prev.weights()).enumerate() {
        if *w == T::zero() || *q == T::zero() {
            continue;
        }
        let density = (*w * bp.predictive_density(i, model) / *q).max(floor);
        acc = acc + *w * density.ln();
    }
    Ok(-acc)
}
