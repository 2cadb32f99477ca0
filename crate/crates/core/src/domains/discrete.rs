//! Small tabular POMDP used to verify the abstraction bounds by exhaustive
//! enumeration.
//!
//! States are encoded as one-coordinate [`StateVec`]s holding the state index,
//! observations likewise; densities are probability mass functions.

use rand::Rng;

use crate::abstraction::ClusterPartition;
use crate::error::{Error, Result};
use crate::pomdp::{ActionId, ObservationVec, PomdpModel, StateVec};
use crate::scalar::{unit_uniform, Scalar};

/// `Z(o | s)` given as a full table, indexable by state then observation.
pub trait ObservationTable<T> {
    fn likelihood(&self, o: usize, s: usize) -> T;
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteGridPomdp<T> {
    pub n_states: usize,
    pub n_obs: usize,
    pub n_actions: usize,
    /// `transition[a][s][s']`
    pub transition: Vec<Vec<Vec<T>>>,
    /// `observation[s][o]`
    pub observation: Vec<Vec<T>>,
    /// `reward[s][a]`
    pub reward: Vec<Vec<T>>,
    pub b0: Vec<T>,
    pub discount: T,
}

fn random_simplex<T: Scalar, R: Rng + ?Sized>(n: usize, sparsity: f64, rng: &mut R) -> Vec<T> {
    loop {
        // Exponential draws give a flat Dirichlet; some entries are zeroed to
        // exercise zero-probability branches.
        let raw: Vec<f64> = (0..n)
            .map(|_| {
                if rng.random::<f64>() < sparsity {
                    0.0
                } else {
                    -(1.0 - rng.random::<f64>()).ln()
                }
            })
            .collect();
        let total: f64 = raw.iter().sum();
        if total > 0.0 {
            return raw.iter().map(|v| T::lit(v / total)).collect();
        }
    }
}

fn check_simplex<T: Scalar>(row: &[T], what: &str) -> Result<()> {
    if row.iter().any(|p| !p.is_finite() || *p < T::zero()) {
        return Err(Error::InvalidConfig(format!("{what}: negative or non-finite entry")));
    }
    let total: T = row.iter().copied().sum();
    if (total - T::one()).abs() > T::lit(1e-12).max(T::epsilon() * T::lit(64.0)) {
        return Err(Error::InvalidConfig(format!("{what}: sums to {total}")));
    }
    Ok(())
}

impl<T: Scalar> DiscreteGridPomdp<T> {
    pub fn validate(&self) -> Result<()> {
        let shape_ok = self.transition.len() == self.n_actions
            && self.transition.iter().all(|t| t.len() == self.n_states && t.iter().all(|r| r.len() == self.n_states))
            && self.observation.len() == self.n_states
            && self.observation.iter().all(|r| r.len() == self.n_obs)
            && self.reward.len() == self.n_states
            && self.reward.iter().all(|r| r.len() == self.n_actions)
            && self.b0.len() == self.n_states;
        if !shape_ok {
            return Err(Error::InvalidConfig("table shapes do not match declared sizes".into()));
        }
        for t in &self.transition {
            for row in t {
                check_simplex(row, "transition row")?;
            }
        }
        for row in &self.observation {
            check_simplex(row, "observation row")?;
        }
        check_simplex(&self.b0, "initial belief")
    }

    /// Random instance with flat-Dirichlet rows; `sparsity` is the chance that
    /// an individual table entry is forced to zero.
    pub fn random<R: Rng + ?Sized>(n_states: usize, n_obs: usize, n_actions: usize, sparsity: f64, rng: &mut R) -> Self {
        let transition = (0..n_actions)
            .map(|_| (0..n_states).map(|_| random_simplex(n_states, sparsity, rng)).collect())
            .collect();
        let observation = (0..n_states).map(|_| random_simplex(n_obs, sparsity, rng)).collect();
        let reward = (0..n_states)
            .map(|_| (0..n_actions).map(|_| T::lit(rng.random::<f64>() * 4.0 - 2.0)).collect())
            .collect();
        let b0 = random_simplex(n_states, 0.0, rng);
        Self {
            n_states,
            n_obs,
            n_actions,
            transition,
            observation,
            reward,
            b0,
            discount: T::one(),
        }
    }

    pub fn state(&self, s: usize) -> StateVec<T> {
        StateVec::new([T::from_count(s)])
    }

    pub fn obs(&self, o: usize) -> ObservationVec<T> {
        ObservationVec::new([T::from_count(o)])
    }

    fn index_of(&self, coords: &[T], bound: usize) -> Option<usize> {
        let v = coords.first()?.to_f64()?;
        let i = v.round();
        (i >= 0.0 && (i as usize) < bound && (v - i).abs() < 1e-9).then_some(i as usize)
    }

    /// `b⁻(s') = Σ_s T(s'|s, a) b(s)`.
    pub fn predict_exact(&self, b: &[T], a: ActionId) -> Vec<T> {
        let t = &self.transition[a.0];
        (0..self.n_states)
            .map(|sp| (0..self.n_states).fold(T::zero(), |acc, s| acc + t[s][sp] * b[s]))
            .collect()
    }

    /// Exact Bayes update of a predicted belief; `None` for a zero-probability observation.
    pub fn posterior_exact(&self, predicted: &[T], o: usize, z: &impl ObservationTable<T>) -> Option<Vec<T>> {
        let joint: Vec<T> = (0..self.n_states).map(|s| z.likelihood(o, s) * predicted[s]).collect();
        let evidence: T = joint.iter().copied().sum();
        (evidence > T::zero()).then(|| joint.into_iter().map(|p| p / evidence).collect())
    }

    /// `Σ_o P(o|H⁻) H(b_o)` by enumerating every observation; zero-probability
    /// branches are skipped.
    pub fn expected_entropy_exact(&self, predicted: &[T], z: &impl ObservationTable<T>) -> T {
        (0..self.n_obs).fold(T::zero(), |acc, o| {
            let evidence = (0..self.n_states).fold(T::zero(), |e, s| e + z.likelihood(o, s) * predicted[s]);
            match self.posterior_exact(predicted, o, z) {
                Some(post) => acc + evidence * shannon_entropy(&post),
                None => acc,
            }
        })
    }

    /// `Σ_o P(o|H⁻) Σ_s b_o(s) r(s, a)`.
    pub fn expected_state_reward_exact(&self, predicted: &[T], a: ActionId, z: &impl ObservationTable<T>) -> T {
        (0..self.n_obs).fold(T::zero(), |acc, o| {
            (0..self.n_states).fold(acc, |acc, s| acc + z.likelihood(o, s) * predicted[s] * self.reward[s][a.0])
        })
    }

    /// Cluster-averaged observation table for a partition of the observation space.
    pub fn abstract_table(&self, partition: &ClusterPartition) -> Result<AbstractTable<T>> {
        if partition.total() != self.n_obs {
            return Err(Error::SizeMismatch {
                expected: self.n_obs,
                actual: partition.total(),
            });
        }
        let k = T::from_count(partition.cluster_size());
        let table = (0..self.n_states)
            .map(|s| {
                (0..self.n_obs)
                    .map(|o| {
                        let members = partition.members(partition.cluster_of(o));
                        members.fold(T::zero(), |acc, m| acc + self.observation[s][m]) / k
                    })
                    .collect()
            })
            .collect();
        Ok(AbstractTable { table })
    }
}

impl<T: Scalar> ObservationTable<T> for DiscreteGridPomdp<T> {
    fn likelihood(&self, o: usize, s: usize) -> T {
        self.observation[s][o]
    }
}

/// `Z̄(o|s)` stored as `table[s][o]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AbstractTable<T> {
    pub table: Vec<Vec<T>>,
}

impl<T: Scalar> ObservationTable<T> for AbstractTable<T> {
    fn likelihood(&self, o: usize, s: usize) -> T {
        self.table[s][o]
    }
}

/// Shannon entropy in nats; `0 log 0 = 0`.
pub fn shannon_entropy<T: Scalar>(p: &[T]) -> T {
    -p.iter()
        .filter(|v| **v > T::zero())
        .fold(T::zero(), |acc, v| acc + *v * v.ln())
}

fn sample_categorical<T: Scalar, R: Rng + ?Sized>(row: &[T], rng: &mut R) -> usize {
    let u = unit_uniform::<T, _>(rng);
    let mut c = T::zero();
    for (i, p) in row.iter().enumerate() {
        c = c + *p;
        if u < c {
            return i;
        }
    }
    row.iter().rposition(|p| *p > T::zero()).unwrap_or(row.len() - 1)
}

impl<T: Scalar> PomdpModel<T> for DiscreteGridPomdp<T> {
    fn num_actions(&self) -> usize {
        self.n_actions
    }

    fn discount(&self) -> T {
        self.discount
    }

    fn sample_transition<R: Rng + ?Sized>(&self, s: &StateVec<T>, a: ActionId, rng: &mut R) -> StateVec<T> {
        let si = self.index_of(s, self.n_states).expect("state outside the table");
        self.state(sample_categorical(&self.transition[a.0][si], rng))
    }

    fn transition_density(&self, next: &StateVec<T>, s: &StateVec<T>, a: ActionId) -> T {
        match (self.index_of(s, self.n_states), self.index_of(next, self.n_states)) {
            (Some(si), Some(ni)) => self.transition[a.0][si][ni],
            _ => T::zero(),
        }
    }

    fn sample_observation<R: Rng + ?Sized>(&self, s: &StateVec<T>, rng: &mut R) -> ObservationVec<T> {
        let si = self.index_of(s, self.n_states).expect("state outside the table");
        self.obs(sample_categorical(&self.observation[si], rng))
    }

    fn observation_density(&self, o: &ObservationVec<T>, s: &StateVec<T>) -> T {
        match (self.index_of(s, self.n_states), self.index_of(o, self.n_obs)) {
            (Some(si), Some(oi)) => self.observation[si][oi],
            _ => T::zero(),
        }
    }

    fn state_reward(&self, s: &StateVec<T>, a: ActionId) -> T {
        let si = self.index_of(s, self.n_states).expect("state outside the table");
        self.reward[si][a.0]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn random_instances_are_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let m = DiscreteGridPomdp::<f64>::random(5, 6, 3, 0.2, &mut rng);
            m.validate().unwrap();
        }
    }

    #[test]
    fn uniform_observations_leave_the_belief_unchanged() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let mut m = DiscreteGridPomdp::<f64>::random(4, 3, 2, 0.0, &mut rng);
        for row in &mut m.observation {
            *row = vec![1.0 / 3.0; 3];
        }
        let pred = m.predict_exact(&m.b0, ActionId(1));
        for o in 0..3 {
            let post = m.posterior_exact(&pred, o, &m).unwrap();
            for (a, b) in post.iter().zip(&pred) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perfect_sensing_has_zero_expected_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut m = DiscreteGridPomdp::<f64>::random(4, 4, 2, 0.0, &mut rng);
        for (s, row) in m.observation.iter_mut().enumerate() {
            *row = (0..4).map(|o| if o == s { 1.0 } else { 0.0 }).collect();
        }
        let pred = m.predict_exact(&m.b0, ActionId(0));
        assert!(m.expected_entropy_exact(&pred, &m).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_branches_are_skipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut m = DiscreteGridPomdp::<f64>::random(3, 3, 1, 0.0, &mut rng);
        for row in &mut m.observation {
            *row = vec![0.5, 0.5, 0.0];
        }
        let pred = m.predict_exact(&m.b0, ActionId(0));
        assert!(m.posterior_exact(&pred, 2, &m).is_none());
        let h = m.expected_entropy_exact(&pred, &m);
        assert!((h - shannon_entropy(&pred)).abs() < 1e-12);
    }

    #[test]
    fn model_samplers_follow_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let m = DiscreteGridPomdp::<f64>::random(3, 4, 2, 0.3, &mut rng);
        for s in 0..3 {
            let next = m.sample_transition(&m.state(s), ActionId(1), &mut rng);
            assert!(m.transition_density(&next, &m.state(s), ActionId(1)) > 0.0);
            let o = m.sample_observation(&m.state(s), &mut rng);
            assert!(m.observation_density(&o, &m.state(s)) > 0.0);
        }
    }
}
