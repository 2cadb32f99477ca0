#![allow(dead_code)]

use std::sync::Arc;

use infoplan_core::domains::{DiscreteGridPomdp, LinearGaussian};
use infoplan_core::filter::{predict, ParticleBelief, PredictedBelief};
use infoplan_core::pomdp::{ActionId, StateVec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Three states that never move, with the given observation table.
pub fn static_tabular(observation: Vec<Vec<f64>>) -> DiscreteGridPomdp<f64> {
    let n = observation.len();
    let n_obs = observation[0].len();
    let identity: Vec<Vec<f64>> = (0..n).map(|s| (0..n).map(|t| if s == t { 1.0 } else { 0.0 }).collect()).collect();
    DiscreteGridPomdp {
        n_states: n,
        n_obs,
        n_actions: 1,
        transition: vec![identity],
        observation,
        reward: (0..n).map(|s| vec![s as f64]).collect(),
        b0: vec![1.0 / n as f64; n],
        discount: 1.0,
    }
}

pub fn gaussian_2d() -> LinearGaussian<f64> {
    LinearGaussian::new(
        vec![
            StateVec::new([1.0, 0.0]),
            StateVec::new([0.0, 1.0]),
            StateVec::new([-1.0, 0.0]),
        ],
        vec![0.3, 0.3],
        vec![0.5, 0.8],
        StateVec::new([3.0, 3.0]),
    )
    .unwrap()
}

/// Gaussian particle cloud with random (unnormalized) weights.
pub fn random_cloud<R: Rng>(n: usize, dim: usize, rng: &mut R) -> ParticleBelief<f64> {
    let states = (0..n)
        .map(|_| StateVec::new((0..dim).map(|_| rng.random_range(-2.0..2.0))))
        .collect();
    let raw = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    ParticleBelief::from_unnormalized(states, raw, 0).unwrap()
}

pub fn predicted_cloud<R: Rng>(n: usize, rng: &mut R) -> PredictedBelief<f64> {
    let model = gaussian_2d();
    let b = Arc::new(random_cloud(n, 2, rng));
    predict(&b, ActionId(0), &model, rng)
}
