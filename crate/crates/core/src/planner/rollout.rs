use std::sync::Arc;

use rand::Rng;

use super::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::filter::{posterior, predict, sample_observation_set, ParticleBelief};
use crate::abstraction::exact_expected_reward;
use crate::pomdp::{ActionId, PomdpModel};
use crate::scalar::Scalar;

/// Discounted return of a uniformly random policy run for `steps` steps from
/// `belief`, scoring each step with the single-sample expected reward.
pub fn rollout_from_belief<T, M, R>(
    belief: Arc<ParticleBelief<T>>,
    steps: usize,
    model: &M,
    cfg: &PlannerConfig<T>,
    gamma: T,
    rng: &mut R,
) -> Result<T>
where
    T: Scalar,
    M: PomdpModel<T>,
    R: Rng + ?Sized,
{
    let mut b = belief;
    let mut total = T::zero();
    let mut discount = T::one();
    for _ in 0..steps {
        let a = ActionId(rng.random_range(0..model.num_actions()));
        let bp = predict(&b, a, model, rng);
        let mut next = None;
        for _ in 0..=cfg.max_observation_retries {
            let o = sample_observation_set(&bp, 1, model, rng)?;
            match posterior(&bp, &o[0], model) {
                Ok(post) => {
                    let r = exact_expected_reward(&bp, &o, model, &cfg.spec)?;
                    next = Some((post, r.value));
                    break;
                }
                Err(Error::DegenerateBelief(_)) => continue,
                Err(e) => return Err(e),
            }
        }
        let Some((post, r)) = next else {
            return Err(Error::DegenerateBelief("rollout could not draw a usable observation"));
        };
        total = total + discount * r;
        discount = discount * gamma;
        b = Arc::new(post);
    }
    Ok(total)
}
