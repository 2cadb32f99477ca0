//! Online belief-space planning with information-theoretic rewards, sped up by
//! abstracting the observation model.
//!
//! The crate provides a weighted particle filter with a particle estimator of
//! the expected posterior entropy, an observation-clustering abstraction with
//! provable reward bounds, a sparse-sampling tree search that plans on the
//! abstract rewards and refines them only where the root decision needs it,
//! a PFT-DPW baseline, benchmark domains and slow reference evaluators.
//!
//! All numerics are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix `f64`.

pub mod abstraction;
pub mod domains;
pub mod error;
pub mod filter;
pub mod oracle;
pub mod planner;
pub mod pomdp;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type Belief = filter::ParticleBelief<f64>;
pub type Belief32 = filter::ParticleBelief<f32>;
pub type Predicted = filter::PredictedBelief<f64>;
pub type State = pomdp::StateVec<f64>;
pub type Observation = pomdp::ObservationVec<f64>;
pub type Spec = pomdp::RewardSpec<f64>;
pub type Config = planner::PlannerConfig<f64>;
pub type LightDark = domains::LightDark2D<f64>;
pub type LightDark32 = domains::LightDark2D<f32>;
pub type DiscretePomdp = domains::DiscreteGridPomdp<f64>;
