//! Two-dimensional Light-Dark localization domain.
//!
//! The agent moves one unit along one of eight evenly spaced headings
//! (action `k` points at angle `2πk/8`) or stays put (action 8). Motion noise
//! is Gaussian with covariance `w_cov`. Observations are the position plus
//! isotropic Gaussian noise whose scale grows with the distance to the nearest
//! beacon: `σ(x) = v_base · (min_b ‖x − b‖ + eps_light)`.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::filter::{transition_entropy, ParticleBelief};
use crate::pomdp::{compose_reward, ActionId, ObservationVec, PomdpModel, RewardSpec, StateVec};
use crate::scalar::{standard_normal, Scalar};

pub const ACTION_COUNT: usize = 9;
pub const NULL_ACTION: ActionId = ActionId(8);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: [f64; 2],
    pub max: [f64; 2],
}

impl Rect {
    pub fn contains<T: Scalar>(&self, p: &[T]) -> bool {
        let (x, y) = (p[0].as_f64(), p[1].as_f64());
        x >= self.min[0] && x <= self.max[0] && y >= self.min[1] && y <= self.max[1]
    }
}

/// JSON-facing description of a Light-Dark map. Every field has a default;
/// apart from `horizon` the defaults are fixtures, not calibrated values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightDarkConfig {
    pub prior_mean: [f64; 2],
    pub sigma0: [[f64; 2]; 2],
    pub goal: [f64; 2],
    pub goal_radius: f64,
    pub beacons: Vec<[f64; 2]>,
    pub w_cov: [[f64; 2]; 2],
    pub v_base: f64,
    pub eps_light: f64,
    /// Enables forbidden regions and the goal bonus.
    pub obstacles: bool,
    pub forbidden: Vec<Rect>,
    pub obstacle_penalty: f64,
    pub goal_bonus: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub discount: f64,
    pub horizon: usize,
}

impl Default for LightDarkConfig {
    fn default() -> Self {
        Self {
            prior_mean: [0.0, 0.0],
            sigma0: [[1.0, 0.0], [0.0, 1.0]],
            goal: [6.0, 6.0],
            goal_radius: 1.0,
            beacons: vec![[-1.0, 4.0], [4.0, -1.0], [7.0, 7.0]],
            w_cov: [[0.1, 0.0], [0.0, 0.1]],
            v_base: 0.5,
            eps_light: 0.1,
            obstacles: false,
            forbidden: vec![Rect {
                min: [2.0, 2.0],
                max: [4.0, 4.0],
            }],
            obstacle_penalty: 10.0,
            goal_bonus: 10.0,
            omega1: 1.0,
            omega2: -1.0,
            discount: 1.0,
            horizon: 25,
        }
    }
}

impl LightDarkConfig {
    pub fn from_json_str(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::InvalidConfig(e.to_string()))
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())
            .map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.as_ref().display())))?;
        Self::from_json_str(&text)
    }

    /// Same map with forbidden regions and the goal bonus switched on.
    pub fn with_obstacles(mut self) -> Self {
        self.obstacles = true;
        self
    }
}

/// Covariance of a 2D Gaussian with its Cholesky factor, precision and normalizer.
#[derive(Debug, Clone, Copy)]
struct Gauss2<T> {
    chol: [[T; 2]; 2],
    precision: [[T; 2]; 2],
    norm: T,
    singular: bool,
}

impl<T: Scalar> Gauss2<T> {
    fn new(cov: [[f64; 2]; 2], what: &str) -> Result<Self> {
        let [[a, b], [c, d]] = cov;
        if cov.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig(format!("{what}: non-finite entry")));
        }
        if (b - c).abs() > 1e-12 {
            return Err(Error::InvalidConfig(format!("{what}: not symmetric")));
        }
        let det = a * d - b * c;
        if a < 0.0 || d < 0.0 || det < -1e-15 {
            return Err(Error::InvalidConfig(format!("{what}: not positive semidefinite")));
        }
        let l00 = a.sqrt();
        let l10 = if l00 > 0.0 { b / l00 } else { 0.0 };
        let l11 = (d - l10 * l10).max(0.0).sqrt();
        let singular = det <= 0.0;
        let (precision, norm) = if singular {
            ([[0.0, 0.0], [0.0, 0.0]], 0.0)
        } else {
            ([[d / det, -b / det], [-c / det, a / det]], 1.0 / (2.0 * PI * det.sqrt()))
        };
        let lit = |m: [[f64; 2]; 2]| [[T::lit(m[0][0]), T::lit(m[0][1])], [T::lit(m[1][0]), T::lit(m[1][1])]];
        Ok(Self {
            chol: lit([[l00, 0.0], [l10, l11]]),
            precision: lit(precision),
            norm: T::lit(norm),
            singular,
        })
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> [T; 2] {
        let z0 = standard_normal::<T, _>(rng);
        let z1 = standard_normal::<T, _>(rng);
        [self.chol[0][0] * z0, self.chol[1][0] * z0 + self.chol[1][1] * z1]
    }

    fn density(&self, dx: T, dy: T) -> T {
        if self.singular {
            return if dx == T::zero() && dy == T::zero() {
                T::infinity()
            } else {
                T::zero()
            };
        }
        let p = &self.precision;
        let quad = dx * (p[0][0] * dx + p[0][1] * dy) + dy * (p[1][0] * dx + p[1][1] * dy);
        self.norm * (-quad / T::lit(2.0)).exp()
    }
}

/// Where a belief reward is evaluated: inside the planner (expectations over
/// the belief) or while executing against the true state.
#[derive(Debug, Clone, Copy)]
pub enum RewardContext<'a, T> {
    Planning,
    Execution { true_state: &'a StateVec<T>, terminal: bool },
}

#[derive(Debug, Clone)]
pub struct LightDark2D<T> {
    config: LightDarkConfig,
    goal: StateVec<T>,
    beacons: Vec<StateVec<T>>,
    directions: [[T; 2]; ACTION_COUNT],
    prior: Gauss2<T>,
    motion: Gauss2<T>,
    v_base: T,
    eps_light: T,
    spec: RewardSpec<T>,
}

impl<T: Scalar> LightDark2D<T> {
    pub fn new(config: LightDarkConfig) -> Result<Self> {
        if config.beacons.is_empty() {
            return Err(Error::InvalidConfig("at least one beacon is required".into()));
        }
        if !(config.v_base >= 0.0) || !(config.eps_light >= 0.0) {
            return Err(Error::InvalidConfig("v_base and eps_light must be nonnegative".into()));
        }
        if !(config.discount > 0.0 && config.discount <= 1.0) {
            return Err(Error::InvalidConfig("discount must lie in (0, 1]".into()));
        }
        if config.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be positive".into()));
        }
        let spec = RewardSpec::new(T::lit(config.omega1), T::lit(config.omega2))?;
        let prior = Gauss2::new(config.sigma0, "sigma0")?;
        let motion = Gauss2::new(config.w_cov, "w_cov")?;
        let mut directions = [[T::zero(); 2]; ACTION_COUNT];
        for (k, dir) in directions.iter_mut().enumerate().take(8) {
            let angle = 2.0 * PI * k as f64 / 8.0;
            *dir = [T::lit(angle.cos()), T::lit(angle.sin())];
        }
        Ok(Self {
            goal: StateVec::new(config.goal.map(T::lit)),
            beacons: config.beacons.iter().map(|b| StateVec::new(b.map(T::lit))).collect(),
            directions,
            prior,
            motion,
            v_base: T::lit(config.v_base),
            eps_light: T::lit(config.eps_light),
            spec,
            config,
        })
    }

    pub fn config(&self) -> &LightDarkConfig {
        &self.config
    }

    pub fn reward_spec(&self) -> RewardSpec<T> {
        self.spec
    }

    pub fn goal(&self) -> &StateVec<T> {
        &self.goal
    }

    pub fn horizon(&self) -> usize {
        self.config.horizon
    }

    /// Unit translation of an action (zero for the null action).
    pub fn direction(&self, a: ActionId) -> [T; 2] {
        self.directions[a.0]
    }

    /// Observation noise scale at `x`.
    pub fn noise_scale(&self, x: &[T]) -> T {
        let nearest = self
            .beacons
            .iter()
            .map(|b| b.distance(x))
            .fold(T::infinity(), T::min);
        self.v_base * (nearest + self.eps_light)
    }

    pub fn in_forbidden(&self, x: &[T]) -> bool {
        self.config.forbidden.iter().any(|r| r.contains(x))
    }

    pub fn in_goal(&self, x: &[T]) -> bool {
        self.goal.distance(x) <= T::lit(self.config.goal_radius)
    }

    pub fn sample_initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> StateVec<T> {
        let [dx, dy] = self.prior.sample(rng);
        StateVec::new([T::lit(self.config.prior_mean[0]) + dx, T::lit(self.config.prior_mean[1]) + dy])
    }

    /// `n` equally weighted particles drawn from the Gaussian prior.
    pub fn sample_prior<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Result<ParticleBelief<T>> {
        ParticleBelief::uniform((0..n).map(|_| self.sample_initial_state(rng)).collect())
    }

    /// Per-step belief reward `w1 · E[-‖x − x_g‖ + variant terms] + w2 · H(next)`.
    ///
    /// In planning the obstacle penalty and goal bonus enter as expected
    /// indicators over `next`; in execution they are read off the true state,
    /// the goal bonus only on the terminal step.
    pub fn belief_reward(
        &self,
        prev: &Arc<ParticleBelief<T>>,
        a: ActionId,
        next: &ParticleBelief<T>,
        ctx: RewardContext<'_, T>,
    ) -> Result<T> {
        let mut state_term = next.expectation(|s| -self.goal.distance(s));
        if self.config.obstacles {
            let penalty = T::lit(self.config.obstacle_penalty);
            let bonus = T::lit(self.config.goal_bonus);
            match ctx {
                RewardContext::Planning => {
                    state_term = state_term - penalty * next.expectation(|s| indicator(self.in_forbidden(s)));
                    state_term = state_term + bonus * next.expectation(|s| indicator(self.in_goal(s)));
                }
                RewardContext::Execution { true_state, terminal } => {
                    if self.in_forbidden(true_state) {
                        state_term = state_term - penalty;
                    }
                    if terminal && self.in_goal(true_state) {
                        state_term = state_term + bonus;
                    }
                }
            }
        }
        let entropy = if self.spec.omega2 == T::zero() {
            T::zero()
        } else {
            transition_entropy(prev, a, next, self)?
        };
        compose_reward(state_term, entropy, &self.spec)
    }
}

fn indicator<T: Scalar>(b: bool) -> T {
    if b {
        T::one()
    } else {
        T::zero()
    }
}

impl<T: Scalar> PomdpModel<T> for LightDark2D<T> {
    fn num_actions(&self) -> usize {
        ACTION_COUNT
    }

    fn discount(&self) -> T {
        T::lit(self.config.discount)
    }

    fn sample_transition<R: Rng + ?Sized>(&self, s: &StateVec<T>, a: ActionId, rng: &mut R) -> StateVec<T> {
        let [ux, uy] = self.direction(a);
        let [wx, wy] = self.motion.sample(rng);
        StateVec::new([s[0] + ux + wx, s[1] + uy + wy])
    }

    fn transition_density(&self, next: &StateVec<T>, s: &StateVec<T>, a: ActionId) -> T {
        let [ux, uy] = self.direction(a);
        self.motion.density(next[0] - s[0] - ux, next[1] - s[1] - uy)
    }

    fn sample_observation<R: Rng + ?Sized>(&self, s: &StateVec<T>, rng: &mut R) -> ObservationVec<T> {
        let sigma = self.noise_scale(s);
        let vx = standard_normal::<T, _>(rng);
        let vy = standard_normal::<T, _>(rng);
        ObservationVec::new([s[0] + sigma * vx, s[1] + sigma * vy])
    }

    fn observation_density(&self, o: &ObservationVec<T>, s: &StateVec<T>) -> T {
        let sigma = self.noise_scale(s);
        let d2 = o.distance_sq(s);
        if sigma == T::zero() {
            return if d2 == T::zero() { T::infinity() } else { T::zero() };
        }
        let var = sigma * sigma;
        (-d2 / (T::lit(2.0) * var)).exp() / (T::lit(2.0 * PI) * var)
    }

    fn state_reward(&self, s: &StateVec<T>, _a: ActionId) -> T {
        let mut r = -self.goal.distance(s);
        if self.config.obstacles {
            if self.in_forbidden(s) {
                r = r - T::lit(self.config.obstacle_penalty);
            }
            if self.in_goal(s) {
                r = r + T::lit(self.config.goal_bonus);
            }
        }
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn quiet() -> LightDark2D<f64> {
        LightDark2D::new(LightDarkConfig {
            w_cov: [[0.0, 0.0], [0.0, 0.0]],
            ..LightDarkConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn null_action_keeps_position_without_noise() {
        let m = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = StateVec::new([1.5, -2.0]);
        assert_eq!(m.sample_transition(&x, NULL_ACTION, &mut rng), x);
    }

    #[test]
    fn action_zero_moves_along_x() {
        let m = quiet();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = StateVec::new([1.0, 1.0]);
        let y = m.sample_transition(&x, ActionId(0), &mut rng);
        assert_eq!(y, StateVec::new([2.0, 1.0]));
        let diag = m.sample_transition(&x, ActionId(1), &mut rng);
        assert!((diag[0] - (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
        assert!((diag[1] - (1.0 + 0.5f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn noisy_transition_is_reproducible() {
        let m = LightDark2D::<f64>::new(LightDarkConfig::default()).unwrap();
        let x = StateVec::new([0.0, 0.0]);
        let run = |seed| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..5).map(|k| m.sample_transition(&x, ActionId(k), &mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(run(9), run(9));
        assert_ne!(run(9), run(10));
    }

    #[test]
    fn noise_scale_on_a_beacon() {
        let m = LightDark2D::<f64>::new(LightDarkConfig {
            v_base: 1.0,
            eps_light: 0.1,
            beacons: vec![[3.0, 3.0]],
            ..LightDarkConfig::default()
        })
        .unwrap();
        assert!((m.noise_scale(&[3.0, 3.0]) - 0.1).abs() < 1e-15);
        assert!((m.noise_scale(&[3.0, 5.0]) - 2.1).abs() < 1e-12);
    }

    #[test]
    fn zero_observation_noise_returns_position() {
        let m = LightDark2D::<f64>::new(LightDarkConfig {
            v_base: 0.0,
            ..LightDarkConfig::default()
        })
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = StateVec::new([2.5, 1.0]);
        assert_eq!(&m.sample_observation(&x, &mut rng)[..], &x[..]);
    }

    #[test]
    fn observation_density_peak_is_gaussian_normalizer() {
        let m = LightDark2D::<f64>::new(LightDarkConfig::default()).unwrap();
        let x = StateVec::new([1.0, 2.0]);
        let sigma = m.noise_scale(&x);
        let o = ObservationVec::new([1.0, 2.0]);
        let expected = 1.0 / (2.0 * PI * sigma * sigma);
        assert!((m.observation_density(&o, &x) - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn rejects_bad_covariance() {
        let bad = LightDarkConfig {
            w_cov: [[1.0, 2.0], [2.0, 1.0]],
            ..LightDarkConfig::default()
        };
        assert!(LightDark2D::<f64>::new(bad).is_err());
        let asym = LightDarkConfig {
            sigma0: [[1.0, 0.1], [0.0, 1.0]],
            ..LightDarkConfig::default()
        };
        assert!(LightDark2D::<f64>::new(asym).is_err());
    }

    #[test]
    fn reward_at_goal_with_single_certain_particle() {
        // Motion covariance chosen so the transition density peaks at exactly 1.
        let v = 1.0 / (2.0 * PI);
        let cfg = LightDarkConfig {
            w_cov: [[v, 0.0], [0.0, v]],
            ..LightDarkConfig::default()
        };
        let goal = cfg.goal;
        let m = LightDark2D::<f64>::new(cfg.clone()).unwrap();
        let prev = Arc::new(ParticleBelief::uniform(vec![StateVec::new(goal)]).unwrap());
        let next = ParticleBelief::uniform(vec![StateVec::new(goal)]).unwrap();
        let r = m.belief_reward(&prev, NULL_ACTION, &next, RewardContext::Planning).unwrap();
        assert!(r.abs() < 1e-12, "{r}");

        let mo = LightDark2D::<f64>::new(cfg.with_obstacles()).unwrap();
        let r = mo.belief_reward(&prev, NULL_ACTION, &next, RewardContext::Planning).unwrap();
        assert!((r - 10.0).abs() < 1e-12);
        let truth = StateVec::new(goal);
        let exec = |terminal| RewardContext::Execution {
            true_state: &truth,
            terminal,
        };
        assert!(mo.belief_reward(&prev, NULL_ACTION, &next, exec(false)).unwrap().abs() < 1e-12);
        assert!((mo.belief_reward(&prev, NULL_ACTION, &next, exec(true)).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn expected_distance_and_forbidden_mass() {
        let m = LightDark2D::<f64>::new(LightDarkConfig {
            omega2: 0.0,
            ..LightDarkConfig::default()
        })
        .unwrap();
        let g = m.goal().clone();
        let b = ParticleBelief::uniform(vec![
            StateVec::new([g[0] + 1.0, g[1]]),
            StateVec::new([g[0], g[1] - 3.0]),
        ])
        .unwrap();
        let prev = Arc::new(b.clone());
        let r = m.belief_reward(&prev, NULL_ACTION, &b, RewardContext::Planning).unwrap();
        assert!((r + 2.0).abs() < 1e-12);

        let mo = LightDark2D::<f64>::new(LightDarkConfig {
            omega2: 0.0,
            goal: [20.0, 20.0],
            ..LightDarkConfig::default()
        }
        .with_obstacles())
        .unwrap();
        let inside = StateVec::new([3.0, 3.0]);
        let outside = StateVec::new([20.0, 17.0]);
        let b = ParticleBelief::new(vec![inside.clone(), outside.clone()], vec![0.3, 0.7], 0).unwrap();
        let prev = Arc::new(b.clone());
        let r = mo.belief_reward(&prev, NULL_ACTION, &b, RewardContext::Planning).unwrap();
        let dist = 0.3 * mo.goal().distance(&inside) + 0.7 * 3.0;
        assert!((r - (-dist - 0.3 * 10.0)).abs() < 1e-12, "{r}");
    }

    #[test]
    fn config_json_defaults_and_unknown_fields() {
        let cfg = LightDarkConfig::from_json_str(r#"{"goal": [3.0, 4.0], "obstacles": true}"#).unwrap();
        assert_eq!(cfg.goal, [3.0, 4.0]);
        assert_eq!(cfg.horizon, 25);
        assert!(LightDarkConfig::from_json_str(r#"{"gaol": [1, 2]}"#).is_err());
    }
}
