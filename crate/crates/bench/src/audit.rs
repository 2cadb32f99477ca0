//! Randomized checks of the abstraction guarantees against exact or
//! brute-force references.

use std::sync::Arc;
use std::time::Instant;

use infoplan_core::abstraction::{
    abstract_expected_entropy, abstract_expected_state_reward, build_abstract_model, ClusterPartition,
};
use infoplan_core::domains::{DiscreteGridPomdp, LightDark2D, LightDarkConfig, RestrictedActions};
use infoplan_core::filter::{
    expected_entropy_estimate, expected_state_reward_estimate, predict, sample_observation_set, ParticleBelief,
};
use infoplan_core::oracle::{abstract_tree_value, exact_tree_value, naive_abstract_expected_entropy, SampledBelief};
use infoplan_core::planner::{ActionSelection, Fsss, PlannerConfig};
use infoplan_core::pomdp::{ActionId, RewardSpec, StateVec};
use rand::seq::index::sample;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{AuditSettings, BenchConfig, Experiment};
use crate::error::Result;
use crate::record::TrialRecord;
use crate::seeds::{trial_rng, trial_seed};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CheckKind {
    /// `0 ≤ Ē[H] − E[H] ≤ ln K` by enumeration on a tabular model.
    EntropyGapDiscrete,
    /// The same inequality for the particle estimator.
    EntropyGapParticle,
    /// Abstract and exact expected state reward agree (tabular).
    StateRewardDiscrete,
    /// Abstract and exact expected state reward agree (particles).
    StateRewardParticle,
    /// Per-cluster abstract entropy equals the evaluation over all samples with `Z̄`.
    ClusterIdentity,
    /// `0 ≤ sign(w2)·(V̄ − V) ≤ d·|w2|·ln K` on a sparse-sampling tree.
    ValueGap,
    /// Fully refined planner bounds equal the oracle value of the same tree.
    OracleAgreement,
}

impl CheckKind {
    pub fn name(self) -> &'static str {
        match self {
            CheckKind::EntropyGapDiscrete => "entropy-gap-discrete",
            CheckKind::EntropyGapParticle => "entropy-gap-particle",
            CheckKind::StateRewardDiscrete => "state-reward-discrete",
            CheckKind::StateRewardParticle => "state-reward-particle",
            CheckKind::ClusterIdentity => "cluster-identity",
            CheckKind::ValueGap => "value-gap",
            CheckKind::OracleAgreement => "oracle-agreement",
        }
    }
}

/// One checked quantity: `lower − tol ≤ observed ≤ upper + tol`.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub kind: CheckKind,
    pub seed: u64,
    pub k: usize,
    pub lower: f64,
    pub observed: f64,
    pub upper: f64,
    pub tol: f64,
    pub wall_clock_s: f64,
    pub depth: usize,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.observed >= self.lower - self.tol && self.observed <= self.upper + self.tol
    }

    fn equality(kind: CheckKind, seed: u64, k: usize, difference: f64, tol: f64) -> Self {
        Check {
            kind,
            seed,
            k,
            lower: 0.0,
            observed: difference,
            upper: 0.0,
            tol,
            wall_clock_s: 0.0,
            depth: 1,
        }
    }

    pub fn to_record(&self) -> TrialRecord {
        TrialRecord {
            experiment: Experiment::BoundsAudit.name().into(),
            planner: self.kind.name().into(),
            seed: self.seed,
            sweep_value: self.k,
            wall_clock_s: self.wall_clock_s,
            chosen_action: None,
            total_return: Some(self.upper),
            steps: self.depth,
            bound_gap_root: Some(self.observed),
        }
    }
}

pub const SLACK: f64 = 1e-9;
pub const CLUSTER_IDENTITY_TOL: f64 = 1e-12;

/// Instance `index` cycles through the cluster sizes.
fn k_for(index: u64, ks: &[usize]) -> usize {
    ks[index as usize % ks.len()]
}

/// Entropy gap and state-reward equality on one random tabular instance.
pub fn discrete_instance(seed: u64, k: usize) -> Result<[Check; 2]> {
    let mut rng = trial_rng(seed, 0);
    let n_states = rng.random_range(2..=6);
    let clusters = rng.random_range(1..=3);
    let sparsity = rng.random_range(0.0..0.6);
    let m = DiscreteGridPomdp::<f64>::random(n_states, clusters * k, 1, sparsity, &mut rng);
    let partition = ClusterPartition::new(clusters, k)?;
    let table = m.abstract_table(&partition)?;
    let pred = m.predict_exact(&m.b0, ActionId(0));
    let gap = m.expected_entropy_exact(&pred, &table) - m.expected_entropy_exact(&pred, &m);
    let reward_diff = m.expected_state_reward_exact(&pred, ActionId(0), &table)
        - m.expected_state_reward_exact(&pred, ActionId(0), &m);
    Ok([
        Check {
            kind: CheckKind::EntropyGapDiscrete,
            seed,
            k,
            lower: 0.0,
            observed: gap,
            upper: (k as f64).ln(),
            tol: SLACK,
            wall_clock_s: 0.0,
            depth: 1,
        },
        Check::equality(CheckKind::StateRewardDiscrete, seed, k, reward_diff, SLACK),
    ])
}

/// A random weighted particle cloud in the Light-Dark map.
fn random_belief(n: usize, rng: &mut ChaCha8Rng) -> Result<ParticleBelief<f64>> {
    let center = [rng.random_range(-1.0..8.0), rng.random_range(-1.0..8.0)];
    let spread = rng.random_range(0.2..2.0);
    let states = (0..n)
        .map(|_| {
            StateVec::new([
                center[0] + spread * rng.random_range(-1.0..1.0),
                center[1] + spread * rng.random_range(-1.0..1.0),
            ])
        })
        .collect();
    let raw = (0..n).map(|_| rng.random_range(0.05..1.0)).collect();
    Ok(ParticleBelief::from_unnormalized(states, raw, 0)?)
}

/// Entropy gap, state-reward equality and the per-cluster identity on one
/// random particle instance of Light-Dark.
pub fn particle_instance(model: &LightDark2D<f64>, settings: &AuditSettings, seed: u64, k: usize) -> Result<[Check; 3]> {
    let mut rng = trial_rng(seed, 0);
    let n = rng.random_range(2..=settings.max_particles);
    let clusters = rng.random_range(1..=(settings.max_observations / k).max(1));
    let a = ActionId(rng.random_range(0..9));
    let belief = Arc::new(random_belief(n, &mut rng)?);
    let bp = predict(&belief, a, model, &mut rng);
    let obs = sample_observation_set(&bp, clusters * k, model, &mut rng)?;
    let partition = ClusterPartition::new(clusters, k)?;
    let amodel = build_abstract_model(&bp, &obs, partition, model)?;
    let exact = expected_entropy_estimate(&bp, &obs, model)?;
    let abs = abstract_expected_entropy(&bp, &amodel, model)?;
    let r_exact = expected_state_reward_estimate(&bp, &obs, a, model)?;
    let r_abs = abstract_expected_state_reward(&bp, &amodel, a, model)?;
    let expanded = naive_abstract_expected_entropy(&bp, &obs, partition, model);
    Ok([
        Check {
            kind: CheckKind::EntropyGapParticle,
            seed,
            k,
            lower: 0.0,
            observed: abs - exact,
            upper: (k as f64).ln(),
            tol: SLACK,
            wall_clock_s: 0.0,
            depth: 1,
        },
        Check::equality(CheckKind::StateRewardParticle, seed, k, r_abs - r_exact, SLACK),
        Check::equality(CheckKind::ClusterIdentity, seed, k, abs - expanded, CLUSTER_IDENTITY_TOL),
    ])
}

/// Shape of a random small tree.
#[derive(Debug, Clone)]
pub struct TreeShape {
    pub depth: usize,
    pub actions: Vec<ActionId>,
    pub clusters: usize,
    pub k: usize,
    pub particles: usize,
    pub gamma: f64,
    pub spec: RewardSpec<f64>,
}

impl TreeShape {
    pub fn branching(&self) -> usize {
        self.clusters * self.k
    }

    /// Action nodes times the cost of one exact reward.
    pub fn work(&self) -> usize {
        let per_level = self.actions.len() * self.branching();
        let action_nodes: usize = (0..self.depth).map(|l| per_level.pow(l as u32) * self.actions.len()).sum();
        action_nodes * self.branching() * self.particles * self.particles
    }

    /// Random shape within the caps; depth and particle count shrink until
    /// the tree fits the work limit.
    pub fn random(settings: &AuditSettings, k: usize, rng: &mut ChaCha8Rng) -> Self {
        let n_actions = rng.random_range(1..=settings.max_actions.min(9));
        let actions = sample(rng, 9, n_actions).into_iter().map(ActionId).collect();
        let omega2 = [-1.0, -0.5, 0.5, 1.0, 2.0][rng.random_range(0..5)];
        let omega1 = [0.0, 0.5, 1.0][rng.random_range(0..3)];
        let mut shape = TreeShape {
            depth: rng.random_range(1..=settings.max_depth),
            actions,
            clusters: rng.random_range(1..=(settings.max_observations / k).max(1)),
            k,
            particles: rng.random_range(2..=settings.max_particles),
            gamma: if rng.random_bool(0.5) { 1.0 } else { 0.95 },
            spec: RewardSpec::new(omega1, omega2).expect("omega2 is nonzero"),
        };
        while shape.work() > settings.max_tree_work {
            if shape.particles > 4 {
                shape.particles = shape.particles * 3 / 4;
            } else if shape.depth > 1 {
                shape.depth -= 1;
            } else {
                break;
            }
        }
        shape
    }
}

fn tree_model(shape: &TreeShape) -> Result<RestrictedActions<LightDark2D<f64>>> {
    Ok(RestrictedActions::new(
        LightDark2D::new(LightDarkConfig::default())?,
        shape.actions.clone(),
    ))
}

/// Sparse-sampling tree value with abstract versus exact rewards.
pub fn value_gap_instance(settings: &AuditSettings, seed: u64, k: usize) -> Result<Check> {
    let start = Instant::now();
    let mut rng = trial_rng(seed, 0);
    let shape = TreeShape::random(settings, k, &mut rng);
    let model = tree_model(&shape)?;
    let root = Arc::new(random_belief(shape.particles, &mut rng)?);
    let tree = SampledBelief::generate(&model, root, shape.depth, shape.branching(), &mut rng)?;
    let exact = exact_tree_value(&tree, &model, &shape.spec, shape.gamma);
    let abs = abstract_tree_value(&tree, &model, &shape.spec, shape.gamma, k)?;
    let w2 = shape.spec.omega2;
    Ok(Check {
        kind: CheckKind::ValueGap,
        seed,
        k,
        lower: 0.0,
        observed: w2.signum() * (abs.value - exact.value),
        upper: shape.depth as f64 * w2.abs() * (k as f64).ln(),
        tol: SLACK,
        wall_clock_s: start.elapsed().as_secs_f64(),
        depth: shape.depth,
    })
}

/// Planner bounds after full refinement of an exhaustively built tree
/// against the oracle value of that same tree.
pub fn oracle_agreement_instance(settings: &AuditSettings, seed: u64, k: usize) -> Result<Check> {
    let start = Instant::now();
    let mut rng = trial_rng(seed, 0);
    let shape = TreeShape::random(settings, k, &mut rng);
    let model = tree_model(&shape)?;
    let root = Arc::new(random_belief(shape.particles, &mut rng)?);
    let cfg = PlannerConfig {
        iterations: (shape.actions.len() * shape.branching()).pow(shape.depth as u32),
        depth: shape.depth,
        clusters: shape.clusters,
        cluster_size: k,
        gamma: Some(shape.gamma),
        spec: shape.spec,
        rollouts: false,
        selection: ActionSelection::LeastVisited,
        ..Default::default()
    };
    let mut tree = Fsss::new(cfg, &model)?.build(root, &mut rng)?;
    tree.refine_all()?;
    let sampled = SampledBelief::from_planner(tree.root())?;
    let v = exact_tree_value(&sampled, &model, &shape.spec, shape.gamma).value;
    let dev = (tree.root().lower() - v).abs().max((tree.root().upper() - v).abs());
    Ok(Check {
        kind: CheckKind::OracleAgreement,
        seed,
        k,
        lower: 0.0,
        observed: dev,
        upper: 0.0,
        tol: SLACK,
        wall_clock_s: start.elapsed().as_secs_f64(),
        depth: shape.depth,
    })
}

/// Runs `count` instances of one check family; instance `i` uses
/// `trial_seed(master ^ salt, i)` and the `i`-th cluster size in rotation.
fn family<F>(count: usize, master: u64, salt: u64, ks: &[usize], f: F) -> Result<Vec<Check>>
where
    F: Fn(u64, usize) -> Result<Vec<Check>> + Sync,
{
    let nested: Vec<Vec<Check>> = (0..count as u64)
        .into_par_iter()
        .map(|i| f(trial_seed(master ^ salt, i), k_for(i, ks)))
        .collect::<Result<_>>()?;
    Ok(nested.into_iter().flatten().collect())
}

pub fn discrete_checks(count: usize, master: u64, ks: &[usize]) -> Result<Vec<Check>> {
    family(count, master, 0x01, ks, |seed, k| Ok(discrete_instance(seed, k)?.to_vec()))
}

pub fn particle_checks(settings: &AuditSettings, count: usize, master: u64, ks: &[usize]) -> Result<Vec<Check>> {
    let model = LightDark2D::new(LightDarkConfig::default())?;
    family(count, master, 0x02, ks, |seed, k| Ok(particle_instance(&model, settings, seed, k)?.to_vec()))
}

pub fn value_gap_checks(settings: &AuditSettings, count: usize, master: u64, ks: &[usize]) -> Result<Vec<Check>> {
    family(count, master, 0x03, ks, |seed, k| Ok(vec![value_gap_instance(settings, seed, k)?]))
}

pub fn oracle_checks(settings: &AuditSettings, count: usize, master: u64, ks: &[usize]) -> Result<Vec<Check>> {
    family(count, master, 0x04, ks, |seed, k| Ok(vec![oracle_agreement_instance(settings, seed, k)?]))
}

#[derive(Debug, Clone)]
pub struct AuditOutcome {
    pub checks: Vec<Check>,
}

impl AuditOutcome {
    pub fn violations(&self) -> usize {
        self.checks.iter().filter(|c| !c.passed()).count()
    }

    pub fn records(&self) -> Vec<TrialRecord> {
        self.checks.iter().map(Check::to_record).collect()
    }

    /// Per check family: `(kind, count, violations, max observed, max upper)`.
    pub fn summary(&self) -> Vec<(CheckKind, usize, usize, f64, f64)> {
        let mut kinds: Vec<CheckKind> = self.checks.iter().map(|c| c.kind).collect();
        kinds.sort();
        kinds.dedup();
        kinds
            .into_iter()
            .map(|kind| {
                let of: Vec<&Check> = self.checks.iter().filter(|c| c.kind == kind).collect();
                let bad = of.iter().filter(|c| !c.passed()).count();
                let max_obs = of.iter().map(|c| c.observed.abs()).fold(0.0, f64::max);
                let max_up = of.iter().map(|c| c.upper).fold(0.0, f64::max);
                (kind, of.len(), bad, max_obs, max_up)
            })
            .collect()
    }
}

pub fn run_bounds_audit(cfg: &BenchConfig, master: u64) -> Result<AuditOutcome> {
    let s = &cfg.audit;
    let ks = &cfg.sweep;
    let mut checks = discrete_checks(s.discrete_instances, master, ks)?;
    checks.extend(particle_checks(s, s.particle_instances, master, ks)?);
    checks.extend(value_gap_checks(s, s.value_trees, master, ks)?);
    checks.extend(oracle_checks(s, s.oracle_trees, master, ks)?);
    Ok(AuditOutcome { checks })
}
