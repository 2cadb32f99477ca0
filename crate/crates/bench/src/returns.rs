//! Receding-horizon episodes on the obstacle variant of Light-Dark: every
//! step plans from scratch on the current belief, executes the action on the
//! hidden true state and updates the belief with the received observation.

use std::sync::Arc;
use std::time::Instant;

use infoplan_core::domains::{LightDark2D, RewardContext};
use infoplan_core::filter::{posterior, predict};
use infoplan_core::planner::{plan, PlannerConfig, PlannerKind};
use infoplan_core::pomdp::PomdpModel;
use rayon::prelude::*;

use crate::config::{BenchConfig, Experiment};
use crate::error::Result;
use crate::record::TrialRecord;
use crate::seeds::{trial_rng, trial_seed, ENV_STREAM, PLANNER_STREAM};
use crate::stats::{mean, std_dev, std_err};

const PRIOR_STREAM: u64 = 2;
const FILTER_STREAM: u64 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub total_return: f64,
    pub steps: usize,
    pub first_action: usize,
    /// Steps whose observation had zero likelihood under every particle; the
    /// belief then keeps the prediction.
    pub unusable_observations: usize,
}

/// One episode. The true-state noise, the initial particles and the planner
/// randomness come from separate streams of `seed`, so different planners
/// face the same prior and the same noise sequence.
pub fn run_episode(
    model: &LightDark2D<f64>,
    kind: PlannerKind,
    cfg: &PlannerConfig<f64>,
    particles: usize,
    seed: u64,
) -> Result<Episode> {
    let mut env = trial_rng(seed, ENV_STREAM);
    let mut planner_rng = trial_rng(seed, PLANNER_STREAM);
    let mut filter_rng = trial_rng(seed, FILTER_STREAM);
    let mut x = model.sample_initial_state(&mut env);
    let mut belief = Arc::new(model.sample_prior(particles, &mut trial_rng(seed, PRIOR_STREAM))?);
    let horizon = model.horizon();
    let gamma: f64 = model.discount();
    let mut total = 0.0;
    let mut discount = 1.0;
    let mut first_action = None;
    let mut unusable = 0;
    for t in 0..horizon {
        let a = plan(kind, cfg, model, Arc::clone(&belief), &mut planner_rng)?.action;
        first_action.get_or_insert(a.0);
        let next_x = model.sample_transition(&x, a, &mut env);
        let o = model.sample_observation(&next_x, &mut env);
        let predicted = predict(&belief, a, model, &mut filter_rng);
        let next = match posterior(&predicted, &o, model) {
            Ok(b) => b,
            Err(infoplan_core::Error::DegenerateBelief(_)) => {
                unusable += 1;
                predicted.as_belief()
            }
            Err(e) => return Err(e.into()),
        };
        let ctx = RewardContext::Execution {
            true_state: &next_x,
            terminal: t + 1 == horizon,
        };
        total += discount * model.belief_reward(&belief, a, &next, ctx)?;
        discount *= gamma;
        belief = Arc::new(next.resample_if_degenerate(&mut filter_rng));
        x = next_x;
    }
    Ok(Episode {
        total_return: total,
        steps: horizon,
        first_action: first_action.unwrap_or(0),
        unusable_observations: unusable,
    })
}

#[derive(Debug, Clone)]
pub struct ReturnOutcome {
    pub records: Vec<TrialRecord>,
    /// `(planner, seed, error)` of episodes that aborted.
    pub failures: Vec<(String, u64, String)>,
}

pub fn run_total_return(cfg: &BenchConfig, master_seed: u64) -> Result<ReturnOutcome> {
    let model = LightDark2D::new(cfg.domain.clone())?;
    let spec = model.reward_spec();
    let configs: Vec<(PlannerKind, PlannerConfig<f64>)> = cfg
        .planners
        .iter()
        .map(|&k| Ok((k, cfg.settings_for(k)?.to_config(spec)?)))
        .collect::<Result<_>>()?;
    let tasks: Vec<(usize, u64)> = (0..configs.len())
        .flat_map(|p| (0..cfg.trials as u64).map(move |t| (p, t)))
        .collect();
    let results: Vec<(TrialRecord, Option<String>)> = tasks
        .par_iter()
        .map(|&(p, t)| {
            let (kind, pcfg) = &configs[p];
            let seed = trial_seed(master_seed, t);
            let start = Instant::now();
            let outcome = run_episode(&model, *kind, pcfg, cfg.particles, seed);
            let secs = start.elapsed().as_secs_f64();
            let mut record = TrialRecord {
                experiment: Experiment::TotalReturn.name().into(),
                planner: kind.name().into(),
                seed,
                sweep_value: cfg.particles,
                wall_clock_s: secs,
                chosen_action: None,
                total_return: None,
                steps: 0,
                bound_gap_root: None,
            };
            match outcome {
                Ok(ep) => {
                    record.chosen_action = Some(ep.first_action);
                    record.total_return = Some(ep.total_return);
                    record.steps = ep.steps;
                    (record, None)
                }
                Err(e) => (record, Some(e.to_string())),
            }
        })
        .collect();
    let mut records = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (r, err) in results {
        if let Some(e) = err {
            failures.push((r.planner.clone(), r.seed, e));
        }
        records.push(r);
    }
    Ok(ReturnOutcome { records, failures })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReturnSummary {
    pub planner: String,
    pub episodes: usize,
    pub mean: f64,
    pub sd: f64,
    pub std_err: f64,
}

pub fn summarize(records: &[TrialRecord], planners: &[PlannerKind]) -> Vec<ReturnSummary> {
    planners
        .iter()
        .map(|k| {
            let xs: Vec<f64> = records
                .iter()
                .filter(|r| r.planner == k.name())
                .filter_map(|r| r.total_return)
                .collect();
            ReturnSummary {
                planner: k.name().into(),
                episodes: xs.len(),
                mean: mean(&xs),
                sd: std_dev(&xs),
                std_err: std_err(&xs),
            }
        })
        .collect()
}
