//! Wall-clock comparison of the abstracted engine against the unit-cluster
//! engine on identical roots and seeds.

use std::sync::Arc;
use std::time::Instant;

use infoplan_core::domains::LightDark2D;
use infoplan_core::planner::{plan, PlanReport, PlannerKind};
use rayon::prelude::*;

use crate::config::{BenchConfig, Experiment};
use crate::error::Result;
use crate::record::TrialRecord;
use crate::seeds::{trial_rng, trial_seed, ENV_STREAM, PLANNER_STREAM};
use crate::stats::{mean, median, std_dev};

#[derive(Debug, Clone)]
pub struct TimingOutcome {
    pub records: Vec<TrialRecord>,
    /// Trials where the two engines chose different actions.
    pub mismatches: Vec<(usize, u64)>,
}

/// Timing of one planning call by both engines.
#[derive(Debug, Clone)]
pub struct PairedCall {
    pub abstracted: (PlanReport<f64>, f64),
    pub unit: (PlanReport<f64>, f64),
}

/// Plans from the same root with the same planner seed, once with the
/// configured clusters and once with every cluster reduced to one sample.
pub fn paired_call(model: &LightDark2D<f64>, cfg: &BenchConfig, particles: usize, cluster_size: usize, seed: u64) -> Result<PairedCall> {
    let mut settings = cfg.settings_for(PlannerKind::AiFsss)?;
    settings.cluster_size = cluster_size;
    let pcfg = settings.to_config(model.reward_spec())?;
    let root = Arc::new(model.sample_prior(particles, &mut trial_rng(seed, ENV_STREAM))?);
    let timed = |kind| -> Result<(PlanReport<f64>, f64)> {
        let mut rng = trial_rng(seed, PLANNER_STREAM);
        let start = Instant::now();
        let report = plan(kind, &pcfg, model, Arc::clone(&root), &mut rng)?;
        Ok((report, start.elapsed().as_secs_f64()))
    };
    let abstracted = timed(PlannerKind::AiFsss)?;
    let unit = timed(PlannerKind::Fsss)?;
    Ok(PairedCall { abstracted, unit })
}

pub fn run_time_comparison(cfg: &BenchConfig, experiment: Experiment, master_seed: u64) -> Result<TimingOutcome> {
    assert!(matches!(experiment, Experiment::TimeVsK | Experiment::TimeVsN));
    let model = LightDark2D::new(cfg.domain.clone())?;
    let tasks: Vec<(usize, u64)> = cfg
        .sweep
        .iter()
        .flat_map(|&v| (0..cfg.trials as u64).map(move |t| (v, t)))
        .collect();
    let base_k = cfg.settings_for(PlannerKind::AiFsss)?.cluster_size;
    let results: Vec<(usize, u64, PairedCall)> = tasks
        .par_iter()
        .map(|&(v, t)| {
            let seed = trial_seed(master_seed, t);
            let (n, k) = match experiment {
                Experiment::TimeVsK => (cfg.particles, v),
                _ => (v, base_k),
            };
            paired_call(&model, cfg, n, k, seed).map(|call| (v, seed, call))
        })
        .collect::<Result<_>>()?;
    let mut records = Vec::with_capacity(2 * results.len());
    let mut mismatches = Vec::new();
    for (v, seed, call) in results {
        if call.abstracted.0.action != call.unit.0.action {
            mismatches.push((v, seed));
        }
        for (kind, (report, secs)) in [(PlannerKind::AiFsss, call.abstracted), (PlannerKind::Fsss, call.unit)] {
            records.push(TrialRecord {
                experiment: experiment.name().into(),
                planner: kind.name().into(),
                seed,
                sweep_value: v,
                wall_clock_s: secs,
                chosen_action: Some(report.action.0),
                total_return: None,
                steps: report.iterations,
                bound_gap_root: report.root_gap,
            });
        }
    }
    Ok(TimingOutcome { records, mismatches })
}

/// Per sweep value: `(value, median time abstracted, median time unit, mean, sd)` rows.
#[derive(Debug, Clone, PartialEq)]
pub struct TimingSummary {
    pub sweep_value: usize,
    pub median_abstracted: f64,
    pub median_unit: f64,
    pub mean_abstracted: f64,
    pub sd_abstracted: f64,
    pub mean_unit: f64,
    pub sd_unit: f64,
}

impl TimingSummary {
    pub fn speedup(&self) -> f64 {
        self.median_unit / self.median_abstracted
    }
}

pub fn summarize(records: &[TrialRecord], sweep: &[usize]) -> Vec<TimingSummary> {
    sweep
        .iter()
        .map(|&v| {
            let times = |planner: &str| -> Vec<f64> {
                records
                    .iter()
                    .filter(|r| r.sweep_value == v && r.planner == planner)
                    .map(|r| r.wall_clock_s)
                    .collect()
            };
            let a = times(PlannerKind::AiFsss.name());
            let u = times(PlannerKind::Fsss.name());
            TimingSummary {
                sweep_value: v,
                median_abstracted: median(&a),
                median_unit: median(&u),
                mean_abstracted: mean(&a),
                sd_abstracted: std_dev(&a),
                mean_unit: mean(&u),
                sd_unit: std_dev(&u),
            }
        })
        .collect()
}
