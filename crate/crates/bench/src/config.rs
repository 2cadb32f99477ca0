//! JSON experiment configuration: the Light-Dark domain document plus planner
//! settings and experiment scale. Files only need the fields they change; the
//! rest comes from the preset of the experiment (desk or full scale).

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;
use std::time::Duration;

use infoplan_core::domains::LightDarkConfig;
use infoplan_core::planner::{ActionSelection, PftParams, PlannerConfig, PlannerKind};
use infoplan_core::pomdp::RewardSpec;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::error::{BenchError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Experiment {
    #[serde(rename = "time-vs-K")]
    TimeVsK,
    #[serde(rename = "time-vs-N")]
    TimeVsN,
    #[serde(rename = "total-return")]
    TotalReturn,
    #[serde(rename = "bounds-audit")]
    BoundsAudit,
}

impl Experiment {
    pub const ALL: [Experiment; 4] = [
        Experiment::TimeVsK,
        Experiment::TimeVsN,
        Experiment::TotalReturn,
        Experiment::BoundsAudit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::TimeVsK => "time-vs-K",
            Experiment::TimeVsN => "time-vs-N",
            Experiment::TotalReturn => "total-return",
            Experiment::BoundsAudit => "bounds-audit",
        }
    }
}

impl FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}` (expected time-vs-K, time-vs-N, total-return or bounds-audit)"))
    }
}

impl std::fmt::Display for Experiment {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PlannerSettings {
    pub iterations: usize,
    pub depth: usize,
    pub clusters: usize,
    pub cluster_size: usize,
    /// `null` uses the domain discount.
    pub gamma: Option<f64>,
    /// Wall-clock limit per planning call in seconds.
    pub budget_s: Option<f64>,
    pub rollouts: bool,
    pub selection: ActionSelection,
    pub c_ucb: f64,
    pub k_o: f64,
    pub alpha_o: f64,
    pub max_observation_retries: usize,
}

impl Default for PlannerSettings {
    fn default() -> Self {
        let base = PlannerConfig::<f64>::default();
        Self {
            iterations: base.iterations,
            depth: base.depth,
            clusters: base.clusters,
            cluster_size: base.cluster_size,
            gamma: None,
            budget_s: None,
            rollouts: base.rollouts,
            selection: base.selection,
            c_ucb: base.pft.c_ucb,
            k_o: base.pft.k_o,
            alpha_o: base.pft.alpha_o,
            max_observation_retries: base.max_observation_retries,
        }
    }
}

impl PlannerSettings {
    pub fn to_config(&self, spec: RewardSpec<f64>) -> Result<PlannerConfig<f64>> {
        let budget = match self.budget_s {
            Some(s) if !(s >= 0.0 && s.is_finite()) => {
                return Err(BenchError::Config(format!("budget_s must be a nonnegative number, got {s}")))
            }
            Some(s) => Some(Duration::from_secs_f64(s)),
            None => None,
        };
        let cfg = PlannerConfig {
            iterations: self.iterations,
            depth: self.depth,
            clusters: self.clusters,
            cluster_size: self.cluster_size,
            gamma: self.gamma,
            spec,
            budget,
            rollouts: self.rollouts,
            selection: self.selection,
            pft: PftParams {
                c_ucb: self.c_ucb,
                k_o: self.k_o,
                alpha_o: self.alpha_o,
            },
            max_observation_retries: self.max_observation_retries,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Sizes of the randomized bound checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditSettings {
    pub discrete_instances: usize,
    pub particle_instances: usize,
    pub value_trees: usize,
    pub oracle_trees: usize,
    pub max_depth: usize,
    pub max_actions: usize,
    pub max_observations: usize,
    pub max_particles: usize,
    /// Upper limit on `(tree action nodes) · M · N²` for one random tree.
    pub max_tree_work: usize,
}

impl Default for AuditSettings {
    fn default() -> Self {
        Self {
            discrete_instances: 1000,
            particle_instances: 1000,
            value_trees: 500,
            oracle_trees: 100,
            max_depth: 3,
            max_actions: 3,
            max_observations: 8,
            max_particles: 30,
            max_tree_work: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub domain: LightDarkConfig,
    /// Settings shared by every planner.
    pub planner: PlannerSettings,
    /// Per-planner replacements of the shared settings, as partial objects.
    pub overrides: BTreeMap<String, Value>,
    pub planners: Vec<PlannerKind>,
    /// Particles per belief.
    pub particles: usize,
    /// Swept values: `K` for time-vs-K and bounds-audit, `N` for time-vs-N.
    pub sweep: Vec<usize>,
    /// Planning calls (timing) or episodes (returns) per sweep value.
    pub trials: usize,
    pub audit: AuditSettings,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            domain: LightDarkConfig::default(),
            planner: PlannerSettings::default(),
            overrides: BTreeMap::new(),
            planners: vec![PlannerKind::AiFsss, PlannerKind::Fsss],
            particles: 20,
            sweep: vec![4],
            trials: 10,
            audit: AuditSettings::default(),
        }
    }
}

impl BenchConfig {
    /// Built-in configuration of an experiment.
    pub fn preset(experiment: Experiment, paper_scale: bool) -> Self {
        let mut cfg = BenchConfig::default();
        match experiment {
            Experiment::TimeVsK | Experiment::TimeVsN => {
                // Both engines must grow the same tree: no rollouts and a
                // reward-independent traversal.
                cfg.planner.rollouts = false;
                cfg.planner.selection = ActionSelection::LeastVisited;
                cfg.planner.iterations = if paper_scale { 20_000 } else { 2_000 };
                cfg.trials = if paper_scale { 1_000 } else { 50 };
                cfg.planner.clusters = 1;
                if experiment == Experiment::TimeVsK {
                    cfg.particles = if paper_scale { 20 } else { 40 };
                    cfg.sweep = vec![1, 2, 4, 8];
                } else {
                    cfg.planner.cluster_size = 4;
                    cfg.sweep = vec![10, 20, 40, 80];
                }
            }
            Experiment::TotalReturn => {
                cfg.domain = cfg.domain.with_obstacles();
                cfg.planners = vec![PlannerKind::AiFsss, PlannerKind::Fsss, PlannerKind::PftDpw];
                cfg.particles = 20;
                cfg.sweep = vec![20];
                cfg.trials = if paper_scale { 1_000 } else { 200 };
                cfg.planner.iterations = 1_000_000;
                cfg.planner.budget_s = Some(if paper_scale { 1.0 } else { 0.1 });
                cfg.planner.clusters = 4;
                cfg.planner.cluster_size = 4;
                cfg.overrides.insert(
                    PlannerKind::Fsss.name().into(),
                    serde_json::json!({ "clusters": 4, "cluster_size": 1 }),
                );
            }
            Experiment::BoundsAudit => {
                cfg.sweep = vec![1, 2, 4];
                cfg.trials = 1;
            }
        }
        cfg
    }

    /// The preset with `patch` merged over it (objects recursively, other
    /// values replaced).
    pub fn from_patch(experiment: Experiment, paper_scale: bool, patch: Value) -> Result<Self> {
        let mut base = serde_json::to_value(Self::preset(experiment, paper_scale))
            .map_err(|e| BenchError::Config(e.to_string()))?;
        merge(&mut base, patch);
        let cfg: Self = serde_json::from_value(base).map_err(|e| BenchError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(experiment: Experiment, paper_scale: bool, path: Option<&Path>) -> Result<Self> {
        let patch = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| BenchError::Io {
                    path: p.to_owned(),
                    source,
                })?;
                serde_json::from_str(&text).map_err(|e| BenchError::Config(format!("{}: {e}", p.display())))?
            }
            None => Value::Object(Default::default()),
        };
        Self::from_patch(experiment, paper_scale, patch)
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(BenchError::Config("trials must be at least 1".into()));
        }
        if self.sweep.is_empty() || self.sweep.contains(&0) {
            return Err(BenchError::Config("sweep must be nonempty and positive".into()));
        }
        if self.particles == 0 {
            return Err(BenchError::Config("particles must be at least 1".into()));
        }
        if self.planners.is_empty() {
            return Err(BenchError::Config("need at least one planner".into()));
        }
        for name in self.overrides.keys() {
            if !self.planners.iter().any(|p| p.name() == name) {
                return Err(BenchError::Config(format!("override for unknown planner `{name}`")));
            }
        }
        for kind in &self.planners {
            self.settings_for(*kind)?;
        }
        Ok(())
    }

    /// Shared settings with the planner's overrides applied.
    pub fn settings_for(&self, kind: PlannerKind) -> Result<PlannerSettings> {
        let Some(patch) = self.overrides.get(kind.name()) else {
            return Ok(self.planner.clone());
        };
        let mut base = serde_json::to_value(&self.planner).map_err(|e| BenchError::Config(e.to_string()))?;
        merge(&mut base, patch.clone());
        serde_json::from_value(base).map_err(|e| BenchError::Config(format!("override for {kind}: {e}")))
    }
}

fn merge(base: &mut Value, patch: Value) {
    match (base, patch) {
        (Value::Object(b), Value::Object(p)) => {
            for (k, v) in p {
                merge(b.entry(k).or_insert(Value::Null), v);
            }
        }
        (slot, v) => *slot = v,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_validate() {
        for e in Experiment::ALL {
            for full in [false, true] {
                BenchConfig::preset(e, full).validate().unwrap();
            }
        }
    }

    #[test]
    fn patches_merge_recursively() {
        let cfg = BenchConfig::from_patch(
            Experiment::TimeVsK,
            false,
            serde_json::json!({ "planner": { "iterations": 7 }, "domain": { "horizon": 3 } }),
        )
        .unwrap();
        assert_eq!(cfg.planner.iterations, 7);
        assert_eq!(cfg.planner.depth, 3);
        assert!(!cfg.planner.rollouts);
        assert_eq!(cfg.domain.horizon, 3);
    }

    #[test]
    fn unknown_fields_are_rejected() {
        assert!(BenchConfig::from_patch(Experiment::TimeVsK, false, serde_json::json!({ "iterations": 7 })).is_err());
        assert!(BenchConfig::from_patch(Experiment::TimeVsK, false, serde_json::json!({ "trials": 0 })).is_err());
    }

    #[test]
    fn overrides_apply_per_planner() {
        let cfg = BenchConfig::preset(Experiment::TotalReturn, false);
        let fsss = cfg.settings_for(PlannerKind::Fsss).unwrap();
        assert_eq!((fsss.clusters, fsss.cluster_size), (4, 1));
        let ai = cfg.settings_for(PlannerKind::AiFsss).unwrap();
        assert_eq!((ai.clusters, ai.cluster_size), (4, 4));
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("time".parse::<Experiment>().is_err());
    }
}
