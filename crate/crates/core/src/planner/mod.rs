//! Tree-search planners over particle beliefs.

mod config;
mod fsss;
mod pft;
mod rollout;
mod tree;

use std::sync::Arc;

use rand::Rng;

pub use config::{ActionSelection, PftParams, PlannerConfig};
pub use fsss::{Fsss, SearchTree, SolveOutcome};
pub use pft::{widening_limit, PftDpw, PftOutcome};
pub use rollout::rollout_from_belief;
pub use tree::{ActionNode, BeliefNode};

use crate::error::Result;
use crate::filter::ParticleBelief;
use crate::pomdp::{ActionId, PomdpModel};
use crate::scalar::Scalar;

/// Which planner a [`plan`] call runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PlannerKind {
    /// Abstracted engine with the configured cluster size, then bounds adaptation.
    AiFsss,
    /// The same engine with every cluster holding one observation.
    Fsss,
    PftDpw,
}

impl PlannerKind {
    pub fn name(self) -> &'static str {
        match self {
            PlannerKind::AiFsss => "ai-fsss",
            PlannerKind::Fsss => "fsss",
            PlannerKind::PftDpw => "pft-dpw",
        }
    }
}

impl std::fmt::Display for PlannerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanReport<T> {
    pub action: ActionId,
    pub iterations: usize,
    /// Root bound gap; `None` for planners that keep no bounds.
    pub root_gap: Option<T>,
    pub refine_calls: usize,
}

/// Runs one planning call from `root`.
pub fn plan<T, M, R>(
    kind: PlannerKind,
    cfg: &PlannerConfig<T>,
    model: &M,
    root: Arc<ParticleBelief<T>>,
    rng: &mut R,
) -> Result<PlanReport<T>>
where
    T: Scalar,
    M: PomdpModel<T>,
    R: Rng + ?Sized,
{
    match kind {
        PlannerKind::AiFsss | PlannerKind::Fsss => {
            let cfg = if kind == PlannerKind::Fsss {
                cfg.unabstracted()
            } else {
                cfg.clone()
            };
            let out = Fsss::new(cfg, model)?.solve(root, rng)?;
            Ok(PlanReport {
                action: out.action,
                iterations: out.iterations,
                root_gap: Some(out.root_gap),
                refine_calls: out.refine_calls,
            })
        }
        PlannerKind::PftDpw => {
            let out = PftDpw::new(cfg.clone(), model)?.plan(root, rng)?;
            Ok(PlanReport {
                action: out.action,
                iterations: out.iterations,
                root_gap: None,
                refine_calls: 0,
            })
        }
    }
}
