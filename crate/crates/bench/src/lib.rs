//! Experiment harness for the planners of `infoplan-core`: timing sweeps,
//! receding-horizon returns and randomized bound audits, written as CSV with
//! optional SVG plots.

pub mod audit;
pub mod config;
pub mod error;
pub mod plot;
pub mod record;
pub mod returns;
pub mod seeds;
pub mod stats;
pub mod timing;

use std::path::{Path, PathBuf};

use config::{BenchConfig, Experiment};
pub use error::{BenchError, Result};
use record::{write_csv, TrialRecord};

/// What a run produced and whether its assertions held.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub experiment: Experiment,
    pub ok: bool,
    pub lines: Vec<String>,
    pub records: Vec<TrialRecord>,
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
}

pub struct RunOptions<'a> {
    pub seed: u64,
    pub jobs: usize,
    pub out_dir: &'a Path,
    pub plot: bool,
}

pub fn run(experiment: Experiment, cfg: &BenchConfig, opts: &RunOptions<'_>) -> Result<RunReport> {
    std::fs::create_dir_all(opts.out_dir).map_err(|source| BenchError::Io {
        path: opts.out_dir.to_owned(),
        source,
    })?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(opts.jobs.max(1)).build()?;
    let (ok, lines, records, svg) = pool.install(|| -> Result<_> {
        Ok(match experiment {
            Experiment::TimeVsK | Experiment::TimeVsN => run_timing(experiment, cfg, opts.seed)?,
            Experiment::TotalReturn => run_returns(cfg, opts.seed)?,
            Experiment::BoundsAudit => run_audit(cfg, opts.seed)?,
        })
    })?;
    let csv_path = opts.out_dir.join(format!("{}.csv", experiment.name()));
    write_csv(&csv_path, &records)?;
    let svg_path = if opts.plot {
        let path = opts.out_dir.join(format!("{}.svg", experiment.name()));
        std::fs::write(&path, svg).map_err(|source| BenchError::Io {
            path: path.clone(),
            source,
        })?;
        Some(path)
    } else {
        None
    };
    Ok(RunReport {
        experiment,
        ok,
        lines,
        records,
        csv_path,
        svg_path,
    })
}

type Produced = (bool, Vec<String>, Vec<TrialRecord>, String);

fn run_timing(experiment: Experiment, cfg: &BenchConfig, seed: u64) -> Result<Produced> {
    let out = timing::run_time_comparison(cfg, experiment, seed)?;
    let summary = timing::summarize(&out.records, &cfg.sweep);
    let var = if experiment == Experiment::TimeVsK { "K" } else { "N" };
    let mut lines: Vec<String> = summary
        .iter()
        .map(|s| {
            format!(
                "{var}={:<4} median ai-fsss {:.4}s  fsss {:.4}s  speedup {:.2}",
                s.sweep_value,
                s.median_abstracted,
                s.median_unit,
                s.speedup()
            )
        })
        .collect();
    for (v, seed) in &out.mismatches {
        lines.push(format!("ACTION MISMATCH at {var}={v}, seed {seed}"));
    }
    lines.push(format!(
        "{} action mismatches over {} paired calls",
        out.mismatches.len(),
        out.records.len() / 2
    ));
    let series = |name: &str, pick: fn(&timing::TimingSummary) -> (f64, f64)| plot::Series {
        name: name.into(),
        points: summary
            .iter()
            .map(|s| {
                let (m, sd) = pick(s);
                (s.sweep_value as f64, m, sd)
            })
            .collect(),
    };
    let svg = plot::line_chart(
        &format!("Planning time vs {var}"),
        var,
        "wall clock [s] (mean ± sd)",
        &[
            series("ai-fsss", |s| (s.mean_abstracted, s.sd_abstracted)),
            series("fsss", |s| (s.mean_unit, s.sd_unit)),
        ],
    );
    Ok((out.mismatches.is_empty(), lines, out.records, svg))
}

fn run_returns(cfg: &BenchConfig, seed: u64) -> Result<Produced> {
    let out = returns::run_total_return(cfg, seed)?;
    let summary = returns::summarize(&out.records, &cfg.planners);
    let mut lines: Vec<String> = summary
        .iter()
        .map(|s| {
            format!(
                "{:<8} mean return {:>9.3}  sd {:>8.3}  se {:>7.3}  ({} episodes)",
                s.planner, s.mean, s.sd, s.std_err, s.episodes
            )
        })
        .collect();
    for (planner, seed, err) in &out.failures {
        lines.push(format!("episode failed: {planner} seed {seed}: {err}"));
    }
    let bars: Vec<(String, f64, f64)> = summary.iter().map(|s| (s.planner.clone(), s.mean, s.std_err)).collect();
    let svg = plot::bar_chart("Mean total return (± standard error)", "return", &bars);
    Ok((true, lines, out.records, svg))
}

fn run_audit(cfg: &BenchConfig, seed: u64) -> Result<Produced> {
    let out = audit::run_bounds_audit(cfg, seed)?;
    let summary = out.summary();
    let mut lines: Vec<String> = summary
        .iter()
        .map(|(kind, n, bad, max_obs, max_up)| {
            format!(
                "{:<22} {n:>5} checks  {bad} violations  max |observed| {max_obs:.3e}  max limit {max_up:.3e}",
                kind.name()
            )
        })
        .collect();
    for c in out.checks.iter().filter(|c| !c.passed()) {
        lines.push(format!(
            "VIOLATION {} seed {} K={}: {} not in [{}, {}]",
            c.kind.name(),
            c.seed,
            c.k,
            c.observed,
            c.lower,
            c.upper
        ));
    }
    let bars: Vec<(String, f64, f64)> = summary
        .iter()
        .map(|(kind, _, _, max_obs, max_up)| {
            let ratio = if *max_up > 0.0 { max_obs / max_up } else { *max_obs };
            (kind.name().into(), ratio, 0.0)
        })
        .collect();
    let svg = plot::bar_chart("Largest observed gap relative to its limit", "ratio", &bars);
    Ok((out.violations() == 0, lines, out.records(), svg))
}
