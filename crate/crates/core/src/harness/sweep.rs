//! Monte-Carlo sweep of the optimal total power over rate targets.

use std::fmt::Write as _;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::generate::{gen_instance, stream_rng};
use crate::certify::{certify, CertifyTolerances};
use crate::dual::SolverConfig;
use crate::error::SolverError;
use crate::model;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(rename = "M")]
    pub relays: usize,
    #[serde(rename = "K")]
    pub users: usize,
    pub capacity: f64,
    pub sigma2: f64,
    pub rate_targets: Vec<f64>,
    pub runs: usize,
    pub seed: u64,
    /// Worker threads; `None` uses the global pool.
    #[serde(default)]
    pub threads: Option<usize>,
    /// When false the wall-time column is left empty so that output is
    /// byte-identical across runs.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default)]
    pub tol: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("invalid sweep config: {0}")]
    Config(String),
    #[error("could not build thread pool: {0}")]
    ThreadPool(#[from] rayon::ThreadPoolBuildError),
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), SweepError> {
        let bad = |m: &str| Err(SweepError::Config(m.to_string()));
        if self.relays == 0 || self.users == 0 {
            return bad("M and K must be positive");
        }
        if !(self.capacity > 0.0 && self.capacity.is_finite()) {
            return bad("capacity must be positive and finite");
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return bad("sigma2 must be positive and finite");
        }
        if self.rate_targets.is_empty() || self.rate_targets.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return bad("rate_targets must be a non-empty list of positive numbers");
        }
        if self.runs == 0 {
            return bad("runs must be positive");
        }
        if self.threads == Some(0) {
            return bad("threads must be positive");
        }
        Ok(())
    }

    pub fn solver_config(&self) -> SolverConfig {
        let mut cfg = SolverConfig::default();
        if let Some(t) = self.tol {
            cfg.tol = t;
        }
        if let Some(n) = self.max_iters {
            cfg.max_iters = n;
        }
        cfg
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Solved,
    Infeasible,
    Failed,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Solved => "solved",
            RunStatus::Infeasible => "infeasible",
            RunStatus::Failed => "failed",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub rate_target: f64,
    pub run: usize,
    pub status: RunStatus,
    pub objective: Option<f64>,
    pub dual_objective: Option<f64>,
    pub gap: Option<f64>,
    pub dual_iters: usize,
    pub primal_iters: usize,
    pub wall_time_ms: Option<f64>,
    pub certified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateSummary {
    pub rate_target: f64,
    /// Mean over solved runs; `None` when every run was infeasible.
    pub mean_objective: Option<f64>,
    pub mean_wall_time_ms: Option<f64>,
    pub solved: usize,
    pub infeasible: usize,
    pub failed: usize,
    pub certified: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub config: SweepConfig,
    pub summary: Vec<RateSummary>,
    pub runs: Vec<RunRecord>,
}

fn run_one(cfg: &SweepConfig, solver: &SolverConfig, rate_index: usize, run: usize) -> RunRecord {
    let rate = cfg.rate_targets[rate_index];
    let mut rng = stream_rng(cfg.seed, rate_index, run);
    let mut record = RunRecord {
        rate_target: rate,
        run,
        status: RunStatus::Failed,
        objective: None,
        dual_objective: None,
        gap: None,
        dual_iters: 0,
        primal_iters: 0,
        wall_time_ms: None,
        certified: None,
        error: None,
    };
    let inst = match gen_instance(cfg.relays, cfg.users, cfg.capacity, cfg.sigma2, rate, &mut rng) {
        Ok(inst) => inst,
        Err(e) => {
            record.error = Some(e.to_string());
            return record;
        }
    };
    let start = Instant::now();
    let result = crate::solver::solve(&inst, solver);
    let elapsed = start.elapsed().as_secs_f64() * 1e3;
    if cfg.record_timing {
        record.wall_time_ms = Some(elapsed);
    }
    match result {
        Ok(sol) => {
            let primal = model::objective(&sol.primal);
            let dual = sol.dual.objective(&inst);
            record.status = RunStatus::Solved;
            record.objective = Some(primal);
            record.dual_objective = Some(dual);
            record.gap = Some(primal - dual);
            record.dual_iters = sol.dual_iterations;
            record.primal_iters = sol.primal_iterations;
            record.certified = certify(&inst, &sol.primal, &sol.dual, &CertifyTolerances::default())
                .ok()
                .map(|c| c.pass);
        }
        Err(SolverError::Infeasible { iterations, .. }) => {
            record.status = RunStatus::Infeasible;
            record.dual_iters = iterations;
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepReport, SweepError> {
    cfg.validate()?;
    let solver = cfg.solver_config();
    let cells: Vec<(usize, usize)> = (0..cfg.rate_targets.len())
        .flat_map(|r| (0..cfg.runs).map(move |n| (r, n)))
        .collect();
    let work = || -> Vec<RunRecord> { cells.par_iter().map(|&(r, n)| run_one(cfg, &solver, r, n)).collect() };
    let runs = match cfg.threads {
        Some(t) => rayon::ThreadPoolBuilder::new().num_threads(t).build()?.install(work),
        None => work(),
    };
    let summary = aggregate(&cfg.rate_targets, &runs);
    Ok(SweepReport {
        config: cfg.clone(),
        summary,
        runs,
    })
}

pub fn aggregate(rate_targets: &[f64], runs: &[RunRecord]) -> Vec<RateSummary> {
    rate_targets
        .iter()
        .map(|&rate| {
            let here: Vec<&RunRecord> = runs.iter().filter(|r| r.rate_target == rate).collect();
            let count = |s: RunStatus| here.iter().filter(|r| r.status == s).count();
            let mean = |xs: Vec<f64>| (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
            RateSummary {
                rate_target: rate,
                mean_objective: mean(here.iter().filter_map(|r| r.objective).collect()),
                mean_wall_time_ms: mean(here.iter().filter_map(|r| r.wall_time_ms).collect()),
                solved: count(RunStatus::Solved),
                infeasible: count(RunStatus::Infeasible),
                failed: count(RunStatus::Failed),
                certified: here.iter().filter(|r| r.certified == Some(true)).count(),
            }
        })
        .collect()
}

pub const CSV_HEADER: &str = "rate_target,run,status,objective,dual_objective,gap,dual_iters,primal_iters,wall_time_ms";

/// One row per run. Floats use the shortest representation that round-trips;
/// missing values are empty fields.
pub fn to_csv(runs: &[RunRecord]) -> String {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in runs {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.rate_target,
            r.run,
            r.status.as_str(),
            opt(r.objective),
            opt(r.dual_objective),
            opt(r.gap),
            r.dual_iters,
            r.primal_iters,
            opt(r.wall_time_ms),
        );
    }
    out
}

pub fn to_json(report: &SweepReport) -> String {
    serde_json::to_string_pretty(report).expect("report serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(threads: Option<usize>) -> SweepConfig {
        SweepConfig {
            relays: 2,
            users: 2,
            capacity: 3.0,
            sigma2: 1.0,
            rate_targets: vec![0.5, 1.0],
            runs: 6,
            seed: 42,
            threads,
            record_timing: false,
            tol: None,
            max_iters: None,
        }
    }

    #[test]
    fn thread_count_does_not_change_output() {
        let a = run_sweep(&small(Some(1))).unwrap();
        let b = run_sweep(&small(Some(4))).unwrap();
        assert_eq!(to_csv(&a.runs), to_csv(&b.runs));
    }

    #[test]
    fn csv_shape() {
        let rep = run_sweep(&small(None)).unwrap();
        let csv = to_csv(&rep.runs);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(lines.len(), 1 + 12);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 9 && l.ends_with(',')));
        assert_eq!(rep.summary.len(), 2);
        let s = &rep.summary[0];
        assert_eq!(s.solved + s.infeasible + s.failed, 6);
    }

    #[test]
    fn infeasible_runs_are_counted_not_averaged() {
        let runs = vec![
            RunRecord {
                rate_target: 1.0,
                run: 0,
                status: RunStatus::Solved,
                objective: Some(2.0),
                dual_objective: Some(2.0),
                gap: Some(0.0),
                dual_iters: 3,
                primal_iters: 3,
                wall_time_ms: None,
                certified: Some(true),
                error: None,
            },
            RunRecord {
                rate_target: 1.0,
                run: 1,
                status: RunStatus::Infeasible,
                objective: None,
                dual_objective: None,
                gap: None,
                dual_iters: 40,
                primal_iters: 0,
                wall_time_ms: None,
                certified: None,
                error: None,
            },
        ];
        let s = &aggregate(&[1.0], &runs)[0];
        assert_eq!(s.mean_objective, Some(2.0));
        assert_eq!((s.solved, s.infeasible, s.certified), (1, 1, 1));
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = small(None);
        cfg.rate_targets.clear();
        assert!(run_sweep(&cfg).is_err());
        let mut cfg = small(Some(0));
        cfg.runs = 1;
        assert!(run_sweep(&cfg).is_err());
    }
}
