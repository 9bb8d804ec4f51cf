//! Policy-by-seed sweeps: each run is scored by the best out-of-sample
//! estimate among its last trial points.

use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

use crate::bounds::{evaluate_candidates, mean_and_half_width, BoundsError};
use crate::instance::TwoStageProblem;
use crate::lshaped::{run, SolverConfig, SolverError, StepSizePolicy, StopReason};
use crate::oracle::SampleMode;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("policy {policy}, seed {seed}: {source}")]
    Solver {
        policy: String,
        seed: u64,
        #[source]
        source: SolverError,
    },
    #[error("policy {policy}, seed {seed}: {source}")]
    Evaluation {
        policy: String,
        seed: u64,
        #[source]
        source: BoundsError,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchSpec {
    pub policies: Vec<StepSizePolicy>,
    pub seeds: Vec<u64>,
    /// Settings shared by every run; its policy and seed are overridden.
    pub base: SolverConfig,
    /// Sample used to score the trial points of each run.
    pub evaluation: SampleMode,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRun {
    pub seed: u64,
    pub value: f64,
    pub best_x: Vec<f64>,
    pub total_inner: usize,
    pub outer_iterations: usize,
    pub stop: StopReason,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub label: String,
    pub policy: StepSizePolicy,
    pub runs: Vec<BenchRun>,
    pub mean: f64,
    pub half_width: Option<f64>,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Row with the lowest mean (first on ties).
    pub best: usize,
}

pub fn run_bench(problem: &TwoStageProblem, spec: &BenchSpec) -> Result<BenchReport, BenchError> {
    if spec.policies.is_empty() {
        return Err(BenchError::BadInput("empty policy set".into()));
    }
    if spec.seeds.is_empty() {
        return Err(BenchError::BadInput("empty seed list".into()));
    }
    let mut rows = Vec::with_capacity(spec.policies.len());
    for policy in &spec.policies {
        let label = policy.label();
        let start = Instant::now();
        let mut runs = Vec::with_capacity(spec.seeds.len());
        for &seed in &spec.seeds {
            let config = SolverConfig {
                policy: *policy,
                seed,
                ..spec.base.clone()
            };
            let out = run(problem, &config).map_err(|source| BenchError::Solver {
                policy: label.clone(),
                seed,
                source,
            })?;
            let candidates = if out.last_iterates.is_empty() {
                vec![out.best.x.clone()]
            } else {
                out.last_iterates.clone()
            };
            let eval = evaluate_candidates(
                problem,
                &candidates,
                spec.evaluation,
                seed,
                config.enumeration_cap,
                &config.lp_tol,
            )
            .map_err(|source| BenchError::Evaluation {
                policy: label.clone(),
                seed,
                source,
            })?;
            runs.push(BenchRun {
                seed,
                value: eval.best_value,
                best_x: eval.best_x,
                total_inner: out.total_inner,
                outer_iterations: out.outer_iterations,
                stop: out.stop,
            });
        }
        let values: Vec<f64> = runs.iter().map(|r| r.value).collect();
        let (mean, half_width) = mean_and_half_width(&values);
        rows.push(BenchRow {
            label,
            policy: *policy,
            runs,
            mean,
            half_width,
            seconds: start.elapsed().as_secs_f64(),
        });
    }
    let mut best = 0;
    for (i, r) in rows.iter().enumerate() {
        if r.mean < rows[best].mean {
            best = i;
        }
    }
    Ok(BenchReport { rows, best })
}
