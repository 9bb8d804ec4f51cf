//! The inexact regularized L-shaped driver: outer iterations draw a sample
//! set and fix a step size, inner iterations take proximal steps on a
//! limited-memory bundle until the sufficient-decrease test accepts one.

mod policy;
mod theory;

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use serde::Serialize;
use thiserror::Error;

use crate::bundle::BundleModel;
use crate::instance::{validate, InstanceError, TwoStageProblem, DEFAULT_ENUMERATION_CAP};
use crate::linalg::{dist, norm};
use crate::lp::{solve_lp, LpError, LpStatus, ToleranceSet};
use crate::master::{solve_prox_step, FeasibleSet, MasterError, MasterOptions};
use crate::oracle::{estimate, NoiseModel, OracleError, SampleMode, SampleSet};

pub use policy::{next_step_size, serious_test, StepContext, StepDecision, StepKind, StepSizePolicy};
pub use theory::{
    exact_proximal_gap, inner_loop_bound, proximal_gap_lower_bound, sharp_proximal_gap_lower_bound, theory_bounds, ExactGap,
    TheoryBounds, TheoryInputs,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("missing parameter: {0}")]
    MissingParameter(String),
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("oracle failed at (k={k}, t={t}): {source}")]
    Oracle {
        k: usize,
        t: usize,
        #[source]
        source: OracleError,
    },
    #[error("master problem failed at (k={k}, t={t}): {source}")]
    Master {
        k: usize,
        t: usize,
        #[source]
        source: MasterError,
    },
    #[error("initial point: {0}")]
    InitialPoint(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Descent parameter `β ∈ (0, 1)`.
    pub beta: f64,
    pub sampling: SampleMode,
    pub policy: StepSizePolicy,
    /// Cuts kept per kind.
    pub memory: usize,
    pub max_outer: usize,
    pub max_total_inner: usize,
    pub max_wall: Option<Duration>,
    /// Stop when `Δ̃ ≤ stop_tol` at a serious step.
    pub stop_tol: f64,
    pub seed: u64,
    /// Starting center; defaults to a minimizer of `cᵀx` over `X`.
    pub x0: Option<Vec<f64>>,
    /// Subgradient bound `G`; with known noise it sets the per-outer inner budget.
    pub lipschitz: Option<f64>,
    pub noise: NoiseModel,
    /// How many trailing trial points to return.
    pub keep_last: usize,
    /// Record wall-clock milliseconds in the trace (otherwise 0, keeping
    /// traces byte-identical across runs).
    pub record_timing: bool,
    pub enumeration_cap: usize,
    pub lp_tol: ToleranceSet,
    pub master: MasterOptions,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            beta: 0.5,
            sampling: SampleMode::Sampled(100),
            policy: StepSizePolicy::Constant { rho: 1.0 },
            memory: 5,
            max_outer: 1_000,
            max_total_inner: 10_000,
            max_wall: None,
            stop_tol: 1e-6,
            seed: 0,
            x0: None,
            lipschitz: None,
            noise: NoiseModel::default(),
            keep_last: 50,
            record_timing: false,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            lp_tol: ToleranceSet::default(),
            master: MasterOptions::default(),
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), SolverError> {
        let bad = |m: String| Err(SolverError::InvalidConfig(m));
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return bad(format!("beta = {} is not in (0, 1)", self.beta));
        }
        if let SampleMode::Sampled(0) = self.sampling {
            return bad("sample size must be positive".into());
        }
        if self.memory == 0 || self.max_outer == 0 || self.max_total_inner == 0 {
            return bad("memory and budgets must be positive".into());
        }
        if !(self.stop_tol >= 0.0) {
            return bad("stop tolerance must be nonnegative".into());
        }
        self.policy.check()
    }
}

/// One inner step; field order is the trace CSV column order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InnerRecord {
    pub k: usize,
    pub t: usize,
    pub kind: StepKind,
    pub rho: f64,
    pub fhat_center: f64,
    pub fhat_trial: f64,
    pub model_trial: f64,
    pub delta_tilde: f64,
    pub step_norm: f64,
    pub cum_inner: usize,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OuterRecord {
    pub k: usize,
    pub seed: u64,
    /// RNG stream of the sample set (equal to `k`).
    pub stream: u64,
    pub samples: usize,
    pub rho: f64,
    /// Inner steps taken, `Tₖ`.
    pub inner_steps: usize,
    pub inner_budget: usize,
    pub fhat_center: f64,
    /// Whether the outer iteration ended with a serious step.
    pub completed: bool,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct RunTrace {
    pub inner: Vec<InnerRecord>,
    pub outer: Vec<OuterRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    /// `Δ̃ ≤ stop_tol` at a serious step.
    Converged,
    /// The step-size policy certified near-optimality.
    PolicyTerminate,
    MaxOuter,
    MaxTotalInner,
    /// The per-outer inner budget ran out.
    InnerBudget,
    WallTime,
}

impl StopReason {
    pub fn is_budget(&self) -> bool {
        !matches!(self, Self::Converged | Self::PolicyTerminate)
    }
}

/// A serious center with the estimate it was accepted with.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Center {
    pub k: usize,
    pub x: Vec<f64>,
    pub fhat: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    /// Center with the lowest `f̂` among the start point and serious iterates.
    pub best: Center,
    pub final_center: Vec<f64>,
    pub centers: Vec<Center>,
    pub stop: StopReason,
    pub trace: RunTrace,
    /// The last (up to `keep_last`) trial points, oldest first.
    pub last_iterates: Vec<Vec<f64>>,
    /// Largest `‖ĝ‖` observed.
    pub empirical_lipschitz: f64,
    /// `‖ub − lb‖` from validation (an estimate of the diameter of `X`).
    pub diameter: f64,
    pub outer_iterations: usize,
    pub total_inner: usize,
}

/// Minimizer of `cᵀx` over `X`.
pub fn default_start(problem: &TwoStageProblem, tol: &ToleranceSet) -> Result<Vec<f64>, SolverError> {
    let sol = solve_lp(&problem.first_stage_lp(problem.c.clone()), tol)?;
    match sol.status {
        LpStatus::Optimal => Ok(sol.x),
        s => Err(SolverError::InitialPoint(format!("first-stage LP is {s:?}"))),
    }
}

/// Per-outer inner budget `⌈8G²/(ρ(1−β)²ε̄) − 16/(1−β)²⌉ + 1`, when it can
/// be evaluated.
fn outer_budget(config: &SolverConfig, rho: f64) -> Option<usize> {
    let g = config.lipschitz?;
    let eps_bar = config.noise.eps_bar(config.beta)?;
    if eps_bar <= 0.0 {
        return None;
    }
    let b = inner_loop_bound(g, rho, config.beta, eps_bar);
    Some(if b.is_finite() && b < usize::MAX as f64 { b.max(1.0) as usize } else { usize::MAX })
}

pub fn run(problem: &TwoStageProblem, config: &SolverConfig) -> Result<RunOutput, SolverError> {
    config.check()?;
    let report = validate(problem)?;
    let set = FeasibleSet::of(problem);
    let start = Instant::now();
    let tol = &config.lp_tol;

    let mut center = match &config.x0 {
        Some(x) => {
            if !problem.is_first_stage_feasible(x, 1e-9) {
                return Err(SolverError::InitialPoint("x0 is not in the first-stage feasible set".into()));
            }
            x.clone()
        }
        None => default_start(problem, tol)?,
    };

    let mut trace = RunTrace::default();
    let mut centers: Vec<Center> = Vec::new();
    let mut last_iterates: VecDeque<Vec<f64>> = VecDeque::new();
    let mut g_emp = 0.0f64;
    let mut cum = 0usize;
    let mut last_model: Option<f64> = None;
    let mut k = 0usize;
    let elapsed_ms = |on: bool| if on { start.elapsed().as_millis() as u64 } else { 0 };

    let stop = 'outer: loop {
        if k >= config.max_outer {
            break StopReason::MaxOuter;
        }
        let sample = SampleSet::build(problem, config.sampling, config.seed, k as u64, config.enumeration_cap)?;
        let est_c = estimate(problem, &sample, &center, tol).map_err(|source| SolverError::Oracle { k, t: 0, source })?;
        g_emp = g_emp.max(norm(&est_c.subgradient));
        if k == 0 {
            centers.push(Center {
                k,
                x: center.clone(),
                fhat: est_c.value,
            });
        }
        let ctx = StepContext {
            k,
            beta: config.beta,
            fhat_center: est_c.value,
            last_model,
            diameter: Some(report.diameter),
        };
        let rho = match next_step_size(&config.policy, &ctx)? {
            StepDecision::Rho(r) => r,
            StepDecision::Terminate => break StopReason::PolicyTerminate,
        };
        let budget = outer_budget(config, rho).unwrap_or(config.max_total_inner);
        let mut outer = OuterRecord {
            k,
            seed: config.seed,
            stream: k as u64,
            samples: sample.len(),
            rho,
            inner_steps: 0,
            inner_budget: budget,
            fhat_center: est_c.value,
            completed: false,
        };
        let mut bundle = BundleModel::init(center.clone(), est_c.value, est_c.subgradient.clone(), config.memory, k);
        let mut warm: Option<Vec<f64>> = None;
        let mut t = 0usize;
        loop {
            if cum >= config.max_total_inner {
                trace.outer.push(outer);
                break 'outer StopReason::MaxTotalInner;
            }
            if config.max_wall.is_some_and(|w| start.elapsed() >= w) {
                trace.outer.push(outer);
                break 'outer StopReason::WallTime;
            }
            let prox = solve_prox_step(&bundle, rho, &set, warm.as_deref(), &config.master)
                .map_err(|source| SolverError::Master { k, t, source })?;
            let est_t = estimate(problem, &sample, &prox.x, tol).map_err(|source| SolverError::Oracle { k, t, source })?;
            g_emp = g_emp.max(norm(&est_t.subgradient));
            let kind = serious_test(est_c.value, est_t.value, prox.model_value, config.beta);
            cum += 1;
            trace.inner.push(InnerRecord {
                k,
                t,
                kind,
                rho,
                fhat_center: est_c.value,
                fhat_trial: est_t.value,
                model_trial: prox.model_value,
                delta_tilde: prox.delta_tilde,
                step_norm: dist(&prox.x, &center),
                cum_inner: cum,
                wall_ms: elapsed_ms(config.record_timing),
            });
            if last_iterates.len() == config.keep_last.max(1) {
                last_iterates.pop_front();
            }
            last_iterates.push_back(prox.x.clone());
            outer.inner_steps = t + 1;

            if kind == StepKind::Serious {
                last_model = Some(prox.model_value);
                center = prox.x;
                centers.push(Center {
                    k: k + 1,
                    x: center.clone(),
                    fhat: est_t.value,
                });
                outer.completed = true;
                trace.outer.push(outer);
                if prox.delta_tilde <= config.stop_tol {
                    k += 1;
                    break 'outer StopReason::Converged;
                }
                break;
            }
            bundle.add_cuts(&prox.x, est_t.value, est_t.subgradient, prox.model_value, rho, t + 1);
            warm = Some(prox.x);
            t += 1;
            if t >= budget {
                trace.outer.push(outer);
                break 'outer StopReason::InnerBudget;
            }
        }
        k += 1;
    };

    let best = centers
        .iter()
        .fold(None::<&Center>, |b, c| match b {
            Some(b) if b.fhat <= c.fhat => Some(b),
            _ => Some(c),
        })
        .cloned()
        .expect("the start point is always recorded");
    Ok(RunOutput {
        best,
        final_center: center,
        centers,
        stop,
        trace,
        last_iterates: last_iterates.into(),
        empirical_lipschitz: g_emp,
        diameter: report.diameter,
        outer_iterations: k,
        total_inner: cum,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_inventory, tiny_inventory, tiny_inventory_params};

    fn exact_config(policy: StepSizePolicy) -> SolverConfig {
        SolverConfig {
            sampling: SampleMode::Exact,
            policy,
            stop_tol: 1e-8,
            ..SolverConfig::default()
        }
    }

    #[test]
    fn tiny_exact_constant_policy() {
        let out = run(&tiny_inventory(), &exact_config(StepSizePolicy::Constant { rho: 1.0 })).unwrap();
        assert_eq!(out.stop, StopReason::Converged);
        assert!((out.best.fhat + 0.9).abs() <= 1e-8, "{:?}", out.best);
        assert!((out.best.x[0] - 1.0).abs() <= 1e-6);
        assert!(out.total_inner <= 200);
    }

    #[test]
    fn inner_budget_of_one() {
        let mut cfg = exact_config(StepSizePolicy::Constant { rho: 1.0 });
        cfg.max_total_inner = 1;
        let out = run(&tiny_inventory(), &cfg).unwrap();
        assert_eq!(out.trace.inner.len(), 1);
        assert!(out.stop.is_budget() || out.stop == StopReason::Converged);
    }

    #[test]
    fn deterministic_problem_ignores_seed() {
        let det = gen_inventory(&tiny_inventory_params(vec![(vec![2.0], 1.0)])).unwrap();
        let mut cfg = SolverConfig {
            policy: StepSizePolicy::Practical { cp: 10.0 },
            sampling: SampleMode::Sampled(5),
            ..SolverConfig::default()
        };
        let a = run(&det, &cfg).unwrap();
        cfg.seed = 99;
        let b = run(&det, &cfg).unwrap();
        assert_eq!(a.trace.inner, b.trace.inner);
    }

    #[test]
    fn trace_structure() {
        let cfg = SolverConfig {
            sampling: SampleMode::Sampled(20),
            seed: 3,
            max_outer: 6,
            ..SolverConfig::default()
        };
        let out = run(&tiny_inventory(), &cfg).unwrap();
        for o in &out.trace.outer {
            let recs: Vec<_> = out.trace.inner.iter().filter(|r| r.k == o.k).collect();
            assert_eq!(recs.len(), o.inner_steps);
            if o.completed {
                assert_eq!(recs.last().unwrap().kind, StepKind::Serious);
            }
        }
    }

    #[test]
    fn invalid_beta_rejected() {
        let cfg = SolverConfig {
            beta: 1.2,
            ..SolverConfig::default()
        };
        assert!(matches!(run(&tiny_inventory(), &cfg), Err(SolverError::InvalidConfig(_))));
    }
}
