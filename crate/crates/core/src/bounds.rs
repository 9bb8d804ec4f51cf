//! Sample-average lower bounds, out-of-sample candidate evaluation and
//! sample-size planning.

use rayon::prelude::*;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::instance::{build_extensive_form, InstanceError, TwoStageProblem, DEFAULT_EXTENSIVE_CAP};
use crate::lp::{solve_lp, LpStatus, ToleranceSet};
use crate::oracle::{estimate, OracleError, SampleMode, SampleSet};

/// RNG stream reserved for candidate evaluation, disjoint from the streams
/// used by the solver's outer iterations and by lower-bound batches.
pub const EVALUATION_STREAM: u64 = u64::MAX;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("bad input: {0}")]
    BadInput(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("batch {batch}: sampled problem is {status:?}")]
    BatchNotOptimal { batch: usize, status: LpStatus },
    #[error("batch {batch}: {source}")]
    Batch {
        batch: usize,
        #[source]
        source: InstanceError,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundEstimate {
    /// Optimal value of each batch problem, in batch order.
    pub batch_values: Vec<f64>,
    pub mean: f64,
    /// 95% Student-t half-width; `None` with a single batch.
    pub half_width: Option<f64>,
    pub batch_size: usize,
    pub seed: u64,
}

/// Mean and 95% Student-t half-width of `values`.
pub fn mean_and_half_width(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, None);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    let t = StudentsT::new(0.0, 1.0, (n - 1) as f64)
        .expect("degrees of freedom are positive")
        .inverse_cdf(0.975);
    (mean, Some(t * var.sqrt() / (n as f64).sqrt()))
}

/// Solves `batches` independent sampled problems of `batch_size` scenarios
/// each in extensive form. Batch `b` draws from RNG stream `b` of `seed`.
pub fn saa_lower_bound(
    problem: &TwoStageProblem,
    batches: usize,
    batch_size: usize,
    seed: u64,
    tol: &ToleranceSet,
) -> Result<BoundEstimate, BoundsError> {
    if batches == 0 || batch_size == 0 {
        return Err(BoundsError::BadInput("batches and batch size must be positive".into()));
    }
    let batch_values = (0..batches)
        .into_par_iter()
        .map(|b| {
            let sample = SampleSet::draw(problem, batch_size, seed, b as u64);
            let lp = build_extensive_form(problem, &sample.scenarios, DEFAULT_EXTENSIVE_CAP)
                .map_err(|source| BoundsError::Batch { batch: b, source })?;
            let sol = solve_lp(&lp, tol).map_err(|e| BoundsError::Batch {
                batch: b,
                source: e.into(),
            })?;
            match sol.status {
                LpStatus::Optimal => Ok(sol.objective),
                status => Err(BoundsError::BatchNotOptimal { batch: b, status }),
            }
        })
        .collect::<Result<Vec<f64>, BoundsError>>()?;
    let (mean, half_width) = mean_and_half_width(&batch_values);
    Ok(BoundEstimate {
        batch_values,
        mean,
        half_width,
        batch_size,
        seed,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CandidateEvaluation {
    pub best_index: usize,
    pub best_x: Vec<f64>,
    pub best_value: f64,
    /// Estimate of every candidate, in input order.
    pub values: Vec<f64>,
    pub samples: usize,
}

/// Evaluates every candidate on one shared sample set and returns the
/// lowest estimate (lowest index on ties). `Exact` mode uses the full
/// distribution; sampled mode draws from [`EVALUATION_STREAM`] of `seed`.
pub fn evaluate_candidates(
    problem: &TwoStageProblem,
    candidates: &[Vec<f64>],
    mode: SampleMode,
    seed: u64,
    cap: usize,
    tol: &ToleranceSet,
) -> Result<CandidateEvaluation, BoundsError> {
    if candidates.is_empty() {
        return Err(BoundsError::BadInput("empty candidate list".into()));
    }
    let sample = SampleSet::build(problem, mode, seed, EVALUATION_STREAM, cap)?;
    let mut values = Vec::with_capacity(candidates.len());
    for x in candidates {
        values.push(estimate(problem, &sample, x, tol)?.value);
    }
    let mut best_index = 0;
    for (i, &v) in values.iter().enumerate() {
        if v < values[best_index] {
            best_index = i;
        }
    }
    Ok(CandidateEvaluation {
        best_index,
        best_x: candidates[best_index].clone(),
        best_value: values[best_index],
        values,
        samples: sample.len(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SamplePlan {
    pub zeta: f64,
    pub delta: f64,
    pub beta: f64,
    pub gap0: f64,
    pub sigma: f64,
    /// `⌈log_{1−β/4}(δ/gap₀)⌉`, non-positive when `δ ≥ gap₀`.
    pub log_term: f64,
    pub tau: f64,
    pub eps_tilde: f64,
    /// Per-iteration sample size `max{1, ⌈σ²/ε̃²⌉}`.
    pub samples_per_iteration: usize,
    /// Inner-step bound `256G²D²(β+1)² / (3(1−β)²(2−β/4)β²δ²)`.
    pub inner_steps: f64,
    /// Total-sample bound: the larger of the inner-step bound and
    /// `16384σ²G²D²(β+1)⁴τ² / (3(1−β)²(2−β/4)β⁴δ⁴)`.
    pub total_samples: f64,
}

/// Sample sizes that reach an expected gap `delta` with probability at
/// least `1 − zeta` under the optimal step-size policy with sub-Gaussian
/// noise of parameter `sigma`.
pub fn sample_plan(zeta: f64, delta: f64, beta: f64, gap0: f64, sigma: f64, g: f64, d: f64) -> Result<SamplePlan, BoundsError> {
    let bad = |m: &str| Err(BoundsError::BadParameter(m.to_string()));
    if !(zeta > 0.0 && zeta < 1.0) {
        return bad("zeta must lie in (0, 1)");
    }
    if !(delta > 0.0 && delta < 1.0) {
        return bad("target gap must lie in (0, 1)");
    }
    if !(beta > 0.0 && beta < 1.0) {
        return bad("beta must lie in (0, 1)");
    }
    if !(gap0 > 0.0 && gap0.is_finite()) {
        return bad("initial gap must be positive");
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return bad("sigma must be positive");
    }
    if !(g >= 0.0 && g.is_finite() && d >= 0.0 && d.is_finite()) {
        return bad("G and D must be finite and non-negative");
    }
    let log_term = ((delta / gap0).ln() / (1.0 - beta / 4.0).ln()).ceil();
    let tau = (2.0 * ((6.0 * log_term).max(1.0) / zeta).ln()).sqrt().max(1.0);
    let eps_tilde = beta * delta / (8.0 * (beta + 1.0) * tau);
    let ratio = (sigma / eps_tilde).powi(2).ceil();
    let samples_per_iteration = if ratio >= usize::MAX as f64 { usize::MAX } else { (ratio as usize).max(1) };
    let common = 3.0 * (1.0 - beta).powi(2) * (2.0 - beta / 4.0);
    let gd2 = (g * d).powi(2);
    let inner_steps = 256.0 * gd2 * (beta + 1.0).powi(2) / (common * beta.powi(2) * delta.powi(2));
    let sampled = 16384.0 * sigma.powi(2) * gd2 * (beta + 1.0).powi(4) * tau.powi(2) / (common * beta.powi(4) * delta.powi(4));
    Ok(SamplePlan {
        zeta,
        delta,
        beta,
        gap0,
        sigma,
        log_term,
        tau,
        eps_tilde,
        samples_per_iteration,
        inner_steps,
        total_samples: inner_steps.max(sampled),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_inventory, tiny_inventory, tiny_inventory_params, DEFAULT_ENUMERATION_CAP};

    #[test]
    fn deterministic_lower_bound_is_exact() {
        let det = gen_inventory(&tiny_inventory_params(vec![(vec![2.0], 1.0)])).unwrap();
        let b = saa_lower_bound(&det, 4, 3, 7, &ToleranceSet::default()).unwrap();
        // f(x) = 1.1x − 2 min(x, 1) has minimum −0.9 at x = 1.
        for v in &b.batch_values {
            assert!((v + 0.9).abs() < 1e-9, "{v}");
        }
        assert!(b.half_width.unwrap() < 1e-9);
    }

    #[test]
    fn single_batch_has_no_half_width() {
        let b = saa_lower_bound(&tiny_inventory(), 1, 10, 1, &ToleranceSet::default()).unwrap();
        assert_eq!(b.batch_values.len(), 1);
        assert!(b.half_width.is_none());
    }

    #[test]
    fn t_quantile_matches_table() {
        // t_{0.975, 1} = 12.706; values {0, 2} have sd √2, so the half-width
        // is 12.706 · √2 / √2.
        let (m, h) = mean_and_half_width(&[0.0, 2.0]);
        assert_eq!(m, 1.0);
        assert!((h.unwrap() - 12.7062).abs() < 1e-3);
    }

    #[test]
    fn candidates_exact() {
        let p = tiny_inventory();
        let tol = ToleranceSet::default();
        let e = evaluate_candidates(&p, &[vec![0.0], vec![1.0]], SampleMode::Exact, 0, DEFAULT_ENUMERATION_CAP, &tol)
            .unwrap();
        assert_eq!(e.best_index, 1);
        assert!((e.best_value + 0.9).abs() < 1e-9);
        let e = evaluate_candidates(&p, &[vec![1.0]], SampleMode::Sampled(50), 3, DEFAULT_ENUMERATION_CAP, &tol)
            .unwrap();
        assert!((e.best_value + 0.9).abs() < 1e-9);
        assert!(matches!(
            evaluate_candidates(&p, &[], SampleMode::Exact, 0, DEFAULT_ENUMERATION_CAP, &tol),
            Err(BoundsError::BadInput(_))
        ));
    }

    #[test]
    fn sample_plan_reference_values() {
        let p = sample_plan(0.05, 0.1, 0.5, 0.9, 0.1, 1.0, 1.0).unwrap();
        // ln(1/9)/ln(0.875) = 16.45...
        assert_eq!(p.log_term, 17.0);
        let tau = (2.0 * (102.0f64 / 0.05).ln()).sqrt();
        assert!((p.tau - tau).abs() < 1e-12);
        let et = 0.05 / (12.0 * tau);
        assert!((p.eps_tilde - et).abs() < 1e-15);
        assert_eq!(p.samples_per_iteration, (0.01 / (et * et)).ceil() as usize);
        assert_eq!(p.samples_per_iteration, 8780);
    }

    #[test]
    fn sample_plan_clamps() {
        let p = sample_plan(0.05, 0.5, 0.5, 0.4, 1e-9, 1.0, 1.0).unwrap();
        assert!(p.log_term <= 0.0);
        assert!((p.tau - (2.0 * (1.0f64 / 0.05).ln()).sqrt()).abs() < 1e-12);
        assert_eq!(p.samples_per_iteration, 1);
        assert!(sample_plan(0.0, 0.1, 0.5, 0.9, 0.1, 1.0, 1.0).is_err());
        assert!(sample_plan(0.05, 0.1, 0.5, -1.0, 0.1, 1.0, 1.0).is_err());
    }
}
