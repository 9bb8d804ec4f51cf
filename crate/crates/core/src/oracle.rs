//! Scenario sampling and the sampled function/subgradient estimator
//! `f̂(x) = cᵀx + Σ wᵢ Q(x; ξᵢ)`, `ĝ(x) = c − Σ wᵢ T(ξᵢ)ᵀuᵢ`.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::instance::{InstanceError, Scenario, TwoStageProblem};
use crate::linalg::{dot, norm};
use crate::lp::{solve_second_stage, SecondStageError, SecondStageResult, ToleranceSet};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("scenario {scenario} of the sample: {source}")]
    SecondStage {
        scenario: usize,
        #[source]
        source: SecondStageError,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
    #[error("point has length {got}, expected {expected}")]
    Dimension { got: usize, expected: usize },
}

/// How the scenario set of each outer iteration is formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SampleMode {
    /// Every joint scenario with its probability as weight (`f̂ = f`).
    Exact,
    /// `size` i.i.d. draws with replacement, each weighted `1/size`.
    Sampled(usize),
}

/// Scenarios used for one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub scenarios: Vec<Scenario>,
    pub seed: u64,
    /// Outer iteration (RNG stream) the set was drawn for.
    pub k: u64,
}

impl SampleSet {
    /// Draws `size` scenarios from the stream `(seed, k)`. The same
    /// arguments always give the same sequence.
    pub fn draw(problem: &TwoStageProblem, size: usize, seed: u64, k: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(k);
        let w = 1.0 / size.max(1) as f64;
        let scenarios = (0..size)
            .map(|_| {
                let mut s = problem.distribution.sample(&mut rng);
                s.weight = w;
                s
            })
            .collect();
        Self { scenarios, seed, k }
    }

    /// All joint scenarios, weighted by probability.
    pub fn exact(problem: &TwoStageProblem, cap: usize) -> Result<Self, InstanceError> {
        Ok(Self {
            scenarios: problem.distribution.enumerate(cap)?,
            seed: 0,
            k: 0,
        })
    }

    pub fn build(problem: &TwoStageProblem, mode: SampleMode, seed: u64, k: u64, cap: usize) -> Result<Self, InstanceError> {
        match mode {
            SampleMode::Exact => Self::exact(problem, cap),
            SampleMode::Sampled(size) => Ok(Self::draw(problem, size, seed, k)),
        }
    }

    pub fn len(&self) -> usize {
        self.scenarios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scenarios.is_empty()
    }
}

/// Sampled value and subgradient at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub subgradient: Vec<f64>,
    /// `Q(x; ξᵢ)` for each scenario of the sample, in sample order.
    pub per_scenario: Vec<f64>,
}

impl Estimate {
    /// Weighted sample variance of `cᵀx + Q(x; ξ)` (equal weights assumed).
    pub fn scenario_variance(&self) -> f64 {
        let s = self.per_scenario.len();
        if s < 2 {
            return 0.0;
        }
        let mean = self.per_scenario.iter().sum::<f64>() / s as f64;
        self.per_scenario.iter().map(|q| (q - mean).powi(2)).sum::<f64>() / (s - 1) as f64
    }
}

/// Solves every scenario of `sample` at `x` (in parallel) and aggregates in
/// sample order, so the result does not depend on thread scheduling.
pub fn estimate(problem: &TwoStageProblem, sample: &SampleSet, x: &[f64], tol: &ToleranceSet) -> Result<Estimate, OracleError> {
    let n = problem.n();
    if x.len() != n {
        return Err(OracleError::Dimension { got: x.len(), expected: n });
    }
    let results: Vec<Result<SecondStageResult, OracleError>> = sample
        .scenarios
        .par_iter()
        .enumerate()
        .map(|(i, sc)| {
            let data = problem.scenario_data(sc);
            solve_second_stage(problem, &data, x, tol).map_err(|source| OracleError::SecondStage { scenario: i, source })
        })
        .collect();
    let mut value = dot(&problem.c, x);
    let mut subgradient = problem.c.clone();
    let mut per_scenario = Vec::with_capacity(results.len());
    for (res, sc) in results.into_iter().zip(&sample.scenarios) {
        let res = res?;
        value += sc.weight * res.value;
        for (g, s) in subgradient.iter_mut().zip(&res.subgradient) {
            *g += sc.weight * s;
        }
        per_scenario.push(res.value);
    }
    Ok(Estimate {
        value,
        subgradient,
        per_scenario,
    })
}

/// Noise parameters of the estimator. `eps_bar` is always recomputed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct NoiseModel {
    /// Bound on `f(x) − f̂(x)`.
    pub eps1: Option<f64>,
    /// Bound on `f̂(x) − f(x)`.
    pub eps2: Option<f64>,
    /// Standard deviation bound of `cᵀx + Q(x; ξ)`.
    pub sigma: Option<f64>,
}

impl NoiseModel {
    pub fn exact() -> Self {
        Self {
            eps1: Some(0.0),
            eps2: Some(0.0),
            sigma: None,
        }
    }

    /// `ε̄ = (β+1)(ε₁+ε₂)` when both bounds are known.
    pub fn eps_bar(&self, beta: f64) -> Option<f64> {
        Some((beta + 1.0) * (self.eps1? + self.eps2?))
    }
}

/// Empirical noise bounds over a grid of points and resampled sets.
/// This is an estimate, not a certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseBounds {
    pub eps1: f64,
    pub eps2: f64,
}

/// Compares `f̂` on `resamples` independent sample sets against the exact
/// `f` at every grid point and returns the largest deviations each way.
pub fn exhaustive_noise_bounds(
    problem: &TwoStageProblem,
    mode: SampleMode,
    grid: &[Vec<f64>],
    resamples: u64,
    seed: u64,
    cap: usize,
    tol: &ToleranceSet,
) -> Result<NoiseBounds, OracleError> {
    let full = SampleSet::exact(problem, cap)?;
    let exact: Vec<f64> = grid
        .iter()
        .map(|x| estimate(problem, &full, x, tol).map(|e| e.value))
        .collect::<Result<_, _>>()?;
    let mut out = NoiseBounds { eps1: 0.0, eps2: 0.0 };
    let sets: Vec<SampleSet> = match mode {
        SampleMode::Exact => vec![full.clone()],
        SampleMode::Sampled(size) => (0..resamples).map(|k| SampleSet::draw(problem, size, seed, k)).collect(),
    };
    for set in &sets {
        for (x, &f) in grid.iter().zip(&exact) {
            let fh = estimate(problem, set, x, tol)?.value;
            out.eps1 = out.eps1.max(f - fh);
            out.eps2 = out.eps2.max(fh - f);
        }
    }
    Ok(out)
}

/// Largest `‖ĝ‖` seen at `points` under `sample`; an empirical stand-in for
/// the Lipschitz constant `G`.
pub fn empirical_lipschitz(
    problem: &TwoStageProblem,
    sample: &SampleSet,
    points: &[Vec<f64>],
    tol: &ToleranceSet,
) -> Result<f64, OracleError> {
    let mut g = 0.0f64;
    for x in points {
        g = g.max(norm(&estimate(problem, sample, x, tol)?.subgradient));
    }
    Ok(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{gen_inventory, tiny_inventory, tiny_inventory_params, Target, DEFAULT_ENUMERATION_CAP};

    fn tol() -> ToleranceSet {
        ToleranceSet::default()
    }

    #[test]
    fn exact_estimates_on_tiny_instance() {
        let p = tiny_inventory();
        let s = SampleSet::exact(&p, DEFAULT_ENUMERATION_CAP).unwrap();
        let e = estimate(&p, &s, &[0.5], &tol()).unwrap();
        assert!((e.value + 0.45).abs() < 1e-12);
        assert!((e.subgradient[0] + 0.9).abs() < 1e-12);
        let e = estimate(&p, &s, &[3.0], &tol()).unwrap();
        assert!((e.value - 0.3).abs() < 1e-12);
        assert!((e.subgradient[0] - 1.1).abs() < 1e-12);
    }

    #[test]
    fn single_scenario_sample() {
        let p = tiny_inventory();
        let det = gen_inventory(&tiny_inventory_params(vec![(vec![2.0], 1.0)])).unwrap();
        let s = SampleSet::draw(&det, 1, 3, 0);
        let e = estimate(&p, &s, &[0.5], &tol()).unwrap();
        assert!((e.value + 0.45).abs() < 1e-12);
        assert!((e.subgradient[0] + 0.9).abs() < 1e-12);
    }

    #[test]
    fn single_scenario_list_repeats() {
        let det = gen_inventory(&tiny_inventory_params(vec![(vec![2.0], 1.0)])).unwrap();
        let s = SampleSet::draw(&det, 5, 11, 2);
        assert_eq!(s.len(), 5);
        assert!(s.scenarios.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn draws_are_reproducible_and_streams_differ() {
        let p = tiny_inventory();
        let a = SampleSet::draw(&p, 50, 7, 3);
        let b = SampleSet::draw(&p, 50, 7, 3);
        let c = SampleSet::draw(&p, 50, 7, 4);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn empirical_frequency() {
        let p = tiny_inventory();
        let s = SampleSet::draw(&p, 10_000, 7, 0);
        let low = s
            .scenarios
            .iter()
            .filter(|sc| sc.overrides.iter().any(|o| o.target == Target::H { row: 1 } && o.value == 1.0))
            .count();
        let freq = low as f64 / 1e4;
        assert!((freq - 0.5).abs() <= 0.02, "{freq}");
    }

    #[test]
    fn noise_bounds_of_singleton_samples() {
        let p = tiny_inventory();
        let exact = exhaustive_noise_bounds(&p, SampleMode::Exact, &[vec![0.5], vec![1.5]], 1, 0, 100, &tol()).unwrap();
        assert_eq!(exact, NoiseBounds { eps1: 0.0, eps2: 0.0 });

        let low: Vec<Vec<f64>> = (0..=10).map(|i| vec![i as f64 * 0.1]).collect();
        let nb = exhaustive_noise_bounds(&p, SampleMode::Sampled(1), &low, 40, 1, 100, &tol()).unwrap();
        assert!(nb.eps1.abs() < 1e-12 && nb.eps2.abs() < 1e-12);

        // On (1, 2] the singleton samples disagree: f̂ − f = ±(x − 1).
        let nb = exhaustive_noise_bounds(&p, SampleMode::Sampled(1), &[vec![1.5]], 40, 1, 100, &tol()).unwrap();
        assert!((nb.eps1 - 0.5).abs() < 1e-12 && (nb.eps2 - 0.5).abs() < 1e-12, "{nb:?}");
    }

    #[test]
    fn eps_bar_formula() {
        let m = NoiseModel {
            eps1: Some(0.01),
            eps2: Some(0.01),
            sigma: None,
        };
        assert!((m.eps_bar(0.5).unwrap() - 0.03).abs() < 1e-15);
        assert_eq!(NoiseModel::default().eps_bar(0.5), None);
    }
}
