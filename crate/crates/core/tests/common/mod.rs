#![allow(dead_code)]

use lshaped_core::instance::{build_extensive_form, random_instance, RandomSpec, TwoStageProblem, DEFAULT_ENUMERATION_CAP};
use lshaped_core::lp::{solve_lp, LpStatus, ToleranceSet};
use lshaped_core::oracle::SampleSet;
use rand::Rng;

/// Twenty random finite instances with `n ≤ 8` and at most 30 scenarios.
pub fn criterion_instances() -> Vec<TwoStageProblem> {
    (0..20u64)
        .map(|seed| {
            random_instance(RandomSpec {
                n: 2 + (seed as usize % 7),
                m: 1 + (seed as usize % 3),
                l: 2 + (seed as usize % 4),
                r: 2 + (seed as usize % 3),
                scenarios: 5 + (seed as usize * 7) % 26,
                seed: 1000 + seed,
            })
            .unwrap()
        })
        .collect()
}

/// Optimal value of the extensive form over the full distribution.
pub fn extensive_optimum(p: &TwoStageProblem) -> f64 {
    let s = SampleSet::exact(p, DEFAULT_ENUMERATION_CAP).unwrap();
    let lp = build_extensive_form(p, &s.scenarios, usize::MAX).unwrap();
    let sol = solve_lp(&lp, &ToleranceSet::default()).unwrap();
    assert_eq!(sol.status, LpStatus::Optimal);
    sol.objective
}

/// Random point of `X`: uniform in the bound box, pulled toward the lower
/// corner (feasible for the generated packing rows) until it is feasible.
pub fn random_feasible<R: Rng>(p: &TwoStageProblem, rng: &mut R) -> Vec<f64> {
    let mut x: Vec<f64> = p
        .lower
        .iter()
        .zip(&p.upper)
        .map(|(&lo, &hi)| rng.random_range(lo..=hi))
        .collect();
    while !p.is_first_stage_feasible(&x, 1e-12) {
        for (xi, lo) in x.iter_mut().zip(&p.lower) {
            *xi = lo + 0.5 * (*xi - lo);
        }
    }
    x
}
