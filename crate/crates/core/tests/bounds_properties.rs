use lshaped_core::bounds::{evaluate_candidates, saa_lower_bound, sample_plan};
use lshaped_core::instance::{tiny_inventory, Target, DEFAULT_ENUMERATION_CAP};
use lshaped_core::lp::ToleranceSet;
use lshaped_core::oracle::{SampleMode, SampleSet};
use proptest::prelude::*;

fn tiny_f(x: f64) -> f64 {
    1.1 * x - x.min(1.0) - x.min(2.0)
}

/// Optimal value of the tiny model when a fraction `low` of the sample has
/// demand 1 and the rest demand 2: the minimum of the piecewise-linear
/// objective sits at `x = 1` or `x = 2`.
fn tiny_saa_value(low: f64) -> f64 {
    (-0.9f64).min(-1.8 + 2.0 * low)
}

fn low_fraction(sample: &SampleSet) -> f64 {
    let low = sample
        .scenarios
        .iter()
        .filter(|s| s.overrides.iter().any(|o| matches!(o.target, Target::H { .. }) && o.value < 1.5))
        .count();
    low as f64 / sample.len() as f64
}

#[test]
fn batch_values_match_the_closed_form_saa_value() {
    let p = tiny_inventory();
    let est = saa_lower_bound(&p, 12, 40, 21, &ToleranceSet::default()).unwrap();
    for (b, v) in est.batch_values.iter().enumerate() {
        let sample = SampleSet::draw(&p, 40, 21, b as u64);
        let expected = tiny_saa_value(low_fraction(&sample));
        assert!((v - expected).abs() <= 1e-9, "batch {b}: {v} vs {expected}");
    }
}

#[test]
fn tiny_lower_bound_brackets_the_optimum() {
    let est = saa_lower_bound(&tiny_inventory(), 50, 100, 0, &ToleranceSet::default()).unwrap();
    let hw = est.half_width.unwrap();
    assert!(est.mean <= -0.9 + 3.0 * hw, "{} ± {}", est.mean, hw);
    assert!((est.mean + 0.9).abs() <= 3.0 * hw, "{} ± {}", est.mean, hw);
}

#[test]
fn lower_bound_holds_across_seeds() {
    let p = tiny_inventory();
    let hits = (0..40u64)
        .filter(|&seed| {
            let est = saa_lower_bound(&p, 10, 50, seed, &ToleranceSet::default()).unwrap();
            est.mean - est.half_width.unwrap() <= -0.9
        })
        .count();
    assert!(hits >= 38, "{hits}/40");
}

#[test]
fn batches_are_reproducible_and_independent_of_thread_count() {
    let p = tiny_inventory();
    let tol = ToleranceSet::default();
    let a = saa_lower_bound(&p, 8, 30, 4, &tol).unwrap();
    let b = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap()
        .install(|| saa_lower_bound(&p, 8, 30, 4, &tol).unwrap());
    assert_eq!(a, b);
}

#[test]
fn exact_candidate_values_match_the_objective() {
    let xs = [0.0, 0.5, 1.0, 1.5, 2.0, 7.0];
    let candidates: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
    let eval = evaluate_candidates(
        &tiny_inventory(),
        &candidates,
        SampleMode::Exact,
        0,
        DEFAULT_ENUMERATION_CAP,
        &ToleranceSet::default(),
    )
    .unwrap();
    for (v, &x) in eval.values.iter().zip(&xs) {
        assert!((v - tiny_f(x)).abs() <= 1e-12, "f({x}) = {v}");
    }
    assert_eq!(eval.best_index, 2);
    assert_eq!(eval.samples, 2);
}

#[test]
fn candidate_at_the_optimum_has_no_sampling_noise() {
    let eval = evaluate_candidates(
        &tiny_inventory(),
        &[vec![1.0]],
        SampleMode::Sampled(37),
        5,
        DEFAULT_ENUMERATION_CAP,
        &ToleranceSet::default(),
    )
    .unwrap();
    assert!((eval.best_value + 0.9).abs() <= 1e-12);
}

struct Plan {
    log_term: f64,
    tau: f64,
    eps_tilde: f64,
    samples: f64,
}

fn plan_by_hand(zeta: f64, delta: f64, beta: f64, gap0: f64, sigma: f64) -> Plan {
    let mut log_term = 0.0;
    let mut gap = gap0;
    // Smallest integer m with gap0·(1−β/4)^m ≤ δ, or the non-positive
    // ceiling when δ ≥ gap0.
    if delta < gap0 {
        while gap > delta {
            gap *= 1.0 - beta / 4.0;
            log_term += 1.0;
        }
    } else {
        log_term = ((delta / gap0).ln() / (1.0 - beta / 4.0).ln()).ceil();
    }
    let arg = (6.0 * log_term).max(1.0) / zeta;
    let tau = (2.0 * arg.ln()).sqrt().max(1.0);
    let eps_tilde = beta * delta / (8.0 * (beta + 1.0) * tau);
    Plan {
        log_term,
        tau,
        eps_tilde,
        samples: (sigma * sigma / (eps_tilde * eps_tilde)).ceil().max(1.0),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn sample_plan_matches_a_direct_evaluation(
        zeta in 0.001f64..0.5,
        delta in 0.001f64..0.9,
        beta in 0.05f64..0.95,
        gap0 in 0.01f64..100.0,
        sigma in 0.01f64..10.0,
    ) {
        let plan = sample_plan(zeta, delta, beta, gap0, sigma, 1.0, 1.0).unwrap();
        let hand = plan_by_hand(zeta, delta, beta, gap0, sigma);
        // Repeated multiplication and the logarithm ratio can round to
        // neighbouring integers only at exact powers.
        prop_assert!((plan.log_term - hand.log_term).abs() <= 1.0);
        if plan.log_term == hand.log_term {
            prop_assert!((plan.tau - hand.tau).abs() <= 1e-12 * hand.tau);
            prop_assert!((plan.eps_tilde - hand.eps_tilde).abs() <= 1e-12 * hand.eps_tilde);
            let s = plan.samples_per_iteration as f64;
            prop_assert!((s - hand.samples).abs() <= 1.0 + 1e-9 * hand.samples);
        }
    }
}

#[test]
fn sample_plan_rejects_out_of_range_inputs() {
    assert!(sample_plan(0.0, 0.1, 0.5, 1.0, 1.0, 1.0, 1.0).is_err());
    assert!(sample_plan(0.1, 1.5, 0.5, 1.0, 1.0, 1.0, 1.0).is_err());
    assert!(sample_plan(0.1, 0.1, 1.0, 1.0, 1.0, 1.0, 1.0).is_err());
    assert!(sample_plan(0.1, 0.1, 0.5, 0.0, 1.0, 1.0, 1.0).is_err());
    assert!(sample_plan(0.1, 0.1, 0.5, 1.0, 0.0, 1.0, 1.0).is_err());
}
