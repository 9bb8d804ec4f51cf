mod common;

use common::{criterion_instances, extensive_optimum, random_feasible};
use lshaped_core::bundle::{BundleModel, Cut, CutKind};
use lshaped_core::instance::{build_extensive_form, tiny_inventory, validate, DEFAULT_ENUMERATION_CAP};
use lshaped_core::lp::{solve_lp, LpStatus, ToleranceSet};
use lshaped_core::lshaped::{run, StepKind, StepSizePolicy, SolverConfig, StopReason};
use lshaped_core::oracle::{estimate, SampleMode, SampleSet};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn exact(policy: StepSizePolicy) -> SolverConfig {
    SolverConfig {
        sampling: SampleMode::Exact,
        policy,
        stop_tol: 1e-8,
        ..SolverConfig::default()
    }
}

#[test]
fn tiny_exact_run_finds_the_minimizer() {
    let out = run(&tiny_inventory(), &exact(StepSizePolicy::Constant { rho: 1.0 })).unwrap();
    assert_eq!(out.stop, StopReason::Converged);
    assert!((out.best.x[0] - 1.0).abs() <= 1e-6, "{:?}", out.best.x);
    assert!((out.best.fhat + 0.9).abs() <= 1e-6);
}

#[test]
fn every_policy_reaches_the_tiny_optimum() {
    let policies = [
        StepSizePolicy::Constant { rho: 0.1 },
        StepSizePolicy::Constant { rho: 10.0 },
        StepSizePolicy::Practical { cp: 1.0 },
        StepSizePolicy::Optimal {
            f_star: -0.9,
            diameter: None,
            eps2: 0.0,
        },
        StepSizePolicy::SharpOptimal {
            mu: 0.1,
            f_star: -0.9,
            eps2: 0.0,
        },
    ];
    for policy in policies {
        let out = run(&tiny_inventory(), &exact(policy)).unwrap();
        assert!((out.best.fhat + 0.9).abs() <= 1e-6, "{}: {}", policy.label(), out.best.fhat);
    }
}

#[test]
fn tiny_inventory_diameter_is_the_budget_box() {
    // X = [0, 10]: budget 10 at unit price.
    let report = validate(&tiny_inventory()).unwrap();
    assert_eq!(report.diameter, 10.0);
    assert_eq!(report.scenarios, 2.0);
}

#[test]
fn runs_are_deterministic() {
    let p = &criterion_instances()[3];
    let config = SolverConfig {
        sampling: SampleMode::Sampled(20),
        seed: 11,
        max_total_inner: 200,
        ..SolverConfig::default()
    };
    let a = run(p, &config).unwrap();
    let b = run(p, &config).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.best, b.best);
    let c = run(p, &SolverConfig { seed: 12, ..config }).unwrap();
    assert_ne!(a.trace, c.trace);
}

#[test]
fn trace_records_follow_the_descent_test() {
    let p = &criterion_instances()[5];
    let beta = 0.5;
    let out = run(
        p,
        &SolverConfig {
            sampling: SampleMode::Sampled(15),
            max_total_inner: 300,
            beta,
            ..SolverConfig::default()
        },
    )
    .unwrap();
    for (i, rec) in out.trace.inner.iter().enumerate() {
        assert_eq!(rec.cum_inner, i + 1);
        let serious = rec.fhat_center - rec.fhat_trial >= beta * (rec.fhat_center - rec.model_trial);
        assert_eq!(rec.kind == StepKind::Serious, serious, "record {i}: {rec:?}");
        assert!(rec.delta_tilde >= -1e-9 * (1.0 + rec.fhat_center.abs()));
    }
    assert_eq!(out.total_inner, out.trace.inner.len());
}

#[test]
fn exact_runs_decrease_the_objective_and_never_undershoot() {
    for p in criterion_instances().iter().take(6) {
        let f_star = extensive_optimum(p);
        let out = run(
            p,
            &SolverConfig {
                sampling: SampleMode::Exact,
                stop_tol: 1e-9,
                max_outer: 5_000,
                max_total_inner: 5_000,
                ..SolverConfig::default()
            },
        )
        .unwrap();
        let scale = 1e-9 * (1.0 + f_star.abs());
        for pair in out.centers.windows(2) {
            assert!(pair[1].fhat <= pair[0].fhat + scale, "{} -> {}", pair[0].fhat, pair[1].fhat);
        }
        assert!(out.best.fhat >= f_star - scale, "{} < {}", out.best.fhat, f_star);
        for x in &out.last_iterates {
            assert!(p.is_first_stage_feasible(x, 1e-9));
        }
    }
}

#[test]
fn oracle_matches_extensive_form_with_fixed_first_stage() {
    let tol = ToleranceSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for p in criterion_instances().iter().take(8) {
        let sample = SampleSet::exact(p, DEFAULT_ENUMERATION_CAP).unwrap();
        let x = random_feasible(p, &mut rng);
        let est = estimate(p, &sample, &x, &tol).unwrap();
        let mut lp = build_extensive_form(p, &sample.scenarios, usize::MAX).unwrap();
        lp.lower[..p.n()].copy_from_slice(&x);
        lp.upper[..p.n()].copy_from_slice(&x);
        let sol = solve_lp(&lp, &tol).unwrap();
        assert_eq!(sol.status, LpStatus::Optimal);
        assert!((est.value - sol.objective).abs() <= 1e-8 * (1.0 + sol.objective.abs()));
    }
}

#[test]
fn subgradients_give_global_minorants() {
    let tol = ToleranceSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for p in criterion_instances().iter().take(8) {
        let sample = SampleSet::exact(p, DEFAULT_ENUMERATION_CAP).unwrap();
        let points: Vec<Vec<f64>> = (0..6).map(|_| random_feasible(p, &mut rng)).collect();
        let ests: Vec<_> = points.iter().map(|x| estimate(p, &sample, x, &tol).unwrap()).collect();
        let mut model = BundleModel::init(points[0].clone(), ests[0].value, ests[0].subgradient.clone(), 3, 0);
        for (i, (x, e)) in points.iter().zip(&ests).enumerate().skip(1) {
            model.push(Cut {
                kind: CutKind::Gradient,
                anchor: x.clone(),
                value: e.value,
                slope: e.subgradient.clone(),
                birth: i,
            });
            assert!(model.cuts().iter().filter(|c| c.kind == CutKind::Gradient).count() <= 3);
        }
        for (y, ey) in points.iter().zip(&ests) {
            for (x, ex) in points.iter().zip(&ests) {
                let lin: f64 = ex.value + ex.subgradient.iter().zip(y).zip(x).map(|((g, yi), xi)| g * (yi - xi)).sum::<f64>();
                assert!(lin <= ey.value + 1e-8 * (1.0 + ey.value.abs()));
            }
            assert!(model.eval(y) <= ey.value + 1e-8 * (1.0 + ey.value.abs()));
        }
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let p = tiny_inventory();
    for config in [
        SolverConfig {
            beta: 1.0,
            ..SolverConfig::default()
        },
        SolverConfig {
            sampling: SampleMode::Sampled(0),
            ..SolverConfig::default()
        },
        SolverConfig {
            policy: StepSizePolicy::Constant { rho: 0.0 },
            ..SolverConfig::default()
        },
        SolverConfig {
            memory: 0,
            ..SolverConfig::default()
        },
    ] {
        assert!(run(&p, &config).is_err());
    }
}
