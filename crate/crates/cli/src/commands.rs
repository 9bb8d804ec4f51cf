//! Command implementations. Each returns the process exit code.

use std::path::Path;

use lshaped_core::bench::{run_bench, BenchSpec};
use lshaped_core::bounds::{evaluate_candidates, saa_lower_bound, BoundEstimate, CandidateEvaluation};
use lshaped_core::instance::{validate, TwoStageProblem, ValidationReport};
use lshaped_core::lshaped::{run, Center, InnerRecord, RunOutput, SolverError, StepSizePolicy, StopReason, TheoryBounds, TheoryInputs};
use lshaped_core::lshaped::theory_bounds;
use lshaped_core::oracle::SampleMode;
use lshaped_core::smps::write_native;
use serde::Serialize;

use crate::config::{InstanceSource, RunConfigDocument, Samples};
use crate::error::{CliError, EXIT_BUDGET, EXIT_OK};
use crate::source;

fn instance(doc: &RunConfigDocument) -> Result<TwoStageProblem, CliError> {
    let src = doc.instance.as_ref().ok_or_else(|| {
        CliError::Usage("no instance given; use --native, --smps, --generator or an [instance] table".into())
    })?;
    source::load(src)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

/// Writes `value` as pretty JSON to `path`, or to stdout without one.
fn emit_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::Numeric(format!("cannot encode report: {e}")))? + "\n";
    match path {
        Some(p) => write_file(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

pub fn write_trace(path: &Path, records: &[InnerRecord]) -> Result<(), CliError> {
    let fail = |e: csv::Error| CliError::Data(format!("cannot write {}: {e}", path.display()));
    let mut w = csv::Writer::from_path(path).map_err(fail)?;
    for rec in records {
        w.serialize(rec).map_err(fail)?;
    }
    w.flush().map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
}

fn mode_label(mode: SampleMode) -> String {
    match mode {
        SampleMode::Exact => "exact".into(),
        SampleMode::Sampled(n) => n.to_string(),
    }
}

#[derive(Serialize)]
struct SolveSummary<'a> {
    instance: &'a str,
    policy: String,
    seed: u64,
    beta: f64,
    samples: String,
    stop: StopReason,
    best: &'a Center,
    final_center: &'a [f64],
    outer_iterations: usize,
    total_inner: usize,
    empirical_lipschitz: f64,
    diameter: f64,
    evaluation: Option<CandidateEvaluation>,
}

pub fn solve(doc: &RunConfigDocument) -> Result<i32, CliError> {
    let config = doc.solver_config()?;
    let problem = instance(doc)?;
    let out: RunOutput = run(&problem, &config)?;
    if let Some(path) = &doc.output.trace {
        write_trace(path, &out.trace.inner)?;
    }
    let evaluation = match doc.output.evaluate {
        Some(samples) => {
            let candidates = if out.last_iterates.is_empty() {
                vec![out.best.x.clone()]
            } else {
                out.last_iterates.clone()
            };
            Some(evaluate_candidates(
                &problem,
                &candidates,
                samples.mode(),
                config.seed,
                config.enumeration_cap,
                &config.lp_tol,
            )?)
        }
        None => None,
    };
    let summary = SolveSummary {
        instance: &problem.name,
        policy: config.policy.label(),
        seed: config.seed,
        beta: config.beta,
        samples: mode_label(config.sampling),
        stop: out.stop,
        best: &out.best,
        final_center: &out.final_center,
        outer_iterations: out.outer_iterations,
        total_inner: out.total_inner,
        empirical_lipschitz: out.empirical_lipschitz,
        diameter: out.diameter,
        evaluation,
    };
    emit_json(&summary, doc.output.summary.as_deref())?;
    eprintln!(
        "lshaped: {} after {} outer / {} inner steps, best estimate {}",
        serde_json::to_string(&out.stop).unwrap_or_default(),
        out.outer_iterations,
        out.total_inner,
        out.best.fhat
    );
    Ok(if out.stop.is_budget() { EXIT_BUDGET } else { EXIT_OK })
}

#[derive(Serialize)]
struct BoundsReport<'a> {
    instance: &'a str,
    batches: usize,
    #[serde(flatten)]
    estimate: BoundEstimate,
}

pub fn bounds(doc: &RunConfigDocument) -> Result<i32, CliError> {
    let problem = instance(doc)?;
    let batches = doc.bounds.batches.unwrap_or(50);
    let batch_size = match (doc.bounds.batch_size, doc.solver.samples) {
        (Some(b), _) => b,
        (None, Some(Samples::Count(n))) => n,
        _ => 100,
    };
    let config = doc.solver_config()?;
    let estimate = saa_lower_bound(&problem, batches, batch_size, doc.seed(), &config.lp_tol)?;
    emit_json(
        &BoundsReport {
            instance: &problem.name,
            batches,
            estimate,
        },
        doc.output.summary.as_deref(),
    )?;
    Ok(EXIT_OK)
}

pub fn bench(doc: &RunConfigDocument) -> Result<i32, CliError> {
    let problem = instance(doc)?;
    let base = doc.solver_config()?;
    let b = &doc.bench;
    let mut policies: Vec<StepSizePolicy> = Vec::new();
    let default_rhos = if b.cps.is_none() && b.f_star.is_none() { vec![0.1, 1.0, 10.0] } else { vec![] };
    for &rho in b.rhos.as_ref().unwrap_or(&default_rhos) {
        policies.push(StepSizePolicy::Constant { rho });
    }
    for &cp in b.cps.iter().flatten() {
        policies.push(StepSizePolicy::Practical { cp });
    }
    if let Some(f_star) = b.f_star {
        policies.push(StepSizePolicy::Optimal {
            f_star,
            diameter: doc.solver.diameter,
            eps2: doc.solver.eps2.unwrap_or(0.0),
        });
    }
    for p in &policies {
        p.check().map_err(CliError::from)?;
    }
    let seed = doc.seed();
    let count = b.seeds.unwrap_or(10) as u64;
    let spec = BenchSpec {
        policies,
        seeds: (seed..seed + count).collect(),
        base,
        evaluation: b.evaluate.unwrap_or(Samples::Count(1000)).mode(),
    };
    let report = run_bench(&problem, &spec)?;
    for (i, row) in report.rows.iter().enumerate() {
        let hw = row.half_width.map_or("n/a".to_string(), |h| format!("{h:.6}"));
        let mark = if i == report.best { " *" } else { "" };
        eprintln!("{:<40} {:>14.6} ± {:<12} {:>8.2}s{mark}", row.label, row.mean, hw, row.seconds);
    }
    emit_json(&report, doc.output.summary.as_deref())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct CheckReport<'a> {
    instance: &'a str,
    validation: ValidationReport,
    theory: Option<TheoryBounds>,
    /// Why `theory` is absent.
    theory_note: Option<String>,
}

pub fn check(doc: &RunConfigDocument) -> Result<i32, CliError> {
    let problem = instance(doc)?;
    let validation = validate(&problem)?;
    let s = &doc.solver;
    let noise = doc.noise();
    let rho = match doc.policy()? {
        StepSizePolicy::Constant { rho } => Some(rho),
        _ => None,
    };
    let inputs = TheoryInputs {
        g: s.lipschitz,
        d: Some(s.diameter.unwrap_or(validation.diameter)),
        eps1: noise.eps1,
        eps2: noise.eps2,
        beta: doc.beta(),
        rho,
        gap0: None,
        mu: s.mu,
        v: s.v,
        measured_delta: None,
    };
    let (theory, theory_note) = match theory_bounds(&inputs) {
        Ok(t) => (Some(t), None),
        Err(e @ SolverError::MissingParameter(_)) => (None, Some(e.to_string())),
        Err(e) => return Err(e.into()),
    };
    emit_json(
        &CheckReport {
            instance: &problem.name,
            validation,
            theory,
            theory_note,
        },
        doc.output.summary.as_deref(),
    )?;
    Ok(EXIT_OK)
}

pub fn gen(source: &InstanceSource, out: Option<&Path>) -> Result<i32, CliError> {
    let problem = source::load(source)?;
    validate(&problem)?;
    let text = write_native(&problem);
    match out {
        Some(path) => write_file(path, &text)?,
        None => print!("{text}"),
    }
    Ok(EXIT_OK)
}
