//! Exact proximal gap and closed-form complexity bounds.

use serde::Serialize;

use super::SolverError;
use crate::bundle::{BundleModel, Cut, CutKind};
use crate::instance::TwoStageProblem;
use crate::linalg::dist;
use crate::lp::ToleranceSet;
use crate::master::{solve_prox_step, FeasibleSet, MasterOptions};
use crate::oracle::{estimate, SampleSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactGap {
    /// `Δ = f(c) − min_x { f(x) + (ρ/2)‖x − c‖² }`.
    pub delta: f64,
    /// Approximate proximal point.
    pub x_bar: Vec<f64>,
    pub f_center: f64,
    /// Upper minus lower bound on the proximal minimum at exit.
    pub bracket: f64,
    pub iterations: usize,
}

/// Proximal gap of the true objective at `center`, computed with a
/// full-memory cutting-plane model over all scenarios. Iterates until the
/// proximal minimum is bracketed to `1e-10` relative accuracy.
pub fn exact_proximal_gap(
    problem: &TwoStageProblem,
    center: &[f64],
    rho: f64,
    cap: usize,
    tol: &ToleranceSet,
) -> Result<ExactGap, SolverError> {
    let sample = SampleSet::exact(problem, cap)?;
    let oracle = |x: &[f64], t: usize| estimate(problem, &sample, x, tol).map_err(|source| SolverError::Oracle { k: 0, t, source });
    let at_center = oracle(center, 0)?;
    let f_center = at_center.value;
    let mut model = BundleModel::init(center.to_vec(), f_center, at_center.subgradient, usize::MAX, 0);
    let set = FeasibleSet::of(problem);
    let opts = MasterOptions::default();
    let mut upper = f_center;
    let mut x_bar = center.to_vec();
    let mut warm: Option<Vec<f64>> = None;
    for it in 1..=10_000 {
        let prox = solve_prox_step(&model, rho, &set, warm.as_deref(), &opts)
            .map_err(|source| SolverError::Master { k: 0, t: it, source })?;
        let est = oracle(&prox.x, it)?;
        let d = dist(&prox.x, center);
        let value = est.value + 0.5 * rho * d * d;
        if value < upper {
            upper = value;
            x_bar = prox.x.clone();
        }
        let bracket = upper - prox.prox_objective;
        if bracket <= 1e-10 * (1.0 + upper.abs()) {
            return Ok(ExactGap {
                delta: f_center - upper,
                x_bar,
                f_center,
                bracket,
                iterations: it,
            });
        }
        model.push(Cut {
            kind: CutKind::Gradient,
            anchor: prox.x.clone(),
            value: est.value,
            slope: est.subgradient,
            birth: it,
        });
        warm = Some(prox.x);
    }
    Err(SolverError::InvalidConfig("exact proximal gap did not converge in 10000 iterations".into()))
}

/// `⌈8G²/(ρ(1−β)²·denom) − 16/(1−β)²⌉ + 1`, the inner-loop length bound
/// with `denom` either `ε̄` or a measured `Δₖ − ε₁ − ε₂`.
pub fn inner_loop_bound(g: f64, rho: f64, beta: f64, denom: f64) -> f64 {
    let ob = (1.0 - beta) * (1.0 - beta);
    (8.0 * g * g / (rho * ob * denom) - 16.0 / ob).ceil() + 1.0
}

/// Lower bound on `Δₖ` from the gap `f(xₖ) − f*`, step size and diameter.
pub fn proximal_gap_lower_bound(gap: f64, rho: f64, d: f64) -> f64 {
    if gap <= rho * d * d {
        gap * gap / (2.0 * rho * d * d)
    } else {
        gap / 2.0
    }
}

/// Lower bound on `Δₖ` for a `μ`-sharp objective.
pub fn sharp_proximal_gap_lower_bound(gap: f64, rho: f64, mu: f64) -> f64 {
    if gap >= mu * mu / rho {
        mu * mu / (2.0 * rho)
    } else {
        gap / 2.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TheoryInputs {
    pub g: Option<f64>,
    pub d: Option<f64>,
    pub eps1: Option<f64>,
    pub eps2: Option<f64>,
    pub beta: f64,
    /// Constant step size.
    pub rho: Option<f64>,
    /// `f(x_{0,0}) − f*`.
    pub gap0: Option<f64>,
    pub mu: Option<f64>,
    pub v: Option<f64>,
    /// Measured `Δₖ`, used for the inner bound when the oracle is exact.
    pub measured_delta: Option<f64>,
}

/// Closed-form bounds. `None` marks quantities whose inputs are missing or
/// that are undefined (e.g. divisions by `ε̄ = 0`).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheoryBounds {
    pub eps_bar: f64,
    /// `ε̄ = 0`: divisions by `ε̄` are skipped and the inner bound uses the
    /// measured proximal gap.
    pub exact_oracle: bool,
    pub delta_c: Option<f64>,
    pub k_c: Option<f64>,
    pub inner_per_outer_c: Option<f64>,
    pub total_inner_c: Option<f64>,
    pub delta_i: f64,
    pub k_i: Option<f64>,
    pub total_inner_i: Option<f64>,
    pub rho_sc: Option<f64>,
    pub delta_sc: f64,
    pub k_sc: Option<f64>,
    pub total_inner_sc: Option<f64>,
    pub delta_si: f64,
    pub k_si: Option<f64>,
    pub total_inner_si: Option<f64>,
}

/// `max{0, ⌈ln(ratio) / −ln(base)⌉}`, with non-positive ratios giving 0.
fn log_steps(ratio: f64, base: f64) -> f64 {
    if !(ratio > 0.0) {
        return 0.0;
    }
    (ratio.ln() / -base.ln()).ceil().max(0.0)
}

pub fn theory_bounds(inp: &TheoryInputs) -> Result<TheoryBounds, SolverError> {
    let beta = inp.beta;
    if !(beta > 0.0 && beta < 1.0) {
        return Err(SolverError::InvalidConfig(format!("beta = {beta} is not in (0, 1)")));
    }
    let (eps1, eps2) = match (inp.eps1, inp.eps2) {
        (Some(a), Some(b)) => (a, b),
        _ => return Err(SolverError::MissingParameter("noise bounds eps1 and eps2".into())),
    };
    let eb = (beta + 1.0) * (eps1 + eps2);
    let exact = eb == 0.0;
    let ob = (1.0 - beta) * (1.0 - beta);
    let pos = |v: f64| if exact { None } else { Some(v) };

    let delta_c = match (inp.rho, inp.d) {
        (Some(rho), Some(d)) => Some((4.0 * eb / beta).max((4.0 * eb * rho / beta).sqrt() * d)),
        _ => None,
    };
    let k_c = match (inp.gap0, delta_c) {
        (Some(g0), Some(dc)) if !exact => Some(((g0 - dc) / eb).ceil().max(0.0)),
        _ => None,
    };
    let denom = if exact {
        inp.measured_delta.map(|d| d - eps1 - eps2)
    } else {
        Some(eb)
    };
    let inner_per_outer_c = match (inp.g, inp.rho, denom) {
        (Some(g), Some(rho), Some(den)) if den > 0.0 => Some(inner_loop_bound(g, rho, beta, den)),
        _ => None,
    };
    let total_inner_c = match (inner_per_outer_c, k_c) {
        (Some(a), Some(b)) => Some(a * b),
        _ => None,
    };

    let delta_i = 4.0 * eb / beta;
    let k_i = match inp.gap0 {
        Some(g0) if !exact => Some(log_steps(g0 / delta_i, 1.0 - beta / 4.0)),
        _ => None,
    };
    let total_inner_i = match (inp.g, inp.d) {
        (Some(g), Some(d)) => pos(32.0 * g * g * d * d / (3.0 * ob * (2.0 - beta / 4.0) * eb * eb)),
        _ => None,
    };

    let rho_sc = match (inp.mu, inp.v) {
        (Some(mu), Some(v)) => pos(beta * mu * mu * v / (2.0 * eb)),
        _ => None,
    };
    let delta_sc = 4.0 * eb / beta;
    let (k_sc, total_inner_sc) = match (inp.gap0, inp.mu, inp.v) {
        (Some(g0), Some(mu), Some(v)) if !exact && v > 0.0 && v < 1.0 => {
            let steps = |shift: f64| (((g0 - shift) / ((1.0 / v - 1.0) * eb)).ceil() + 1.0).max(1.0);
            let per = |g: f64| (16.0 / ob * (g * g / ((1.0 - v) * mu * mu) - 1.0)).ceil() + 1.0;
            if v >= 0.5 {
                let a = steps(4.0 * eb / beta);
                (Some(a), inp.g.map(|g| a * per(g)))
            } else {
                let a = steps(4.0 * eb / beta);
                let extra = log_steps(1.0 / (1.0 / v - 1.0), 1.0 - beta / 2.0) + 1.0;
                let a2 = steps(2.0 * eb / (beta * v));
                (
                    Some(a + extra),
                    inp.g.map(|g| a2 * per(g) + 32.0 * g * g / (mu * mu * v * beta * ob)),
                )
            }
        }
        _ => (None, None),
    };

    let delta_si = 4.0 * eb / beta;
    let k_si = match inp.gap0 {
        Some(g0) if !exact => Some(log_steps((g0 - 3.0 * eb / beta) / (eb / beta), 1.0 - beta / 2.0)),
        _ => None,
    };
    let total_inner_si = match (inp.g, inp.mu, k_si) {
        (Some(g), Some(mu), Some(k)) => Some(16.0 * g * g / (ob * mu * mu * (1.0 - 2.0 * beta / (3.0 * (beta + 1.0)))) * k),
        _ => None,
    };

    Ok(TheoryBounds {
        eps_bar: eb,
        exact_oracle: exact,
        delta_c,
        k_c,
        inner_per_outer_c,
        total_inner_c,
        delta_i,
        k_i,
        total_inner_i,
        rho_sc,
        delta_sc,
        k_sc,
        total_inner_sc,
        delta_si,
        k_si,
        total_inner_si,
    })
}
