//! Recourse problem `Q(x; ξ) = min qᵀy s.t. W y (sense) h − T x, bounds on y`.

use thiserror::Error;

use super::{solve_lp, LinearProgram, LpError, LpStatus, Row, ToleranceSet};
use crate::instance::{ScenarioData, TwoStageProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct SecondStageResult {
    /// Optimal recourse cost `Q(x; ξ)`.
    pub value: f64,
    /// Row duals `u` (sensitivity of `Q` to the row right-hand sides).
    pub duals: Vec<f64>,
    /// `−T(ξ)ᵀ u`, a subgradient of `Q(·; ξ)` at `x`.
    pub subgradient: Vec<f64>,
    /// Optimal recourse decision.
    pub y: Vec<f64>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SecondStageError {
    #[error("second-stage problem is infeasible (recourse is not relatively complete at this x)")]
    Infeasible,
    #[error("second-stage problem is unbounded below")]
    Unbounded,
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Builds the recourse LP for resolved scenario data at first-stage point `x`.
pub fn second_stage_lp(problem: &TwoStageProblem, data: &ScenarioData, x: &[f64]) -> LinearProgram {
    let w = &problem.recourse;
    let tx = data.t.mul_vec(x);
    let rows = (0..w.rows())
        .map(|i| {
            let coeffs = w
                .row(i)
                .iter()
                .enumerate()
                .filter(|(_, &a)| a != 0.0)
                .map(|(j, &a)| (j, a))
                .collect();
            Row::new(coeffs, problem.recourse_senses[i], data.h[i] - tx[i])
        })
        .collect();
    LinearProgram {
        objective: data.q.clone(),
        rows,
        lower: problem.recourse_lower.clone(),
        upper: problem.recourse_upper.clone(),
    }
}

/// Solves the recourse problem and returns its value together with the
/// subgradient contribution `−T(ξ)ᵀu`.
pub fn solve_second_stage(
    problem: &TwoStageProblem,
    data: &ScenarioData,
    x: &[f64],
    tol: &ToleranceSet,
) -> Result<SecondStageResult, SecondStageError> {
    let lp = second_stage_lp(problem, data, x);
    let sol = solve_lp(&lp, tol)?;
    match sol.status {
        LpStatus::Infeasible => Err(SecondStageError::Infeasible),
        LpStatus::Unbounded => Err(SecondStageError::Unbounded),
        LpStatus::Optimal => {
            let mut subgradient = data.t.tr_mul_vec(&sol.duals);
            for g in &mut subgradient {
                *g = -*g;
            }
            Ok(SecondStageResult {
                value: sol.objective,
                duals: sol.duals,
                subgradient,
                y: sol.x,
            })
        }
    }
}
