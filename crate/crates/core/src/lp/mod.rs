//! Self-contained linear programming engine.
//!
//! Problems are stated with general row senses and variable bounds; they are
//! scaled and rewritten into equality standard form (`standard`), then solved
//! by a dense two-phase revised simplex (`simplex`). Every optimal answer is
//! certified against the original data before it is returned: primal
//! feasibility, dual sign feasibility, complementary slackness and the
//! duality gap.
//!
//! Dual sign convention: `duals[i]` is the sensitivity of the optimal value
//! to the right-hand side of row `i`, so `≥` rows carry nonnegative duals and
//! `≤` rows nonpositive ones for a minimization.

mod second_stage;
mod simplex;
mod standard;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use second_stage::{second_stage_lp, solve_second_stage, SecondStageError, SecondStageResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sense {
    #[serde(rename = "<=")]
    Le,
    #[serde(rename = ">=")]
    Ge,
    #[serde(rename = "=")]
    Eq,
}

/// One linear constraint `coeffs · x  sense  rhs`, stored sparsely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub coeffs: Vec<(usize, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

impl Row {
    pub fn new(coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) -> Self {
        Self { coeffs, sense, rhs }
    }

    pub fn activity(&self, x: &[f64]) -> f64 {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }

    /// Signed violation: positive when `x` breaks the row.
    pub fn violation(&self, x: &[f64]) -> f64 {
        let a = self.activity(x);
        match self.sense {
            Sense::Le => a - self.rhs,
            Sense::Ge => self.rhs - a,
            Sense::Eq => (a - self.rhs).abs(),
        }
    }
}

/// `min objective · x` subject to `rows` and `lower ≤ x ≤ upper`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl LinearProgram {
    /// New program with default bounds `0 ≤ x < +∞` and no rows.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            rows: Vec::new(),
            lower: vec![0.0; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn add_row(&mut self, coeffs: Vec<(usize, f64)>, sense: Sense, rhs: f64) {
        self.rows.push(Row::new(coeffs, sense, rhs));
    }

    pub fn evaluate(&self, x: &[f64]) -> f64 {
        crate::linalg::dot(&self.objective, x)
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.lower.len() != n || self.upper.len() != n {
            return Err(LpError::InvalidInput(format!(
                "bound vectors have length {}/{}, expected {n}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some(j) = self.objective.iter().position(|v| !v.is_finite()) {
            return Err(LpError::InvalidInput(format!("objective coefficient {j} is not finite")));
        }
        for j in 0..n {
            if self.lower[j].is_nan() || self.upper[j].is_nan() || self.lower[j] == f64::INFINITY || self.upper[j] == f64::NEG_INFINITY {
                return Err(LpError::InvalidInput(format!("variable {j} has invalid bounds")));
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            if !row.rhs.is_finite() {
                return Err(LpError::InvalidInput(format!("row {i} has non-finite rhs")));
            }
            for &(j, a) in &row.coeffs {
                if j >= n {
                    return Err(LpError::InvalidInput(format!("row {i} references column {j} >= {n}")));
                }
                if !a.is_finite() {
                    return Err(LpError::InvalidInput(format!("row {i} has a non-finite coefficient")));
                }
            }
        }
        Ok(())
    }
}

/// Numerical tolerances for [`solve_lp`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ToleranceSet {
    /// Absolute primal feasibility on scaled data.
    pub feasibility: f64,
    /// Complementary slackness.
    pub complementarity: f64,
    /// Relative duality gap.
    pub gap: f64,
    /// Smallest pivot element accepted by the ratio test.
    pub pivot: f64,
    /// Reduced-cost threshold for entering candidates.
    pub optimality: f64,
    pub max_iterations: usize,
    /// Basis condition estimate above which the solve is abandoned.
    pub max_condition: f64,
}

impl Default for ToleranceSet {
    fn default() -> Self {
        Self {
            feasibility: 1e-8,
            complementarity: 1e-8,
            gap: 1e-8,
            pivot: 1e-9,
            optimality: 1e-9,
            max_iterations: 100_000,
            max_condition: 1e14,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point (empty unless optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Row duals (empty unless optimal).
    pub duals: Vec<f64>,
    /// `objective - A^T duals` (empty unless optimal).
    pub reduced_costs: Vec<f64>,
    pub iterations: usize,
}

impl LpSolution {
    fn without_point(status: LpStatus, iterations: usize) -> Self {
        let objective = match status {
            LpStatus::Infeasible => f64::INFINITY,
            LpStatus::Unbounded => f64::NEG_INFINITY,
            LpStatus::Optimal => f64::NAN,
        };
        Self {
            status,
            x: Vec::new(),
            objective,
            duals: Vec::new(),
            reduced_costs: Vec::new(),
            iterations,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    InvalidInput(String),
    #[error("simplex iteration limit reached after {iterations} iterations")]
    IterationLimit { iterations: usize },
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

/// Solves `lp` to certified optimality, or reports infeasibility or
/// unboundedness. Deterministic for identical input.
pub fn solve_lp(lp: &LinearProgram, tol: &ToleranceSet) -> Result<LpSolution, LpError> {
    lp.check()?;
    let sf = match standard::StandardForm::build(lp) {
        Some(sf) => sf,
        None => return Ok(LpSolution::without_point(LpStatus::Infeasible, 0)),
    };
    let mut engine = simplex::Simplex::new(&sf, tol);
    let outcome = engine.run()?;
    let iterations = engine.iterations();
    match outcome {
        simplex::Outcome::Infeasible => Ok(LpSolution::without_point(LpStatus::Infeasible, iterations)),
        simplex::Outcome::Unbounded => Ok(LpSolution::without_point(LpStatus::Unbounded, iterations)),
        simplex::Outcome::Optimal => {
            let (z, y_std) = engine.primal_dual();
            let x = sf.recover_primal(&z);
            let duals = sf.recover_duals(&y_std);
            let reduced_costs = reduced_costs(lp, &duals);
            let objective = lp.evaluate(&x);
            let sol = LpSolution {
                status: LpStatus::Optimal,
                x,
                objective,
                duals,
                reduced_costs,
                iterations,
            };
            certify(lp, &sol, tol).map_err(LpError::NumericalBreakdown)?;
            Ok(sol)
        }
    }
}

fn reduced_costs(lp: &LinearProgram, duals: &[f64]) -> Vec<f64> {
    let mut d = lp.objective.clone();
    for (row, &y) in lp.rows.iter().zip(duals) {
        for &(j, a) in &row.coeffs {
            d[j] -= a * y;
        }
    }
    d
}

/// Dual objective implied by row duals and reduced costs.
pub fn dual_objective(lp: &LinearProgram, duals: &[f64], reduced: &[f64]) -> f64 {
    let mut v: f64 = lp.rows.iter().zip(duals).map(|(r, y)| r.rhs * y).sum();
    for (j, &d) in reduced.iter().enumerate() {
        if d > 0.0 {
            v += d * lp.lower[j];
        } else if d < 0.0 {
            v += d * lp.upper[j];
        }
    }
    v
}

/// Checks the optimality certificate of `sol` against the unscaled data.
/// Tolerances are relative to the magnitude of the quantities involved.
pub fn certify(lp: &LinearProgram, sol: &LpSolution, tol: &ToleranceSet) -> Result<(), String> {
    let x = &sol.x;
    let xmax = x.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for (i, row) in lp.rows.iter().enumerate() {
        let amax = row.coeffs.iter().fold(0.0f64, |m, &(_, a)| m.max(a.abs()));
        let scale = 1.0 + row.rhs.abs() + amax * xmax;
        let viol = row.violation(x);
        if viol > 10.0 * tol.feasibility * scale {
            return Err(format!("row {i} violated by {viol:.3e}"));
        }
        let y = sol.duals[i];
        let ysc = 1.0 + y.abs();
        match row.sense {
            Sense::Le if y > tol.complementarity * ysc * 10.0 => {
                return Err(format!("row {i} (<=) has dual {y:.3e} of the wrong sign"))
            }
            Sense::Ge if y < -tol.complementarity * ysc * 10.0 => {
                return Err(format!("row {i} (>=) has dual {y:.3e} of the wrong sign"))
            }
            _ => {}
        }
        let slack = (row.activity(x) - row.rhs).abs();
        if row.sense != Sense::Eq && (y * slack).abs() > 10.0 * tol.complementarity * scale * ysc {
            return Err(format!("row {i} breaks complementary slackness ({:.3e})", y * slack));
        }
    }
    let cmax = lp.objective.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let ymax = sol.duals.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let dtol = 10.0 * tol.complementarity * (cmax + ymax);
    for (j, &d) in sol.reduced_costs.iter().enumerate() {
        let (lo, hi) = (lp.lower[j], lp.upper[j]);
        let btol = 10.0 * tol.feasibility * (1.0 + lo.abs().min(hi.abs()).min(xmax));
        if x[j] < lo - btol || x[j] > hi + btol {
            return Err(format!("variable {j} = {} outside [{lo}, {hi}]", x[j]));
        }
        if d > dtol && lo == f64::NEG_INFINITY {
            return Err(format!("variable {j} has positive reduced cost {d:.3e} but no lower bound"));
        }
        if d < -dtol && hi == f64::INFINITY {
            return Err(format!("variable {j} has negative reduced cost {d:.3e} but no upper bound"));
        }
        let dist = if d > 0.0 { x[j] - lo } else { hi - x[j] };
        if d.abs() > dtol && (d * dist).abs() > 10.0 * tol.complementarity * (1.0 + xmax) * (1.0 + d.abs()) {
            return Err(format!("variable {j} breaks complementary slackness ({:.3e})", d * dist));
        }
    }
    let primal = sol.objective;
    // Reduced costs within tolerance of zero have passed the sign checks
    // above; dropping them keeps round-off away from infinite bounds.
    let cleaned: Vec<f64> = sol.reduced_costs.iter().map(|&d| if d.abs() <= dtol { 0.0 } else { d }).collect();
    let dual = dual_objective(lp, &sol.duals, &cleaned);
    let gap = (primal - dual).abs();
    if !dual.is_finite() || gap > 100.0 * tol.gap * (1.0 + primal.abs()) * (1.0 + xmax.min(ymax)) {
        return Err(format!("duality gap {gap:.3e} (primal {primal}, dual {dual})"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tol() -> ToleranceSet {
        ToleranceSet::default()
    }

    #[test]
    fn covering_row_dual_is_one() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.lower[0] = f64::NEG_INFINITY;
        lp.add_row(vec![(0, 1.0)], Sense::Ge, 1.0);
        let s = solve_lp(&lp, &tol()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.x[0] - 1.0).abs() < 1e-12);
        assert!((s.objective - 1.0).abs() < 1e-12);
        assert!((s.duals[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn maximize_to_upper_row() {
        let mut lp = LinearProgram::new(vec![-1.0]);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 2.0);
        let s = solve_lp(&lp, &tol()).unwrap();
        assert!((s.x[0] - 2.0).abs() < 1e-12);
        assert!((s.objective + 2.0).abs() < 1e-12);
    }

    #[test]
    fn binding_and_slack_row_duals() {
        // min -2y s.t. y <= 0.5, y <= 1, y >= 0
        let mut lp = LinearProgram::new(vec![-2.0]);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 0.5);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 1.0);
        let s = solve_lp(&lp, &tol()).unwrap();
        assert!((s.x[0] - 0.5).abs() < 1e-12);
        assert!((s.objective + 1.0).abs() < 1e-12);
        assert!((s.duals[0] + 2.0).abs() < 1e-12);
        assert!(s.duals[1].abs() < 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::new(vec![1.0]);
        lp.add_row(vec![(0, 1.0)], Sense::Le, -1.0);
        assert_eq!(solve_lp(&lp, &tol()).unwrap().status, LpStatus::Infeasible);

        let mut lp = LinearProgram::new(vec![-1.0, 0.0]);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Le, 1.0);
        assert_eq!(solve_lp(&lp, &tol()).unwrap().status, LpStatus::Unbounded);

        let mut lp = LinearProgram::new(vec![1.0]);
        lp.lower[0] = 2.0;
        lp.upper[0] = 1.0;
        assert_eq!(solve_lp(&lp, &tol()).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn free_and_upper_bounded_variables() {
        // min x0 - x1, x0 free, x1 <= 3 (no lower bound), x0 + x1 >= 1, x0 - x1 >= -10.
        // x0 - x1 >= 1 - 2 x1 >= -5, attained at (-2, 3).
        let mut lp = LinearProgram::new(vec![1.0, -1.0]);
        lp.lower = vec![f64::NEG_INFINITY, f64::NEG_INFINITY];
        lp.upper = vec![f64::INFINITY, 3.0];
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Ge, 1.0);
        lp.add_row(vec![(0, 1.0), (1, -1.0)], Sense::Ge, -10.0);
        let s = solve_lp(&lp, &tol()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 5.0).abs() < 1e-10, "{s:?}");
        assert!((s.x[0] + 2.0).abs() < 1e-10 && (s.x[1] - 3.0).abs() < 1e-10);
        assert!((s.duals[0] - 1.0).abs() < 1e-10);
    }

    #[test]
    fn equality_rows_with_redundancy() {
        // x0 + x1 = 2 twice (redundant), min x0 + 2 x1
        let mut lp = LinearProgram::new(vec![1.0, 2.0]);
        lp.add_row(vec![(0, 1.0), (1, 1.0)], Sense::Eq, 2.0);
        lp.add_row(vec![(0, 2.0), (1, 2.0)], Sense::Eq, 4.0);
        let s = solve_lp(&lp, &tol()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective - 2.0).abs() < 1e-12);
        assert!((s.x[0] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_cycling_candidate() {
        // Beale's classic cycling example (min form).
        let mut lp = LinearProgram::new(vec![-0.75, 150.0, -0.02, 6.0]);
        lp.add_row(vec![(0, 0.25), (1, -60.0), (2, -0.04), (3, 9.0)], Sense::Le, 0.0);
        lp.add_row(vec![(0, 0.5), (1, -90.0), (2, -0.02), (3, 3.0)], Sense::Le, 0.0);
        lp.add_row(vec![(2, 1.0)], Sense::Le, 1.0);
        let s = solve_lp(&lp, &tol()).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.objective + 0.05).abs() < 1e-10, "{}", s.objective);
    }

    #[test]
    fn rejects_non_finite_data() {
        let mut lp = LinearProgram::new(vec![f64::NAN]);
        lp.add_row(vec![(0, 1.0)], Sense::Le, 1.0);
        assert!(matches!(solve_lp(&lp, &tol()), Err(LpError::InvalidInput(_))));
    }
}
