//! Proximal master problem
//! `min_x model(x) + (ρ/2)‖x − x_center‖²  s.t.  x ∈ X`,
//! solved in epigraph form over `z = (x, θ)` by a primal active-set method.

use thiserror::Error;

use crate::bundle::BundleModel;
use crate::instance::TwoStageProblem;
use crate::linalg::{dist, lu_solve};
use crate::lp::{Row, Sense};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MasterError {
    #[error("active-set iteration limit ({0}) reached")]
    IterationLimit(usize),
    #[error("starting point is not in the first-stage feasible set")]
    Infeasible,
    #[error("singular KKT system with {0} working constraints")]
    SingularKkt(usize),
    #[error("step size must be positive, got {0}")]
    BadStepSize(f64),
}

/// First-stage feasible set `X` (rows and bounds).
#[derive(Debug, Clone, Copy)]
pub struct FeasibleSet<'a> {
    pub rows: &'a [Row],
    pub lower: &'a [f64],
    pub upper: &'a [f64],
}

impl<'a> FeasibleSet<'a> {
    pub fn of(problem: &'a TwoStageProblem) -> Self {
        Self {
            rows: &problem.first_stage_rows,
            lower: &problem.lower,
            upper: &problem.upper,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MasterOptions {
    /// KKT residual target and multiplier sign tolerance.
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for MasterOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    pub x: Vec<f64>,
    /// `model(x)`, evaluated explicitly as the max over cuts.
    pub model_value: f64,
    /// `model(x) + (ρ/2)‖x − x_center‖²`.
    pub prox_objective: f64,
    /// Inexact proximal gap `f̂(x_center) − prox_objective`.
    pub delta_tilde: f64,
    /// Multiplier of each cut (same order as the model's cuts).
    pub cut_multipliers: Vec<f64>,
    pub kkt_residual: f64,
    pub iterations: usize,
}

/// One constraint `a·z ≥ b` (or `= b`) on `z = (x, θ)`.
struct Con {
    a: Vec<f64>,
    b: f64,
    eq: bool,
    cut: Option<usize>,
}

impl Con {
    fn slack(&self, z: &[f64]) -> f64 {
        self.a.iter().zip(z).map(|(a, z)| a * z).sum::<f64>() - self.b
    }

    fn scale(&self) -> f64 {
        1.0 + self.b.abs() + self.a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

fn constraints(model: &BundleModel, set: &FeasibleSet) -> Vec<Con> {
    let n = set.lower.len();
    let mut out = Vec::new();
    for (i, c) in model.cuts().iter().enumerate() {
        let mut a: Vec<f64> = c.slope.iter().map(|g| -g).collect();
        a.push(1.0);
        out.push(Con {
            a,
            b: c.intercept(),
            eq: false,
            cut: Some(i),
        });
    }
    for row in set.rows {
        let mut a = vec![0.0; n + 1];
        for &(j, v) in &row.coeffs {
            a[j] += v;
        }
        let (a, b, eq) = match row.sense {
            Sense::Ge => (a, row.rhs, false),
            Sense::Le => (a.iter().map(|v| -v).collect(), -row.rhs, false),
            Sense::Eq => (a, row.rhs, true),
        };
        out.push(Con { a, b, eq, cut: None });
    }
    for j in 0..n {
        if set.lower[j].is_finite() {
            let mut a = vec![0.0; n + 1];
            a[j] = 1.0;
            out.push(Con {
                a,
                b: set.lower[j],
                eq: false,
                cut: None,
            });
        }
        if set.upper[j].is_finite() {
            let mut a = vec![0.0; n + 1];
            a[j] = -1.0;
            out.push(Con {
                a,
                b: -set.upper[j],
                eq: false,
                cut: None,
            });
        }
    }
    out
}

/// Greedy linear-independence filter via modified Gram–Schmidt.
struct Basis {
    q: Vec<Vec<f64>>,
}

impl Basis {
    fn of(cons: &[Con], work: &[usize]) -> Self {
        let mut basis = Self { q: Vec::new() };
        for &i in work {
            basis.try_add(&cons[i].a);
        }
        basis
    }

    /// Component of `a` orthogonal to the span, and its norm relative to `‖a‖`.
    fn residual(&self, a: &[f64]) -> (Vec<f64>, f64) {
        let mut v = a.to_vec();
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for q in &self.q {
            let d: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
            for (x, y) in v.iter_mut().zip(q) {
                *x -= d * y;
            }
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        (v, nv / norm0.max(1e-300))
    }

    fn is_dependent(&self, a: &[f64]) -> bool {
        self.residual(a).1 <= 1e-9
    }

    fn try_add(&mut self, a: &[f64]) -> bool {
        let (mut v, rel) = self.residual(a);
        if rel <= 1e-10 {
            return false;
        }
        let nv = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut v {
            *x /= nv;
        }
        self.q.push(v);
        true
    }
}

/// Solves the equality-constrained subproblem on the working set: the
/// minimizer of the objective on `{a_i·z = b_i, i ∈ W}` and its multipliers.
fn solve_working_set(cons: &[Con], work: &[usize], rho: f64, center: &[f64]) -> Option<(Vec<f64>, Vec<f64>)> {
    let n = center.len();
    let nz = n + 1;
    let w = work.len();
    let dim = nz + w;
    let mut k = vec![0.0; dim * dim];
    let mut rhs = vec![0.0; dim];
    for j in 0..n {
        k[j * dim + j] = rho;
        rhs[j] = rho * center[j];
    }
    rhs[n] = -1.0;
    for (r, &ci) in work.iter().enumerate() {
        for (j, &a) in cons[ci].a.iter().enumerate() {
            // Stationarity rows: H z − A_Wᵀ λ = −g0.
            k[j * dim + nz + r] = -a;
            // Feasibility rows: A_W z = b_W.
            k[(nz + r) * dim + j] = a;
        }
        rhs[nz + r] = cons[ci].b;
    }
    let scale = k.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
    lu_solve(&mut k, &mut rhs, dim, 1e-13 * scale)?;
    let lambda = rhs.split_off(nz);
    Some((rhs, lambda))
}

/// Computes the proximal step from the model's center with step size `rho`.
/// `warm_start`, if feasible, replaces the center as the starting point.
pub fn solve_prox_step(
    model: &BundleModel,
    rho: f64,
    set: &FeasibleSet,
    warm_start: Option<&[f64]>,
    opts: &MasterOptions,
) -> Result<ProxResult, MasterError> {
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(MasterError::BadStepSize(rho));
    }
    let center = model.center();
    let n = center.len();
    let cons = constraints(model, set);
    let feas_tol = 1e-9;

    let is_feasible = |x: &[f64]| {
        let mut z = x.to_vec();
        z.push(0.0);
        cons.iter()
            .filter(|c| c.cut.is_none())
            .all(|c| if c.eq { c.slack(&z).abs() <= feas_tol * c.scale() } else { c.slack(&z) >= -feas_tol * c.scale() })
    };
    let start: Vec<f64> = match warm_start {
        Some(x) if x.len() == n && is_feasible(x) => x.to_vec(),
        _ if is_feasible(center) => center.to_vec(),
        _ => return Err(MasterError::Infeasible),
    };
    let mut z = start;
    z.push(model.eval(&z[..n]));

    // Initial working set: the active cut, equalities, active bounds/rows.
    let mut work: Vec<usize> = Vec::new();
    let mut basis = Basis { q: Vec::new() };
    let top = model.argmax(&z[..n]);
    basis.try_add(&cons[top].a);
    work.push(top);
    for (i, c) in cons.iter().enumerate() {
        if c.cut.is_none() && (c.eq || c.slack(&z).abs() <= 1e-12 * c.scale()) && basis.try_add(&c.a) {
            work.push(i);
        }
    }

    let mut iterations = 0;
    let lambda = loop {
        iterations += 1;
        if iterations > opts.max_iterations {
            return Err(MasterError::IterationLimit(opts.max_iterations));
        }
        let (target, lambda) =
            solve_working_set(&cons, &work, rho, center).ok_or(MasterError::SingularKkt(work.len()))?;
        let p: Vec<f64> = target.iter().zip(&z).map(|(t, z)| t - z).collect();
        let zmax = z.iter().fold(1.0f64, |m, v| m.max(v.abs()));
        let pmax = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));

        if pmax <= 1e-12 * zmax {
            z = target;
            // Drop the most negative inequality multiplier, keeping at least one cut.
            let cuts_in_work = work.iter().filter(|&&i| cons[i].cut.is_some()).count();
            let mut drop: Option<(usize, f64)> = None;
            for (r, &ci) in work.iter().enumerate() {
                if cons[ci].eq || (cons[ci].cut.is_some() && cuts_in_work == 1) {
                    continue;
                }
                let l = lambda[r];
                if l < -opts.tol && drop.map_or(true, |(_, best)| l < best) {
                    drop = Some((r, l));
                }
            }
            match drop {
                None => break lambda,
                Some((r, _)) => {
                    work.remove(r);
                }
            }
            continue;
        }

        let mut alpha = 1.0;
        let mut blocking = None;
        let pnorm = p.iter().map(|v| v * v).sum::<f64>().sqrt();
        let span = Basis::of(&cons, &work);
        for (i, c) in cons.iter().enumerate() {
            if c.eq || work.contains(&i) {
                continue;
            }
            let ap: f64 = c.a.iter().zip(&p).map(|(a, p)| a * p).sum();
            let anorm = c.a.iter().map(|v| v * v).sum::<f64>().sqrt();
            // A constraint in the span of the working set has `a·p = 0` in
            // exact arithmetic; a negative value is round-off.
            if ap >= -1e-13 * anorm * pnorm || span.is_dependent(&c.a) {
                continue;
            }
            let ratio = c.slack(&z).max(0.0) / -ap;
            if ratio < alpha {
                alpha = ratio;
                blocking = Some(i);
            }
        }
        for (zi, pi) in z.iter_mut().zip(&p) {
            *zi += alpha * pi;
        }
        if let Some(i) = blocking {
            work.push(i);
        }
    };

    let x = z[..n].to_vec();
    let mut cut_multipliers = vec![0.0; model.cuts().len()];
    for (r, &ci) in work.iter().enumerate() {
        if let Some(j) = cons[ci].cut {
            cut_multipliers[j] = lambda[r];
        }
    }
    let kkt_residual = kkt_residual(&cons, &work, &lambda, &z, rho, center);
    let model_value = model.eval(&x);
    let d = dist(&x, center);
    let prox_objective = model_value + 0.5 * rho * d * d;
    Ok(ProxResult {
        delta_tilde: model.center_value() - prox_objective,
        x,
        model_value,
        prox_objective,
        cut_multipliers,
        kkt_residual,
        iterations,
    })
}

/// Max of stationarity, primal infeasibility, dual sign and complementarity
/// violations, each scaled to the size of the quantities involved.
fn kkt_residual(cons: &[Con], work: &[usize], lambda: &[f64], z: &[f64], rho: f64, center: &[f64]) -> f64 {
    let n = center.len();
    let mut grad: Vec<f64> = (0..n).map(|j| rho * (z[j] - center[j])).collect();
    grad.push(1.0);
    for (r, &ci) in work.iter().enumerate() {
        for (g, a) in grad.iter_mut().zip(&cons[ci].a) {
            *g -= lambda[r] * a;
        }
    }
    let lmax = lambda.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut res = grad.iter().fold(0.0f64, |m, v| m.max(v.abs())) / lmax;
    for c in cons {
        let s = c.slack(z) / c.scale();
        res = res.max(if c.eq { s.abs() } else { (-s).max(0.0) });
    }
    for (r, &ci) in work.iter().enumerate() {
        if !cons[ci].eq {
            res = res.max((-lambda[r]).max(0.0));
            res = res.max((lambda[r] * cons[ci].slack(z)).abs() / cons[ci].scale());
        }
    }
    res
}
