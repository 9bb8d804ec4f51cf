//! Dense two-phase revised simplex on a [`StandardForm`].
//!
//! The basis inverse is kept explicitly and updated by elementary row
//! operations; it is rebuilt from scratch every `m` pivots and always before
//! optimality is declared. Dantzig pricing switches to Bland's rule once the
//! objective has not improved for `2 (m + n)` consecutive pivots.

use super::standard::StandardForm;
use super::{LpError, ToleranceSet};
use crate::linalg::{invert, norm1};

pub(crate) enum Outcome {
    Optimal,
    Infeasible,
    Unbounded,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Phase {
    One,
    Two,
}

pub(crate) struct Simplex<'a> {
    sf: &'a StandardForm,
    tol: &'a ToleranceSet,
    basis: Vec<usize>,
    in_basis: Vec<bool>,
    binv: Vec<f64>,
    xb: Vec<f64>,
    iterations: usize,
    since_refactor: usize,
    phase: Phase,
}

impl<'a> Simplex<'a> {
    pub fn new(sf: &'a StandardForm, tol: &'a ToleranceSet) -> Self {
        let m = sf.m;
        let mut binv = vec![0.0; m * m];
        for i in 0..m {
            binv[i * m + i] = 1.0;
        }
        let mut in_basis = vec![false; sf.num_cols()];
        for &b in &sf.initial_basis {
            in_basis[b] = true;
        }
        Self {
            sf,
            tol,
            basis: sf.initial_basis.clone(),
            in_basis,
            binv,
            xb: sf.rhs.clone(),
            iterations: 0,
            since_refactor: 0,
            phase: Phase::One,
        }
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    fn cost(&self, j: usize) -> f64 {
        match self.phase {
            Phase::One => {
                if self.sf.artificial[j] {
                    1.0
                } else {
                    0.0
                }
            }
            Phase::Two => self.sf.cost[j],
        }
    }

    fn objective(&self) -> f64 {
        self.basis.iter().zip(&self.xb).map(|(&j, &x)| self.cost(j) * x).sum()
    }

    pub fn run(&mut self) -> Result<Outcome, LpError> {
        let m = self.sf.m;
        if m == 0 {
            // No rows: each column sits at zero unless its cost is negative.
            return Ok(if self.sf.cost.iter().any(|&c| c < 0.0) {
                Outcome::Unbounded
            } else {
                Outcome::Optimal
            });
        }
        let has_artificial = self.basis.iter().any(|&j| self.sf.artificial[j]);
        if has_artificial {
            self.phase = Phase::One;
            match self.iterate()? {
                PhaseEnd::Unbounded => {
                    return Err(LpError::NumericalBreakdown("phase one reported unbounded".into()))
                }
                PhaseEnd::Optimal => {}
            }
            let infeas = self.objective();
            let bnorm = self.sf.rhs.iter().fold(1.0f64, |a, b| a.max(b.abs()));
            if infeas > self.tol.feasibility * bnorm {
                return Ok(Outcome::Infeasible);
            }
            self.drive_out_artificials()?;
        }
        self.phase = Phase::Two;
        match self.iterate()? {
            PhaseEnd::Optimal => Ok(Outcome::Optimal),
            PhaseEnd::Unbounded => Ok(Outcome::Unbounded),
        }
    }

    /// Duals `c_B B^{-1}` for the current phase costs.
    fn duals(&self) -> Vec<f64> {
        let m = self.sf.m;
        let mut y = vec![0.0; m];
        for (i, &j) in self.basis.iter().enumerate() {
            let c = self.cost(j);
            if c == 0.0 {
                continue;
            }
            let row = &self.binv[i * m..(i + 1) * m];
            for (yk, &b) in y.iter_mut().zip(row) {
                *yk += c * b;
            }
        }
        y
    }

    fn column_times_binv(&self, j: usize) -> Vec<f64> {
        let m = self.sf.m;
        let mut alpha = vec![0.0; m];
        for &(r, v) in &self.sf.columns[j] {
            for (i, a) in alpha.iter_mut().enumerate() {
                *a += self.binv[i * m + r] * v;
            }
        }
        alpha
    }

    fn reduced_cost(&self, j: usize, y: &[f64]) -> f64 {
        let mut d = self.cost(j);
        for &(r, v) in &self.sf.columns[j] {
            d -= y[r] * v;
        }
        d
    }

    fn refactor(&mut self) -> Result<(), LpError> {
        let m = self.sf.m;
        let mut b = vec![0.0; m * m];
        for (k, &j) in self.basis.iter().enumerate() {
            for &(r, v) in &self.sf.columns[j] {
                b[r * m + k] = v;
            }
        }
        let inv = invert(&b, m)
            .ok_or_else(|| LpError::NumericalBreakdown("singular basis matrix".into()))?;
        let cond = norm1(&b, m) * norm1(&inv, m);
        if !(cond <= self.tol.max_condition) {
            return Err(LpError::NumericalBreakdown(format!(
                "basis condition estimate {cond:.3e} exceeds {:.1e}",
                self.tol.max_condition
            )));
        }
        self.binv = inv;
        for i in 0..m {
            let row = &self.binv[i * m..(i + 1) * m];
            self.xb[i] = row.iter().zip(&self.sf.rhs).map(|(a, b)| a * b).sum();
        }
        self.since_refactor = 0;
        Ok(())
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[f64], theta: f64) {
        let m = self.sf.m;
        for (i, x) in self.xb.iter_mut().enumerate() {
            if i != r {
                *x -= theta * alpha[i];
            }
        }
        self.xb[r] = theta;
        let piv = alpha[r];
        for k in 0..m {
            self.binv[r * m + k] /= piv;
        }
        let (head, rest) = self.binv.split_at_mut(r * m);
        let (prow, tail) = rest.split_at_mut(m);
        for (i, &a) in alpha.iter().enumerate() {
            if i == r || a == 0.0 {
                continue;
            }
            let row = if i < r {
                &mut head[i * m..(i + 1) * m]
            } else {
                let off = (i - r - 1) * m;
                &mut tail[off..off + m]
            };
            for (x, &p) in row.iter_mut().zip(prow.iter()) {
                *x -= a * p;
            }
        }
        self.in_basis[self.basis[r]] = false;
        self.in_basis[q] = true;
        self.basis[r] = q;
        self.iterations += 1;
        self.since_refactor += 1;
    }

    fn iterate(&mut self) -> Result<PhaseEnd, LpError> {
        let m = self.sf.m;
        let n = self.sf.num_cols();
        let refactor_every = m.max(50);
        let stall_limit = 2 * (m + n);
        let mut bland = false;
        let mut best_obj = self.objective();
        let mut stalled = 0usize;
        loop {
            if self.iterations >= self.tol.max_iterations {
                return Err(LpError::IterationLimit {
                    iterations: self.iterations,
                });
            }
            if self.since_refactor >= refactor_every {
                self.refactor()?;
            }
            let y = self.duals();
            let mut entering: Option<(usize, f64)> = None;
            for j in 0..n {
                if self.in_basis[j] || (self.phase == Phase::Two && self.sf.artificial[j]) {
                    continue;
                }
                let d = self.reduced_cost(j, &y);
                if d < -self.tol.optimality {
                    match entering {
                        None => entering = Some((j, d)),
                        Some((_, best)) if !bland && d < best => entering = Some((j, d)),
                        _ => {}
                    }
                    if bland {
                        break;
                    }
                }
            }
            let Some((q, _)) = entering else {
                if self.since_refactor > 0 {
                    // Only trust optimality on a fresh factorization.
                    self.refactor()?;
                    continue;
                }
                return Ok(PhaseEnd::Optimal);
            };

            let alpha = self.column_times_binv(q);
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = alpha[i];
                let blocking_artificial = self.phase == Phase::Two && self.sf.artificial[self.basis[i]];
                let ratio = if blocking_artificial {
                    if a.abs() <= self.tol.pivot {
                        continue;
                    }
                    0.0
                } else {
                    if a <= self.tol.pivot {
                        continue;
                    }
                    self.xb[i].max(0.0) / a
                };
                match leave {
                    None => leave = Some((i, ratio)),
                    Some((bi, br)) => {
                        let tie = (ratio - br).abs() <= 1e-12 * (1.0 + br);
                        let better = if tie {
                            if bland {
                                self.basis[i] < self.basis[bi]
                            } else {
                                a.abs() > alpha[bi].abs()
                            }
                        } else {
                            ratio < br
                        };
                        if better {
                            leave = Some((i, ratio));
                        }
                    }
                }
            }
            let Some((r, theta)) = leave else {
                return Ok(PhaseEnd::Unbounded);
            };
            self.pivot(r, q, &alpha, theta);

            let obj = self.objective();
            if obj < best_obj - 1e-12 * (1.0 + best_obj.abs()) {
                best_obj = obj;
                stalled = 0;
            } else {
                stalled += 1;
                if stalled > stall_limit {
                    bland = true;
                }
            }
        }
    }

    /// Pivots basic artificials (all at zero after a feasible phase one) out
    /// of the basis where possible; the rest mark redundant rows and stay
    /// basic, fixed at zero.
    fn drive_out_artificials(&mut self) -> Result<(), LpError> {
        let m = self.sf.m;
        let n = self.sf.num_cols();
        for r in 0..m {
            if !self.sf.artificial[self.basis[r]] {
                continue;
            }
            let row = self.binv[r * m..(r + 1) * m].to_vec();
            let mut best: Option<(usize, f64)> = None;
            for j in 0..n {
                if self.in_basis[j] || self.sf.artificial[j] {
                    continue;
                }
                let v: f64 = self.sf.columns[j].iter().map(|&(k, a)| row[k] * a).sum();
                if v.abs() > 1e-7 && best.map_or(true, |(_, b)| v.abs() > b.abs()) {
                    best = Some((j, v));
                }
            }
            if let Some((q, _)) = best {
                let alpha = self.column_times_binv(q);
                self.xb[r] = 0.0;
                self.pivot(r, q, &alpha, 0.0);
            }
        }
        self.refactor()
    }

    /// Standard-form primal point and phase-two duals.
    pub fn primal_dual(&self) -> (Vec<f64>, Vec<f64>) {
        let mut z = vec![0.0; self.sf.num_cols()];
        for (&j, &x) in self.basis.iter().zip(&self.xb) {
            z[j] = x.max(0.0);
        }
        (z, self.duals())
    }
}
