//! Scaling and rewriting of a general LP into `min c·z, A z = b, z ≥ 0, b ≥ 0`.

use super::{LinearProgram, Sense};

/// How an original (scaled) variable is expressed through standard columns.
#[derive(Debug, Clone, Copy)]
enum VarMap {
    /// `x = lb + z`
    Shift { col: usize, lb: f64 },
    /// `x = ub - z`
    Negate { col: usize, ub: f64 },
    /// `x = z+ - z-`
    Split { pos: usize, neg: usize },
}

#[derive(Debug)]
pub(crate) struct StandardForm {
    pub m: usize,
    /// Column-sparse constraint matrix, `(row, value)` with increasing rows.
    pub columns: Vec<Vec<(usize, f64)>>,
    pub cost: Vec<f64>,
    pub rhs: Vec<f64>,
    pub artificial: Vec<bool>,
    pub initial_basis: Vec<usize>,
    var_map: Vec<VarMap>,
    /// Sign applied to each original row (first `lp.rows.len()` rows).
    row_sign: Vec<f64>,
    row_scale: Vec<f64>,
    col_scale: Vec<f64>,
}

fn pow2_round(v: f64) -> f64 {
    if !(v.is_finite() && v > 0.0) {
        return 1.0;
    }
    2f64.powi(v.log2().round() as i32)
}

/// Geometric-mean row/column scaling, rounded to powers of two so that
/// scaling itself introduces no rounding error.
fn geometric_scaling(lp: &LinearProgram) -> (Vec<f64>, Vec<f64>) {
    let m = lp.rows.len();
    let n = lp.num_vars();
    let mut r = vec![1.0; m];
    let mut c = vec![1.0; n];
    for _ in 0..4 {
        for (i, row) in lp.rows.iter().enumerate() {
            let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
            for &(j, a) in &row.coeffs {
                let v = (a * c[j]).abs();
                if v > 0.0 {
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            if hi > 0.0 {
                r[i] = pow2_round(1.0 / (lo * hi).sqrt());
            }
        }
        let mut lo = vec![f64::INFINITY; n];
        let mut hi = vec![0.0f64; n];
        for (i, row) in lp.rows.iter().enumerate() {
            for &(j, a) in &row.coeffs {
                let v = (a * r[i]).abs();
                if v > 0.0 {
                    lo[j] = lo[j].min(v);
                    hi[j] = hi[j].max(v);
                }
            }
        }
        for j in 0..n {
            if hi[j] > 0.0 {
                c[j] = pow2_round(1.0 / (lo[j] * hi[j]).sqrt());
            }
        }
    }
    (r, c)
}

impl StandardForm {
    /// Returns `None` when some variable has `lower > upper`.
    pub fn build(lp: &LinearProgram) -> Option<Self> {
        let n = lp.num_vars();
        let (row_scale, col_scale) = geometric_scaling(lp);

        let mut cost = Vec::new();
        let mut var_map = Vec::with_capacity(n);
        let mut boxed = Vec::new();
        for j in 0..n {
            let s = col_scale[j];
            let (lb, ub) = (lp.lower[j] / s, lp.upper[j] / s);
            let cj = lp.objective[j] * s;
            if lb > ub {
                if lb - ub > 1e-12 * (1.0 + lb.abs()) {
                    return None;
                }
            }
            if lb.is_finite() {
                let col = cost.len();
                cost.push(cj);
                var_map.push(VarMap::Shift { col, lb });
                if ub.is_finite() {
                    boxed.push((col, (ub - lb).max(0.0)));
                }
            } else if ub.is_finite() {
                let col = cost.len();
                cost.push(-cj);
                var_map.push(VarMap::Negate { col, ub });
            } else {
                let pos = cost.len();
                cost.push(cj);
                cost.push(-cj);
                var_map.push(VarMap::Split { pos, neg: pos + 1 });
            }
        }
        let n_struct = cost.len();
        let m = lp.rows.len() + boxed.len();

        // Row-wise assembly in standard-column space.
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::with_capacity(m);
        let mut rhs = Vec::with_capacity(m);
        let mut slack_of_row: Vec<Option<(usize, f64)>> = Vec::with_capacity(m);
        let mut next_col = n_struct;
        let mut row_sign = Vec::with_capacity(lp.rows.len());
        for (i, row) in lp.rows.iter().enumerate() {
            let r = row_scale[i];
            let mut b = row.rhs * r;
            let mut entries = Vec::with_capacity(row.coeffs.len() + 1);
            for &(j, a) in &row.coeffs {
                let a = a * r * col_scale[j];
                if a == 0.0 {
                    continue;
                }
                match var_map[j] {
                    VarMap::Shift { col, lb } => {
                        b -= a * lb;
                        entries.push((col, a));
                    }
                    VarMap::Negate { col, ub } => {
                        b -= a * ub;
                        entries.push((col, -a));
                    }
                    VarMap::Split { pos, neg } => {
                        entries.push((pos, a));
                        entries.push((neg, -a));
                    }
                }
            }
            let slack = match row.sense {
                Sense::Le => Some((next_col, 1.0)),
                Sense::Ge => Some((next_col, -1.0)),
                Sense::Eq => None,
            };
            if let Some((c, v)) = slack {
                entries.push((c, v));
                next_col += 1;
            }
            let sign = if b < 0.0 { -1.0 } else { 1.0 };
            if sign < 0.0 {
                b = -b;
                for e in &mut entries {
                    e.1 = -e.1;
                }
            }
            row_sign.push(sign);
            slack_of_row.push(slack.map(|(c, v)| (c, v * sign)));
            rows.push(entries);
            rhs.push(b);
        }
        for &(col, width) in &boxed {
            let s = next_col;
            next_col += 1;
            rows.push(vec![(col, 1.0), (s, 1.0)]);
            rhs.push(width);
            slack_of_row.push(Some((s, 1.0)));
        }
        cost.resize(next_col, 0.0);

        // Initial basis: a +1 slack where available, otherwise an artificial.
        let mut artificial = vec![false; next_col];
        let mut initial_basis = Vec::with_capacity(m);
        for (i, slack) in slack_of_row.iter().enumerate() {
            match slack {
                Some((c, v)) if *v > 0.0 => initial_basis.push(*c),
                _ => {
                    let a = cost.len();
                    cost.push(0.0);
                    artificial.push(true);
                    rows[i].push((a, 1.0));
                    initial_basis.push(a);
                }
            }
        }

        let total = cost.len();
        let mut columns = vec![Vec::new(); total];
        for (i, entries) in rows.iter().enumerate() {
            for &(c, v) in entries {
                columns[c].push((i, v));
            }
        }
        // A variable repeated within one row must be merged.
        for col in &mut columns {
            if col.windows(2).any(|w| w[0].0 == w[1].0) {
                let mut merged: Vec<(usize, f64)> = Vec::with_capacity(col.len());
                for &(r, v) in col.iter() {
                    match merged.last_mut() {
                        Some(last) if last.0 == r => last.1 += v,
                        _ => merged.push((r, v)),
                    }
                }
                *col = merged;
            }
        }

        Some(Self {
            m,
            columns,
            cost,
            rhs,
            artificial,
            initial_basis,
            var_map,
            row_sign,
            row_scale,
            col_scale,
        })
    }

    pub fn num_cols(&self) -> usize {
        self.columns.len()
    }

    /// Maps a standard-form point back to the original variables.
    pub fn recover_primal(&self, z: &[f64]) -> Vec<f64> {
        self.var_map
            .iter()
            .zip(&self.col_scale)
            .map(|(map, &s)| {
                let v = match *map {
                    VarMap::Shift { col, lb } => lb + z[col],
                    VarMap::Negate { col, ub } => ub - z[col],
                    VarMap::Split { pos, neg } => z[pos] - z[neg],
                };
                v * s
            })
            .collect()
    }

    /// Maps standard-form row duals back to duals of the original rows.
    pub fn recover_duals(&self, y: &[f64]) -> Vec<f64> {
        self.row_sign
            .iter()
            .zip(&self.row_scale)
            .enumerate()
            .map(|(i, (&sign, &r))| sign * r * y[i])
            .collect()
    }
}
