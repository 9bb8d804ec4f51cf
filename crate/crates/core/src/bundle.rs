//! Cutting-plane model `f_{k,t}(x) = max_j v_j + g_jᵀ(x − x_j)` with a
//! limited memory per cut kind.

use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CutKind {
    /// Value and subgradient of the estimate at the anchor.
    Gradient,
    /// Model value at the trial point with slope `ρ(x_center − x_trial)`.
    Aggregate,
}

/// Affine minorant stored in anchor form.
#[derive(Debug, Clone, PartialEq)]
pub struct Cut {
    pub kind: CutKind,
    pub anchor: Vec<f64>,
    pub value: f64,
    pub slope: Vec<f64>,
    /// Inner index at which the cut was (last) generated.
    pub birth: usize,
}

impl Cut {
    pub fn eval(&self, x: &[f64]) -> f64 {
        let mut v = self.value;
        for ((s, xi), a) in self.slope.iter().zip(x).zip(&self.anchor) {
            v += s * (xi - a);
        }
        v
    }

    /// Constant term `v − gᵀa` of the intercept form.
    pub fn intercept(&self) -> f64 {
        self.value - dot(&self.slope, &self.anchor)
    }

    fn same_function(&self, other: &Cut) -> bool {
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()));
        self.slope.len() == other.slope.len()
            && self.slope.iter().zip(&other.slope).all(|(&a, &b)| close(a, b))
            && close(self.intercept(), other.intercept())
    }
}

/// The bundle of one outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct BundleModel {
    cuts: Vec<Cut>,
    memory: usize,
    center: Vec<f64>,
    center_value: f64,
    k: usize,
}

impl BundleModel {
    /// Single gradient cut at the center, so `model(center) = f̂(center)`.
    pub fn init(center: Vec<f64>, center_value: f64, center_subgradient: Vec<f64>, memory: usize, k: usize) -> Self {
        let cut = Cut {
            kind: CutKind::Gradient,
            anchor: center.clone(),
            value: center_value,
            slope: center_subgradient,
            birth: 0,
        };
        Self {
            cuts: vec![cut],
            memory: memory.max(1),
            center,
            center_value,
            k,
        }
    }

    pub fn cuts(&self) -> &[Cut] {
        &self.cuts
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    /// `f̂ₖ` at the center.
    pub fn center_value(&self) -> f64 {
        self.center_value
    }

    pub fn outer_index(&self) -> usize {
        self.k
    }

    pub fn memory(&self) -> usize {
        self.memory
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.cuts.iter().map(|c| c.eval(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the cut attaining the max at `x` (lowest index on ties).
    pub fn argmax(&self, x: &[f64]) -> usize {
        let mut best = 0;
        let mut val = f64::NEG_INFINITY;
        for (i, c) in self.cuts.iter().enumerate() {
            let v = c.eval(x);
            if v > val {
                val = v;
                best = i;
            }
        }
        best
    }

    /// Adds a cut unless an identical one (within 1e-12) is present, in
    /// which case the existing copy is renewed as the newest of its kind.
    /// Then evicts the oldest cuts of that kind beyond the memory size.
    pub fn push(&mut self, cut: Cut) {
        if let Some(pos) = self.cuts.iter().position(|c| c.kind == cut.kind && c.same_function(&cut)) {
            let mut existing = self.cuts.remove(pos);
            existing.birth = cut.birth;
            self.cuts.push(existing);
        } else {
            self.cuts.push(cut);
        }
        let kind = self.cuts.last().map(|c| c.kind).expect("just pushed");
        while self.cuts.iter().filter(|c| c.kind == kind).count() > self.memory {
            let oldest = self
                .cuts
                .iter()
                .enumerate()
                .filter(|(_, c)| c.kind == kind)
                .min_by_key(|(_, c)| c.birth)
                .map(|(i, _)| i)
                .expect("kind is present");
            self.cuts.remove(oldest);
        }
    }

    /// Null-step update with the gradient cut at the trial point and the
    /// aggregate cut `f_{k,t}(x_trial) + ρ(x_center − x_trial)ᵀ(x − x_trial)`.
    /// `model_at_trial` must be the model value before this update.
    pub fn add_cuts(
        &mut self,
        trial: &[f64],
        trial_value: f64,
        trial_subgradient: Vec<f64>,
        model_at_trial: f64,
        rho: f64,
        birth: usize,
    ) {
        let aggregate_slope: Vec<f64> = self.center.iter().zip(trial).map(|(c, x)| rho * (c - x)).collect();
        self.push(Cut {
            kind: CutKind::Gradient,
            anchor: trial.to_vec(),
            value: trial_value,
            slope: trial_subgradient,
            birth,
        });
        self.push(Cut {
            kind: CutKind::Aggregate,
            anchor: trial.to_vec(),
            value: model_at_trial,
            slope: aggregate_slope,
            birth,
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn initial_model_on_tiny_instance() {
        let m = BundleModel::init(vec![0.0], 0.0, vec![-0.9], 5, 0);
        assert_eq!(m.eval(&[0.0]), 0.0);
        assert!((m.eval(&[1.0]) + 0.9).abs() < 1e-15);
        assert!((m.eval(&[3.0]) + 2.7).abs() < 1e-15);
    }

    #[test]
    fn gradient_cut_tight_at_anchor() {
        let mut m = BundleModel::init(vec![0.0], 0.0, vec![-0.9], 5, 0);
        let model_before = m.eval(&[3.0]);
        m.add_cuts(&[3.0], 0.3, vec![1.1], model_before, 1.0, 1);
        assert!((m.eval(&[3.0]) - 0.3).abs() < 1e-15);
        assert_eq!(m.cuts().len(), 3);
    }

    #[test]
    fn memory_one_keeps_newest_of_each_kind() {
        let mut m = BundleModel::init(vec![0.0], 0.0, vec![-0.9], 1, 0);
        m.add_cuts(&[3.0], 0.3, vec![1.1], -2.7, 1.0, 1);
        m.add_cuts(&[2.0], -0.4, vec![1.1], -0.9, 1.0, 2);
        assert_eq!(m.cuts().len(), 2);
        assert!(m.cuts().iter().all(|c| c.birth == 2));
        assert!(m.cuts().iter().any(|c| c.kind == CutKind::Gradient));
        assert!(m.cuts().iter().any(|c| c.kind == CutKind::Aggregate));
    }

    #[test]
    fn duplicate_cut_renewed_not_duplicated() {
        let mut m = BundleModel::init(vec![0.0], 0.0, vec![-0.9], 2, 0);
        // Same affine function as the initial cut, anchored elsewhere.
        m.push(Cut {
            kind: CutKind::Gradient,
            anchor: vec![1.0],
            value: -0.9,
            slope: vec![-0.9],
            birth: 1,
        });
        assert_eq!(m.cuts().len(), 1);
        assert_eq!(m.cuts()[0].birth, 1);
    }
}
