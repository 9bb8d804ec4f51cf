//! Two-stage stochastic LP with fixed recourse: data model, scenario
//! distributions, validation, generators and the extensive-form LP.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{norm, Matrix};
use crate::lp::{solve_lp, LinearProgram, LpError, LpStatus, Row, Sense, ToleranceSet};

/// Joint scenario count above which enumeration is refused by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 1_000_000;
/// Default cap on extensive-form variable count.
pub const DEFAULT_EXTENSIVE_CAP: usize = 200_000;
const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InstanceError {
    #[error("first-stage feasible set is empty")]
    EmptyFeasibleSet,
    #[error("first-stage variable {var} has no finite {side} bound and none is implied by the rows")]
    UnboundedFirstStage { var: usize, side: &'static str },
    #[error("bad probabilities: {0}")]
    BadProbabilities(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("inconsistent dimensions: {0}")]
    Dimension(String),
    #[error("distribution has {size:.0} joint scenarios, above the enumeration cap {cap}")]
    EnumerationCapExceeded { size: f64, cap: usize },
    #[error("extensive form would have {vars} variables, above the cap {cap}")]
    TooLarge { vars: usize, cap: usize },
    #[error("bad input: {0}")]
    BadInput(String),
    #[error(transparent)]
    Lp(#[from] LpError),
}

/// Address of one stochastic entry of `(T, q, h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "target", rename_all = "lowercase")]
pub enum Target {
    T { row: usize, col: usize },
    Q { col: usize },
    H { row: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Override {
    #[serde(flatten)]
    pub target: Target,
    pub value: f64,
}

impl Override {
    pub fn new(target: Target, value: f64) -> Self {
        Self { target, value }
    }
}

/// One realization: sparse overrides of the baseline, and its weight.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub overrides: Vec<Override>,
    pub weight: f64,
}

/// Marginal table of one independently distributed entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndependentEntry {
    pub target: Target,
    /// `(value, probability)` pairs.
    pub outcomes: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockOutcome {
    pub overrides: Vec<Override>,
    pub prob: f64,
}

/// Entries that move jointly; blocks are independent of each other.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub outcomes: Vec<BlockOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioDistribution {
    FiniteList(Vec<Scenario>),
    Independent(Vec<IndependentEntry>),
    Blocks(Vec<Block>),
}

/// Inverse-CDF lookup; falls back to the last index on rounding overshoot.
fn pick(u: f64, probs: impl Iterator<Item = f64>) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in probs.enumerate() {
        acc += p;
        last = i;
        if u < acc {
            return i;
        }
    }
    last
}

fn check_sum(what: &str, probs: impl Iterator<Item = f64>) -> Result<(), InstanceError> {
    let mut sum = 0.0;
    let mut count = 0;
    for p in probs {
        if !(p.is_finite() && p >= 0.0) {
            return Err(InstanceError::BadProbabilities(format!("{what}: probability {p} is not a nonnegative number")));
        }
        sum += p;
        count += 1;
    }
    if count == 0 {
        return Err(InstanceError::BadProbabilities(format!("{what}: no outcomes")));
    }
    if (sum - 1.0).abs() > PROB_TOL {
        return Err(InstanceError::BadProbabilities(format!("{what}: probabilities sum to {sum}")));
    }
    Ok(())
}

impl ScenarioDistribution {
    /// A distribution with a single scenario carrying no overrides.
    pub fn deterministic() -> Self {
        Self::FiniteList(vec![Scenario {
            overrides: Vec::new(),
            weight: 1.0,
        }])
    }

    /// Number of joint scenarios (as `f64`, since products can overflow).
    pub fn support_size(&self) -> f64 {
        match self {
            Self::FiniteList(s) => s.len() as f64,
            Self::Independent(e) => e.iter().map(|e| e.outcomes.len() as f64).product(),
            Self::Blocks(b) => b.iter().map(|b| b.outcomes.len() as f64).product(),
        }
    }

    pub fn check_probabilities(&self) -> Result<(), InstanceError> {
        match self {
            Self::FiniteList(s) => check_sum("scenario list", s.iter().map(|s| s.weight)),
            Self::Independent(entries) => {
                for (i, e) in entries.iter().enumerate() {
                    check_sum(&format!("independent entry {i}"), e.outcomes.iter().map(|o| o.1))?;
                }
                Ok(())
            }
            Self::Blocks(blocks) => {
                for (i, b) in blocks.iter().enumerate() {
                    check_sum(&format!("block {i}"), b.outcomes.iter().map(|o| o.prob))?;
                }
                Ok(())
            }
        }
    }

    /// Every stochastic address mentioned by the distribution.
    pub fn targets(&self) -> Vec<Target> {
        let mut out = Vec::new();
        match self {
            Self::FiniteList(s) => {
                for sc in s {
                    out.extend(sc.overrides.iter().map(|o| o.target));
                }
            }
            Self::Independent(e) => out.extend(e.iter().map(|e| e.target)),
            Self::Blocks(b) => {
                for blk in b {
                    for o in &blk.outcomes {
                        out.extend(o.overrides.iter().map(|o| o.target));
                    }
                }
            }
        }
        out
    }

    /// Draws one realization. The returned weight is 1; callers reweight.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> Scenario {
        let overrides = match self {
            Self::FiniteList(s) => {
                let u: f64 = rng.random();
                let i = pick(u, s.iter().map(|s| s.weight));
                s[i].overrides.clone()
            }
            Self::Independent(entries) => entries
                .iter()
                .map(|e| {
                    let u: f64 = rng.random();
                    let i = pick(u, e.outcomes.iter().map(|o| o.1));
                    Override::new(e.target, e.outcomes[i].0)
                })
                .collect(),
            Self::Blocks(blocks) => {
                let mut out = Vec::new();
                for b in blocks {
                    let u: f64 = rng.random();
                    let i = pick(u, b.outcomes.iter().map(|o| o.prob));
                    out.extend_from_slice(&b.outcomes[i].overrides);
                }
                out
            }
        };
        Scenario { overrides, weight: 1.0 }
    }

    /// All joint scenarios with their probabilities, in lexicographic order
    /// of the factor outcomes (last factor varies fastest).
    pub fn enumerate(&self, cap: usize) -> Result<Vec<Scenario>, InstanceError> {
        let size = self.support_size();
        if size > cap as f64 {
            return Err(InstanceError::EnumerationCapExceeded { size, cap });
        }
        let factors: Vec<Vec<(Vec<Override>, f64)>> = match self {
            Self::FiniteList(s) => return Ok(s.clone()),
            Self::Independent(entries) => entries
                .iter()
                .map(|e| e.outcomes.iter().map(|&(v, p)| (vec![Override::new(e.target, v)], p)).collect())
                .collect(),
            Self::Blocks(blocks) => blocks
                .iter()
                .map(|b| b.outcomes.iter().map(|o| (o.overrides.clone(), o.prob)).collect())
                .collect(),
        };
        let mut out = Vec::with_capacity(size as usize);
        let mut idx = vec![0usize; factors.len()];
        if factors.iter().any(|f| f.is_empty()) {
            return Ok(out);
        }
        loop {
            let mut overrides = Vec::new();
            let mut weight = 1.0;
            for (f, &i) in factors.iter().zip(&idx) {
                overrides.extend_from_slice(&f[i].0);
                weight *= f[i].1;
            }
            out.push(Scenario { overrides, weight });
            let mut pos = factors.len();
            loop {
                if pos == 0 {
                    return Ok(out);
                }
                pos -= 1;
                idx[pos] += 1;
                if idx[pos] < factors[pos].len() {
                    break;
                }
                idx[pos] = 0;
            }
        }
    }
}

/// `(T, q, h)` of one scenario after applying its overrides.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioData {
    pub t: Matrix,
    pub q: Vec<f64>,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStageProblem {
    pub name: String,
    /// First-stage cost `c`.
    pub c: Vec<f64>,
    pub first_stage_rows: Vec<Row>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Fixed recourse matrix `W` (`r × l`).
    pub recourse: Matrix,
    pub recourse_senses: Vec<Sense>,
    pub recourse_lower: Vec<f64>,
    pub recourse_upper: Vec<f64>,
    /// Baseline technology matrix `T` (`r × n`).
    pub base_t: Matrix,
    pub base_q: Vec<f64>,
    pub base_h: Vec<f64>,
    pub distribution: ScenarioDistribution,
}

impl TwoStageProblem {
    /// First-stage dimension.
    pub fn n(&self) -> usize {
        self.c.len()
    }

    /// First-stage row count.
    pub fn m(&self) -> usize {
        self.first_stage_rows.len()
    }

    /// Second-stage dimension.
    pub fn l(&self) -> usize {
        self.recourse.cols()
    }

    /// Second-stage row count.
    pub fn r(&self) -> usize {
        self.recourse.rows()
    }

    pub fn check_dimensions(&self) -> Result<(), InstanceError> {
        let (n, l, r) = (self.n(), self.l(), self.r());
        let bad = |msg: String| Err(InstanceError::Dimension(msg));
        if self.lower.len() != n || self.upper.len() != n {
            return bad(format!("first-stage bounds must have length {n}"));
        }
        for (i, row) in self.first_stage_rows.iter().enumerate() {
            if row.coeffs.iter().any(|&(j, _)| j >= n) {
                return bad(format!("first-stage row {i} references a column beyond {n}"));
            }
        }
        if self.recourse_senses.len() != r {
            return bad(format!("{} recourse senses for {r} recourse rows", self.recourse_senses.len()));
        }
        if self.recourse_lower.len() != l || self.recourse_upper.len() != l {
            return bad(format!("recourse bounds must have length {l}"));
        }
        if self.base_t.rows() != r || self.base_t.cols() != n {
            return bad(format!(
                "T is {}x{}, expected {r}x{n}",
                self.base_t.rows(),
                self.base_t.cols()
            ));
        }
        if self.base_q.len() != l || self.base_h.len() != r {
            return bad(format!("q must have length {l} and h length {r}"));
        }
        for t in self.distribution.targets() {
            let ok = match t {
                Target::T { row, col } => row < r && col < n,
                Target::Q { col } => col < l,
                Target::H { row } => row < r,
            };
            if !ok {
                return bad(format!("stochastic entry {t:?} lies outside (T, q, h)"));
            }
        }
        let finite = self.c.iter().chain(&self.base_q).chain(&self.base_h).all(|v| v.is_finite())
            && self.recourse.is_finite()
            && self.base_t.is_finite();
        if !finite {
            return bad("non-finite problem data".into());
        }
        Ok(())
    }

    /// Applies `scenario`'s overrides to a copy of the baseline (last wins).
    pub fn scenario_data(&self, scenario: &Scenario) -> ScenarioData {
        let mut data = ScenarioData {
            t: self.base_t.clone(),
            q: self.base_q.clone(),
            h: self.base_h.clone(),
        };
        for o in &scenario.overrides {
            match o.target {
                Target::T { row, col } => data.t.set(row, col, o.value),
                Target::Q { col } => data.q[col] = o.value,
                Target::H { row } => data.h[row] = o.value,
            }
        }
        data
    }

    /// LP over the first-stage feasible set `X` with the given objective.
    pub fn first_stage_lp(&self, objective: Vec<f64>) -> LinearProgram {
        LinearProgram {
            objective,
            rows: self.first_stage_rows.clone(),
            lower: self.lower.clone(),
            upper: self.upper.clone(),
        }
    }

    /// Whether `x` satisfies the first-stage rows and bounds within `tol`.
    pub fn is_first_stage_feasible(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.n()
            && x.iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(&v, (&lo, &hi))| v >= lo - tol && v <= hi + tol)
            && self.first_stage_rows.iter().all(|r| r.violation(x) <= tol * (1.0 + r.rhs.abs()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub r: usize,
    /// Joint scenario count of the distribution.
    pub scenarios: f64,
    /// Bounds after tightening infinite ones by LP over `X`.
    pub implied_lower: Vec<f64>,
    pub implied_upper: Vec<f64>,
    /// `‖ub − lb‖`, an upper bound on the diameter of `X`.
    pub diameter: f64,
    /// Always true: `D` is estimated from variable bounds, not computed exactly.
    pub diameter_is_estimate: bool,
}

/// Checks dimensions, probabilities, non-emptiness and boundedness of `X`.
pub fn validate(problem: &TwoStageProblem) -> Result<ValidationReport, InstanceError> {
    problem.check_dimensions()?;
    problem.distribution.check_probabilities()?;
    let n = problem.n();
    let tol = ToleranceSet::default();
    let feas = solve_lp(&problem.first_stage_lp(vec![0.0; n]), &tol)?;
    if feas.status != LpStatus::Optimal {
        return Err(InstanceError::EmptyFeasibleSet);
    }
    let mut lo = problem.lower.clone();
    let mut hi = problem.upper.clone();
    for j in 0..n {
        for (side, sign) in [("lower", 1.0), ("upper", -1.0)] {
            let current = if sign > 0.0 { lo[j] } else { hi[j] };
            if current.is_finite() {
                continue;
            }
            let mut obj = vec![0.0; n];
            obj[j] = sign;
            let sol = solve_lp(&problem.first_stage_lp(obj), &tol)?;
            match sol.status {
                LpStatus::Optimal if sign > 0.0 => lo[j] = sol.x[j],
                LpStatus::Optimal => hi[j] = sol.x[j],
                _ => return Err(InstanceError::UnboundedFirstStage { var: j, side }),
            }
        }
    }
    let width: Vec<f64> = hi.iter().zip(&lo).map(|(h, l)| h - l).collect();
    Ok(ValidationReport {
        n,
        m: problem.m(),
        l: problem.l(),
        r: problem.r(),
        scenarios: problem.distribution.support_size(),
        implied_lower: lo,
        implied_upper: hi,
        diameter: norm(&width),
        diameter_is_estimate: true,
    })
}

/// Distribution of customer counts `c(ξ)` for the inventory model.
#[derive(Debug, Clone, PartialEq)]
pub enum CustomerTable {
    /// Joint outcomes `(c vector, probability)`.
    Joint(Vec<(Vec<f64>, f64)>),
    /// Independent per-item `(value, probability)` tables.
    Independent(Vec<Vec<(f64, f64)>>),
}

/// Parameters of the commodity purchase-and-resale model.
#[derive(Debug, Clone, PartialEq)]
pub struct InventoryParams {
    /// Purchase prices `p`.
    pub price: Vec<f64>,
    /// Holding costs `h`.
    pub holding: Vec<f64>,
    /// Budget `b`.
    pub budget: f64,
    /// Selling prices `s`.
    pub sell: Vec<f64>,
    /// Fraction `r` of customers that buy.
    pub buy_rate: f64,
    pub customers: CustomerTable,
}

/// First stage: `min (p+h)ᵀx  s.t.  pᵀx ≤ b,  0 ≤ xᵢ ≤ b/pᵢ`.
/// Second stage: `min −sᵀy  s.t.  y − x ≤ 0,  y ≤ r·c(ξ),  y ≥ 0`,
/// i.e. `W = [I; I]`, `T = [−I; 0]`, `h = [0; r·c]`.
pub fn gen_inventory(params: &InventoryParams) -> Result<TwoStageProblem, InstanceError> {
    let n = params.price.len();
    let bad = |m: String| Err(InstanceError::BadParameter(m));
    if n == 0 {
        return bad("at least one item is required".into());
    }
    if params.holding.len() != n || params.sell.len() != n {
        return bad(format!("price, holding and sell vectors must all have length {n}"));
    }
    if params.price.iter().chain(&params.holding).chain(&params.sell).any(|&v| !(v > 0.0 && v.is_finite())) {
        return bad("prices, holding costs and selling prices must be positive".into());
    }
    if !(params.buy_rate > 0.0 && params.buy_rate < 1.0) {
        return bad(format!("buy rate {} is not in (0, 1)", params.buy_rate));
    }
    if !(params.budget > 0.0 && params.budget.is_finite()) {
        return bad(format!("budget {} must be positive", params.budget));
    }
    let r = params.buy_rate;
    let distribution = match &params.customers {
        CustomerTable::Joint(table) => {
            let mut scenarios = Vec::with_capacity(table.len());
            for (c, p) in table {
                if c.len() != n {
                    return bad(format!("customer vector has length {}, expected {n}", c.len()));
                }
                let overrides = c
                    .iter()
                    .enumerate()
                    .map(|(i, &ci)| Override::new(Target::H { row: n + i }, r * ci))
                    .collect();
                scenarios.push(Scenario { overrides, weight: *p });
            }
            ScenarioDistribution::FiniteList(scenarios)
        }
        CustomerTable::Independent(tables) => {
            if tables.len() != n {
                return bad(format!("{} customer tables for {n} items", tables.len()));
            }
            ScenarioDistribution::Independent(
                tables
                    .iter()
                    .enumerate()
                    .map(|(i, t)| IndependentEntry {
                        target: Target::H { row: n + i },
                        outcomes: t.iter().map(|&(v, p)| (r * v, p)).collect(),
                    })
                    .collect(),
            )
        }
    };
    distribution.check_probabilities()?;
    if distribution.targets().is_empty() {
        return bad("customer table is empty".into());
    }

    let mut recourse = Matrix::zeros(2 * n, n);
    let mut base_t = Matrix::zeros(2 * n, n);
    for i in 0..n {
        recourse.set(i, i, 1.0);
        recourse.set(n + i, i, 1.0);
        base_t.set(i, i, -1.0);
    }
    // Baseline customer level: the expected value of each entry.
    let mut base_h = vec![0.0; 2 * n];
    if let ScenarioDistribution::FiniteList(s) = &distribution {
        for sc in s {
            for o in &sc.overrides {
                if let Target::H { row } = o.target {
                    base_h[row] += sc.weight * o.value;
                }
            }
        }
    } else if let ScenarioDistribution::Independent(e) = &distribution {
        for entry in e {
            if let Target::H { row } = entry.target {
                base_h[row] = entry.outcomes.iter().map(|(v, p)| v * p).sum();
            }
        }
    }

    Ok(TwoStageProblem {
        name: format!("inventory{n}"),
        c: params.price.iter().zip(&params.holding).map(|(p, h)| p + h).collect(),
        first_stage_rows: vec![Row::new(
            params.price.iter().copied().enumerate().collect(),
            Sense::Le,
            params.budget,
        )],
        lower: vec![0.0; n],
        upper: params.price.iter().map(|p| params.budget / p).collect(),
        recourse,
        recourse_senses: vec![Sense::Le; 2 * n],
        recourse_lower: vec![0.0; n],
        recourse_upper: vec![f64::INFINITY; n],
        base_t,
        base_q: params.sell.iter().map(|s| -s).collect(),
        base_h,
        distribution,
    })
}

/// One item, `p=1, h=0.1, b=10, s=2, r=0.5`, customers 2 or 4 with equal
/// probability. `f(x) = 1.1x − min(x,1) − min(x,2)`, minimized at `x = 1`
/// with `f = −0.9`.
pub fn tiny_inventory() -> TwoStageProblem {
    gen_inventory(&tiny_inventory_params(vec![(vec![2.0], 0.5), (vec![4.0], 0.5)]))
        .expect("tiny inventory parameters are valid")
}

/// The tiny model with a custom customer table.
pub fn tiny_inventory_params(table: Vec<(Vec<f64>, f64)>) -> InventoryParams {
    InventoryParams {
        price: vec![1.0],
        holding: vec![0.1],
        budget: 10.0,
        sell: vec![2.0],
        buy_rate: 0.5,
        customers: CustomerTable::Joint(table),
    }
}

/// Inventory model with `items` products and independent customer counts,
/// each taking `values` equally likely levels. Prices are drawn from `seed`.
pub fn random_inventory(items: usize, values: usize, seed: u64) -> Result<TwoStageProblem, InstanceError> {
    if items == 0 || values == 0 {
        return Err(InstanceError::BadParameter("items and values must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let price: Vec<f64> = (0..items).map(|_| rng.random_range(0.5..2.0)).collect();
    let holding: Vec<f64> = (0..items).map(|_| rng.random_range(0.05..0.3)).collect();
    let sell: Vec<f64> = price.iter().map(|p| p * rng.random_range(1.5..3.0)).collect();
    let tables = (0..items)
        .map(|_| {
            let base = rng.random_range(5.0..20.0);
            (0..values)
                .map(|k| (base * (0.5 + k as f64 / values as f64), 1.0 / values as f64))
                .collect()
        })
        .collect();
    let params = InventoryParams {
        price,
        holding,
        budget: 10.0 * items as f64,
        sell,
        buy_rate: 0.5,
        customers: CustomerTable::Independent(tables),
    };
    gen_inventory(&params)
}

/// Shape of a random instance from [`random_instance`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RandomSpec {
    pub n: usize,
    /// First-stage rows.
    pub m: usize,
    /// Structural recourse columns (the generator adds `2r` penalty columns).
    pub l: usize,
    pub r: usize,
    pub scenarios: usize,
    pub seed: u64,
}

/// Random instance with complete recourse: `W = [M | I | −I]` with
/// nonnegative costs, so every scenario is feasible and bounded for every
/// `x`; `X` is a box `[0, ub]` cut by `m` packing rows.
pub fn random_instance(spec: RandomSpec) -> Result<TwoStageProblem, InstanceError> {
    let RandomSpec { n, m, l, r, scenarios, seed } = spec;
    if n == 0 || r == 0 || scenarios == 0 {
        return Err(InstanceError::BadParameter("n, r and scenario count must be positive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..0.5)).collect();
    let upper: Vec<f64> = (0..n).map(|_| rng.random_range(1.0..10.0)).collect();
    let first_stage_rows = (0..m)
        .map(|_| {
            let coeffs: Vec<(usize, f64)> = (0..n).map(|j| (j, rng.random_range(0.0..1.0))).collect();
            let full: f64 = coeffs.iter().map(|&(j, a)| a * upper[j]).sum();
            Row::new(coeffs, Sense::Le, full * rng.random_range(0.3..0.8))
        })
        .collect();
    let cols = l + 2 * r;
    let mut recourse = Matrix::zeros(r, cols);
    for i in 0..r {
        for j in 0..l {
            if rng.random_bool(0.6) {
                recourse.set(i, j, rng.random_range(-1.0..1.0));
            }
        }
        recourse.set(i, l + i, 1.0);
        recourse.set(i, l + r + i, -1.0);
    }
    let mut base_q: Vec<f64> = (0..l).map(|_| rng.random_range(0.1..1.0)).collect();
    base_q.extend((0..2 * r).map(|_| rng.random_range(1.0..3.0)));
    let mut base_t = Matrix::zeros(r, n);
    for i in 0..r {
        for j in 0..n {
            base_t.set(i, j, rng.random_range(-1.0..1.0));
        }
    }
    let base_h: Vec<f64> = (0..r).map(|_| rng.random_range(-5.0..5.0)).collect();
    let raw: Vec<f64> = (0..scenarios).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let list = raw
        .iter()
        .map(|w| {
            let mut overrides: Vec<Override> = (0..r)
                .map(|i| Override::new(Target::H { row: i }, rng.random_range(-5.0..5.0)))
                .collect();
            let i = rng.random_range(0..r);
            let j = rng.random_range(0..n);
            overrides.push(Override::new(Target::T { row: i, col: j }, rng.random_range(-1.0..1.0)));
            let k = rng.random_range(0..l.max(1));
            if l > 0 {
                overrides.push(Override::new(Target::Q { col: k }, rng.random_range(0.1..1.0)));
            }
            Scenario {
                overrides,
                weight: w / total,
            }
        })
        .collect();
    Ok(TwoStageProblem {
        name: format!("random-n{n}-s{scenarios}-seed{seed}"),
        c,
        first_stage_rows,
        lower: vec![0.0; n],
        upper,
        recourse,
        recourse_senses: vec![Sense::Eq; r],
        recourse_lower: vec![0.0; cols],
        recourse_upper: vec![f64::INFINITY; cols],
        base_t,
        base_q,
        base_h,
        distribution: ScenarioDistribution::FiniteList(list),
    })
}

/// Extensive form over `(x, y₁, …, y_S)`: `min cᵀx + Σ wᵢ qᵢᵀyᵢ` subject to
/// the first-stage rows and `Tᵢx + W yᵢ (sense) hᵢ` for every scenario.
pub fn build_extensive_form(
    problem: &TwoStageProblem,
    scenarios: &[Scenario],
    max_vars: usize,
) -> Result<LinearProgram, InstanceError> {
    if scenarios.is_empty() {
        return Err(InstanceError::BadInput("empty scenario list".into()));
    }
    let total: f64 = scenarios.iter().map(|s| s.weight).sum();
    if (total - 1.0).abs() > 1e-9 * scenarios.len() as f64 {
        return Err(InstanceError::BadProbabilities(format!("scenario weights sum to {total}")));
    }
    let (n, l, r) = (problem.n(), problem.l(), problem.r());
    let vars = n + scenarios.len() * l;
    if vars > max_vars {
        return Err(InstanceError::TooLarge { vars, cap: max_vars });
    }
    let mut lp = LinearProgram::new(vec![0.0; vars]);
    lp.objective[..n].copy_from_slice(&problem.c);
    lp.lower[..n].copy_from_slice(&problem.lower);
    lp.upper[..n].copy_from_slice(&problem.upper);
    lp.rows = problem.first_stage_rows.clone();
    for (s, sc) in scenarios.iter().enumerate() {
        let data = problem.scenario_data(sc);
        let off = n + s * l;
        for k in 0..l {
            lp.objective[off + k] = sc.weight * data.q[k];
            lp.lower[off + k] = problem.recourse_lower[k];
            lp.upper[off + k] = problem.recourse_upper[k];
        }
        for i in 0..r {
            let mut coeffs: Vec<(usize, f64)> =
                (0..n).filter(|&j| data.t.get(i, j) != 0.0).map(|j| (j, data.t.get(i, j))).collect();
            coeffs.extend(
                problem
                    .recourse
                    .row(i)
                    .iter()
                    .enumerate()
                    .filter(|(_, &a)| a != 0.0)
                    .map(|(k, &a)| (off + k, a)),
            );
            lp.add_row(coeffs, problem.recourse_senses[i], data.h[i]);
        }
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::solve_second_stage;

    fn f_tiny(x: f64) -> f64 {
        1.1 * x - x.min(1.0) - x.min(2.0)
    }

    #[test]
    fn tiny_instance_dimensions_and_validation() {
        let p = tiny_inventory();
        assert_eq!((p.n(), p.m(), p.l(), p.r()), (1, 1, 1, 2));
        let rep = validate(&p).unwrap();
        assert_eq!(rep.diameter, 10.0);
    }

    #[test]
    fn closed_form_matches_grid_minimum() {
        let (mut best_x, mut best) = (0.0, f64::INFINITY);
        for k in 0..=10_000 {
            let x = k as f64 * 1e-3;
            if f_tiny(x) < best {
                best = f_tiny(x);
                best_x = x;
            }
        }
        assert!((best_x - 1.0).abs() < 1e-9);
        assert!((best + 0.9).abs() < 1e-12);
        assert!((f_tiny(0.5) + 0.45).abs() < 1e-12);
    }

    #[test]
    fn tiny_second_stage_values() {
        let p = tiny_inventory();
        let ScenarioDistribution::FiniteList(s) = &p.distribution else { panic!() };
        let tol = ToleranceSet::default();
        let cases = [(0, 0.5, -1.0, -2.0), (1, 0.5, -1.0, -2.0), (0, 3.0, -2.0, 0.0)];
        for (i, x, q, g) in cases {
            let d = p.scenario_data(&s[i]);
            let res = solve_second_stage(&p, &d, &[x], &tol).unwrap();
            assert!((res.value - q).abs() < 1e-12, "{res:?}");
            assert!((res.subgradient[0] - g).abs() < 1e-12, "{res:?}");
        }
    }

    #[test]
    fn unbounded_first_stage_detected() {
        let mut p = tiny_inventory();
        p.upper[0] = f64::INFINITY;
        p.first_stage_rows.clear();
        assert!(matches!(validate(&p), Err(InstanceError::UnboundedFirstStage { var: 0, .. })));
    }

    #[test]
    fn implied_bound_from_rows() {
        let mut p = tiny_inventory();
        p.upper[0] = f64::INFINITY;
        let rep = validate(&p).unwrap();
        assert!((rep.implied_upper[0] - 10.0).abs() < 1e-12);
    }

    #[test]
    fn bad_probabilities_rejected() {
        let params = tiny_inventory_params(vec![(vec![2.0], 0.5), (vec![4.0], 0.4)]);
        assert!(matches!(gen_inventory(&params), Err(InstanceError::BadProbabilities(_))));
    }

    #[test]
    fn empty_feasible_set() {
        let mut p = tiny_inventory();
        p.first_stage_rows.push(Row::new(vec![(0, 1.0)], Sense::Ge, 20.0));
        assert_eq!(validate(&p), Err(InstanceError::EmptyFeasibleSet));
    }

    #[test]
    fn bad_inventory_parameters() {
        let mut params = tiny_inventory_params(vec![(vec![2.0], 1.0)]);
        params.buy_rate = 1.0;
        assert!(matches!(gen_inventory(&params), Err(InstanceError::BadParameter(_))));
        let mut params = tiny_inventory_params(vec![(vec![2.0], 1.0)]);
        params.price[0] = 0.0;
        assert!(matches!(gen_inventory(&params), Err(InstanceError::BadParameter(_))));
    }

    #[test]
    fn extensive_form_of_tiny_instance() {
        let p = tiny_inventory();
        let ScenarioDistribution::FiniteList(s) = &p.distribution else { panic!() };
        let lp = build_extensive_form(&p, s, DEFAULT_EXTENSIVE_CAP).unwrap();
        assert_eq!(lp.num_vars(), 3);
        let sol = solve_lp(&lp, &ToleranceSet::default()).unwrap();
        assert!((sol.objective + 0.9).abs() < 1e-10);
        assert!((sol.x[0] - 1.0).abs() < 1e-9);

        let det = gen_inventory(&tiny_inventory_params(vec![(vec![2.0], 1.0)])).unwrap();
        let ScenarioDistribution::FiniteList(s) = &det.distribution else { panic!() };
        let sol = solve_lp(&build_extensive_form(&det, s, DEFAULT_EXTENSIVE_CAP).unwrap(), &ToleranceSet::default()).unwrap();
        assert!((sol.objective + 0.9).abs() < 1e-10);

        assert!(matches!(build_extensive_form(&p, &[], 10), Err(InstanceError::BadInput(_))));
        assert!(matches!(build_extensive_form(&p, s, 1), Err(InstanceError::TooLarge { .. })));
    }

    #[test]
    fn enumeration_of_independent_entries() {
        let p = random_inventory(2, 3, 1).unwrap();
        let all = p.distribution.enumerate(DEFAULT_ENUMERATION_CAP).unwrap();
        assert_eq!(all.len(), 9);
        let total: f64 = all.iter().map(|s| s.weight).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(matches!(
            p.distribution.enumerate(8),
            Err(InstanceError::EnumerationCapExceeded { .. })
        ));
    }

    #[test]
    fn overrides_do_not_touch_baseline() {
        let p = tiny_inventory();
        let before = p.clone();
        let ScenarioDistribution::FiniteList(s) = &p.distribution else { panic!() };
        let a = p.scenario_data(&s[1]);
        let b = p.scenario_data(&s[1]);
        assert_eq!(a, b);
        assert_eq!(p, before);
        assert_eq!(a.h[1], 2.0);
    }

    #[test]
    fn random_instances_validate() {
        for seed in 0..5 {
            let p = random_instance(RandomSpec { n: 4, m: 2, l: 3, r: 3, scenarios: 5, seed }).unwrap();
            validate(&p).unwrap();
        }
    }
}
