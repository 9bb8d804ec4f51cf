//! Native instance document: one JSON object with the keys `name`,
//! `first_stage`, `recourse`, `stochastic` and `distribution`. Numbers are
//! written with 17 significant digits; infinite bounds are written as `null`.

use std::io;

use serde::{Deserialize, Serialize};

use super::SmpsError;
use crate::instance::{Block, IndependentEntry, Scenario, ScenarioDistribution, TwoStageProblem};
use crate::linalg::Matrix;
use crate::lp::{Row, Sense};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Document {
    name: String,
    first_stage: FirstStage,
    recourse: Recourse,
    stochastic: Stochastic,
    distribution: Distribution,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FirstStage {
    c: Vec<f64>,
    rows: Vec<RowDoc>,
    /// `null` is `−∞`.
    lower: Vec<Option<f64>>,
    /// `null` is `+∞`.
    upper: Vec<Option<f64>>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    coeffs: Vec<(usize, f64)>,
    sense: Sense,
    rhs: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Recourse {
    rows: usize,
    cols: usize,
    /// Nonzeros of `W` as `(row, col, value)`.
    w: Vec<(usize, usize, f64)>,
    senses: Vec<Sense>,
    lower: Vec<Option<f64>>,
    upper: Vec<Option<f64>>,
}

/// Baseline of the scenario-dependent data.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct Stochastic {
    t: Vec<(usize, usize, f64)>,
    q: Vec<f64>,
    h: Vec<f64>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
enum Distribution {
    FiniteList { scenarios: Vec<Scenario> },
    Independent { entries: Vec<IndependentEntry> },
    Blocks { blocks: Vec<Block> },
}

fn to_opt(v: &[f64]) -> Vec<Option<f64>> {
    v.iter().map(|&x| x.is_finite().then_some(x)).collect()
}

fn from_opt(v: &[Option<f64>], missing: f64) -> Vec<f64> {
    v.iter().map(|x| x.unwrap_or(missing)).collect()
}

/// Compact JSON with every float printed as `d.dddddddddddddddde±x`.
struct SeventeenDigits;

impl serde_json::ser::Formatter for SeventeenDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        write!(writer, "{value:.16e}")
    }
}

pub fn write_native(problem: &TwoStageProblem) -> String {
    let doc = Document {
        name: problem.name.clone(),
        first_stage: FirstStage {
            c: problem.c.clone(),
            rows: problem
                .first_stage_rows
                .iter()
                .map(|r| RowDoc {
                    coeffs: r.coeffs.clone(),
                    sense: r.sense,
                    rhs: r.rhs,
                })
                .collect(),
            lower: to_opt(&problem.lower),
            upper: to_opt(&problem.upper),
        },
        recourse: Recourse {
            rows: problem.r(),
            cols: problem.l(),
            w: problem.recourse.triplets(),
            senses: problem.recourse_senses.clone(),
            lower: to_opt(&problem.recourse_lower),
            upper: to_opt(&problem.recourse_upper),
        },
        stochastic: Stochastic {
            t: problem.base_t.triplets(),
            q: problem.base_q.clone(),
            h: problem.base_h.clone(),
        },
        distribution: match &problem.distribution {
            ScenarioDistribution::FiniteList(s) => Distribution::FiniteList { scenarios: s.clone() },
            ScenarioDistribution::Independent(e) => Distribution::Independent { entries: e.clone() },
            ScenarioDistribution::Blocks(b) => Distribution::Blocks { blocks: b.clone() },
        },
    };
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SeventeenDigits);
    doc.serialize(&mut ser).expect("serializing to memory cannot fail");
    out.push(b'\n');
    String::from_utf8(out).expect("JSON output is UTF-8")
}

/// Parses a native document and checks dimensions and probabilities.
pub fn parse_native(text: &str) -> Result<TwoStageProblem, SmpsError> {
    let doc: Document = serde_json::from_str(text).map_err(|e| SmpsError::MalformedDocument(e.to_string()))?;
    let n = doc.first_stage.c.len();
    let (r, l) = (doc.recourse.rows, doc.recourse.cols);
    let recourse = Matrix::from_triplets(r, l, &doc.recourse.w)
        .ok_or_else(|| SmpsError::MalformedDocument(format!("W entry outside {r}x{l}")))?;
    let base_t = Matrix::from_triplets(r, n, &doc.stochastic.t)
        .ok_or_else(|| SmpsError::MalformedDocument(format!("T entry outside {r}x{n}")))?;
    let problem = TwoStageProblem {
        name: doc.name,
        c: doc.first_stage.c,
        first_stage_rows: doc
            .first_stage
            .rows
            .into_iter()
            .map(|r| Row::new(r.coeffs, r.sense, r.rhs))
            .collect(),
        lower: from_opt(&doc.first_stage.lower, f64::NEG_INFINITY),
        upper: from_opt(&doc.first_stage.upper, f64::INFINITY),
        recourse,
        recourse_senses: doc.recourse.senses,
        recourse_lower: from_opt(&doc.recourse.lower, f64::NEG_INFINITY),
        recourse_upper: from_opt(&doc.recourse.upper, f64::INFINITY),
        base_t,
        base_q: doc.stochastic.q,
        base_h: doc.stochastic.h,
        distribution: match doc.distribution {
            Distribution::FiniteList { scenarios } => ScenarioDistribution::FiniteList(scenarios),
            Distribution::Independent { entries } => ScenarioDistribution::Independent(entries),
            Distribution::Blocks { blocks } => ScenarioDistribution::Blocks(blocks),
        },
    };
    problem
        .check_dimensions()
        .and_then(|_| problem.distribution.check_probabilities())
        .map_err(|e| SmpsError::MalformedDocument(e.to_string()))?;
    Ok(problem)
}
