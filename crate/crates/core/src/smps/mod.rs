//! SMPS reader (CORE in free-format MPS, implicit two-period TIME, discrete
//! STOCH) and the native JSON instance format.

mod native;

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::instance::{
    validate, Block, BlockOutcome, IndependentEntry, InstanceError, Override, ScenarioDistribution, Target,
    TwoStageProblem,
};
use crate::linalg::Matrix;
use crate::lp::{Row, Sense};

pub use native::{parse_native, write_native};

#[derive(Debug, Error)]
pub enum SmpsError {
    #[error("{file}:{line}: unsupported section or feature `{what}`")]
    UnsupportedSection { file: String, line: usize, what: String },
    #[error("{file}:{line}: random entry ({row}, {col}) lies in the recourse matrix")]
    StochasticRecourse {
        file: String,
        line: usize,
        row: String,
        col: String,
    },
    #[error("{file}:{line}: unknown row or column `{name}`")]
    UnknownRowOrColumn { file: String, line: usize, name: String },
    #[error("{file}:{line}: malformed line: {msg}")]
    MalformedLine { file: String, line: usize, msg: String },
    #[error("{file}: {msg}")]
    Structure { file: String, msg: String },
    #[error("malformed native document: {0}")]
    MalformedDocument(String),
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Instance(#[from] InstanceError),
}

/// Raw contents of the three SMPS files plus names used in diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SmpsTriplet {
    pub core_text: String,
    pub time_text: String,
    pub stoch_text: String,
    pub core_name: String,
    pub time_name: String,
    pub stoch_name: String,
}

const CORE_EXTS: [&str; 4] = ["cor", "core", "COR", "CORE"];
const TIME_EXTS: [&str; 4] = ["tim", "time", "TIM", "TIME"];
const STOCH_EXTS: [&str; 4] = ["sto", "stoch", "STO", "STOCH"];

fn read(path: &Path) -> Result<String, SmpsError> {
    std::fs::read_to_string(path).map_err(|source| SmpsError::Io {
        path: path.to_path_buf(),
        source,
    })
}

impl SmpsTriplet {
    pub fn from_strs(core: &str, time: &str, stoch: &str) -> Self {
        Self {
            core_text: core.to_string(),
            time_text: time.to_string(),
            stoch_text: stoch.to_string(),
            core_name: "CORE".into(),
            time_name: "TIME".into(),
            stoch_name: "STOCH".into(),
        }
    }

    pub fn from_files(core: &Path, time: &Path, stoch: &Path) -> Result<Self, SmpsError> {
        Ok(Self {
            core_text: read(core)?,
            time_text: read(time)?,
            stoch_text: read(stoch)?,
            core_name: core.display().to_string(),
            time_name: time.display().to_string(),
            stoch_name: stoch.display().to_string(),
        })
    }

    /// Loads `<stem>.cor|.tim|.sto` (or the long extensions) from `dir`.
    /// Without a stem the directory must hold exactly one CORE file.
    pub fn from_dir(dir: &Path, stem: Option<&str>) -> Result<Self, SmpsError> {
        let entries: Vec<PathBuf> = std::fs::read_dir(dir)
            .map_err(|source| SmpsError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        let has_ext = |p: &Path, exts: &[&str]| p.extension().and_then(|e| e.to_str()).is_some_and(|e| exts.contains(&e));
        let stem_of = |p: &Path| p.file_stem().and_then(|s| s.to_str()).unwrap_or("").to_string();
        let cores: Vec<&PathBuf> = entries
            .iter()
            .filter(|p| has_ext(p, &CORE_EXTS) && stem.is_none_or(|s| stem_of(p).eq_ignore_ascii_case(s)))
            .collect();
        let core = match cores.as_slice() {
            [one] => (*one).clone(),
            [] => {
                return Err(SmpsError::Structure {
                    file: dir.display().to_string(),
                    msg: "no CORE file found".into(),
                })
            }
            _ => {
                return Err(SmpsError::Structure {
                    file: dir.display().to_string(),
                    msg: "several CORE files found; pass a file stem".into(),
                })
            }
        };
        let want = stem_of(&core);
        let find = |exts: &[&str], what: &str| {
            entries
                .iter()
                .find(|p| has_ext(p, exts) && stem_of(p).eq_ignore_ascii_case(&want))
                .cloned()
                .ok_or_else(|| SmpsError::Structure {
                    file: dir.display().to_string(),
                    msg: format!("no {what} file for `{want}`"),
                })
        };
        let time = find(&TIME_EXTS, "TIME")?;
        let stoch = find(&STOCH_EXTS, "STOCH")?;
        Self::from_files(&core, &time, &stoch)
    }

    /// Warnings for NAME records that differ between the three files.
    pub fn name_mismatches(&self) -> Vec<String> {
        let names: Vec<(String, Option<String>)> = [
            (&self.core_name, &self.core_text),
            (&self.time_name, &self.time_text),
            (&self.stoch_name, &self.stoch_text),
        ]
        .iter()
        .map(|(file, text)| ((*file).clone(), header_name(text)))
        .collect();
        let reference = names[0].1.clone();
        names
            .iter()
            .skip(1)
            .filter(|(_, n)| n.is_some() && reference.is_some() && !n.as_deref().unwrap().eq_ignore_ascii_case(reference.as_deref().unwrap()))
            .map(|(file, n)| format!("{file}: name `{}` differs from CORE name `{}`", n.as_deref().unwrap(), reference.as_deref().unwrap()))
            .collect()
    }
}

/// Name on the first header record of an SMPS file.
fn header_name(text: &str) -> Option<String> {
    lines(text).find_map(|(_, header, toks)| {
        if header && matches!(toks[0].to_ascii_uppercase().as_str(), "NAME" | "TIME" | "STOCH") {
            toks.get(1).map(|s| s.to_string())
        } else {
            None
        }
    })
}

/// Non-blank, non-comment lines as `(line number, is header, tokens)`.
/// Header records start in the first column.
fn lines(text: &str) -> impl Iterator<Item = (usize, bool, Vec<&str>)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim_end();
        if line.trim().is_empty() || line.starts_with('*') {
            return None;
        }
        let header = !line.starts_with(char::is_whitespace);
        Some((i + 1, header, line.split_whitespace().collect()))
    })
}

struct Ctx<'a> {
    file: &'a str,
}

impl Ctx<'_> {
    fn malformed(&self, line: usize, msg: impl Into<String>) -> SmpsError {
        SmpsError::MalformedLine {
            file: self.file.to_string(),
            line,
            msg: msg.into(),
        }
    }

    fn unknown(&self, line: usize, name: &str) -> SmpsError {
        SmpsError::UnknownRowOrColumn {
            file: self.file.to_string(),
            line,
            name: name.to_string(),
        }
    }

    fn unsupported(&self, line: usize, what: impl Into<String>) -> SmpsError {
        SmpsError::UnsupportedSection {
            file: self.file.to_string(),
            line,
            what: what.into(),
        }
    }

    fn number(&self, line: usize, tok: &str) -> Result<f64, SmpsError> {
        tok.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.malformed(line, format!("`{tok}` is not a finite number")))
    }
}

/// Parsed CORE file.
#[derive(Debug, Default)]
struct Core {
    name: String,
    objective: Option<String>,
    row_names: Vec<String>,
    senses: Vec<Sense>,
    rows: HashMap<String, usize>,
    col_names: Vec<String>,
    cols: HashMap<String, usize>,
    cost: Vec<f64>,
    coeffs: Vec<BTreeMap<usize, f64>>,
    rhs: Vec<f64>,
    rhs_set: Option<String>,
    ranges: Vec<Option<f64>>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    lower_set: Vec<bool>,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum CoreSection {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
    Ranges,
}

fn parse_core(text: &str, file: &str) -> Result<Core, SmpsError> {
    let cx = Ctx { file };
    let mut core = Core::default();
    let mut section = CoreSection::None;
    let mut ended = false;
    for (ln, header, toks) in lines(text) {
        if ended {
            break;
        }
        if header {
            section = match toks[0].to_ascii_uppercase().as_str() {
                "NAME" => {
                    core.name = toks.get(1).unwrap_or(&"").to_string();
                    CoreSection::None
                }
                "ROWS" => CoreSection::Rows,
                "COLUMNS" => CoreSection::Columns,
                "RHS" => CoreSection::Rhs,
                "BOUNDS" => CoreSection::Bounds,
                "RANGES" => CoreSection::Ranges,
                "ENDATA" => {
                    ended = true;
                    CoreSection::None
                }
                other => return Err(cx.unsupported(ln, other)),
            };
            continue;
        }
        match section {
            CoreSection::None => return Err(cx.malformed(ln, "data line outside a section")),
            CoreSection::Rows => {
                if toks.len() != 2 {
                    return Err(cx.malformed(ln, "ROWS entries have a type and a name"));
                }
                let name = toks[1].to_string();
                let sense = match toks[0].to_ascii_uppercase().as_str() {
                    "N" => {
                        if core.objective.is_some() {
                            return Err(cx.unsupported(ln, format!("second objective row `{name}`")));
                        }
                        core.objective = Some(name);
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(cx.malformed(ln, format!("unknown row type `{t}`"))),
                };
                if core.rows.contains_key(&name) || core.objective.as_deref() == Some(name.as_str()) {
                    return Err(cx.malformed(ln, format!("duplicate row `{name}`")));
                }
                core.rows.insert(name.clone(), core.row_names.len());
                core.row_names.push(name);
                core.senses.push(sense);
                core.coeffs.push(BTreeMap::new());
                core.rhs.push(0.0);
                core.ranges.push(None);
            }
            CoreSection::Columns => {
                if toks.iter().any(|t| t.trim_matches('\'').eq_ignore_ascii_case("MARKER")) {
                    return Err(cx.unsupported(ln, "integer MARKER"));
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(cx.malformed(ln, "COLUMNS entries are `column row value [row value]`"));
                }
                let name = toks[0];
                let j = match core.cols.get(name) {
                    Some(&j) if j + 1 == core.col_names.len() => j,
                    Some(_) => return Err(cx.malformed(ln, format!("column `{name}` is not contiguous"))),
                    None => {
                        core.cols.insert(name.to_string(), core.col_names.len());
                        core.col_names.push(name.to_string());
                        core.cost.push(0.0);
                        core.lower.push(0.0);
                        core.upper.push(f64::INFINITY);
                        core.lower_set.push(false);
                        core.col_names.len() - 1
                    }
                };
                for pair in toks[1..].chunks(2) {
                    let v = cx.number(ln, pair[1])?;
                    if core.objective.as_deref() == Some(pair[0]) {
                        core.cost[j] = v;
                    } else {
                        let i = *core.rows.get(pair[0]).ok_or_else(|| cx.unknown(ln, pair[0]))?;
                        core.coeffs[i].insert(j, v);
                    }
                }
            }
            CoreSection::Rhs | CoreSection::Ranges => {
                // Optional set name: an odd token count means it is present.
                let body = if toks.len() % 2 == 1 {
                    if section == CoreSection::Rhs && core.rhs_set.is_none() {
                        core.rhs_set = Some(toks[0].to_string());
                    }
                    &toks[1..]
                } else {
                    &toks[..]
                };
                if body.is_empty() || body.len() > 4 {
                    return Err(cx.malformed(ln, "expected `[set] row value [row value]`"));
                }
                for pair in body.chunks(2) {
                    let v = cx.number(ln, pair[1])?;
                    if core.objective.as_deref() == Some(pair[0]) {
                        return Err(cx.unsupported(ln, "objective constant"));
                    }
                    let i = *core.rows.get(pair[0]).ok_or_else(|| cx.unknown(ln, pair[0]))?;
                    if section == CoreSection::Rhs {
                        core.rhs[i] = v;
                    } else {
                        core.ranges[i] = Some(v);
                    }
                }
            }
            CoreSection::Bounds => {
                let kind = toks[0].to_ascii_uppercase();
                let needs_value = matches!(kind.as_str(), "UP" | "LO" | "FX");
                let (col, value) = match (needs_value, toks.len()) {
                    (true, 4) => (toks[2], Some(cx.number(ln, toks[3])?)),
                    (true, 3) => (toks[1], Some(cx.number(ln, toks[2])?)),
                    (false, 3) => (toks[2], None),
                    (false, 2) => (toks[1], None),
                    _ => return Err(cx.malformed(ln, "bad BOUNDS entry")),
                };
                let j = *core.cols.get(col).ok_or_else(|| cx.unknown(ln, col))?;
                match (kind.as_str(), value) {
                    ("UP", Some(v)) => {
                        if v < 0.0 && core.lower[j] == 0.0 && !core.lower_set[j] {
                            core.lower[j] = f64::NEG_INFINITY;
                        }
                        core.upper[j] = v;
                    }
                    ("LO", Some(v)) => {
                        core.lower[j] = v;
                        core.lower_set[j] = true;
                    }
                    ("FX", Some(v)) => {
                        core.lower[j] = v;
                        core.upper[j] = v;
                        core.lower_set[j] = true;
                    }
                    ("FR", None) => {
                        core.lower[j] = f64::NEG_INFINITY;
                        core.upper[j] = f64::INFINITY;
                        core.lower_set[j] = true;
                    }
                    ("MI", None) => {
                        core.lower[j] = f64::NEG_INFINITY;
                        core.lower_set[j] = true;
                    }
                    ("PL", None) => core.upper[j] = f64::INFINITY,
                    (other, _) => return Err(cx.unsupported(ln, format!("bound type {other}"))),
                }
            }
        }
    }
    if core.objective.is_none() {
        return Err(SmpsError::Structure {
            file: file.into(),
            msg: "no objective (N) row".into(),
        });
    }
    if core.col_names.is_empty() {
        return Err(SmpsError::Structure {
            file: file.into(),
            msg: "no COLUMNS".into(),
        });
    }
    Ok(core)
}

/// First column and first row of the second period.
struct Split {
    col: usize,
    row: usize,
}

fn parse_time(text: &str, file: &str, core: &Core) -> Result<Split, SmpsError> {
    let cx = Ctx { file };
    let mut in_periods = false;
    let mut starts: Vec<(usize, usize, usize)> = Vec::new();
    for (ln, header, toks) in lines(text) {
        if header {
            match toks[0].to_ascii_uppercase().as_str() {
                "TIME" => in_periods = false,
                "PERIODS" => {
                    if let Some(kind) = toks.get(1) {
                        if !matches!(kind.to_ascii_uppercase().as_str(), "IMPLICIT" | "LP") {
                            return Err(cx.unsupported(ln, format!("PERIODS {kind}")));
                        }
                    }
                    in_periods = true;
                }
                "ENDATA" => break,
                other => return Err(cx.unsupported(ln, other)),
            }
            continue;
        }
        if !in_periods {
            return Err(cx.malformed(ln, "data line outside PERIODS"));
        }
        if toks.len() != 3 {
            return Err(cx.malformed(ln, "PERIODS entries are `column row period`"));
        }
        let col = *core.cols.get(toks[0]).ok_or_else(|| cx.unknown(ln, toks[0]))?;
        let row = if core.objective.as_deref() == Some(toks[1]) {
            0
        } else {
            *core.rows.get(toks[1]).ok_or_else(|| cx.unknown(ln, toks[1]))?
        };
        starts.push((ln, col, row));
    }
    if starts.len() != 2 {
        return Err(SmpsError::Structure {
            file: file.into(),
            msg: format!("{} periods declared, exactly two are supported", starts.len()),
        });
    }
    let (ln, col, row) = starts[1];
    if starts[0].1 != 0 || starts[0].2 != 0 {
        return Err(cx.malformed(starts[0].0, "the first period must start at the first row and column"));
    }
    if col == 0 || col >= core.col_names.len() || row > core.row_names.len() {
        return Err(cx.malformed(ln, "second period must start after the first"));
    }
    Ok(Split { col, row })
}

/// Rows produced by one CORE row: `(sense, rhs)` pairs, two for ranged rows.
fn expand_row(sense: Sense, rhs: f64, range: Option<f64>) -> Vec<(Sense, f64)> {
    match (sense, range) {
        (_, None) => vec![(sense, rhs)],
        (Sense::Ge, Some(r)) => vec![(Sense::Ge, rhs), (Sense::Le, rhs + r.abs())],
        (Sense::Le, Some(r)) => vec![(Sense::Ge, rhs - r.abs()), (Sense::Le, rhs)],
        (Sense::Eq, Some(r)) if r >= 0.0 => vec![(Sense::Ge, rhs), (Sense::Le, rhs + r)],
        (Sense::Eq, Some(r)) => vec![(Sense::Ge, rhs + r), (Sense::Le, rhs)],
    }
}

struct Layout {
    n: usize,
    split_row: usize,
    /// Recourse rows generated by each second-period CORE row.
    recourse_rows: Vec<Vec<usize>>,
}

impl Layout {
    fn target(&self, core: &Core, cx: &Ctx, ln: usize, col: &str, row: &str) -> Result<Target, SmpsError> {
        if core.objective.as_deref() == Some(row) {
            let j = *core.cols.get(col).ok_or_else(|| cx.unknown(ln, col))?;
            if j < self.n {
                return Err(cx.unsupported(ln, "random first-stage cost"));
            }
            return Ok(Target::Q { col: j - self.n });
        }
        let i = *core.rows.get(row).ok_or_else(|| cx.unknown(ln, row))?;
        if i < self.split_row {
            return Err(cx.unsupported(ln, "random first-stage row"));
        }
        let mapped = &self.recourse_rows[i - self.split_row];
        if mapped.len() != 1 {
            return Err(cx.unsupported(ln, "random entry on a ranged row"));
        }
        let r = mapped[0];
        match core.cols.get(col) {
            Some(&j) if j < self.n => Ok(Target::T { row: r, col: j }),
            Some(_) => Err(SmpsError::StochasticRecourse {
                file: cx.file.to_string(),
                line: ln,
                row: row.to_string(),
                col: col.to_string(),
            }),
            None => {
                let is_rhs = core.rhs_set.as_deref() == Some(col)
                    || matches!(col.to_ascii_uppercase().as_str(), "RHS" | "RHS1" | "RIGHT");
                if is_rhs {
                    Ok(Target::H { row: r })
                } else {
                    Err(cx.unknown(ln, col))
                }
            }
        }
    }
}

fn build_problem(core: &Core, split: &Split) -> (TwoStageProblem, Layout) {
    let n = split.col;
    let total = core.col_names.len();
    let l = total - n;
    let mut first_stage_rows = Vec::new();
    for i in 0..split.row {
        let coeffs: Vec<(usize, f64)> = core.coeffs[i].iter().map(|(&j, &v)| (j, v)).collect();
        for (sense, rhs) in expand_row(core.senses[i], core.rhs[i], core.ranges[i]) {
            first_stage_rows.push(Row::new(coeffs.clone(), sense, rhs));
        }
    }
    let mut recourse_rows = Vec::new();
    let mut w_entries = Vec::new();
    let mut t_entries = Vec::new();
    let mut senses = Vec::new();
    let mut h = Vec::new();
    for i in split.row..core.row_names.len() {
        let mut mapped = Vec::new();
        for (sense, rhs) in expand_row(core.senses[i], core.rhs[i], core.ranges[i]) {
            let r = senses.len();
            for (&j, &v) in &core.coeffs[i] {
                if j < n {
                    t_entries.push((r, j, v));
                } else {
                    w_entries.push((r, j - n, v));
                }
            }
            senses.push(sense);
            h.push(rhs);
            mapped.push(r);
        }
        recourse_rows.push(mapped);
    }
    let r = senses.len();
    let problem = TwoStageProblem {
        name: core.name.clone(),
        c: core.cost[..n].to_vec(),
        first_stage_rows,
        lower: core.lower[..n].to_vec(),
        upper: core.upper[..n].to_vec(),
        recourse: Matrix::from_triplets(r, l, &w_entries).expect("indices in range"),
        recourse_senses: senses,
        recourse_lower: core.lower[n..].to_vec(),
        recourse_upper: core.upper[n..].to_vec(),
        base_t: Matrix::from_triplets(r, n, &t_entries).expect("indices in range"),
        base_q: core.cost[n..].to_vec(),
        base_h: h,
        distribution: ScenarioDistribution::deterministic(),
    };
    (
        problem,
        Layout {
            n,
            split_row: split.row,
            recourse_rows,
        },
    )
}

/// Checks that no first-period row touches second-period columns.
fn check_staircase(core: &Core, split: &Split, file: &str) -> Result<(), SmpsError> {
    for i in 0..split.row {
        if let Some((&j, _)) = core.coeffs[i].range(split.col..).next() {
            return Err(SmpsError::Structure {
                file: file.into(),
                msg: format!(
                    "first-stage row `{}` uses second-stage column `{}`",
                    core.row_names[i], core.col_names[j]
                ),
            });
        }
    }
    Ok(())
}

fn parse_stoch(text: &str, file: &str, core: &Core, layout: &Layout) -> Result<ScenarioDistribution, SmpsError> {
    #[derive(PartialEq)]
    enum Mode {
        None,
        Indep,
        Blocks,
    }
    let cx = Ctx { file };
    let mut mode = Mode::None;
    let mut indep: Vec<IndependentEntry> = Vec::new();
    let mut blocks: Vec<(String, Block)> = Vec::new();
    let mut current: Option<usize> = None;
    for (ln, header, toks) in lines(text) {
        if header {
            match toks[0].to_ascii_uppercase().as_str() {
                "STOCH" => mode = Mode::None,
                "INDEP" | "BLOCKS" => {
                    let kind = toks.get(1).map(|s| s.to_ascii_uppercase());
                    if kind.as_deref() != Some("DISCRETE") {
                        return Err(cx.unsupported(ln, format!("{} {}", toks[0], toks.get(1).unwrap_or(&""))));
                    }
                    if let Some(option) = toks.get(2) {
                        if !option.eq_ignore_ascii_case("REPLACE") {
                            return Err(cx.unsupported(ln, format!("{} {}", toks[0], option)));
                        }
                    }
                    mode = if toks[0].eq_ignore_ascii_case("INDEP") { Mode::Indep } else { Mode::Blocks };
                    current = None;
                }
                "ENDATA" => break,
                other => return Err(cx.unsupported(ln, other)),
            }
            continue;
        }
        match mode {
            Mode::None => return Err(cx.malformed(ln, "data line outside INDEP or BLOCKS")),
            Mode::Indep => {
                let (value, prob) = match toks.len() {
                    4 => (cx.number(ln, toks[2])?, cx.number(ln, toks[3])?),
                    5 => (cx.number(ln, toks[2])?, cx.number(ln, toks[4])?),
                    _ => return Err(cx.malformed(ln, "INDEP entries are `column row value [period] probability`")),
                };
                if prob < 0.0 {
                    return Err(cx.malformed(ln, "negative probability"));
                }
                let target = layout.target(core, &cx, ln, toks[0], toks[1])?;
                match indep.last_mut() {
                    Some(e) if e.target == target => e.outcomes.push((value, prob)),
                    _ => {
                        if indep.iter().any(|e| e.target == target) {
                            return Err(cx.malformed(ln, "outcomes of one entry must be contiguous"));
                        }
                        indep.push(IndependentEntry {
                            target,
                            outcomes: vec![(value, prob)],
                        });
                    }
                }
            }
            Mode::Blocks => {
                if toks[0].eq_ignore_ascii_case("BL") {
                    let (name, prob) = match toks.len() {
                        4 => (toks[1], cx.number(ln, toks[3])?),
                        3 => (toks[1], cx.number(ln, toks[2])?),
                        _ => return Err(cx.malformed(ln, "BL records are `BL block [period] probability`")),
                    };
                    if prob < 0.0 {
                        return Err(cx.malformed(ln, "negative probability"));
                    }
                    let b = match blocks.iter().position(|(n, _)| n == name) {
                        Some(b) => b,
                        None => {
                            blocks.push((name.to_string(), Block { outcomes: Vec::new() }));
                            blocks.len() - 1
                        }
                    };
                    blocks[b].1.outcomes.push(BlockOutcome {
                        overrides: Vec::new(),
                        prob,
                    });
                    current = Some(b);
                } else {
                    if toks.len() != 3 {
                        return Err(cx.malformed(ln, "block entries are `column row value`"));
                    }
                    let b = current.ok_or_else(|| cx.malformed(ln, "block entry before any BL record"))?;
                    let target = layout.target(core, &cx, ln, toks[0], toks[1])?;
                    let value = cx.number(ln, toks[2])?;
                    blocks[b].1.outcomes.last_mut().expect("BL pushed an outcome").overrides.push(Override::new(target, value));
                }
            }
        }
    }
    Ok(match (indep.is_empty(), blocks.is_empty()) {
        (true, true) => ScenarioDistribution::deterministic(),
        (false, true) => ScenarioDistribution::Independent(indep),
        _ => {
            // Independent entries become single-entry blocks.
            let mut all: Vec<Block> = indep
                .into_iter()
                .map(|e| Block {
                    outcomes: e
                        .outcomes
                        .iter()
                        .map(|&(v, p)| BlockOutcome {
                            overrides: vec![Override::new(e.target, v)],
                            prob: p,
                        })
                        .collect(),
                })
                .collect();
            all.extend(blocks.into_iter().map(|(_, b)| b));
            ScenarioDistribution::Blocks(all)
        }
    })
}

/// Parses and validates an SMPS triplet. Rows and columns are split into
/// stages at the second TIME period; ranged rows become a `≥`/`≤` pair.
pub fn parse_smps(triplet: &SmpsTriplet) -> Result<TwoStageProblem, SmpsError> {
    let core = parse_core(&triplet.core_text, &triplet.core_name)?;
    let split = parse_time(&triplet.time_text, &triplet.time_name, &core)?;
    check_staircase(&core, &split, &triplet.core_name)?;
    let (mut problem, layout) = build_problem(&core, &split);
    problem.distribution = parse_stoch(&triplet.stoch_text, &triplet.stoch_name, &core, &layout)?;
    validate(&problem)?;
    Ok(problem)
}
