//! Formula sketches: parsing, evaluation against hole programs, completion
//! specs and whole-table filling.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rust_decimal::Decimal;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fta::build_base;
use crate::grid::{parse_col, CellRef, Grid, MISSING};
use crate::lang::ExtractorProgram;
use crate::synth::{ExampleSet, SynthConfig, SynthError, Synthesizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Func {
    Sum,
    Avg,
    Max,
    Min,
    Count,
    Minus,
    Concat,
    Id,
}

impl Func {
    pub const ALL: [Func; 8] =
        [Func::Sum, Func::Avg, Func::Max, Func::Min, Func::Count, Func::Minus, Func::Concat, Func::Id];

    pub fn name(self) -> &'static str {
        match self {
            Func::Sum => "SUM",
            Func::Avg => "AVG",
            Func::Max => "MAX",
            Func::Min => "MIN",
            Func::Count => "COUNT",
            Func::Minus => "MINUS",
            Func::Concat => "CONCAT",
            Func::Id => "ID",
        }
    }

    pub fn from_name(s: &str) -> Option<Func> {
        Func::ALL.into_iter().find(|f| f.name() == s)
    }

    fn arity_ok(self, n: usize) -> bool {
        match self {
            Func::Minus => n == 2,
            Func::Id => n == 1,
            _ => n >= 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Sketch {
    Const(String),
    Hole(u32),
    Func(Func, Vec<Sketch>),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SketchError {
    #[error("syntax error at {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown function {0}")]
    UnknownFunction(String),
    #[error("{func} does not take {got} argument(s)")]
    Arity { func: &'static str, got: usize },
}

impl Sketch {
    /// Distinct hole ids, ascending.
    pub fn holes(&self) -> BTreeSet<u32> {
        let mut out = BTreeSet::new();
        self.collect_holes(&mut out);
        out
    }

    fn collect_holes(&self, out: &mut BTreeSet<u32>) {
        match self {
            Sketch::Const(_) => {}
            Sketch::Hole(h) => {
                out.insert(*h);
            }
            Sketch::Func(_, args) => args.iter().for_each(|a| a.collect_holes(out)),
        }
    }
}

fn bare_const(s: &str) -> bool {
    !s.is_empty()
        && s.chars().all(|c| c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_' | '+'))
        && !s.starts_with('?')
}

impl fmt::Display for Sketch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Sketch::Const(s) if bare_const(s) && Func::from_name(s).is_none() => write!(f, "{s}"),
            Sketch::Const(s) => write!(f, "\"{}\"", s.replace('\\', "\\\\").replace('"', "\\\"")),
            Sketch::Hole(h) => write!(f, "?{h}"),
            Sketch::Func(func, args) => {
                write!(f, "{}(", func.name())?;
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        write!(f, ", ")?;
                    }
                    write!(f, "{a}")?;
                }
                write!(f, ")")
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn err<T>(&self, msg: impl Into<String>) -> Result<T, SketchError> {
        Err(SketchError::Syntax { pos: self.pos, msg: msg.into() })
    }

    fn ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().map_or(1, char::len_utf8);
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn word(&mut self) -> &str {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_alphanumeric() || matches!(c, '.' | '-' | '_' | '+') {
                self.pos += 1;
            } else {
                break;
            }
        }
        &self.src[start..self.pos]
    }

    fn sketch(&mut self) -> Result<Sketch, SketchError> {
        self.ws();
        match self.peek() {
            None => self.err("unexpected end of input"),
            Some('?') => {
                self.pos += 1;
                let start = self.pos;
                let digits = self.word();
                match digits.parse::<u32>() {
                    Ok(id) if id >= 1 && digits.chars().all(|c| c.is_ascii_digit()) => Ok(Sketch::Hole(id)),
                    _ => {
                        self.pos = start;
                        self.err("expected a positive hole id after '?'")
                    }
                }
            }
            Some('"') => {
                self.pos += 1;
                let mut s = String::new();
                loop {
                    match self.peek() {
                        None => return self.err("unterminated string"),
                        Some('"') => {
                            self.pos += 1;
                            return Ok(Sketch::Const(s));
                        }
                        Some('\\') => {
                            self.pos += 1;
                            match self.peek() {
                                Some(c @ ('"' | '\\')) => {
                                    s.push(c);
                                    self.pos += 1;
                                }
                                _ => return self.err("bad escape"),
                            }
                        }
                        Some(c) => {
                            s.push(c);
                            self.pos += c.len_utf8();
                        }
                    }
                }
            }
            Some(_) => {
                let start = self.pos;
                let w = self.word().to_string();
                if w.is_empty() {
                    return self.err("expected a constant, hole or function");
                }
                self.ws();
                if self.peek() != Some('(') {
                    return Ok(Sketch::Const(w));
                }
                let Some(func) = Func::from_name(&w) else {
                    self.pos = start;
                    return Err(SketchError::UnknownFunction(w));
                };
                self.pos += 1;
                let mut args = Vec::new();
                self.ws();
                if self.peek() == Some(')') {
                    self.pos += 1;
                } else {
                    loop {
                        args.push(self.sketch()?);
                        self.ws();
                        match self.peek() {
                            Some(',') => self.pos += 1,
                            Some(')') => {
                                self.pos += 1;
                                break;
                            }
                            _ => return self.err("expected ',' or ')'"),
                        }
                    }
                }
                if !func.arity_ok(args.len()) {
                    return Err(SketchError::Arity { func: func.name(), got: args.len() });
                }
                Ok(Sketch::Func(func, args))
            }
        }
    }
}

pub fn parse_sketch(text: &str) -> Result<Sketch, SketchError> {
    let mut p = Parser { src: text, pos: 0 };
    let s = p.sketch()?;
    p.ws();
    if p.pos != text.len() {
        return p.err("trailing input");
    }
    Ok(s)
}

impl FromStr for Sketch {
    type Err = SketchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_sketch(s)
    }
}

pub type HoleBindings = BTreeMap<u32, ExtractorProgram>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("value {value:?}{} is not numeric", at_cell(.cell))]
    NonNumeric { cell: Option<CellRef>, value: String },
    #[error("{func} expects a single value, got {got}{}", at_cell(.cell))]
    NotSingleton { func: &'static str, got: usize, cell: Option<CellRef> },
    #[error("no program bound to hole ?{0}")]
    Unbound(u32),
}

fn at_cell(c: &Option<CellRef>) -> String {
    c.map_or(String::new(), |c| format!(" at {c}"))
}

type Values = Vec<(Option<CellRef>, String)>;

/// Renders a decimal without trailing zeros.
pub fn format_decimal(d: Decimal) -> String {
    let n = d.normalize();
    if n.is_zero() {
        "0".into()
    } else {
        n.to_string()
    }
}

fn numeric(v: &(Option<CellRef>, String)) -> Result<Decimal, EvalError> {
    Decimal::from_str(v.1.trim())
        .or_else(|_| Decimal::from_scientific(v.1.trim()))
        .map_err(|_| EvalError::NonNumeric { cell: v.0, value: v.1.clone() })
}

fn single(func: Func, vals: Values) -> Result<(Option<CellRef>, String), EvalError> {
    if vals.len() == 1 {
        Ok(vals.into_iter().next().expect("one value"))
    } else {
        Err(EvalError::NotSingleton { func: func.name(), got: vals.len(), cell: vals.first().and_then(|v| v.0) })
    }
}

/// `Ok(None)` is ⊥: some hole program failed at `c`. A bare hole behaves as `ID`.
pub fn eval_sketch(s: &Sketch, b: &HoleBindings, g: &Grid, c: CellRef) -> Result<Option<String>, EvalError> {
    let vals = match s {
        Sketch::Hole(_) => eval_values(&Sketch::Func(Func::Id, vec![s.clone()]), b, g, c)?,
        _ => eval_values(s, b, g, c)?,
    };
    Ok(vals.map(|v| v.into_iter().next().expect("one value").1))
}

fn eval_values(s: &Sketch, b: &HoleBindings, g: &Grid, c: CellRef) -> Result<Option<Values>, EvalError> {
    match s {
        Sketch::Const(v) => Ok(Some(vec![(None, v.clone())])),
        Sketch::Hole(h) => {
            let p = b.get(h).ok_or(EvalError::Unbound(*h))?;
            Ok(p.eval(g, c).map(|cells| cells.into_iter().map(|x| (Some(x), g.get(x).to_string())).collect()))
        }
        Sketch::Func(func, args) => {
            let mut vals: Values = Vec::new();
            let mut parts: Vec<Values> = Vec::new();
            for a in args {
                let Some(v) = eval_values(a, b, g, c)? else { return Ok(None) };
                vals.extend(v.iter().cloned());
                parts.push(v);
            }
            let out = match func {
                Func::Sum => format_decimal(sum(&vals)?),
                Func::Avg => format_decimal(sum(&vals)? / Decimal::from(vals.len())),
                Func::Max | Func::Min => {
                    let mut best: Option<Decimal> = None;
                    for v in &vals {
                        let d = numeric(v)?;
                        best = Some(match best {
                            None => d,
                            Some(x) if *func == Func::Max => x.max(d),
                            Some(x) => x.min(d),
                        });
                    }
                    format_decimal(best.expect("arity at least one"))
                }
                Func::Count => vals.len().to_string(),
                Func::Minus => {
                    let mut it = parts.into_iter();
                    let a = numeric(&single(*func, it.next().expect("two args"))?)?;
                    let b = numeric(&single(*func, it.next().expect("two args"))?)?;
                    format_decimal(a - b)
                }
                Func::Concat => vals.iter().map(|v| v.1.as_str()).collect(),
                Func::Id => single(*func, vals)?.1,
            };
            Ok(Some(vec![(None, out)]))
        }
    }
}

fn sum(vals: &Values) -> Result<Decimal, EvalError> {
    vals.iter().try_fold(Decimal::ZERO, |acc, v| Ok(acc + numeric(v)?))
}

/// Parses a hole key such as `1` or `?1`.
pub fn parse_hole_id(key: &str) -> Option<u32> {
    key.strip_prefix('?').unwrap_or(key).parse().ok().filter(|h| *h >= 1)
}

/// Which cells a completion writes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum Targets {
    /// Every cell holding the missing marker.
    #[default]
    Missing,
    Cells(Vec<CellRef>),
    /// Every cell of the column.
    Column(usize),
}

impl Targets {
    /// Parses the `targets` object of a spec file.
    pub fn from_value(v: serde_json::Value) -> Result<Targets, SpecError> {
        Self::from_raw(serde_json::from_value(v).map_err(|e| SpecError::Json(e.to_string()))?)
    }

    fn from_raw(raw: TargetsJson) -> Result<Targets, SpecError> {
        Ok(match raw {
            TargetsJson::Missing => Targets::Missing,
            TargetsJson::Cells { cells } => {
                Targets::Cells(cells.iter().map(CellJson::cell).collect::<Result<_, _>>()?)
            }
            TargetsJson::Column { column } => Targets::Column(
                CellJson(1, column.clone()).cell().map_err(|_| SpecError::BadCell(format!("{column:?}")))?.col,
            ),
        })
    }

    pub fn cells(&self, g: &Grid) -> Vec<CellRef> {
        match self {
            Targets::Missing => g.cells().filter(|c| g.is_missing(*c)).collect(),
            Targets::Cells(cs) => cs.clone(),
            Targets::Column(col) => (1..=g.rows()).map(|r| CellRef::new(r, *col)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompletionSpec {
    pub sketch: Sketch,
    pub examples: BTreeMap<u32, ExampleSet>,
    pub targets: Targets,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SpecError {
    #[error("invalid spec JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Sketch(#[from] SketchError),
    #[error("bad cell reference: {0}")]
    BadCell(String),
    #[error("bad hole id {0:?}")]
    BadHole(String),
    #[error("hole ?{0} has no examples")]
    HoleWithoutExamples(u32),
    #[error("examples given for ?{0}, which is not in the sketch")]
    UnknownHole(u32),
    #[error("example set for ?{hole}: {msg}")]
    Examples { hole: u32, msg: String },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ColJson {
    Num(usize),
    Name(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct CellJson(usize, ColJson);

impl CellJson {
    fn cell(&self) -> Result<CellRef, SpecError> {
        let col = match &self.1 {
            ColJson::Num(n) if *n >= 1 => Some(*n),
            ColJson::Num(_) => None,
            ColJson::Name(s) => parse_col(s),
        };
        match col {
            Some(c) if self.0 >= 1 => Ok(CellRef::new(self.0, c)),
            _ => Err(SpecError::BadCell(format!("{:?}", self))),
        }
    }

    fn from_cell(c: CellRef) -> CellJson {
        CellJson(c.row, ColJson::Num(c.col))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExampleJson {
    #[serde(rename = "in")]
    input: CellJson,
    out: Option<Vec<CellJson>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum TargetsJson {
    #[default]
    Missing,
    Cells {
        cells: Vec<CellJson>,
    },
    Column {
        column: ColJson,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecJson {
    sketch: String,
    examples: BTreeMap<String, Vec<ExampleJson>>,
    #[serde(default)]
    targets: TargetsJson,
}

impl CompletionSpec {
    pub fn from_json(text: &str) -> Result<CompletionSpec, SpecError> {
        let raw: SpecJson = serde_json::from_str(text).map_err(|e| SpecError::Json(e.to_string()))?;
        Self::from_raw(raw)
    }

    pub fn from_value(v: serde_json::Value) -> Result<CompletionSpec, SpecError> {
        let raw: SpecJson = serde_json::from_value(v).map_err(|e| SpecError::Json(e.to_string()))?;
        Self::from_raw(raw)
    }

    fn from_raw(raw: SpecJson) -> Result<CompletionSpec, SpecError> {
        let sketch = parse_sketch(&raw.sketch)?;
        let mut examples = BTreeMap::new();
        for (key, list) in raw.examples {
            let hole = parse_hole_id(&key).ok_or_else(|| SpecError::BadHole(key.clone()))?;
            let mut set = ExampleSet::new();
            for ex in list {
                let input = ex.input.cell()?;
                let res = match ex.out {
                    None => set.insert_negative(input),
                    Some(out) => {
                        let out = out.iter().map(CellJson::cell).collect::<Result<Vec<_>, _>>()?;
                        set.insert(input, out)
                    }
                };
                res.map_err(|e| SpecError::Examples { hole, msg: e.to_string() })?;
            }
            examples.insert(hole, set);
        }
        let targets = Targets::from_raw(raw.targets)?;
        let spec = CompletionSpec { sketch, examples, targets };
        spec.check()?;
        Ok(spec)
    }

    /// Every hole has examples and every example set names a hole.
    pub fn check(&self) -> Result<(), SpecError> {
        let holes = self.sketch.holes();
        if let Some(h) = holes.iter().find(|h| self.examples.get(h).is_none_or(ExampleSet::is_empty)) {
            return Err(SpecError::HoleWithoutExamples(*h));
        }
        if let Some(h) = self.examples.keys().find(|h| !holes.contains(h)) {
            return Err(SpecError::UnknownHole(*h));
        }
        Ok(())
    }

    pub fn to_json(&self) -> serde_json::Value {
        let examples: BTreeMap<String, Vec<ExampleJson>> = self
            .examples
            .iter()
            .map(|(h, set)| {
                let mut list: Vec<ExampleJson> = set
                    .iter()
                    .map(|(i, l)| ExampleJson {
                        input: CellJson::from_cell(*i),
                        out: Some(l.iter().map(|c| CellJson::from_cell(*c)).collect()),
                    })
                    .collect();
                list.extend(set.negatives().map(|i| ExampleJson { input: CellJson::from_cell(i), out: None }));
                (h.to_string(), list)
            })
            .collect();
        let targets = match &self.targets {
            Targets::Missing => TargetsJson::Missing,
            Targets::Cells(cs) => TargetsJson::Cells { cells: cs.iter().map(|c| CellJson::from_cell(*c)).collect() },
            Targets::Column(c) => TargetsJson::Column { column: ColJson::Num(*c) },
        };
        serde_json::to_value(SpecJson { sketch: self.sketch.to_string(), examples, targets }).expect("serializable")
    }
}

/// Outcome of per-hole synthesis.
#[derive(Debug, Clone, PartialEq)]
pub struct SpecSynthesis {
    pub bindings: HoleBindings,
    /// Holes for which no program exists.
    pub unsolved: Vec<u32>,
}

impl SpecSynthesis {
    pub fn is_complete(&self) -> bool {
        self.unsolved.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompletionError {
    #[error(transparent)]
    Spec(#[from] SpecError),
    #[error("hole ?{hole}: {source}")]
    Synth { hole: u32, source: SynthError },
}

/// Result of learning one hole.
#[derive(Debug, Clone, PartialEq)]
pub enum HoleOutcome {
    Solved(ExtractorProgram),
    NoProgram,
    Failed(SynthError),
}

/// Learns every hole independently over a shared base automaton, recording
/// failures per hole instead of stopping at the first.
pub fn synthesize_each(
    g: &Grid,
    spec: &CompletionSpec,
    cfg: &SynthConfig,
) -> Result<BTreeMap<u32, HoleOutcome>, CompletionError> {
    spec.check()?;
    let holes = spec.sketch.holes();
    let first = *holes.iter().next().unwrap_or(&0);
    cfg.validate().map_err(|source| CompletionError::Synth { hole: first, source })?;
    let base = build_base(g, cfg.max_conj, cfg.max_predicates)
        .map_err(|e| CompletionError::Synth { hole: first, source: e.into() })?;
    let mut out = BTreeMap::new();
    for h in holes {
        let mut s = Synthesizer::with_base(Arc::clone(&base), cfg.clone());
        let outcome = match s.learn(&spec.examples[&h]) {
            Ok(Some(p)) => HoleOutcome::Solved(p),
            Ok(None) => HoleOutcome::NoProgram,
            Err(e) => HoleOutcome::Failed(e),
        };
        out.insert(h, outcome);
    }
    Ok(out)
}

/// Learns one program per hole; the first hole error aborts.
pub fn synthesize_spec(g: &Grid, spec: &CompletionSpec, cfg: &SynthConfig) -> Result<SpecSynthesis, CompletionError> {
    let mut bindings = HoleBindings::new();
    let mut unsolved = Vec::new();
    for (h, outcome) in synthesize_each(g, spec, cfg)? {
        match outcome {
            HoleOutcome::Solved(p) => {
                bindings.insert(h, p);
            }
            HoleOutcome::NoProgram => unsolved.push(h),
            HoleOutcome::Failed(source) => return Err(CompletionError::Synth { hole: h, source }),
        }
    }
    Ok(SpecSynthesis { bindings, unsolved })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "lowercase")]
pub enum FillOutcome {
    Filled { value: String },
    Bottom,
    Error { message: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fill {
    pub cell: CellRef,
    #[serde(flatten)]
    pub outcome: FillOutcome,
}

/// Evaluates the sketch at every target against the original table; fills
/// never observe each other.
pub fn complete_table(g: &Grid, sketch: &Sketch, targets: &Targets, b: &HoleBindings) -> (Grid, Vec<Fill>) {
    let mut updates = Vec::new();
    let mut report = Vec::new();
    for c in targets.cells(g) {
        let outcome = if !g.contains(c) {
            FillOutcome::Error { message: format!("cell {c} is outside the table") }
        } else {
            match eval_sketch(sketch, b, g, c) {
                Ok(Some(v)) => {
                    updates.push((c, v.clone()));
                    FillOutcome::Filled { value: v }
                }
                Ok(None) => FillOutcome::Bottom,
                Err(e) => FillOutcome::Error { message: e.to_string() },
            }
        };
        report.push(Fill { cell: c, outcome });
    }
    (g.with_values(&updates), report)
}

/// True iff no target still holds the missing marker after completion.
pub fn all_filled(report: &[Fill]) -> bool {
    report.iter().all(|f| matches!(&f.outcome, FillOutcome::Filled { value } if value != MISSING))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_table, Format};
    use crate::lang::parse_program;

    fn c(r: usize, k: usize) -> CellRef {
        CellRef::new(r, k)
    }

    #[test]
    fn parses_sketches() {
        assert_eq!(
            parse_sketch("SUM(?1, 1)").unwrap(),
            Sketch::Func(Func::Sum, vec![Sketch::Hole(1), Sketch::Const("1".into())])
        );
        assert_eq!(parse_sketch("?1").unwrap(), Sketch::Hole(1));
        assert_eq!(parse_sketch("MINUS(?1)").unwrap_err(), SketchError::Arity { func: "MINUS", got: 1 });
        assert_eq!(parse_sketch("FOO(?1)").unwrap_err(), SketchError::UnknownFunction("FOO".into()));
        assert!(matches!(parse_sketch("SUM(?1,").unwrap_err(), SketchError::Syntax { .. }));
        assert!(matches!(parse_sketch("?0").unwrap_err(), SketchError::Syntax { pos: 1, .. }));
        assert!(matches!(parse_sketch("sum(?1)").unwrap_err(), SketchError::UnknownFunction(_)));
        let nested = parse_sketch("SUM(MAX(?1, ?2), 1)").unwrap();
        assert_eq!(nested.holes().into_iter().collect::<Vec<_>>(), vec![1, 2]);
        for text in ["SUM(MAX(?1, ?2), 1)", "CONCAT(?1, \" - \", ?2)", "ID(?3)", "MINUS(SUM(?1), ?2)"] {
            assert_eq!(parse_sketch(text).unwrap().to_string(), text);
        }
    }

    #[test]
    fn example_21_row() {
        let g = parse_table("2,2,?,?,8,?", Format::Csv).unwrap();
        let s = parse_sketch("SUM(?1, 1)").unwrap();
        let p = parse_program(r#"GetCell(x, l, 1, \y.\z. Val(z) != "?")"#).unwrap();
        let b = HoleBindings::from([(1, p)]);
        assert_eq!(eval_sketch(&s, &b, &g, c(1, 3)).unwrap().as_deref(), Some("3"));
        let (out, report) = complete_table(&g, &s, &Targets::Missing, &b);
        assert_eq!(out.to_rows()[0], vec!["2", "2", "3", "3", "8", "9"]);
        assert!(all_filled(&report));
        let (same, empty) = complete_table(&g, &s, &Targets::Cells(vec![]), &b);
        assert_eq!(same, g);
        assert!(empty.is_empty());
    }

    #[test]
    fn reducers() {
        let g = parse_table("10,20,x,2.5", Format::Csv).unwrap();
        let two = parse_program("List(GetCell(x, l, -1, \\y.\\z. True), GetCell(x, l, -2, \\y.\\z. True))").unwrap();
        let right = parse_program("GetCell(x, r, -1, \\y.\\z. True)").unwrap();
        let b = HoleBindings::from([(1, two.clone()), (2, right)]);
        let at = c(1, 3);
        let ev = |s: &str| eval_sketch(&parse_sketch(s).unwrap(), &b, &g, at);
        assert_eq!(ev("AVG(?1)").unwrap().as_deref(), Some("15"));
        assert_eq!(ev("SUM(?1, ?2)").unwrap().as_deref(), Some("32.5"));
        assert_eq!(ev("MAX(?1)").unwrap().as_deref(), Some("20"));
        assert_eq!(ev("MIN(?1, ?2)").unwrap().as_deref(), Some("2.5"));
        assert_eq!(ev("COUNT(?1)").unwrap().as_deref(), Some("2"));
        assert_eq!(ev("CONCAT(?1, \"-\")").unwrap().as_deref(), Some("1020-"));
        assert_eq!(ev("MINUS(?2, 1)").unwrap().as_deref(), Some("1.5"));
        assert_eq!(ev("AVG(7, 8)").unwrap().as_deref(), Some("7.5"));
        assert!(matches!(ev("MINUS(?1, ?2)").unwrap_err(), EvalError::NotSingleton { func: "MINUS", got: 2, .. }));
        assert!(matches!(ev("ID(?1)").unwrap_err(), EvalError::NotSingleton { .. }));
        let self_ref = HoleBindings::from([(1, parse_program("x").unwrap())]);
        let err = eval_sketch(&parse_sketch("SUM(?1)").unwrap(), &self_ref, &g, at).unwrap_err();
        assert_eq!(err, EvalError::NonNumeric { cell: Some(at), value: "x".into() });
        assert_eq!(eval_sketch(&parse_sketch("?9").unwrap(), &b, &g, at).unwrap_err(), EvalError::Unbound(9));
    }

    #[test]
    fn bottom_propagates() {
        let g = parse_table("?,1", Format::Csv).unwrap();
        let p = parse_program(r#"GetCell(x, l, 1, \y.\z. Val(z) != "?")"#).unwrap();
        let b = HoleBindings::from([(1, p)]);
        assert_eq!(eval_sketch(&parse_sketch("SUM(?1, 1)").unwrap(), &b, &g, c(1, 1)).unwrap(), None);
        let (out, report) = complete_table(&g, &parse_sketch("?1").unwrap(), &Targets::Missing, &b);
        assert_eq!(out, g);
        assert_eq!(report[0].outcome, FillOutcome::Bottom);
        assert!(!all_filled(&report));
    }

    #[test]
    fn decimal_format() {
        assert_eq!(format_decimal(Decimal::from_str("14.50").unwrap()), "14.5");
        assert_eq!(format_decimal(Decimal::from_str("3.000").unwrap()), "3");
        assert_eq!(format_decimal(Decimal::from_str("-0.0").unwrap()), "0");
    }

    #[test]
    fn spec_json() {
        let text = r#"{"sketch": "SUM(?1, 1)", "examples": {"1": [{"in": [1,3], "out": [[1,2]]}, {"in": [1,1], "out": null}]}, "targets": {"kind": "missing"}}"#;
        let spec = CompletionSpec::from_json(text).unwrap();
        let e = &spec.examples[&1];
        assert_eq!(e.get(c(1, 3)), Some(&[c(1, 2)][..]));
        assert_eq!(e.negatives().collect::<Vec<_>>(), vec![c(1, 1)]);
        assert_eq!(CompletionSpec::from_value(spec.to_json()).unwrap(), spec);
        let letters = r#"{"sketch": "COUNT(?1)", "examples": {"1": [{"in": [5,"B"], "out": [[3,"B"],[4,"B"]]}]}, "targets": {"kind": "column", "column": "B"}}"#;
        let spec = CompletionSpec::from_json(letters).unwrap();
        assert_eq!(spec.targets, Targets::Column(2));
        assert_eq!(spec.examples[&1].get(c(5, 2)).unwrap().len(), 2);
        let missing = r#"{"sketch": "SUM(?1, ?2)", "examples": {"1": [{"in": [1,3], "out": [[1,2]]}]}}"#;
        assert_eq!(CompletionSpec::from_json(missing).unwrap_err(), SpecError::HoleWithoutExamples(2));
        let extra = r#"{"sketch": "?1", "examples": {"1": [{"in": [1,3], "out": [[1,2]]}], "2": [{"in": [1,1], "out": [[1,2]]}]}}"#;
        assert_eq!(CompletionSpec::from_json(extra).unwrap_err(), SpecError::UnknownHole(2));
        assert!(matches!(CompletionSpec::from_json("{").unwrap_err(), SpecError::Json(_)));
        let cells = r#"{"sketch": "?1", "examples": {"1": [{"in": [1,3], "out": [[1,2]]}]}, "targets": {"kind": "cells", "cells": [[1,3],[1,"E"]]}}"#;
        assert_eq!(CompletionSpec::from_json(cells).unwrap().targets, Targets::Cells(vec![c(1, 3), c(1, 5)]));
    }

    #[test]
    fn synthesizes_example_21() {
        let g = parse_table("2,2,?,?,8,?", Format::Csv).unwrap();
        let text = r#"{"sketch": "SUM(?1, 1)", "examples": {"1": [{"in": [1,3], "out": [[1,2]]}, {"in": [1,4], "out": [[1,2]]}, {"in": [1,6], "out": [[1,5]]}]}}"#;
        let spec = CompletionSpec::from_json(text).unwrap();
        let res = synthesize_spec(&g, &spec, &SynthConfig::default()).unwrap();
        assert!(res.is_complete());
        let (out, _) = complete_table(&g, &spec.sketch, &spec.targets, &res.bindings);
        assert_eq!(out.to_rows()[0], vec!["2", "2", "3", "3", "8", "9"]);
    }
}
