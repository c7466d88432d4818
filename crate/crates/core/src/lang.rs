//! The cell-extraction DSL: AST, evaluator, and concrete syntax (see [`syntax`]).

pub mod syntax;

use std::fmt;

use crate::grid::{CellRef, Direction, Grid, MISSING};

pub use syntax::{parse_cellprog, parse_predicate, parse_program, parse_program_capped, ParseError};

/// Default limit on nested `GetCell` constructs.
pub const DEFAULT_DEPTH_CAP: usize = 4;

/// Admissible `k` values, in the order used for enumeration.
pub const K_VALUES: [i8; 6] = [1, 2, 3, -1, -2, -3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Mapper {
    Identity,
    SetRow(usize),
    SetCol(usize),
}

impl Mapper {
    pub fn apply(self, c: CellRef) -> CellRef {
        match self {
            Mapper::Identity => c,
            Mapper::SetRow(k) => CellRef::new(k, c.col),
            Mapper::SetCol(k) => CellRef::new(c.row, k),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Atom {
    True,
    EqConst(Mapper, String),
    NeqConst(Mapper, String),
    EqCells(Mapper),
}

impl Atom {
    pub fn eval(&self, g: &Grid, y: CellRef, z: CellRef) -> bool {
        match self {
            Atom::True => true,
            Atom::EqConst(m, s) => match g.value_at(m.apply(z)).value() {
                None => false,
                Some(v) if s == MISSING => v == MISSING,
                Some(v) => v != MISSING && v == s,
            },
            Atom::NeqConst(m, s) => match g.value_at(m.apply(z)).value() {
                None => false,
                Some(v) if s == MISSING => v != MISSING,
                Some(v) => v != MISSING && v != s,
            },
            Atom::EqCells(m) => {
                match (g.value_at(m.apply(y)).value(), g.value_at(m.apply(z)).value()) {
                    (Some(a), Some(b)) => a != MISSING && b != MISSING && a == b,
                    _ => false,
                }
            }
        }
    }

    pub fn uses_y(&self) -> bool {
        matches!(self, Atom::EqCells(_))
    }

    pub fn mapper(&self) -> Option<Mapper> {
        match self {
            Atom::True => None,
            Atom::EqConst(m, _) | Atom::NeqConst(m, _) | Atom::EqCells(m) => Some(*m),
        }
    }
}

/// Canonical conjunction of atoms.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Predicate(Vec<Atom>);

impl Predicate {
    pub fn new(mut atoms: Vec<Atom>) -> Predicate {
        atoms.sort();
        atoms.dedup();
        if atoms.len() > 1 {
            atoms.retain(|a| *a != Atom::True);
        }
        if atoms.is_empty() {
            atoms.push(Atom::True);
        }
        Predicate(atoms)
    }

    pub fn truth() -> Predicate {
        Predicate(vec![Atom::True])
    }

    pub fn atom(a: Atom) -> Predicate {
        Predicate::new(vec![a])
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.0
    }

    pub fn is_true(&self) -> bool {
        self.0 == [Atom::True]
    }

    pub fn uses_y(&self) -> bool {
        self.0.iter().any(Atom::uses_y)
    }

    pub fn eval(&self, g: &Grid, y: CellRef, z: CellRef) -> bool {
        self.0.iter().all(|a| a.eval(g, y, z))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CellProg {
    X,
    GetCell { inner: Box<CellProg>, dir: Direction, k: i8, pred: Predicate },
}

impl CellProg {
    pub fn get_cell(inner: CellProg, dir: Direction, k: i8, pred: Predicate) -> CellProg {
        CellProg::GetCell { inner: Box::new(inner), dir, k, pred }
    }

    /// Number of nested `GetCell` constructs.
    pub fn depth(&self) -> usize {
        match self {
            CellProg::X => 0,
            CellProg::GetCell { inner, .. } => inner.depth() + 1,
        }
    }

    pub fn size(&self) -> usize {
        self.depth() + 1
    }

    pub fn eval(&self, g: &Grid, x: CellRef) -> Option<CellRef> {
        match self {
            CellProg::X => g.contains(x).then_some(x),
            CellProg::GetCell { inner, dir, k, pred } => {
                let c = inner.eval(g, x)?;
                select(g, c, *dir, *k, pred)
            }
        }
    }
}

/// The `k`-th cell from `c` (inclusive) in `dir` satisfying `pred` with `y = c`.
pub fn select(g: &Grid, c: CellRef, dir: Direction, k: i8, pred: &Predicate) -> Option<CellRef> {
    let hits: Vec<CellRef> = g.walk(c, dir).into_iter().filter(|z| pred.eval(g, c, *z)).collect();
    let n = k.unsigned_abs() as usize;
    if n == 0 || n > hits.len() {
        return None;
    }
    if k > 0 {
        Some(hits[n - 1])
    } else {
        Some(hits[hits.len() - n])
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SimpleProg {
    List(Vec<CellProg>),
    Filter { src: CellProg, from: CellProg, to: CellProg, pred: Predicate },
}

impl SimpleProg {
    pub fn size(&self) -> usize {
        match self {
            SimpleProg::List(cs) => 1 + cs.iter().map(CellProg::size).sum::<usize>(),
            SimpleProg::Filter { src, from, to, .. } => 1 + src.size() + from.size() + to.size(),
        }
    }

    pub fn max_depth(&self) -> usize {
        match self {
            SimpleProg::List(cs) => cs.iter().map(CellProg::depth).max().unwrap_or(0),
            SimpleProg::Filter { src, from, to, .. } => src.depth().max(from.depth()).max(to.depth()),
        }
    }

    pub fn eval(&self, g: &Grid, x: CellRef) -> ExtractResult {
        match self {
            SimpleProg::List(cs) => cs.iter().map(|c| c.eval(g, x)).collect(),
            SimpleProg::Filter { src, from, to, pred } => {
                let y = src.eval(g, x)?;
                let a = from.eval(g, x)?;
                let b = to.eval(g, x)?;
                let range = g.line_range(a, b).ok()?;
                Some(range.into_iter().filter(|z| pred.eval(g, y, *z)).collect())
            }
        }
    }
}

/// `Cells` is `Some`, `Bottom` is `None`.
pub type ExtractResult = Option<Vec<CellRef>>;

/// A `Seq` chain flattened into its branches.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ExtractorProgram {
    branches: Vec<SimpleProg>,
}

impl ExtractorProgram {
    /// Panics on an empty branch list.
    pub fn new(branches: Vec<SimpleProg>) -> ExtractorProgram {
        assert!(!branches.is_empty(), "extractor needs at least one branch");
        ExtractorProgram { branches }
    }

    pub fn simple(p: SimpleProg) -> ExtractorProgram {
        ExtractorProgram { branches: vec![p] }
    }

    pub fn branches(&self) -> &[SimpleProg] {
        &self.branches
    }

    pub fn max_depth(&self) -> usize {
        self.branches.iter().map(SimpleProg::max_depth).max().unwrap_or(0)
    }

    pub fn eval(&self, g: &Grid, x: CellRef) -> ExtractResult {
        if !g.contains(x) {
            return None;
        }
        self.branches.iter().find_map(|b| b.eval(g, x))
    }
}

impl From<SimpleProg> for ExtractorProgram {
    fn from(p: SimpleProg) -> Self {
        ExtractorProgram::simple(p)
    }
}

impl fmt::Display for Mapper {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_mapper(f, *self, 'z')
    }
}

fn fmt_mapper(f: &mut fmt::Formatter<'_>, m: Mapper, v: char) -> fmt::Result {
    match m {
        Mapper::Identity => write!(f, "{v}"),
        Mapper::SetRow(k) => write!(f, "({k}, col({v}))"),
        Mapper::SetCol(k) => write!(f, "(row({v}), {k})"),
    }
}

fn fmt_str(f: &mut fmt::Formatter<'_>, s: &str) -> fmt::Result {
    f.write_str("\"")?;
    for ch in s.chars() {
        match ch {
            '"' => f.write_str("\\\"")?,
            '\\' => f.write_str("\\\\")?,
            c => write!(f, "{c}")?,
        }
    }
    f.write_str("\"")
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::True => f.write_str("True"),
            Atom::EqConst(m, s) | Atom::NeqConst(m, s) => {
                f.write_str("Val(")?;
                fmt_mapper(f, *m, 'z')?;
                f.write_str(if matches!(self, Atom::EqConst(..)) { ") == " } else { ") != " })?;
                fmt_str(f, s)
            }
            Atom::EqCells(m) => {
                f.write_str("Val(")?;
                fmt_mapper(f, *m, 'y')?;
                f.write_str(") == Val(")?;
                fmt_mapper(f, *m, 'z')?;
                f.write_str(")")
            }
        }
    }
}

impl Predicate {
    /// The conjunction without the lambda binder.
    pub fn body(&self) -> String {
        self.0.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(" && ")
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "\\y.\\z. {}", self.body())
    }
}

impl fmt::Display for CellProg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CellProg::X => f.write_str("x"),
            CellProg::GetCell { inner, dir, k, pred } => {
                write!(f, "GetCell({inner}, {dir}, {k}, {pred})")
            }
        }
    }
}

impl fmt::Display for SimpleProg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimpleProg::List(cs) if cs.len() == 1 => write!(f, "{}", cs[0]),
            SimpleProg::List(cs) => {
                f.write_str("List(")?;
                for (i, c) in cs.iter().enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
            SimpleProg::Filter { src, from, to, pred } => {
                write!(f, "Filter({src}, {from}, {to}, {pred})")
            }
        }
    }
}

impl fmt::Display for ExtractorProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.branches.len();
        for b in &self.branches[..n - 1] {
            write!(f, "Seq({b}, ")?;
        }
        write!(f, "{}", self.branches[n - 1])?;
        for _ in 1..n {
            f.write_str(")")?;
        }
        Ok(())
    }
}
