//! Bottom-up finite tree automata over simple programs.
//!
//! A [`BaseFta`] holds the `GetCell` transitions of one table, computed lazily
//! per (cell, direction). An [`Fta`] adds example constraints on top of a base:
//! one component per example, with states being tuples of per-component states.

mod rank;

use std::collections::{HashMap, HashSet, VecDeque};
use std::fmt::Write as _;
use std::sync::{Arc, OnceLock};

use thiserror::Error;

use crate::grid::{CellRef, Direction, Grid};
use crate::lang::{CellProg, Predicate, SimpleProg, K_VALUES};
use crate::preds::{build_predicates, PredicateUniverse, PredsError};

pub use rank::Ranked;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum FtaState {
    Cell(CellRef),
    QBottom,
    QStar,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum FtaSymbol {
    X,
    GetCell(Direction, i8, Predicate),
    Filter(Predicate),
    List(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FtaError {
    #[error("output has {got} cells but the automaton arity is {expected}")]
    ArityMismatch { expected: i32, got: usize },
    #[error("cell {0} is outside the table")]
    OutOfRange(CellRef),
    #[error("automata over different tables or arities cannot be intersected")]
    Incompatible,
    #[error(transparent)]
    Preds(#[from] PredsError),
}

pub(crate) fn kpos(k: i8) -> Option<usize> {
    K_VALUES.iter().position(|x| *x == k)
}

fn dir_index(d: Direction) -> usize {
    match d {
        Direction::U => 0,
        Direction::D => 1,
        Direction::L => 2,
        Direction::R => 3,
    }
}

/// `GetCell` behaviour of every predicate from one cell in one direction,
/// with predicates grouped by identical targets.
pub(crate) struct DirTable {
    pub class_of: Vec<u32>,
    pub classes: Vec<[u32; 6]>,
}

pub struct BaseFta {
    grid: Grid,
    universe: PredicateUniverse,
    tables: Vec<[OnceLock<DirTable>; 4]>,
}

/// Builds the predicate universe and the base automaton for a table.
pub fn build_base(g: &Grid, max_conj: usize, max_predicates: usize) -> Result<Arc<BaseFta>, FtaError> {
    let u = build_predicates(g, max_conj, max_predicates)?;
    Ok(Arc::new(BaseFta::new(g.clone(), u)))
}

impl BaseFta {
    pub fn new(grid: Grid, universe: PredicateUniverse) -> BaseFta {
        let m = grid.rows() * grid.cols();
        let tables = (0..m).map(|_| Default::default()).collect();
        BaseFta { grid, universe, tables }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn universe(&self) -> &PredicateUniverse {
        &self.universe
    }

    pub(crate) fn bottom(&self) -> u32 {
        (self.grid.rows() * self.grid.cols()) as u32
    }

    pub(crate) fn index(&self, c: CellRef) -> u32 {
        ((c.row - 1) * self.grid.cols() + c.col - 1) as u32
    }

    pub(crate) fn cell(&self, s: u32) -> CellRef {
        let cols = self.grid.cols();
        CellRef::new(s as usize / cols + 1, s as usize % cols + 1)
    }

    pub(crate) fn state(&self, s: u32) -> FtaState {
        if s == self.bottom() {
            FtaState::QBottom
        } else {
            FtaState::Cell(self.cell(s))
        }
    }

    pub(crate) fn table(&self, s: u32, dir: Direction) -> &DirTable {
        self.tables[s as usize][dir_index(dir)].get_or_init(|| self.compute_table(s, dir))
    }

    fn compute_table(&self, s: u32, dir: Direction) -> DirTable {
        let c = self.cell(s);
        let walk = self.grid.walk(c, dir);
        let atoms = self.universe.atoms();
        let truth: Vec<Vec<bool>> =
            walk.iter().map(|z| atoms.iter().map(|a| a.eval(&self.grid, c, *z)).collect()).collect();
        let widx: Vec<u32> = walk.iter().map(|z| self.index(*z)).collect();
        let bottom = self.bottom();
        let mut map: HashMap<[u32; 6], u32> = HashMap::new();
        let mut classes = Vec::new();
        let mut class_of = Vec::with_capacity(self.universe.len());
        let mut hits: Vec<usize> = Vec::new();
        for p in 0..self.universe.len() {
            hits.clear();
            let conj = self.universe.conjuncts(p);
            for (i, t) in truth.iter().enumerate() {
                if conj.iter().all(|a| t[*a as usize]) {
                    hits.push(i);
                }
            }
            let mut key = [bottom; 6];
            for (j, k) in K_VALUES.iter().enumerate() {
                let n = k.unsigned_abs() as usize;
                if n <= hits.len() {
                    let i = if *k > 0 { hits[n - 1] } else { hits[hits.len() - n] };
                    key[j] = widx[i];
                }
            }
            let id = *map.entry(key).or_insert_with(|| {
                classes.push(key);
                (classes.len() - 1) as u32
            });
            class_of.push(id);
        }
        DirTable { class_of, classes }
    }

    /// Target of `GetCell(dir, K_VALUES[kp], p)` applied to state `s`.
    pub(crate) fn step(&self, s: u32, dir: Direction, kp: usize, p: usize) -> u32 {
        if s == self.bottom() {
            return s;
        }
        let t = self.table(s, dir);
        t.classes[t.class_of[p] as usize][kp]
    }

    /// Public form of the base `GetCell` transition relation.
    pub fn get_cell_target(&self, from: FtaState, dir: Direction, k: i8, pred: &Predicate) -> Option<FtaState> {
        let p = self.universe.index_of(pred)?;
        let kp = kpos(k)?;
        let s = match from {
            FtaState::Cell(c) if self.grid.contains(c) => self.index(c),
            FtaState::QBottom => self.bottom(),
            _ => return None,
        };
        Some(self.state(self.step(s, dir, kp, p)))
    }

    pub(crate) fn filter_holds(&self, y: CellRef, z: CellRef, p: usize) -> bool {
        self.universe.predicates()[p].eval(&self.grid, y, z)
    }
}

/// One example constraint: `input ↦ output`, with `None` requiring ⊥.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Component {
    pub input: CellRef,
    pub output: Option<Vec<CellRef>>,
}

#[derive(Clone)]
pub struct Fta {
    base: Arc<BaseFta>,
    t: i32,
    list: bool,
    filter: bool,
    comps: Vec<Component>,
}

/// Automaton accepting exactly the simple programs mapping `input` to `output`.
pub fn build_fta(
    base: &Arc<BaseFta>,
    input: CellRef,
    output: Option<&[CellRef]>,
    t: i32,
) -> Result<Fta, FtaError> {
    let g = base.grid();
    if !g.contains(input) {
        return Err(FtaError::OutOfRange(input));
    }
    if t < -1 {
        return Err(FtaError::ArityMismatch { expected: t, got: output.map_or(0, <[_]>::len) });
    }
    if let Some(l) = output {
        if let Some(c) = l.iter().find(|c| !g.contains(**c)) {
            return Err(FtaError::OutOfRange(*c));
        }
        if t >= 0 && l.len() != t as usize {
            return Err(FtaError::ArityMismatch { expected: t, got: l.len() });
        }
    }
    Ok(Fta {
        base: base.clone(),
        t,
        list: true,
        filter: true,
        comps: vec![Component { input, output: output.map(<[_]>::to_vec) }],
    })
}

pub fn intersect(a: &Fta, b: &Fta) -> Result<Fta, FtaError> {
    if !Arc::ptr_eq(&a.base, &b.base) || a.t != b.t {
        return Err(FtaError::Incompatible);
    }
    let mut comps: Vec<Component> = a.comps.iter().chain(&b.comps).cloned().collect();
    comps.sort();
    comps.dedup();
    Ok(Fta { base: a.base.clone(), t: a.t, list: a.list && b.list, filter: a.filter && b.filter, comps })
}

impl Fta {
    /// Restricts the final-symbol alphabet.
    pub fn with_constructs(mut self, list: bool, filter: bool) -> Fta {
        self.list = list;
        self.filter = filter;
        self
    }

    pub fn base(&self) -> &Arc<BaseFta> {
        &self.base
    }

    pub fn arity(&self) -> i32 {
        self.t
    }

    pub fn components(&self) -> &[Component] {
        &self.comps
    }

    pub(crate) fn list_enabled(&self) -> bool {
        self.list && self.t >= 1
    }

    pub(crate) fn filter_enabled(&self) -> bool {
        self.filter
    }

    pub(crate) fn init(&self) -> Vec<u32> {
        self.comps.iter().map(|c| self.base.index(c.input)).collect()
    }

    fn run(&self, t: &CellProg, cap: usize) -> Option<Vec<u32>> {
        if t.depth() > cap {
            return None;
        }
        match t {
            CellProg::X => Some(self.init()),
            CellProg::GetCell { inner, dir, k, pred } => {
                let p = self.base.universe.index_of(pred)?;
                let kp = kpos(*k)?;
                let s = self.run(inner, cap)?;
                Some(s.iter().map(|x| self.base.step(*x, *dir, kp, p)).collect())
            }
        }
    }

    pub(crate) fn list_final(&self, args: &[&[u32]]) -> bool {
        if !self.list_enabled() || args.len() != self.t as usize {
            return false;
        }
        let bottom = self.base.bottom();
        self.comps.iter().enumerate().all(|(e, comp)| match &comp.output {
            Some(l) => args.iter().zip(l).all(|(a, o)| a[e] == self.base.index(*o)),
            None => args.iter().any(|a| a[e] == bottom),
        })
    }

    pub(crate) fn filter_final(&self, s1: &[u32], s2: &[u32], s3: &[u32], p: usize) -> bool {
        if !self.filter {
            return false;
        }
        let bottom = self.base.bottom();
        let g = self.base.grid();
        self.comps.iter().enumerate().all(|(e, comp)| {
            let any_bottom = s1[e] == bottom || s2[e] == bottom || s3[e] == bottom;
            let range = if any_bottom {
                None
            } else {
                g.line_range(self.base.cell(s2[e]), self.base.cell(s3[e])).ok()
            };
            match (&comp.output, range) {
                (None, r) => r.is_none(),
                (Some(_), None) => false,
                (Some(l), Some(r)) => {
                    let y = self.base.cell(s1[e]);
                    r.into_iter().filter(|z| self.base.filter_holds(y, *z, p)).eq(l.iter().copied())
                }
            }
        })
    }

    /// Runs the program tree bottom-up; `GetCell` chains deeper than `cap` are rejected.
    pub fn accepts(&self, prog: &SimpleProg, cap: usize) -> bool {
        match prog {
            SimpleProg::List(cs) => {
                let states: Option<Vec<Vec<u32>>> = cs.iter().map(|c| self.run(c, cap)).collect();
                match states {
                    Some(st) => self.list_final(&st.iter().map(Vec::as_slice).collect::<Vec<_>>()),
                    None => false,
                }
            }
            SimpleProg::Filter { src, from, to, pred } => {
                let Some(p) = self.base.universe.index_of(pred) else { return false };
                match (self.run(src, cap), self.run(from, cap), self.run(to, cap)) {
                    (Some(a), Some(b), Some(c)) => self.filter_final(&a, &b, &c, p),
                    _ => false,
                }
            }
        }
    }

    fn encode(&self, s: &[FtaState]) -> Option<Vec<u32>> {
        if s.len() != self.comps.len() {
            return None;
        }
        s.iter()
            .map(|x| match x {
                FtaState::Cell(c) if self.base.grid.contains(*c) => Some(self.base.index(*c)),
                FtaState::QBottom => Some(self.base.bottom()),
                _ => None,
            })
            .collect()
    }

    /// Target of a transition, or `None` when the automaton has no such transition.
    /// States of an automaton with several components are tuples, one entry per component.
    pub fn target(&self, sym: &FtaSymbol, args: &[Vec<FtaState>]) -> Option<Vec<FtaState>> {
        let enc: Option<Vec<Vec<u32>>> = args.iter().map(|a| self.encode(a)).collect();
        let enc = enc?;
        let star = vec![FtaState::QStar];
        match sym {
            FtaSymbol::X if args.is_empty() => {
                Some(self.init().iter().map(|s| self.base.state(*s)).collect())
            }
            FtaSymbol::GetCell(dir, k, pred) if enc.len() == 1 => {
                let p = self.base.universe.index_of(pred)?;
                let kp = kpos(*k)?;
                Some(enc[0].iter().map(|s| self.base.state(self.base.step(*s, *dir, kp, p))).collect())
            }
            FtaSymbol::List(n) if *n == enc.len() => {
                let refs: Vec<&[u32]> = enc.iter().map(Vec::as_slice).collect();
                self.list_final(&refs).then_some(star)
            }
            FtaSymbol::Filter(pred) if enc.len() == 3 => {
                let p = self.base.universe.index_of(pred)?;
                self.filter_final(&enc[0], &enc[1], &enc[2], p).then_some(star)
            }
            _ => None,
        }
    }

    /// All state tuples reachable through `x` and `GetCell`, with no depth limit.
    pub(crate) fn reachable(&self) -> Vec<Vec<u32>> {
        let mut seen: HashSet<Vec<u32>> = HashSet::new();
        let mut order = Vec::new();
        let mut queue = VecDeque::new();
        let init = self.init();
        seen.insert(init.clone());
        queue.push_back(init);
        while let Some(s) = queue.pop_front() {
            for dg in rank::expand(self, &s) {
                for tgt in dg.targets.into_iter().flatten() {
                    if seen.insert(tgt.clone()) {
                        queue.push_back(tgt);
                    }
                }
            }
            order.push(s);
        }
        order.sort();
        order
    }

    fn label(&self, s: &[u32]) -> String {
        let one = |x: u32| match self.base.state(x) {
            FtaState::Cell(c) => format!("({},{})", c.row, c.col),
            _ => "bot".to_string(),
        };
        if s.len() == 1 {
            match self.base.state(s[0]) {
                FtaState::Cell(c) => format!("q({},{})", c.row, c.col),
                _ => "q_bot".to_string(),
            }
        } else {
            format!("q[{}]", s.iter().map(|x| one(*x)).collect::<Vec<_>>().join(";"))
        }
    }

    /// Line-oriented listing of the transitions over reachable states, sorted.
    pub fn dump(&self) -> String {
        let reach = self.reachable();
        let u = self.base.universe();
        let mut lines: Vec<String> = vec![format!("x -> {}", self.label(&self.init()))];
        for s in &reach {
            for dir in Direction::ALL {
                for (kp, k) in K_VALUES.iter().enumerate() {
                    for p in 0..u.len() {
                        let tgt: Vec<u32> = s.iter().map(|x| self.base.step(*x, dir, kp, p)).collect();
                        lines.push(format!(
                            "GetCell_{{{dir},{k},{}}}({}) -> {}",
                            u.body(p),
                            self.label(s),
                            self.label(&tgt)
                        ));
                    }
                }
            }
        }
        let all_negative = self.comps.iter().all(|c| c.output.is_none());
        if all_negative {
            if self.list_enabled() {
                lines.push(format!("List_{}(...) -> q* when some argument is q_bot and none is q*", self.t));
            }
            if self.filter {
                lines.push(
                    "Filter_{*}(...) -> q* when some argument is q_bot and none is q*, \
                     or arguments 2 and 3 are not on one line"
                        .to_string(),
                );
            }
        } else {
            if self.list_enabled() {
                let mut tuple = Vec::new();
                self.dump_lists(&reach, &mut tuple, &mut lines);
            }
            if self.filter {
                for a in &reach {
                    for b in &reach {
                        for c in &reach {
                            for p in 0..u.len() {
                                if self.filter_final(a, b, c, p) {
                                    lines.push(format!(
                                        "Filter_{{{}}}({}, {}, {}) -> q*",
                                        u.body(p),
                                        self.label(a),
                                        self.label(b),
                                        self.label(c)
                                    ));
                                }
                            }
                        }
                    }
                }
            }
        }
        lines.sort();
        lines.dedup();
        let mut out = String::new();
        for l in lines {
            let _ = writeln!(out, "{l}");
        }
        out
    }

    fn dump_lists<'a>(&self, reach: &'a [Vec<u32>], tuple: &mut Vec<&'a [u32]>, out: &mut Vec<String>) {
        if tuple.len() == self.t as usize {
            if self.list_final(tuple) {
                let args: Vec<String> = tuple.iter().map(|s| self.label(s)).collect();
                out.push(format!("List({}) -> q*", args.join(", ")));
            }
            return;
        }
        let j = tuple.len();
        for s in reach {
            let matches = self.comps.iter().enumerate().all(|(e, comp)| match &comp.output {
                Some(l) => s[e] == self.base.index(l[j]),
                None => true,
            });
            if matches {
                tuple.push(s);
                self.dump_lists(reach, tuple, out);
                tuple.pop();
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{parse_table, Format};
    use crate::lang::{parse_predicate, parse_program, Atom, Mapper};
    use crate::preds::DEFAULT_MAX_PREDICATES;

    fn c(r: usize, k: usize) -> CellRef {
        CellRef::new(r, k)
    }

    fn base62(max_conj: usize) -> Arc<BaseFta> {
        build_base(&parse_table("4,5\n6,?", Format::Csv).unwrap(), max_conj, DEFAULT_MAX_PREDICATES).unwrap()
    }

    fn simple(text: &str) -> SimpleProg {
        parse_program(text).unwrap().branches()[0].clone()
    }

    #[test]
    fn base_transitions() {
        let b = base62(2);
        let t = Predicate::truth();
        assert_eq!(
            b.get_cell_target(FtaState::Cell(c(2, 2)), Direction::U, 2, &t),
            Some(FtaState::Cell(c(1, 2)))
        );
        assert_eq!(b.get_cell_target(FtaState::Cell(c(2, 1)), Direction::U, 3, &t), Some(FtaState::QBottom));
        for p in b.universe().predicates() {
            for d in Direction::ALL {
                for k in K_VALUES {
                    assert_eq!(b.get_cell_target(FtaState::QBottom, d, k, p), Some(FtaState::QBottom));
                }
            }
        }
    }

    #[test]
    fn example_62_transitions() {
        let b = base62(2);
        let a = build_fta(&b, c(2, 2), Some(&[c(1, 2)]), 1).unwrap();
        let q = |r, k| vec![FtaState::Cell(c(r, k))];
        assert_eq!(a.target(&FtaSymbol::X, &[]), Some(q(2, 2)));
        assert_eq!(
            a.target(&FtaSymbol::GetCell(Direction::U, 2, Predicate::truth()), &[q(2, 2)]),
            Some(q(1, 2))
        );
        assert_eq!(a.target(&FtaSymbol::List(1), &[q(1, 2)]), Some(vec![FtaState::QStar]));
        let ne = Predicate::atom(Atom::NeqConst(Mapper::Identity, "?".into()));
        assert_eq!(
            a.target(&FtaSymbol::Filter(ne), &[q(2, 2), q(1, 2), q(2, 2)]),
            Some(vec![FtaState::QStar])
        );
        assert_eq!(a.target(&FtaSymbol::List(1), &[q(2, 2)]), None);
    }

    #[test]
    fn example_62_dump_lines() {
        let b = base62(1);
        let a = build_fta(&b, c(2, 2), Some(&[c(1, 2)]), 1).unwrap();
        let d = a.dump();
        for line in [
            "x -> q(2,2)",
            "GetCell_{u,2,True}(q(2,2)) -> q(1,2)",
            "List(q(1,2)) -> q*",
            "Filter_{Val(z) != \"?\"}(q(2,2), q(1,2), q(2,2)) -> q*",
        ] {
            assert!(d.lines().any(|l| l == line), "missing {line}");
        }
        assert_eq!(d, a.dump());
    }

    #[test]
    fn example_62_accepts_programs() {
        let b = base62(2);
        let a = build_fta(&b, c(2, 2), Some(&[c(1, 2)]), 1).unwrap();
        for text in [
            r#"List(GetCell(x, u, 2, \y.\z. True))"#,
            r#"List(GetCell(x, u, 1, \y.\z. Val(z) != "?"))"#,
            r#"Filter(x, GetCell(x, u, -1, \y.\z. True), GetCell(x, d, -1, \y.\z. True), \y.\z. Val(z) != "?")"#,
        ] {
            assert!(a.accepts(&simple(text), 4), "{text}");
        }
        assert!(!a.accepts(&simple("x"), 4));
    }

    #[test]
    fn negative_guard() {
        let b = base62(1);
        let a = build_fta(&b, c(2, 2), None, 1).unwrap();
        assert_eq!(a.target(&FtaSymbol::List(1), &[vec![FtaState::QBottom]]), Some(vec![FtaState::QStar]));
        for cell in b.grid().cells() {
            assert_eq!(a.target(&FtaSymbol::List(1), &[vec![FtaState::Cell(cell)]]), None);
        }
        assert!(!a.accepts(&simple(r#"GetCell(x, d, 1, \y.\z. True)"#), 4));
        assert!(a.accepts(&simple(r#"GetCell(x, d, 2, \y.\z. True)"#), 4));
    }

    #[test]
    fn no_filter_for_scattered_outputs() {
        let g = parse_table("a,b\nc,d", Format::Csv).unwrap();
        let b = build_base(&g, 1, DEFAULT_MAX_PREDICATES).unwrap();
        let a = build_fta(&b, c(1, 1), Some(&[c(1, 1), c(2, 2)]), 2).unwrap();
        assert!(!a.dump().lines().any(|l| l.starts_with("Filter")));
    }

    #[test]
    fn arity_checked() {
        let b = base62(1);
        assert_eq!(
            build_fta(&b, c(2, 2), Some(&[c(1, 2)]), 2).err(),
            Some(FtaError::ArityMismatch { expected: 2, got: 1 })
        );
        assert!(build_fta(&b, c(3, 3), None, 1).is_err());
    }

    #[test]
    fn depth_cap_in_accepts() {
        let b = base62(1);
        let a = build_fta(&b, c(2, 2), Some(&[c(2, 2)]), 1).unwrap();
        let t = parse_predicate(r"\y.\z. True").unwrap();
        let mut prog = CellProg::X;
        for _ in 0..5 {
            prog = CellProg::get_cell(prog, Direction::U, 1, t.clone());
        }
        let p = SimpleProg::List(vec![prog]);
        assert!(a.accepts(&p, 5));
        assert!(!a.accepts(&p, 4));
    }
}
