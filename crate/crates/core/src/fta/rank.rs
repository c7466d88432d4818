//! Best-program extraction: minimum tree size, then maximum θ, then smallest
//! printed text. Cell programs are built layer by layer, one layer per
//! `GetCell` nesting depth, keeping the best program per state tuple.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use super::{Fta, K_VALUES};
use crate::deadline::{Deadline, Timeout};
use crate::grid::Direction;
use crate::lang::{CellProg, SimpleProg};
use crate::score::ScoreConfig;

#[derive(Debug, Clone, PartialEq)]
pub struct Ranked {
    pub program: SimpleProg,
    pub theta: f64,
    pub size: usize,
}

/// Predicates grouped by identical behaviour from one state tuple in one direction.
pub(crate) struct DirGroups {
    pub dir: Direction,
    pub group_of: Vec<u32>,
    /// Per group, the target tuple for each entry of `K_VALUES`.
    pub targets: Vec<[Vec<u32>; 6]>,
}

pub(crate) fn expand(fta: &Fta, s: &[u32]) -> Vec<DirGroups> {
    let base = &fta.base;
    let bottom = base.bottom();
    let np = base.universe().len();
    let mut out = Vec::with_capacity(4);
    for dir in Direction::ALL {
        let mut group_of = vec![0u32; np];
        let mut ngroups = 1usize;
        let mut first = true;
        for x in s {
            if *x == bottom {
                continue;
            }
            let tab = base.table(*x, dir);
            if first {
                group_of.copy_from_slice(&tab.class_of);
                ngroups = tab.classes.len();
                first = false;
                continue;
            }
            let mut map: HashMap<(u32, u32), u32> = HashMap::new();
            for (g, c) in group_of.iter_mut().zip(&tab.class_of) {
                let next = map.len() as u32;
                *g = *map.entry((*g, *c)).or_insert(next);
            }
            ngroups = map.len();
        }
        let mut rep = vec![usize::MAX; ngroups];
        for (p, g) in group_of.iter().enumerate() {
            if rep[*g as usize] == usize::MAX {
                rep[*g as usize] = p;
            }
        }
        let targets = rep
            .iter()
            .map(|p| {
                std::array::from_fn(|kp| s.iter().map(|x| base.step(*x, dir, kp, *p)).collect())
            })
            .collect();
        out.push(DirGroups { dir, group_of, targets });
    }
    out
}

struct Entry {
    state: u32,
    theta: f64,
    prog: CellProg,
    text: Rc<str>,
}

#[derive(Default)]
struct Interner {
    map: HashMap<Vec<u32>, u32>,
    states: Vec<Vec<u32>>,
}

impl Interner {
    fn id(&mut self, s: Vec<u32>) -> u32 {
        if let Some(i) = self.map.get(&s) {
            return *i;
        }
        let i = self.states.len() as u32;
        self.states.push(s.clone());
        self.map.insert(s, i);
        i
    }
}

struct Final {
    size: usize,
    theta: f64,
    text: String,
    program: SimpleProg,
}

fn better(a_size: usize, a_theta: f64, b_size: usize, b_theta: f64) -> Ordering {
    a_size.cmp(&b_size).then_with(|| b_theta.partial_cmp(&a_theta).unwrap_or(Ordering::Equal))
}

fn keep_best(slot: &mut Option<Final>, cand: Final) {
    let replace = match slot {
        None => true,
        Some(cur) => better(cand.size, cand.theta, cur.size, cur.theta)
            .then_with(|| cand.text.cmp(&cur.text))
            == Ordering::Less,
    };
    if replace {
        *slot = Some(cand);
    }
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(n: usize) -> Bits {
        Bits(vec![0; n.div_ceil(64)])
    }
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&mut self, o: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&o.0) {
            *a &= b;
        }
    }
    fn first(&self) -> Option<usize> {
        self.0.iter().enumerate().find(|(_, w)| **w != 0).map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Memoized `pair` result: valid predicates and the negatives sent to ⊥.
type PairEntry = Option<(Rc<Bits>, u64)>;

struct Ctx<'a> {
    fta: &'a Fta,
    score: &'a ScoreConfig,
    pred_theta: Vec<f64>,
    k_theta: [f64; 6],
    interner: Interner,
    pos: Vec<usize>,
    neg: Vec<usize>,
    yfree_memo: HashMap<(usize, u32, u32), Option<Rc<Bits>>>,
    ydep_memo: HashMap<(usize, u32, u32, u32), Rc<Bits>>,
    pair_memo: HashMap<(u32, u32), PairEntry>,
    /// Predicates without and with `y`, as text-rank bitsets.
    yfree_all: Bits,
    ydep_all: Bits,
}

impl<'a> Ctx<'a> {
    fn new(fta: &'a Fta, score: &'a ScoreConfig) -> Ctx<'a> {
        let u = fta.base.universe();
        let pred_theta = u.predicates().iter().map(|p| score.predicate(p)).collect();
        let k_theta = std::array::from_fn(|i| score.k(K_VALUES[i]));
        let mut pos = Vec::new();
        let mut neg = Vec::new();
        for (e, c) in fta.comps.iter().enumerate() {
            if c.output.is_some() {
                pos.push(e);
            } else {
                neg.push(e);
            }
        }
        let mut yfree_all = Bits::zeros(u.len());
        let mut ydep_all = Bits::zeros(u.len());
        for (p, pred) in u.predicates().iter().enumerate() {
            let r = u.text_rank(p) as usize;
            if pred.uses_y() {
                ydep_all.set(r);
            } else {
                yfree_all.set(r);
            }
        }
        Ctx {
            fta,
            score,
            pred_theta,
            k_theta,
            interner: Interner::default(),
            pos,
            neg,
            yfree_memo: HashMap::new(),
            ydep_memo: HashMap::new(),
            pair_memo: HashMap::new(),
            yfree_all,
            ydep_all,
        }
    }

    fn full_mask(&self) -> u64 {
        if self.neg.len() >= 64 {
            u64::MAX
        } else {
            (1u64 << self.neg.len()) - 1
        }
    }

    fn bottom_mask(&self, s: &[u32]) -> u64 {
        let bottom = self.fta.base.bottom();
        let mut m = 0;
        for (bit, e) in self.neg.iter().enumerate() {
            if s[*e] == bottom {
                m |= 1 << bit;
            }
        }
        m
    }

    fn next_layer(&mut self, prev: &[Entry], depth: usize, deadline: Deadline) -> Result<Vec<Entry>, Timeout> {
        struct Cand {
            theta: f64,
            from: usize,
            dir: Direction,
            kp: usize,
            pred: usize,
            text: Option<String>,
        }
        let u = self.fta.base.universe();
        let mut best: HashMap<u32, Cand> = HashMap::new();
        let text_of = |prev: &[Entry], from: usize, dir: Direction, kp: usize, pred: usize| {
            format!("GetCell({}, {}, {}, \\y.\\z. {})", prev[from].text, dir, K_VALUES[kp], u.body(pred))
        };
        for (i, entry) in prev.iter().enumerate() {
            deadline.check()?;
            let state = self.interner.states[entry.state as usize].clone();
            for dg in expand(self.fta, &state) {
                let mut gbest: Vec<usize> = vec![usize::MAX; dg.targets.len()];
                for (p, g) in dg.group_of.iter().enumerate() {
                    let slot = &mut gbest[*g as usize];
                    if *slot == usize::MAX
                        || self.pred_theta[p] > self.pred_theta[*slot]
                        || (self.pred_theta[p] == self.pred_theta[*slot] && u.text_rank(p) < u.text_rank(*slot))
                    {
                        *slot = p;
                    }
                }
                for (g, targets) in dg.targets.into_iter().enumerate() {
                    let p = gbest[g];
                    for (kp, tgt) in targets.into_iter().enumerate() {
                        let step = self.k_theta[kp] * self.pred_theta[p];
                        let theta = self.score.get_cell(entry.theta, depth - 1, step);
                        let id = self.interner.id(tgt);
                        let fresh = Cand { theta, from: i, dir: dg.dir, kp, pred: p, text: None };
                        match best.get_mut(&id) {
                            None => {
                                best.insert(id, fresh);
                            }
                            Some(cur) => {
                                if theta > cur.theta {
                                    *cur = fresh;
                                } else if theta == cur.theta {
                                    let t_new = text_of(prev, i, dg.dir, kp, p);
                                    let t_cur = cur
                                        .text
                                        .get_or_insert_with(|| text_of(prev, cur.from, cur.dir, cur.kp, cur.pred));
                                    if t_new < *t_cur {
                                        *cur = Cand { text: Some(t_new), ..fresh };
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        let mut out: Vec<Entry> = best
            .into_iter()
            .map(|(state, c)| {
                let text = c.text.unwrap_or_else(|| text_of(prev, c.from, c.dir, c.kp, c.pred));
                let prog = CellProg::get_cell(
                    prev[c.from].prog.clone(),
                    c.dir,
                    K_VALUES[c.kp],
                    u.predicates()[c.pred].clone(),
                );
                Entry { state, theta: c.theta, prog, text: text.into() }
            })
            .collect();
        out.sort_by_key(|e| e.state);
        Ok(out)
    }

    fn best_list(&self, layers: &[Vec<Entry>]) -> Option<Final> {
        let fta = self.fta;
        if !fta.list_enabled() {
            return None;
        }
        let t = fta.t as usize;
        let base = &fta.base;
        type Slot<'e> = (usize, f64, &'e Entry);
        let mut cands: Vec<HashMap<u64, Slot>> = vec![HashMap::new(); t];
        for (d, layer) in layers.iter().enumerate() {
            for entry in layer {
                let s = &self.interner.states[entry.state as usize];
                let mask = self.bottom_mask(s);
                for (j, slots) in cands.iter_mut().enumerate() {
                    let ok = self.pos.iter().all(|e| {
                        let l = fta.comps[*e].output.as_ref().expect("positive");
                        s[*e] == base.index(l[j])
                    });
                    if !ok {
                        continue;
                    }
                    let size = d + 1;
                    let replace = match slots.get(&mask) {
                        None => true,
                        Some((sz, th, cur)) => better(size, entry.theta, *sz, *th)
                            .then_with(|| entry.text.cmp(&cur.text))
                            == Ordering::Less,
                    };
                    if replace {
                        slots.insert(mask, (size, entry.theta, entry));
                    }
                }
            }
        }
        type Partial<'e> = (usize, f64, Vec<&'e Entry>);
        let mut dp: HashMap<u64, Partial> = HashMap::from([(0, (0, 0.0, Vec::new()))]);
        for slots in &cands {
            let mut next: HashMap<u64, Partial> = HashMap::new();
            for (m, (sz, th, list)) in &dp {
                for (mj, (csz, cth, entry)) in slots {
                    let nm = m | mj;
                    let size = sz + csz;
                    let theta = th + cth;
                    let replace = match next.get(&nm) {
                        None => true,
                        Some((s2, t2, l2)) => better(size, theta, *s2, *t2)
                            .then_with(|| {
                                list.iter()
                                    .map(|e| &*e.text)
                                    .chain(std::iter::once(&*entry.text))
                                    .cmp(l2.iter().map(|e| &*e.text))
                            })
                            == Ordering::Less,
                    };
                    if replace {
                        let mut l = list.clone();
                        l.push(entry);
                        next.insert(nm, (size, theta, l));
                    }
                }
            }
            dp = next;
        }
        let (size, theta, list) = dp.remove(&self.full_mask())?;
        let program = SimpleProg::List(list.iter().map(|e| e.prog.clone()).collect());
        Some(Final { size: size + 1, theta: theta / t as f64, text: program.to_string(), program })
    }

    fn span_bits(&self, e: usize, y: Option<u32>, s2: u32, s3: u32) -> Option<Bits> {
        let base = &self.fta.base;
        let g = base.grid();
        let u = base.universe();
        let span = g.line_range(base.cell(s2), base.cell(s3)).ok()?;
        let l = self.fta.comps[e].output.as_ref().expect("positive");
        let mut it = span.iter();
        if !l.iter().all(|c| it.any(|z| z == c)) {
            return None;
        }
        let yc = base.cell(y.unwrap_or(s2));
        let truth: Vec<Vec<bool>> =
            span.iter().map(|z| u.atoms().iter().map(|a| a.eval(g, yc, *z)).collect()).collect();
        let preds = u.predicates();
        let mut bits = Bits::zeros(u.len());
        for (p, pred) in preds.iter().enumerate() {
            if pred.uses_y() != y.is_some() {
                continue;
            }
            let conj = u.conjuncts(p);
            let mut out = span.iter().zip(&truth).filter(|(_, t)| conj.iter().all(|a| t[*a as usize])).map(|(z, _)| z);
            if out.by_ref().eq(l.iter()) {
                bits.set(u.text_rank(p) as usize);
            }
        }
        Some(bits)
    }

    /// For a (from, to) tuple pair: the y-free predicates that work for every
    /// positive component, and the negatives it already sends to ⊥.
    fn pair(&mut self, s2: u32, s3: u32) -> PairEntry {
        if let Some(v) = self.pair_memo.get(&(s2, s3)) {
            return v.clone();
        }
        let bottom = self.fta.base.bottom();
        let a = self.interner.states[s2 as usize].clone();
        let b = self.interner.states[s3 as usize].clone();
        let mut acc = self.yfree_all.clone();
        let mut valid = self.pos.iter().all(|e| a[*e] != bottom && b[*e] != bottom);
        for e in self.pos.clone() {
            if !valid {
                break;
            }
            let key = (e, a[e], b[e]);
            let bits = match self.yfree_memo.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let v = self.span_bits(e, None, a[e], b[e]).map(Rc::new);
                    self.yfree_memo.insert(key, v.clone());
                    v
                }
            };
            match bits {
                Some(bits) => acc.and(&bits),
                None => {
                    valid = false;
                    break;
                }
            }
        }
        let res = valid.then(|| {
            let g = self.fta.base.grid();
            let mut mask = 0u64;
            for (bit, e) in self.neg.iter().enumerate() {
                let stuck = a[*e] == bottom
                    || b[*e] == bottom
                    || g.line_range(self.fta.base.cell(a[*e]), self.fta.base.cell(b[*e])).is_err();
                if stuck {
                    mask |= 1 << bit;
                }
            }
            (Rc::new(acc), mask)
        });
        self.pair_memo.insert((s2, s3), res.clone());
        res
    }

    fn ydep(&mut self, s1: u32, s2: u32, s3: u32) -> Bits {
        let mut acc = self.ydep_all.clone();
        let a = self.interner.states[s1 as usize].clone();
        let b = self.interner.states[s2 as usize].clone();
        let c = self.interner.states[s3 as usize].clone();
        for e in self.pos.clone() {
            let key = (e, a[e], b[e], c[e]);
            let bits = match self.ydep_memo.get(&key) {
                Some(v) => v.clone(),
                None => {
                    let v = Rc::new(self.span_bits(e, Some(a[e]), b[e], c[e]).unwrap_or_else(|| Bits::zeros(0)));
                    self.ydep_memo.insert(key, v.clone());
                    v
                }
            };
            if bits.0.is_empty() {
                return Bits::zeros(0);
            }
            acc.and(&bits);
        }
        acc
    }

    /// Best Filter whose three cell programs have depths with maximum exactly `top`.
    fn best_filter(
        &mut self,
        layers: &[Vec<Entry>],
        top: usize,
        slot: &mut Option<Final>,
        deadline: Deadline,
    ) -> Result<(), Timeout> {
        if !self.fta.filter {
            return Ok(());
        }
        let bottom = self.fta.base.bottom();
        let full = self.full_mask();
        let u = self.fta.base.universe();
        let n = layers.len();
        for d1 in 0..n {
            for d2 in 0..n {
                for d3 in 0..n {
                    if d1.max(d2).max(d3) != top {
                        continue;
                    }
                    let size = 4 + d1 + d2 + d3;
                    if slot.as_ref().is_some_and(|b| b.size < size) {
                        continue;
                    }
                    for e2 in &layers[d2] {
                        deadline.check()?;
                        for e3 in &layers[d3] {
                            let Some((yfree, pmask)) = self.pair(e2.state, e3.state) else { continue };
                            for e1 in &layers[d1] {
                                let theta = (e1.theta + e2.theta + e3.theta) / 3.0;
                                if let Some(b) = slot.as_ref() {
                                    if better(size, theta, b.size, b.theta) == Ordering::Greater {
                                        continue;
                                    }
                                }
                                let s1 = &self.interner.states[e1.state as usize];
                                if self.pos.iter().any(|e| s1[*e] == bottom) {
                                    continue;
                                }
                                if pmask | self.bottom_mask(s1) != full {
                                    continue;
                                }
                                let mut best = yfree.first();
                                let dep = self.ydep(e1.state, e2.state, e3.state).first();
                                best = match (best, dep) {
                                    (Some(a), Some(b)) => Some(a.min(b)),
                                    (a, b) => a.or(b),
                                };
                                let Some(rank) = best else { continue };
                                let p = u.by_text_rank(rank as u32);
                                let text = format!(
                                    "Filter({}, {}, {}, \\y.\\z. {})",
                                    e1.text,
                                    e2.text,
                                    e3.text,
                                    u.body(p)
                                );
                                let program = SimpleProg::Filter {
                                    src: e1.prog.clone(),
                                    from: e2.prog.clone(),
                                    to: e3.prog.clone(),
                                    pred: u.predicates()[p].clone(),
                                };
                                keep_best(slot, Final { size, theta, text, program });
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

impl Fta {
    /// Smallest accepted program with `GetCell` chains of at most `cap`, best θ among equals.
    pub fn rank(&self, score: &ScoreConfig, cap: usize, deadline: Deadline) -> Result<Option<Ranked>, Timeout> {
        if !self.list_enabled() && !self.filter_enabled() {
            return Ok(None);
        }
        let mut ctx = Ctx::new(self, score);
        let init = ctx.interner.id(self.init());
        let mut layers: Vec<Vec<Entry>> =
            vec![vec![Entry { state: init, theta: 1.0, prog: CellProg::X, text: "x".into() }]];
        let mut best: Option<Final> = None;
        for d in 0..=cap {
            deadline.check()?;
            if d > 0 {
                let next = ctx.next_layer(&layers[d - 1], d, deadline)?;
                layers.push(next);
            }
            if let Some(l) = ctx.best_list(&layers) {
                keep_best(&mut best, l);
            }
            ctx.best_filter(&layers, d, &mut best, deadline)?;
            let mut bound = usize::MAX;
            if self.list_enabled() {
                bound = bound.min(self.t as usize + 2 + d);
            }
            if self.filter_enabled() {
                bound = bound.min(5 + d);
            }
            if best.as_ref().is_some_and(|b| b.size < bound) {
                break;
            }
        }
        Ok(best.map(|f| Ranked { size: f.size, theta: f.theta, program: f.program }))
    }

    /// True iff no tree at all reaches the final state.
    pub fn is_empty(&self) -> bool {
        if !self.list_enabled() && !self.filter_enabled() {
            return true;
        }
        let score = ScoreConfig::default();
        let mut ctx = Ctx::new(self, &score);
        let layer: Vec<Entry> = self
            .reachable()
            .into_iter()
            .map(|s| Entry { state: ctx.interner.id(s), theta: 0.0, prog: CellProg::X, text: "".into() })
            .collect();
        let layers = vec![layer];
        if ctx.best_list(&layers).is_some() {
            return false;
        }
        let mut slot = None;
        let _ = ctx.best_filter(&layers, 0, &mut slot, Deadline::none());
        slot.is_none()
    }
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::fta::{build_base, build_fta, intersect, BaseFta};
    use crate::grid::{parse_table, CellRef, Format};
    use crate::preds::DEFAULT_MAX_PREDICATES;

    fn c(r: usize, k: usize) -> CellRef {
        CellRef::new(r, k)
    }

    fn base(csv: &str) -> Arc<BaseFta> {
        build_base(&parse_table(csv, Format::Csv).unwrap(), 2, DEFAULT_MAX_PREDICATES).unwrap()
    }

    fn top(a: &Fta) -> Option<Ranked> {
        a.rank(&ScoreConfig::default(), 4, Deadline::none()).unwrap()
    }

    #[test]
    fn example_62_rank() {
        let b = base("4,5\n6,?");
        let a = build_fta(&b, c(2, 2), Some(&[c(1, 2)]), 1).unwrap();
        let r = top(&a).unwrap();
        // u,2 True and u,1 Val(z) != "?" tie on size and θ; text order decides.
        assert_eq!(r.program.to_string(), "GetCell(x, u, 1, \\y.\\z. Val(z) != \"?\")");
        assert_eq!(r.size, 3);
        assert!(a.accepts(&r.program, 4));
        let other = crate::lang::parse_program("GetCell(x, u, 2, \\y.\\z. True)").unwrap();
        assert!(a.accepts(&other.branches()[0], 4));
        assert_eq!(ScoreConfig::default().simple(&other.branches()[0]), r.theta);
        assert!(!a.is_empty());
    }

    #[test]
    fn identity_output() {
        let b = base("4,5\n6,?");
        let a = build_fta(&b, c(2, 2), Some(&[c(2, 2)]), 1).unwrap();
        let r = top(&a).unwrap();
        assert_eq!(r.program.to_string(), "x");
        assert_eq!(r.size, 2);
    }

    #[test]
    fn row_vector_branch() {
        let b = base("?,1,?,2,?");
        let pos = build_fta(&b, c(1, 3), Some(&[c(1, 2)]), 1).unwrap();
        let neg = build_fta(&b, c(1, 1), None, 1).unwrap();
        let both = intersect(&pos, &neg).unwrap().with_constructs(true, false);
        let r = top(&both).unwrap();
        assert_eq!(r.program.to_string(), "GetCell(x, l, 1, \\y.\\z. Val(z) != \"?\")");
    }

    #[test]
    fn contradiction_is_empty() {
        let b = base("?,1,?,2,?");
        let pos = build_fta(&b, c(1, 1), Some(&[c(1, 2)]), 1).unwrap();
        let neg = build_fta(&b, c(1, 1), None, 1).unwrap();
        let both = intersect(&pos, &neg).unwrap();
        assert!(top(&both).is_none());
        assert!(both.is_empty());
    }

    #[test]
    fn varying_lengths_use_filter() {
        let b = base("name,value\nGroupA,\na1,1\na2,2\nGroupA Total,?\nGroupB,\nb1,3\nb2,4\nb3,5\nGroupB Total,?");
        let one = build_fta(&b, c(5, 2), Some(&[c(3, 2), c(4, 2)]), -1).unwrap();
        let two = build_fta(&b, c(10, 2), Some(&[c(7, 2), c(8, 2), c(9, 2)]), -1).unwrap();
        let a = intersect(&one, &two).unwrap();
        let r = top(&a).unwrap();
        assert!(matches!(r.program, SimpleProg::Filter { .. }), "{}", r.program);
        assert!(a.accepts(&r.program, 4));
        assert_eq!(r.size, 5);
    }
}
