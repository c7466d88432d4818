//! The finite universe of mappers, atoms and conjunctive predicates over a table.

use std::collections::HashMap;

use thiserror::Error;

use crate::grid::Grid;
use crate::lang::{Atom, Mapper, Predicate};

pub const DEFAULT_MAX_CONJ: usize = 2;
pub const MAX_CONJ_LIMIT: usize = 3;
pub const DEFAULT_MAX_PREDICATES: usize = 50_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PredsError {
    #[error("max_conj must be between 1 and {MAX_CONJ_LIMIT}, got {0}")]
    BadMaxConj(usize),
    #[error("predicate universe exceeds the cap of {cap} predicates")]
    PredicateCapExceeded { cap: usize },
}

#[derive(Debug, Clone)]
pub struct PredicateUniverse {
    mappers: Vec<Mapper>,
    atoms: Vec<Atom>,
    predicates: Vec<Predicate>,
    conj: Vec<Vec<u32>>,
    text_rank: Vec<u32>,
    by_text: Vec<u32>,
    bodies: Vec<String>,
    index: HashMap<Predicate, u32>,
}

pub fn build_mappers(g: &Grid) -> Vec<Mapper> {
    let mut m = vec![Mapper::Identity];
    m.extend((1..=g.rows()).map(Mapper::SetRow));
    m.extend((1..=g.cols()).map(Mapper::SetCol));
    m
}

pub fn build_atoms(g: &Grid) -> Vec<Atom> {
    let mappers = build_mappers(g);
    let values = g.distinct_values();
    let mut atoms = vec![Atom::True];
    for m in &mappers {
        for v in &values {
            atoms.push(Atom::EqConst(*m, v.clone()));
            atoms.push(Atom::NeqConst(*m, v.clone()));
        }
        atoms.push(Atom::EqCells(*m));
    }
    atoms.sort();
    atoms
}

pub fn build_predicates(
    g: &Grid,
    max_conj: usize,
    max_predicates: usize,
) -> Result<PredicateUniverse, PredsError> {
    if !(1..=MAX_CONJ_LIMIT).contains(&max_conj) {
        return Err(PredsError::BadMaxConj(max_conj));
    }
    let atoms = build_atoms(g);
    if atoms.len() > max_predicates {
        return Err(PredsError::PredicateCapExceeded { cap: max_predicates });
    }
    let truth = Truths::new(g, &atoms);
    let mut conj: Vec<Vec<u32>> = (0..atoms.len() as u32).map(|i| vec![i]).collect();
    let n = atoms.len() as u32;
    let mut stack: Vec<u32> = Vec::new();
    let mut search = Search { atoms: &atoms, truth: &truth, out: &mut conj, cap: max_predicates, max_conj };
    search.extend(1, n, &mut stack)?;
    conj.sort_by_key(Vec::len);
    Ok(PredicateUniverse::assemble(build_mappers(g), atoms, conj))
}

/// Truth sets of atoms: over z for y-free atoms, over (y, z) for the others.
struct Truths {
    m: usize,
    z: Vec<Vec<u64>>,
    yz: Vec<Option<Vec<u64>>>,
}

fn words(n: usize) -> usize {
    n.div_ceil(64)
}

fn bit(v: &[u64], i: usize) -> bool {
    v[i / 64] >> (i % 64) & 1 == 1
}

impl Truths {
    fn new(g: &Grid, atoms: &[Atom]) -> Truths {
        let cells: Vec<_> = g.cells().collect();
        let m = cells.len();
        let mut z = Vec::with_capacity(atoms.len());
        let mut yz = Vec::with_capacity(atoms.len());
        for a in atoms {
            if a.uses_y() {
                let mut v = vec![0u64; words(m * m)];
                for (yi, y) in cells.iter().enumerate() {
                    for (zi, zc) in cells.iter().enumerate() {
                        if a.eval(g, *y, *zc) {
                            v[(yi * m + zi) / 64] |= 1 << ((yi * m + zi) % 64);
                        }
                    }
                }
                z.push(Vec::new());
                yz.push(Some(v));
            } else {
                let mut v = vec![0u64; words(m)];
                for (zi, zc) in cells.iter().enumerate() {
                    if a.eval(g, cells[0], *zc) {
                        v[zi / 64] |= 1 << (zi % 64);
                    }
                }
                z.push(v);
                yz.push(None);
            }
        }
        Truths { m, z, yz }
    }

    /// Set of (y, z) pairs satisfying every atom in `ix`, flattened y-major.
    fn conj(&self, ix: impl Iterator<Item = u32> + Clone) -> Vec<u64> {
        let m = self.m;
        let mut zs = vec![u64::MAX; words(m)];
        let mut yz: Option<Vec<u64>> = None;
        for i in ix {
            let i = i as usize;
            match &self.yz[i] {
                None => zs.iter_mut().zip(&self.z[i]).for_each(|(a, b)| *a &= b),
                Some(v) => match &mut yz {
                    None => yz = Some(v.clone()),
                    Some(acc) => acc.iter_mut().zip(v).for_each(|(a, b)| *a &= b),
                },
            }
        }
        let mut out = vec![0u64; words(m * m)];
        for y in 0..m {
            for zi in 0..m {
                let k = y * m + zi;
                if bit(&zs, zi) && yz.as_ref().is_none_or(|v| bit(v, k)) {
                    out[k / 64] |= 1 << (k % 64);
                }
            }
        }
        out
    }
}

struct Search<'a> {
    atoms: &'a [Atom],
    truth: &'a Truths,
    out: &'a mut Vec<Vec<u32>>,
    cap: usize,
    max_conj: usize,
}

impl Search<'_> {
    /// A conjunction survives if it is satisfiable on the table and none of
    /// its atoms is implied by the others.
    fn useful(&self, chosen: &[u32]) -> bool {
        let all = self.truth.conj(chosen.iter().copied());
        if all.iter().all(|w| *w == 0) {
            return false;
        }
        (0..chosen.len()).all(|skip| {
            let rest = self.truth.conj(chosen.iter().enumerate().filter(|(j, _)| *j != skip).map(|(_, a)| *a));
            rest != all
        })
    }

    fn extend(&mut self, start: u32, n: u32, stack: &mut Vec<u32>) -> Result<(), PredsError> {
        if stack.len() == self.max_conj {
            return Ok(());
        }
        for i in start..n {
            if !compatible(self.atoms, stack, i) {
                continue;
            }
            stack.push(i);
            if stack.len() >= 2 {
                if !self.useful(stack) {
                    stack.pop();
                    continue;
                }
                if self.out.len() >= self.cap {
                    return Err(PredsError::PredicateCapExceeded { cap: self.cap });
                }
                self.out.push(stack.clone());
            }
            self.extend(i + 1, n, stack)?;
            stack.pop();
        }
        Ok(())
    }
}

fn compatible(atoms: &[Atom], chosen: &[u32], next: u32) -> bool {
    match &atoms[next as usize] {
        Atom::EqConst(m, s) => chosen.iter().all(|i| match &atoms[*i as usize] {
            Atom::EqConst(m2, s2) => m2 != m || s2 == s,
            _ => true,
        }),
        _ => true,
    }
}

impl PredicateUniverse {
    fn assemble(mappers: Vec<Mapper>, atoms: Vec<Atom>, conj: Vec<Vec<u32>>) -> Self {
        let predicates: Vec<Predicate> = conj
            .iter()
            .map(|ix| Predicate::new(ix.iter().map(|i| atoms[*i as usize].clone()).collect()))
            .collect();
        let mut order: Vec<u32> = (0..predicates.len() as u32).collect();
        let texts: Vec<String> = predicates.iter().map(|p| p.to_string()).collect();
        order.sort_by(|a, b| texts[*a as usize].cmp(&texts[*b as usize]));
        let mut text_rank = vec![0u32; predicates.len()];
        for (r, i) in order.iter().enumerate() {
            text_rank[*i as usize] = r as u32;
        }
        let bodies = predicates.iter().map(Predicate::body).collect();
        let index = predicates.iter().enumerate().map(|(i, p)| (p.clone(), i as u32)).collect();
        PredicateUniverse { mappers, atoms, predicates, conj, text_rank, by_text: order, bodies, index }
    }

    /// A universe over exactly the given predicates; their atoms become the atom list.
    pub fn from_predicates(g: &Grid, preds: Vec<Predicate>) -> Self {
        let mut atoms: Vec<Atom> = preds.iter().flat_map(|p| p.atoms().iter().cloned()).collect();
        atoms.sort();
        atoms.dedup();
        let mut uniq = preds;
        uniq.sort();
        uniq.dedup();
        let conj = uniq
            .iter()
            .map(|p| {
                p.atoms()
                    .iter()
                    .map(|a| atoms.binary_search(a).expect("atom present") as u32)
                    .collect()
            })
            .collect();
        Self::assemble(build_mappers(g), atoms, conj)
    }

    /// Sub-universe keeping only predicates whose atoms all satisfy `keep`.
    pub fn retain_atoms(&self, g: &Grid, keep: impl Fn(&Atom) -> bool) -> Self {
        let preds = self
            .predicates
            .iter()
            .filter(|p| p.atoms().iter().all(&keep))
            .cloned()
            .collect();
        Self::from_predicates(g, preds)
    }

    pub fn mappers(&self) -> &[Mapper] {
        &self.mappers
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn predicates(&self) -> &[Predicate] {
        &self.predicates
    }

    pub fn len(&self) -> usize {
        self.predicates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.predicates.is_empty()
    }

    /// Atom indices of predicate `p`.
    pub fn conjuncts(&self, p: usize) -> &[u32] {
        &self.conj[p]
    }

    /// Position of predicate `p` when all predicates are sorted by printed text.
    pub fn text_rank(&self, p: usize) -> u32 {
        self.text_rank[p]
    }

    /// Predicate index holding text rank `r`.
    pub fn by_text_rank(&self, r: u32) -> usize {
        self.by_text[r as usize] as usize
    }

    /// Printed conjunction of predicate `p` without the binder.
    pub fn body(&self, p: usize) -> &str {
        &self.bodies[p]
    }

    pub fn index_of(&self, p: &Predicate) -> Option<usize> {
        self.index.get(p).map(|i| *i as usize)
    }
}
