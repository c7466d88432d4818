//! The heuristic ranking function θ over DSL terms.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::MISSING;
use crate::lang::{Atom, CellProg, ExtractorProgram, Mapper, Predicate, SimpleProg};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreConfig {
    pub atom_true: f64,
    pub atom_marker: f64,
    pub atom_cells: f64,
    pub atom_const: f64,
    pub mapper_identity: f64,
    pub mapper_other: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    pub k_neg1: f64,
    pub k_neg2: f64,
    pub k_neg3: f64,
    pub conj_penalty: f64,
}

impl Default for ScoreConfig {
    fn default() -> Self {
        ScoreConfig {
            atom_true: 1.0,
            atom_marker: 0.9,
            atom_cells: 0.8,
            atom_const: 0.7,
            mapper_identity: 1.0,
            mapper_other: 0.85,
            k1: 1.0,
            k2: 0.9,
            k3: 0.7,
            k_neg1: 0.8,
            k_neg2: 0.6,
            k_neg3: 0.5,
            conj_penalty: 0.9,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("score constants violate the required ordering: {0}")]
pub struct OrderingViolation(pub String);

impl ScoreConfig {
    /// Checks the orderings the ranking relies on.
    pub fn validate(&self) -> Result<(), OrderingViolation> {
        let chain = |name: &str, xs: &[f64]| {
            if xs.windows(2).all(|w| w[0] > w[1]) && xs.iter().all(|x| x.is_finite() && *x > 0.0) {
                Ok(())
            } else {
                Err(OrderingViolation(name.to_string()))
            }
        };
        chain(
            "True > Val==\"?\" > Val(y)==Val(z) > Val==s",
            &[self.atom_true, self.atom_marker, self.atom_cells, self.atom_const],
        )?;
        chain("identity mapper > other mappers", &[self.mapper_identity, self.mapper_other])?;
        chain(
            "k: 1 > 2 > -1 > 3 > -2 > -3",
            &[self.k1, self.k2, self.k_neg1, self.k3, self.k_neg2, self.k_neg3],
        )?;
        if !(self.conj_penalty > 0.0 && self.conj_penalty <= 1.0) {
            return Err(OrderingViolation("conjunction penalty outside (0, 1]".into()));
        }
        Ok(())
    }

    pub fn mapper(&self, m: Mapper) -> f64 {
        match m {
            Mapper::Identity => self.mapper_identity,
            _ => self.mapper_other,
        }
    }

    pub fn atom(&self, a: &Atom) -> f64 {
        match a {
            Atom::True => self.atom_true,
            Atom::EqConst(m, s) | Atom::NeqConst(m, s) => {
                let base = if s == MISSING { self.atom_marker } else { self.atom_const };
                base * self.mapper(*m)
            }
            Atom::EqCells(m) => self.atom_cells * self.mapper(*m),
        }
    }

    pub fn predicate(&self, p: &Predicate) -> f64 {
        let atoms = p.atoms();
        let n = atoms.len();
        let mean = atoms.iter().map(|a| self.atom(a)).sum::<f64>() / n as f64;
        mean * self.conj_penalty.powi(n as i32 - 1)
    }

    pub fn k(&self, k: i8) -> f64 {
        match k {
            1 => self.k1,
            2 => self.k2,
            3 => self.k3,
            -1 => self.k_neg1,
            -2 => self.k_neg2,
            -3 => self.k_neg3,
            _ => 0.0,
        }
    }

    /// Score of `GetCell(inner, _, k, φ)` given the inner score and depth.
    pub fn get_cell(&self, inner_score: f64, inner_depth: usize, step: f64) -> f64 {
        if inner_depth == 0 {
            step
        } else {
            (inner_score + step) / inner_depth as f64
        }
    }

    pub fn cellprog(&self, t: &CellProg) -> f64 {
        match t {
            CellProg::X => 1.0,
            CellProg::GetCell { inner, k, pred, .. } => {
                let step = self.k(*k) * self.predicate(pred);
                self.get_cell(self.cellprog(inner), inner.depth(), step)
            }
        }
    }

    pub fn simple(&self, p: &SimpleProg) -> f64 {
        match p {
            SimpleProg::List(cs) => cs.iter().map(|c| self.cellprog(c)).sum::<f64>() / cs.len() as f64,
            SimpleProg::Filter { src, from, to, .. } => {
                (self.cellprog(src) + self.cellprog(from) + self.cellprog(to)) / 3.0
            }
        }
    }

    pub fn program(&self, p: &ExtractorProgram) -> f64 {
        let bs = p.branches();
        bs.iter().map(|b| self.simple(b)).sum::<f64>() / bs.len() as f64
    }

    /// θ with the null program mapped to negative infinity.
    pub fn program_or_null(&self, p: Option<&ExtractorProgram>) -> f64 {
        p.map_or(f64::NEG_INFINITY, |p| self.program(p))
    }
}
