//! Example-driven synthesis: branch-count loop, partition search and
//! automaton-based unification of simple programs.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deadline::{Deadline, Timeout};
use crate::fta::{build_base, build_fta, intersect, BaseFta, Component, Fta, FtaError, Ranked};
use crate::grid::{CellRef, Grid};
use crate::lang::{ExtractorProgram, SimpleProg, DEFAULT_DEPTH_CAP};
use crate::preds::{PredsError, DEFAULT_MAX_CONJ, DEFAULT_MAX_PREDICATES};
use crate::score::{OrderingViolation, ScoreConfig};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SynthError {
    #[error("no examples given")]
    NoExamples,
    #[error("too many examples: {got} (max {max})")]
    TooManyExamples { max: usize, got: usize },
    #[error("example for {0} has an empty output list")]
    EmptyOutput(CellRef),
    #[error("no positive examples given")]
    NoPositives,
    #[error("duplicate example input {0}")]
    DuplicateInput(CellRef),
    #[error("cell {0} is outside the table")]
    OutOfRange(CellRef),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error(transparent)]
    Preds(#[from] PredsError),
    #[error(transparent)]
    Timeout(#[from] Timeout),
}

impl From<OrderingViolation> for SynthError {
    fn from(e: OrderingViolation) -> Self {
        SynthError::BadConfig(e.to_string())
    }
}

impl From<FtaError> for SynthError {
    fn from(e: FtaError) -> Self {
        match e {
            FtaError::OutOfRange(c) => SynthError::OutOfRange(c),
            FtaError::Preds(p) => SynthError::Preds(p),
            other => SynthError::BadConfig(other.to_string()),
        }
    }
}

/// Input cells mapped to their desired output lists, ordered by input, plus
/// inputs on which the program must fail.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleSet {
    examples: BTreeMap<CellRef, Vec<CellRef>>,
    negatives: BTreeSet<CellRef>,
}

impl ExampleSet {
    pub fn new() -> ExampleSet {
        ExampleSet::default()
    }

    pub fn from_pairs(pairs: impl IntoIterator<Item = (CellRef, Vec<CellRef>)>) -> Result<ExampleSet, SynthError> {
        let mut e = ExampleSet::new();
        for (i, l) in pairs {
            e.insert(i, l)?;
        }
        Ok(e)
    }

    pub fn insert(&mut self, input: CellRef, output: Vec<CellRef>) -> Result<(), SynthError> {
        if output.is_empty() {
            return Err(SynthError::EmptyOutput(input));
        }
        if self.examples.contains_key(&input) || self.negatives.contains(&input) {
            return Err(SynthError::DuplicateInput(input));
        }
        self.examples.insert(input, output);
        Ok(())
    }

    pub fn insert_negative(&mut self, input: CellRef) -> Result<(), SynthError> {
        if self.examples.contains_key(&input) || !self.negatives.insert(input) {
            return Err(SynthError::DuplicateInput(input));
        }
        Ok(())
    }

    /// Positive and negative examples together.
    pub fn len(&self) -> usize {
        self.examples.len() + self.negatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty() && self.negatives.is_empty()
    }

    pub fn negatives(&self) -> impl Iterator<Item = CellRef> + '_ {
        self.negatives.iter().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&CellRef, &Vec<CellRef>)> {
        self.examples.iter()
    }

    pub fn inputs(&self) -> impl Iterator<Item = CellRef> + '_ {
        self.examples.keys().copied()
    }

    pub fn get(&self, input: CellRef) -> Option<&[CellRef]> {
        self.examples.get(&input).map(Vec::as_slice)
    }

    fn check_range(&self, g: &Grid) -> Result<(), SynthError> {
        for (i, l) in &self.examples {
            if let Some(c) = std::iter::once(i).chain(l).find(|c| !g.contains(**c)) {
                return Err(SynthError::OutOfRange(*c));
            }
        }
        if let Some(c) = self.negatives.iter().find(|c| !g.contains(**c)) {
            return Err(SynthError::OutOfRange(*c));
        }
        Ok(())
    }

    /// True iff `p` maps every input to its output list and fails on every negative.
    pub fn satisfied_by(&self, g: &Grid, p: &ExtractorProgram) -> bool {
        self.examples.iter().all(|(i, l)| p.eval(g, *i).as_ref() == Some(l))
            && self.negatives.iter().all(|i| p.eval(g, *i).is_none())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    pub max_conj: usize,
    pub depth_cap: usize,
    pub timeout_ms: u64,
    pub max_examples: usize,
    pub max_predicates: usize,
    pub enable_filter: bool,
    pub enable_list: bool,
    pub score: ScoreConfig,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            max_conj: DEFAULT_MAX_CONJ,
            depth_cap: DEFAULT_DEPTH_CAP,
            timeout_ms: 30_000,
            max_examples: 8,
            max_predicates: DEFAULT_MAX_PREDICATES,
            enable_filter: true,
            enable_list: true,
            score: ScoreConfig::default(),
        }
    }
}

impl SynthConfig {
    /// This config with the fields of a JSON object replaced; nested objects
    /// (`score`) are replaced whole.
    pub fn with_overrides(&self, over: &serde_json::Value) -> Result<SynthConfig, SynthError> {
        let Some(o) = over.as_object() else {
            return Err(SynthError::BadConfig("config overrides must be a JSON object".into()));
        };
        let mut v = serde_json::to_value(self).expect("serializable");
        let obj = v.as_object_mut().expect("struct serializes to an object");
        for (k, x) in o {
            obj.insert(k.clone(), x.clone());
        }
        let cfg: SynthConfig = serde_json::from_value(v).map_err(|e| SynthError::BadConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_millis(self.timeout_ms)
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.timeout_ms == 0 {
            return Err(SynthError::BadConfig("timeout must be positive".into()));
        }
        if self.max_examples == 0 {
            return Err(SynthError::BadConfig("max_examples must be positive".into()));
        }
        self.score.validate()?;
        Ok(())
    }
}

/// A Seq candidate considered during partition search.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    /// Branch count being searched when the candidate was formed.
    pub branches: usize,
    /// Inputs handled by the first branch.
    pub first_inputs: Vec<CellRef>,
    pub program: ExtractorProgram,
    pub theta: f64,
}

type Key = (i32, Vec<Component>);

#[derive(Default)]
pub struct MemoCache {
    ftas: HashMap<Key, Fta>,
    ranked: HashMap<Key, Option<Ranked>>,
}

impl MemoCache {
    pub fn len(&self) -> usize {
        self.ranked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ranked.is_empty()
    }
}

/// Synthesis state for one table: the shared base automaton and the memo.
pub struct Synthesizer {
    base: Arc<BaseFta>,
    cfg: SynthConfig,
    memo: Option<MemoCache>,
    trace: Option<Vec<Candidate>>,
    deadline: Deadline,
    required_bottom: Vec<CellRef>,
}

impl Synthesizer {
    pub fn new(g: &Grid, cfg: SynthConfig) -> Result<Synthesizer, SynthError> {
        cfg.validate()?;
        let base = build_base(g, cfg.max_conj, cfg.max_predicates)?;
        Ok(Synthesizer::with_base(base, cfg))
    }

    /// Uses a prebuilt base automaton, which may carry a restricted universe.
    pub fn with_base(base: Arc<BaseFta>, cfg: SynthConfig) -> Synthesizer {
        Synthesizer { base, cfg, memo: Some(MemoCache::default()), trace: None, deadline: Deadline::none(), required_bottom: Vec::new() }
    }

    pub fn without_memo(mut self) -> Synthesizer {
        self.memo = None;
        self
    }

    pub fn grid(&self) -> &Grid {
        self.base.grid()
    }

    pub fn base(&self) -> &Arc<BaseFta> {
        &self.base
    }

    pub fn config(&self) -> &SynthConfig {
        &self.cfg
    }

    pub fn memo(&self) -> Option<&MemoCache> {
        self.memo.as_ref()
    }

    /// Starts recording partition candidates.
    pub fn trace(&mut self) {
        self.trace = Some(Vec::new());
    }

    pub fn take_trace(&mut self) -> Vec<Candidate> {
        self.trace.take().unwrap_or_default()
    }

    /// Smallest branch count first; within it, the θ-best Seq program.
    pub fn learn(&mut self, e: &ExampleSet) -> Result<Option<ExtractorProgram>, SynthError> {
        if e.is_empty() {
            return Err(SynthError::NoExamples);
        }
        if e.len() > self.cfg.max_examples {
            return Err(SynthError::TooManyExamples { max: self.cfg.max_examples, got: e.len() });
        }
        if e.examples.is_empty() {
            return Err(SynthError::NoPositives);
        }
        e.check_range(self.grid())?;
        self.deadline = Deadline::after(self.cfg.timeout());
        self.required_bottom = e.negatives().collect();
        let pairs: Vec<(CellRef, Vec<CellRef>)> = e.iter().map(|(i, l)| (*i, l.clone())).collect();
        for k in 1..=pairs.len() {
            if let Some(p) = self.learn_extractor(k, &pairs)? {
                return Ok(Some(p));
            }
        }
        Ok(None)
    }

    pub fn learn_extractor(
        &mut self,
        k: usize,
        e: &[(CellRef, Vec<CellRef>)],
    ) -> Result<Option<ExtractorProgram>, SynthError> {
        if k == 0 || e.len() < k {
            return Ok(None);
        }
        if k == 1 {
            return Ok(self.learn_simp_prog(e, &[])?.map(ExtractorProgram::simple));
        }
        let n = e.len();
        let mut best: Option<(ExtractorProgram, f64)> = None;
        for subset in subsets(n) {
            self.deadline.check()?;
            let (inside, outside): (Vec<_>, Vec<_>) =
                e.iter().enumerate().partition(|(j, _)| subset.contains(j));
            let inside: Vec<(CellRef, Vec<CellRef>)> = inside.into_iter().map(|(_, x)| x.clone()).collect();
            let outside: Vec<(CellRef, Vec<CellRef>)> = outside.into_iter().map(|(_, x)| x.clone()).collect();
            let negatives: Vec<CellRef> = outside.iter().map(|(i, _)| *i).collect();
            let Some(first) = self.learn_simp_prog(&inside, &negatives)? else { continue };
            let Some(rest) = self.learn_extractor(k - 1, &outside)? else { continue };
            let mut branches = vec![first];
            branches.extend(rest.branches().iter().cloned());
            let program = ExtractorProgram::new(branches);
            let theta = self.cfg.score.program(&program);
            if let Some(t) = self.trace.as_mut() {
                t.push(Candidate {
                    branches: k,
                    first_inputs: inside.iter().map(|(i, _)| *i).collect(),
                    program: program.clone(),
                    theta,
                });
            }
            if best.as_ref().is_none_or(|(_, b)| theta > *b) {
                best = Some((program, theta));
            }
        }
        Ok(best.map(|(p, _)| p))
    }

    /// Best simple program mapping every positive and failing on every negative.
    /// Negatives of the example set passed to `learn` are always included.
    pub fn learn_simp_prog(
        &mut self,
        positives: &[(CellRef, Vec<CellRef>)],
        negatives: &[CellRef],
    ) -> Result<Option<SimpleProg>, SynthError> {
        if positives.is_empty() {
            return Err(SynthError::NoExamples);
        }
        let len = positives[0].1.len();
        let t = if positives.iter().all(|(_, l)| l.len() == len) { len as i32 } else { -1 };
        let mut comps: Vec<Component> = positives
            .iter()
            .map(|(i, l)| Component { input: *i, output: Some(l.clone()) })
            .chain(negatives.iter().chain(&self.required_bottom).map(|i| Component { input: *i, output: None }))
            .collect();
        comps.sort();
        comps.dedup();
        let key: Key = (t, comps);
        if let Some(hit) = self.memo.as_ref().and_then(|m| m.ranked.get(&key)) {
            return Ok(hit.as_ref().map(|r| r.program.clone()));
        }
        let fta = self.fta_for(&key)?;
        let ranked = fta.rank(&self.cfg.score, self.cfg.depth_cap, self.deadline)?;
        let out = ranked.as_ref().map(|r| r.program.clone());
        if let Some(m) = self.memo.as_mut() {
            m.ranked.insert(key, ranked);
        }
        Ok(out)
    }

    /// Intersection over a component list, memoized on every prefix.
    fn fta_for(&mut self, key: &Key) -> Result<Fta, SynthError> {
        let (t, comps) = key;
        let mut acc: Option<Fta> = None;
        for j in 0..comps.len() {
            let prefix: Key = (*t, comps[..=j].to_vec());
            if let Some(hit) = self.memo.as_ref().and_then(|m| m.ftas.get(&prefix)) {
                acc = Some(hit.clone());
                continue;
            }
            let c = &comps[j];
            let one = build_fta(&self.base, c.input, c.output.as_deref(), *t)?
                .with_constructs(self.cfg.enable_list, self.cfg.enable_filter);
            let next = match &acc {
                None => one,
                Some(a) => intersect(a, &one)?,
            };
            if let Some(m) = self.memo.as_mut() {
                m.ftas.insert(prefix, next.clone());
            }
            acc = Some(next);
        }
        Ok(acc.expect("nonempty components"))
    }
}

/// Nonempty proper subsets of `0..n`, by size, then lexicographically.
fn subsets(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for size in 1..n {
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            out.push(idx.clone());
            let Some(p) = (0..size).rev().find(|&p| idx[p] < n - size + p) else { break };
            idx[p] += 1;
            for q in p + 1..size {
                idx[q] = idx[q - 1] + 1;
            }
        }
    }
    out
}

/// One-shot convenience wrapper around [`Synthesizer::learn`].
pub fn learn(g: &Grid, e: &ExampleSet, cfg: &SynthConfig) -> Result<Option<ExtractorProgram>, SynthError> {
    Synthesizer::new(g, cfg.clone())?.learn(e)
}
