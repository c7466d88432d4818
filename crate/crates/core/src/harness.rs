//! Evaluation machinery: a brute-force program enumerator used as an
//! independent oracle, random instance families for the automaton
//! properties, fixture loading and the simulated interactive protocol.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::deadline::Deadline;
use crate::fta::{build_base, build_fta, intersect, BaseFta, Fta};
use crate::grid::{parse_col, parse_table, CellRef, Direction, Format, Grid, GridError};
use crate::lang::{CellProg, ExtractResult, ExtractorProgram, Predicate, SimpleProg, K_VALUES};
use crate::preds::{build_atoms, build_predicates, PredicateUniverse, PredsError, DEFAULT_MAX_PREDICATES};
use crate::score::ScoreConfig;
use crate::sketch::{complete_table, CompletionSpec, FillOutcome, HoleBindings, SpecError};
use crate::synth::{ExampleSet, SynthConfig, SynthError, Synthesizer};

#[derive(Debug, Clone, PartialEq)]
pub struct EnumBounds {
    pub max_size: usize,
    pub max_depth: usize,
    /// Explicit predicate set; `None` means the full universe at `max_conj`.
    pub predicates: Option<Vec<Predicate>>,
    pub max_conj: usize,
    /// List arity; values below 1 disable `List`.
    pub t: i32,
    pub filter: bool,
    /// Maximum number of programs produced.
    pub budget: usize,
}

impl Default for EnumBounds {
    fn default() -> Self {
        EnumBounds { max_size: 3, max_depth: 2, predicates: None, max_conj: 1, t: 1, filter: true, budget: 2_000_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnumError {
    #[error("enumeration exceeds the budget of {0} programs")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Preds(#[from] PredsError),
}

/// Calls `f` on every simple program within the bounds, by increasing size.
/// Returns the number of programs visited.
pub fn visit_programs(g: &Grid, b: &EnumBounds, mut f: impl FnMut(&SimpleProg)) -> Result<usize, EnumError> {
    let preds = match &b.predicates {
        Some(p) => p.clone(),
        None => build_predicates(g, b.max_conj, DEFAULT_MAX_PREDICATES)?.predicates().to_vec(),
    };
    let list = b.t >= 1;
    let t = b.t.max(0) as usize;
    // Deepest single chain that still fits in `max_size`.
    let mut fit = 0;
    if list && b.max_size > t {
        fit = b.max_size - 1 - t;
    }
    if b.filter && b.max_size >= 4 {
        fit = fit.max(b.max_size - 4);
    }
    if !(list && b.max_size > t) && !(b.filter && b.max_size >= 4) {
        return Ok(0);
    }
    let max_depth = b.max_depth.min(fit);
    let mut layers: Vec<Vec<CellProg>> = vec![vec![CellProg::X]];
    for _ in 0..max_depth {
        let prev = layers.last().expect("layer");
        let mut next = Vec::with_capacity(prev.len() * 24 * preds.len());
        for inner in prev {
            for dir in Direction::ALL {
                for k in K_VALUES {
                    for p in &preds {
                        next.push(CellProg::get_cell(inner.clone(), dir, k, p.clone()));
                    }
                }
            }
        }
        if next.len() > b.budget {
            return Err(EnumError::BudgetExceeded(b.budget));
        }
        layers.push(next);
    }
    let mut count = 0usize;
    let mut emit = |p: SimpleProg, count: &mut usize| -> Result<(), EnumError> {
        *count += 1;
        if *count > b.budget {
            return Err(EnumError::BudgetExceeded(b.budget));
        }
        f(&p);
        Ok(())
    };
    for size in 2..=b.max_size {
        if list && size > t {
            let mut depths = vec![0usize; t];
            for_each_split(size - 1 - t, t, max_depth, &mut depths, &mut |ds| {
                let mut idx = vec![0usize; ds.len()];
                loop {
                    let cs = ds.iter().zip(&idx).map(|(d, i)| layers[*d][*i].clone()).collect();
                    emit(SimpleProg::List(cs), &mut count)?;
                    if !advance(&mut idx, |j| layers[ds[j]].len()) {
                        return Ok(());
                    }
                }
            })?;
        }
        if b.filter && size >= 4 {
            let mut depths = vec![0usize; 3];
            for_each_split(size - 4, 3, max_depth, &mut depths, &mut |ds| {
                for a in &layers[ds[0]] {
                    for c2 in &layers[ds[1]] {
                        for c3 in &layers[ds[2]] {
                            for p in &preds {
                                let prog = SimpleProg::Filter {
                                    src: a.clone(),
                                    from: c2.clone(),
                                    to: c3.clone(),
                                    pred: p.clone(),
                                };
                                emit(prog, &mut count)?;
                            }
                        }
                    }
                }
                Ok(())
            })?;
        }
    }
    Ok(count)
}

/// Odometer increment; false after the last combination.
fn advance(idx: &mut [usize], len: impl Fn(usize) -> usize) -> bool {
    for j in (0..idx.len()).rev() {
        idx[j] += 1;
        if idx[j] < len(j) {
            return true;
        }
        idx[j] = 0;
    }
    false
}

/// Every way to write `total` as an ordered sum of `parts` depths, each at most `cap`.
fn for_each_split(
    total: usize,
    parts: usize,
    cap: usize,
    depths: &mut Vec<usize>,
    f: &mut impl FnMut(&[usize]) -> Result<(), EnumError>,
) -> Result<(), EnumError> {
    fn go(
        j: usize,
        left: usize,
        cap: usize,
        depths: &mut Vec<usize>,
        f: &mut impl FnMut(&[usize]) -> Result<(), EnumError>,
    ) -> Result<(), EnumError> {
        if j == depths.len() {
            return if left == 0 { f(depths) } else { Ok(()) };
        }
        for d in 0..=left.min(cap) {
            depths[j] = d;
            go(j + 1, left - d, cap, depths, f)?;
        }
        Ok(())
    }
    depths.resize(parts, 0);
    go(0, total, cap, depths, f)
}

pub fn enumerate_programs(g: &Grid, b: &EnumBounds) -> Result<Vec<SimpleProg>, EnumError> {
    let mut out = Vec::new();
    visit_programs(g, b, |p| out.push(p.clone()))?;
    Ok(out)
}

/// A random small table, a predicate subset and examples over it.
#[derive(Debug, Clone)]
pub struct Instance {
    pub grid: Grid,
    pub predicates: Vec<Predicate>,
    pub t: i32,
    /// Inputs with desired results; `None` requires ⊥.
    pub examples: Vec<(CellRef, ExtractResult)>,
}

/// Bounds the automaton property checks enumerate within.
pub const PROPERTY_BOUNDS: (usize, usize) = (5, 3);

impl Instance {
    pub fn random(rng: &mut impl Rng) -> Instance {
        let rows = rng.gen_range(1..=3);
        let cols = rng.gen_range(1..=3);
        let alphabet = ["a", "b", "?"];
        let cells: Vec<Vec<&str>> =
            (0..rows).map(|_| (0..cols).map(|_| *alphabet.choose(rng).expect("nonempty")).collect()).collect();
        let grid = Grid::from_rows(&cells).expect("rectangular");
        let atoms = build_atoms(&grid);
        let mut predicates = vec![Predicate::truth()];
        let extra = rng.gen_range(1..=2);
        for a in atoms[1..].choose_multiple(rng, extra) {
            predicates.push(Predicate::atom(a.clone()));
        }
        predicates.sort();
        predicates.dedup();
        let t = rng.gen_range(1..=2);
        let bounds = instance_bounds(&predicates, t, true);
        let all: Vec<CellRef> = grid.cells().collect();
        let mut examples = Vec::new();
        let n = rng.gen_range(1..=2).min(all.len());
        let programs = enumerate_programs(&grid, &EnumBounds { max_size: 4, max_depth: 2, ..bounds })
            .expect("small enumeration");
        while examples.len() < n {
            let input = *all.choose(rng).expect("cells");
            if examples.iter().any(|(i, _)| *i == input) {
                continue;
            }
            let out = match rng.gen_range(0..4) {
                0 => None,
                1 => Some((0..t).map(|_| *all.choose(rng).expect("cells")).collect()),
                _ => programs.choose(rng).expect("programs").eval(&grid, input),
            };
            let out = out.filter(|l: &Vec<CellRef>| l.len() == t as usize);
            examples.push((input, out));
        }
        Instance { grid, predicates, t, examples }
    }

    pub fn base(&self) -> Arc<BaseFta> {
        let u = PredicateUniverse::from_predicates(&self.grid, self.predicates.clone());
        Arc::new(BaseFta::new(self.grid.clone(), u))
    }

    pub fn bounds(&self) -> EnumBounds {
        instance_bounds(&self.predicates, self.t, true)
    }

    pub fn fta(&self, base: &Arc<BaseFta>, j: usize) -> Fta {
        let (i, l) = &self.examples[j];
        build_fta(base, *i, l.as_deref(), self.t).expect("valid example")
    }
}

fn instance_bounds(predicates: &[Predicate], t: i32, filter: bool) -> EnumBounds {
    EnumBounds {
        max_size: PROPERTY_BOUNDS.0,
        max_depth: PROPERTY_BOUNDS.1,
        predicates: Some(predicates.to_vec()),
        max_conj: 1,
        t,
        filter,
        budget: 5_000_000,
    }
}

/// Counts from one property run over an instance.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PropertyStats {
    pub programs: usize,
    pub checks: usize,
    pub discrepancies: usize,
}

impl PropertyStats {
    pub fn add(&mut self, o: PropertyStats) {
        self.programs += o.programs;
        self.checks += o.checks;
        self.discrepancies += o.discrepancies;
    }
}

/// For every enumerated program and example: accepted iff it evaluates to the example output.
pub fn check_soundness_completeness(inst: &Instance) -> PropertyStats {
    let base = inst.base();
    let ftas: Vec<Fta> = (0..inst.examples.len()).map(|j| inst.fta(&base, j)).collect();
    let mut st = PropertyStats::default();
    let cap = PROPERTY_BOUNDS.1;
    st.programs = visit_programs(&inst.grid, &inst.bounds(), |p| {
        for (j, a) in ftas.iter().enumerate() {
            let (i, l) = &inst.examples[j];
            st.checks += 1;
            if a.accepts(p, cap) != (p.eval(&inst.grid, *i) == *l) {
                st.discrepancies += 1;
            }
        }
    })
    .expect("bounded enumeration");
    st
}

/// Membership in an intersection equals membership in both operands.
pub fn check_intersection(inst: &Instance) -> PropertyStats {
    let base = inst.base();
    let mut st = PropertyStats::default();
    if inst.examples.len() < 2 {
        return st;
    }
    let a = inst.fta(&base, 0);
    let b = inst.fta(&base, 1);
    let ab = intersect(&a, &b).expect("same base");
    let cap = PROPERTY_BOUNDS.1;
    st.programs = visit_programs(&inst.grid, &inst.bounds(), |p| {
        st.checks += 1;
        if ab.accepts(p, cap) != (a.accepts(p, cap) && b.accepts(p, cap)) {
            st.discrepancies += 1;
        }
    })
    .expect("bounded enumeration");
    st
}

/// The ranked program is accepted, and no accepted program within the
/// bounds is smaller, or equal in size with a higher θ.
pub fn check_rank(inst: &Instance, score: &ScoreConfig) -> PropertyStats {
    let base = inst.base();
    let mut a = inst.fta(&base, 0);
    for j in 1..inst.examples.len() {
        a = intersect(&a, &inst.fta(&base, j)).expect("same base");
    }
    let cap = PROPERTY_BOUNDS.1;
    let ranked = a.rank(score, cap, Deadline::none()).expect("no deadline");
    let mut st = PropertyStats { checks: 1, ..Default::default() };
    match &ranked {
        Some(r) => {
            if !a.accepts(&r.program, cap) || r.program.size() != r.size {
                st.discrepancies += 1;
            }
            if a.is_empty() {
                st.discrepancies += 1;
            }
        }
        None => {
            if !a.is_empty() {
                st.discrepancies += 1;
            }
        }
    }
    st.programs = visit_programs(&inst.grid, &inst.bounds(), |p| {
        if !a.accepts(p, cap) {
            return;
        }
        st.checks += 1;
        let bad = match &ranked {
            None => true,
            Some(r) => {
                p.size() < r.size || (p.size() == r.size && score.simple(p) > r.theta + 1e-12)
            }
        };
        if bad {
            st.discrepancies += 1;
        }
    })
    .expect("bounded enumeration");
    st
}

/// Deterministic instance family.
pub fn instances(seed: u64, n: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| Instance::random(&mut rng)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FixtureMeta {
    pub category: Option<u32>,
    pub source: String,
    /// True when the table is reconstructed rather than given verbatim.
    pub reconstructed: bool,
    pub description: String,
    /// Synthesis settings that differ from the defaults.
    pub config: Option<serde_json::Value>,
}

#[derive(Debug, Clone)]
pub struct TaskFixture {
    pub name: String,
    pub grid: Grid,
    pub spec: CompletionSpec,
    pub expected: BTreeMap<CellRef, String>,
    pub meta: FixtureMeta,
}

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Table { path: PathBuf, source: GridError },
    #[error("{path}: {source}")]
    Spec { path: PathBuf, source: SpecError },
    #[error("{path}: {msg}")]
    Invalid { path: PathBuf, msg: String },
}

fn read(path: &Path) -> Result<String, FixtureError> {
    fs::read_to_string(path).map_err(|source| FixtureError::Io { path: path.to_path_buf(), source })
}

/// Parses `"r,c"` with a numeric or lettered column.
pub fn parse_cell_key(s: &str) -> Option<CellRef> {
    let s = s.trim().trim_start_matches('(').trim_end_matches(')');
    let (r, c) = s.split_once(',')?;
    let row: usize = r.trim().parse().ok()?;
    let col = parse_col(c)?;
    (row >= 1).then_some(CellRef::new(row, col))
}

impl TaskFixture {
    /// Loads `table.csv` or `table.json`, `spec.json`, `expected.json` and `meta.json`.
    pub fn load(dir: &Path) -> Result<TaskFixture, FixtureError> {
        let name = dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        let (tpath, format) = if dir.join("table.csv").exists() {
            (dir.join("table.csv"), Format::Csv)
        } else {
            (dir.join("table.json"), Format::Json)
        };
        let grid = parse_table(&read(&tpath)?, format).map_err(|source| FixtureError::Table { path: tpath, source })?;
        let spath = dir.join("spec.json");
        let spec = CompletionSpec::from_json(&read(&spath)?).map_err(|source| FixtureError::Spec { path: spath, source })?;
        let epath = dir.join("expected.json");
        let raw: BTreeMap<String, String> = serde_json::from_str(&read(&epath)?)
            .map_err(|e| FixtureError::Invalid { path: epath.clone(), msg: e.to_string() })?;
        let mut expected = BTreeMap::new();
        for (k, v) in raw {
            let c = parse_cell_key(&k)
                .filter(|c| grid.contains(*c))
                .ok_or_else(|| FixtureError::Invalid { path: epath.clone(), msg: format!("bad cell {k:?}") })?;
            expected.insert(c, v);
        }
        let mpath = dir.join("meta.json");
        let meta: FixtureMeta = if mpath.exists() {
            serde_json::from_str(&read(&mpath)?).map_err(|e| FixtureError::Invalid { path: mpath, msg: e.to_string() })?
        } else {
            FixtureMeta::default()
        };
        Ok(TaskFixture { name, grid, spec, expected, meta })
    }

    /// Defaults overlaid with the fixture's own settings.
    pub fn config(&self, base: &SynthConfig) -> Result<SynthConfig, FixtureError> {
        let Some(over) = &self.meta.config else { return Ok(base.clone()) };
        base.with_overrides(over)
            .map_err(|e| FixtureError::Invalid { path: PathBuf::from(&self.name).join("meta.json"), msg: e.to_string() })
    }

    /// True iff completing with `b` yields exactly the expected values.
    pub fn fills_match(&self, b: &HoleBindings) -> bool {
        let (_, report) = complete_table(&self.grid, &self.spec.sketch, &self.spec.targets, b);
        let got: BTreeMap<CellRef, String> = report
            .into_iter()
            .filter_map(|f| match f.outcome {
                FillOutcome::Filled { value } => Some((f.cell, value)),
                _ => None,
            })
            .collect();
        self.expected.iter().all(|(c, v)| got.get(c) == Some(v))
    }
}

/// Fixture directories under `root`, sorted by name.
pub fn load_fixtures(root: &Path) -> Result<Vec<TaskFixture>, FixtureError> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|source| FixtureError::Io { path: root.to_path_buf(), source })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join("spec.json").exists())
        .collect();
    dirs.sort();
    dirs.iter().map(|d| TaskFixture::load(d)).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteractiveReport {
    pub name: String,
    pub category: Option<u32>,
    pub solved: bool,
    pub fills_match: bool,
    pub timed_out: bool,
    pub examples_used: usize,
    pub pool_size: usize,
    pub iterations: usize,
    pub wall_time: f64,
    pub programs: BTreeMap<u32, String>,
}

impl InteractiveReport {
    /// The report without its timing, for replay comparisons.
    pub fn outcome(&self) -> InteractiveReport {
        InteractiveReport { wall_time: 0.0, ..self.clone() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum PoolEntry {
    Pos(CellRef, Vec<CellRef>),
    Neg(CellRef),
}

impl PoolEntry {
    fn satisfied(&self, g: &Grid, p: &ExtractorProgram) -> bool {
        match self {
            PoolEntry::Pos(i, l) => p.eval(g, *i).as_ref() == Some(l),
            PoolEntry::Neg(i) => p.eval(g, *i).is_none(),
        }
    }
}

fn pool(e: &ExampleSet) -> Vec<PoolEntry> {
    let mut v: Vec<PoolEntry> = e.iter().map(|(i, l)| PoolEntry::Pos(*i, l.clone())).collect();
    v.extend(e.negatives().map(PoolEntry::Neg));
    v
}

fn example_set(entries: &[PoolEntry]) -> ExampleSet {
    let mut e = ExampleSet::new();
    for x in entries {
        let res = match x {
            PoolEntry::Pos(i, l) => e.insert(*i, l.clone()),
            PoolEntry::Neg(i) => e.insert_negative(*i),
        };
        res.expect("pool entries are distinct");
    }
    e
}

/// Starts each hole from one random example and adds one random failing
/// example per round until every hole's program fits its whole pool.
pub fn simulate_interactive(fx: &TaskFixture, cfg: &SynthConfig, seed: u64) -> Result<InteractiveReport, FixtureError> {
    let cfg = fx.config(cfg)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = build_base(&fx.grid, cfg.max_conj, cfg.max_predicates)
        .map_err(|e| FixtureError::Invalid { path: PathBuf::from(&fx.name), msg: e.to_string() })?;
    let holes: Vec<u32> = fx.spec.sketch.holes().into_iter().collect();
    let pools: BTreeMap<u32, Vec<PoolEntry>> = holes.iter().map(|h| (*h, pool(&fx.spec.examples[h]))).collect();
    let mut chosen: BTreeMap<u32, Vec<PoolEntry>> = BTreeMap::new();
    for h in &holes {
        let first = pools[h].choose(&mut rng).expect("holes have examples").clone();
        chosen.insert(*h, vec![first]);
    }
    let deadline = Deadline::after(cfg.timeout());
    let mut report = InteractiveReport {
        name: fx.name.clone(),
        category: fx.meta.category,
        solved: false,
        fills_match: false,
        timed_out: false,
        examples_used: 0,
        pool_size: pools.values().map(Vec::len).sum(),
        iterations: 0,
        wall_time: 0.0,
        programs: BTreeMap::new(),
    };
    let mut bindings = HoleBindings::new();
    let mut done: BTreeMap<u32, bool> = BTreeMap::new();
    loop {
        report.iterations += 1;
        let mut progressed = false;
        for h in &holes {
            if done.get(h) == Some(&true) {
                continue;
            }
            let mut s = Synthesizer::with_base(Arc::clone(&base), cfg.clone());
            let learned = match s.learn(&example_set(&chosen[h])) {
                Ok(p) => p,
                Err(SynthError::Timeout(_)) => {
                    report.timed_out = true;
                    None
                }
                Err(e) => return Err(FixtureError::Invalid { path: PathBuf::from(&fx.name), msg: e.to_string() }),
            };
            let failing: Vec<&PoolEntry> = pools[h]
                .iter()
                .filter(|x| learned.as_ref().is_none_or(|p| !x.satisfied(&fx.grid, p)))
                .filter(|x| !chosen[h].contains(x))
                .collect();
            if let Some(p) = &learned {
                bindings.insert(*h, p.clone());
                if pools[h].iter().all(|x| x.satisfied(&fx.grid, p)) {
                    done.insert(*h, true);
                    continue;
                }
            }
            if let Some(next) = failing.choose(&mut rng) {
                chosen.get_mut(h).expect("hole").push((*next).clone());
                progressed = true;
            }
        }
        if holes.iter().all(|h| done.get(h) == Some(&true)) {
            report.solved = true;
            break;
        }
        if !progressed || report.timed_out || deadline.expired() {
            report.timed_out |= deadline.expired();
            break;
        }
    }
    report.examples_used = chosen.values().map(Vec::len).sum();
    report.programs = bindings.iter().map(|(h, p)| (*h, p.to_string())).collect();
    report.fills_match = report.solved && fx.fills_match(&bindings);
    report.wall_time = start.elapsed().as_secs_f64();
    Ok(report)
}

pub fn median(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        return None;
    }
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub tasks: Vec<InteractiveReport>,
    pub solved: usize,
    pub total: usize,
    pub avg_time: f64,
    pub median_time: f64,
    pub max_time: f64,
    pub avg_examples: f64,
}

pub fn run_suite(fixtures: &[TaskFixture], cfg: &SynthConfig, seed: u64) -> Result<SuiteReport, FixtureError> {
    let tasks = fixtures.iter().map(|f| simulate_interactive(f, cfg, seed)).collect::<Result<Vec<_>, _>>()?;
    let times: Vec<f64> = tasks.iter().map(|t| t.wall_time).collect();
    let n = tasks.len();
    let mean = |xs: &[f64]| if xs.is_empty() { 0.0 } else { xs.iter().sum::<f64>() / xs.len() as f64 };
    let examples: Vec<f64> = tasks.iter().map(|t| t.examples_used as f64).collect();
    Ok(SuiteReport {
        seed,
        solved: tasks.iter().filter(|t| t.solved).count(),
        total: n,
        avg_time: mean(&times),
        median_time: median(&times).unwrap_or(0.0),
        max_time: times.iter().copied().fold(0.0, f64::max),
        avg_examples: mean(&examples),
        tasks,
    })
}

impl SuiteReport {
    pub fn to_table(&self) -> String {
        let mut out = format!(
            "{:<28} {:>4} {:>7} {:>6} {:>9} {:>9}\n",
            "fixture", "cat", "solved", "fills", "examples", "time(s)"
        );
        for t in &self.tasks {
            out.push_str(&format!(
                "{:<28} {:>4} {:>7} {:>6} {:>4}/{:<4} {:>9.3}\n",
                t.name,
                t.category.map_or("-".to_string(), |c| c.to_string()),
                if t.solved { "yes" } else { "no" },
                if t.fills_match { "ok" } else { "-" },
                t.examples_used,
                t.pool_size,
                t.wall_time
            ));
        }
        out.push_str(&format!(
            "solved {}/{}, avg {:.3}s, median {:.3}s, max {:.3}s, avg examples {:.2}\n",
            self.solved, self.total, self.avg_time, self.median_time, self.max_time, self.avg_examples
        ));
        out
    }
}
