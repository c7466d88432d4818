//! Command-line entry points: synthesis, application, the fixture suite, the
//! HTTP service and the enumeration oracle.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use tracing::level_filters::LevelFilter;

use dacex_core::grid::{parse_table, Format, Grid};
use dacex_core::harness::{load_fixtures, parse_cell_key, run_suite, visit_programs, EnumBounds};
use dacex_core::lang::{parse_program_capped, ExtractorProgram, DEFAULT_DEPTH_CAP};
use dacex_core::sketch::{
    all_filled, complete_table, parse_hole_id, synthesize_each, CompletionSpec, FillOutcome, HoleBindings,
    HoleOutcome,
};
use dacex_core::synth::{SynthConfig, SynthError};

pub const EXIT_OK: i32 = 0;
pub const EXIT_UNSOLVED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "dacex", version, about = "Programming-by-example for spreadsheet formulas")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Learn one program per sketch hole and print it with its score.
    Synth(SynthArgs),
    /// Fill a table with programs learned earlier.
    Apply(ApplyArgs),
    /// Run the simulated interactive protocol over a fixture directory.
    Eval(EvalArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
    /// Print every program within enumeration bounds.
    Oracle(OracleArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    /// Write the programs as JSON `{hole: program}`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub no_filter: bool,
    #[arg(long)]
    pub max_conj: Option<usize>,
    /// GetCell nesting cap.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Per-hole time limit in seconds.
    #[arg(long)]
    pub timeout: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ApplyArgs {
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub spec: PathBuf,
    #[arg(long)]
    pub programs: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub fixtures: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long)]
    pub table: PathBuf,
    /// Comma-separated `size=N,depth=N,conj=N,t=N,filter=on|off,budget=N`.
    #[arg(long, default_value = "")]
    pub bounds: String,
    /// Also print each program's result at this cell (`r,c`).
    #[arg(long)]
    pub at: Option<String>,
}

/// A failure carrying its exit code and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub msg: String,
}

fn usage(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_USAGE, msg: msg.into() }
}

fn unsolved(msg: impl Into<String>) -> Failure {
    Failure { code: EXIT_UNSOLVED, msg: msg.into() }
}

fn io_err(path: &Path, e: std::io::Error) -> Failure {
    usage(format!("{}: {e}", path.display()))
}

/// Tracing level from `DACEX_LOG`; unset means off.
pub fn log_level(var: Option<&str>) -> Result<LevelFilter, String> {
    match var.map(str::trim) {
        None | Some("") | Some("off") => Ok(LevelFilter::OFF),
        Some("info") => Ok(LevelFilter::INFO),
        Some("debug") => Ok(LevelFilter::DEBUG),
        Some(v) => Err(format!("DACEX_LOG must be off, info or debug, got {v:?}")),
    }
}

/// Parses arguments and runs a subcommand, writing to `out` and `err`;
/// returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let res = match cli.command {
        Command::Synth(a) => synth(&a, out),
        Command::Apply(a) => apply(&a, out),
        Command::Eval(a) => eval(&a, out, err),
        Command::Serve(a) => serve(&a),
        Command::Oracle(a) => oracle(&a, out, err),
    };
    match res {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "dacex: {}", f.msg);
            f.code
        }
    }
}

fn format_of(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("json") => Format::Json,
        _ => Format::Csv,
    }
}

fn read_table(path: &Path) -> Result<Grid, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    parse_table(&text, format_of(path)).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn read_spec(path: &Path) -> Result<CompletionSpec, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    CompletionSpec::from_json(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| io_err(path, e))
}

fn synth_config(a: &SynthArgs) -> Result<SynthConfig, Failure> {
    let mut cfg = SynthConfig::default();
    if a.no_filter {
        cfg.enable_filter = false;
    }
    if let Some(n) = a.max_conj {
        cfg.max_conj = n;
    }
    if let Some(d) = a.depth {
        cfg.depth_cap = d;
    }
    if let Some(s) = a.timeout {
        if !(s.is_finite() && s > 0.0) {
            return Err(usage("--timeout must be a positive number of seconds"));
        }
        cfg.timeout_ms = ((s * 1000.0).round() as u64).max(1);
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn synth(a: &SynthArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let grid = read_table(&a.table)?;
    let spec = read_spec(&a.spec)?;
    let cfg = synth_config(a)?;
    tracing::info!(rows = grid.rows(), cols = grid.cols(), holes = spec.sketch.holes().len(), "synth");
    let outcomes = synthesize_each(&grid, &spec, &cfg).map_err(|e| usage(e.to_string()))?;
    let mut programs = BTreeMap::new();
    let mut failed = Vec::new();
    for (h, outcome) in outcomes {
        match outcome {
            HoleOutcome::Solved(p) => {
                let _ = writeln!(out, "?{h} = {p}");
                let _ = writeln!(out, "    θ = {:.4}, branches = {}", cfg.score.program(&p), p.branches().len());
                programs.insert(h.to_string(), p.to_string());
            }
            HoleOutcome::NoProgram => failed.push(format!("?{h}: no program found")),
            HoleOutcome::Failed(SynthError::Timeout(t)) => failed.push(format!("?{h}: {t}")),
            HoleOutcome::Failed(e) => return Err(usage(format!("?{h}: {e}"))),
        }
    }
    if let Some(path) = &a.out {
        let text = serde_json::to_string_pretty(&programs).expect("string map");
        write_file(path, &(text + "\n"))?;
    }
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        Err(unsolved(failed.join("; ")))
    }
}

/// Reads a programs file written by `synth --out`.
pub fn read_programs(path: &Path, cap: usize) -> Result<HoleBindings, Failure> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let raw: BTreeMap<String, String> =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let mut b = HoleBindings::new();
    for (key, prog) in raw {
        let h = parse_hole_id(&key).ok_or_else(|| usage(format!("{}: bad hole id {key:?}", path.display())))?;
        let p: ExtractorProgram =
            parse_program_capped(&prog, cap).map_err(|e| usage(format!("{}: ?{h}: {e}", path.display())))?;
        b.insert(h, p);
    }
    Ok(b)
}

fn apply(a: &ApplyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let grid = read_table(&a.table)?;
    let spec = read_spec(&a.spec)?;
    let bindings = read_programs(&a.programs, DEFAULT_DEPTH_CAP)?;
    if let Some(h) = spec.sketch.holes().into_iter().find(|h| !bindings.contains_key(h)) {
        return Err(usage(format!("no program for hole ?{h}")));
    }
    let (filled, report) = complete_table(&grid, &spec.sketch, &spec.targets, &bindings);
    for f in &report {
        let _ = match &f.outcome {
            FillOutcome::Filled { value } => writeln!(out, "{} = {value}", f.cell),
            FillOutcome::Bottom => writeln!(out, "{} = ⊥", f.cell),
            FillOutcome::Error { message } => writeln!(out, "{} error: {message}", f.cell),
        };
    }
    write_file(&a.out, &filled.serialize(format_of(&a.out)))?;
    if all_filled(&report) {
        Ok(EXIT_OK)
    } else {
        Err(unsolved("some targets were not filled"))
    }
}

fn eval(a: &EvalArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let fixtures = load_fixtures(&a.fixtures).map_err(|e| usage(e.to_string()))?;
    let report = run_suite(&fixtures, &SynthConfig::default(), a.seed).map_err(|e| usage(e.to_string()))?;
    // Timings go to stderr so stdout stays reproducible.
    let _ = writeln!(out, "{:<28} {:>4} {:>7} {:>6} {:>9}", "fixture", "cat", "solved", "fills", "examples");
    for t in &report.tasks {
        let cat = t.category.map_or("-".to_string(), |c| c.to_string());
        let _ = writeln!(
            out,
            "{:<28} {:>4} {:>7} {:>6} {:>9}",
            t.name, cat, t.solved, t.fills_match, t.examples_used
        );
        let _ = writeln!(err, "{} {:.3}s", t.name, t.wall_time);
    }
    let _ = writeln!(
        out,
        "seed {}: solved {}/{}, avg examples {:.2}",
        report.seed, report.solved, report.total, report.avg_examples
    );
    let _ = writeln!(
        err,
        "time: avg {:.3}s, median {:.3}s, max {:.3}s",
        report.avg_time, report.median_time, report.max_time
    );
    Ok(if report.solved == report.total { EXIT_OK } else { EXIT_UNSOLVED })
}

fn serve(a: &ServeArgs) -> Result<i32, Failure> {
    let addr: SocketAddr = format!("{}:{}", a.host, a.port).parse().map_err(|e| usage(format!("bad address: {e}")))?;
    let rt = tokio::runtime::Runtime::new().map_err(|e| usage(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.map_err(|e| usage(format!("{addr}: {e}")))?;
        dacex_svc::serve(listener).await.map_err(|e| usage(e.to_string()))
    })?;
    Ok(EXIT_OK)
}

/// Parses `--bounds`; unnamed keys keep their defaults.
pub fn parse_bounds(s: &str) -> Result<EnumBounds, String> {
    let mut b = EnumBounds::default();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = part.split_once('=').ok_or_else(|| format!("bound {part:?} is not key=value"))?;
        let num = || v.trim().parse::<usize>().map_err(|_| format!("bound {k} needs a number, got {v:?}"));
        match k.trim() {
            "size" => b.max_size = num()?,
            "depth" => b.max_depth = num()?,
            "conj" => b.max_conj = num()?,
            "t" => b.t = v.trim().parse().map_err(|_| format!("bound t needs an integer, got {v:?}"))?,
            "budget" => b.budget = num()?,
            "filter" => {
                b.filter = match v.trim() {
                    "on" | "true" => true,
                    "off" | "false" => false,
                    _ => return Err(format!("bound filter must be on or off, got {v:?}")),
                }
            }
            other => return Err(format!("unknown bound {other:?}")),
        }
    }
    Ok(b)
}

fn oracle(a: &OracleArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let grid = read_table(&a.table)?;
    let bounds = parse_bounds(&a.bounds).map_err(usage)?;
    let at = match &a.at {
        Some(s) => {
            let c = parse_cell_key(s).ok_or_else(|| usage(format!("bad cell {s:?}")))?;
            if !grid.contains(c) {
                return Err(usage(format!("cell {c} is outside the table")));
            }
            Some(c)
        }
        None => None,
    };
    let n = visit_programs(&grid, &bounds, |p| {
        let _ = match at {
            Some(c) => match p.eval(&grid, c) {
                Some(cells) => {
                    let cells: Vec<String> = cells.iter().map(ToString::to_string).collect();
                    writeln!(out, "{p}\t[{}]", cells.join(", "))
                }
                None => writeln!(out, "{p}\t⊥"),
            },
            None => writeln!(out, "{p}"),
        };
    })
    .map_err(|e| usage(e.to_string()))?;
    let _ = writeln!(err, "{n} programs");
    Ok(EXIT_OK)
}
