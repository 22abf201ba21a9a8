//! Command-line surface. Human output goes to stdout, diagnostics and
//! progress to stderr; `--json` swaps the stdout document for a single JSON
//! object with a fixed schema. Identical invocations produce byte-identical
//! stdout.

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::decide::{
    solve, AfCounterexample, ProblemKind, ProblemSpec, SearchLimits, Status, Verdict,
};
use crate::encodings::{
    encode_af_clique, encode_ef_reconf, encode_ef_univ_clique, serialize_generated, EndTiming,
};
use crate::model::{classify, substitute, valuation_of, Protocol, Rat, Valuation};
use crate::regions::{backward_coverability, region_graph_summary, format_word, OneClock, RegionError};
use crate::semantics::{replay, simulate, Config, Mode, RunEnd};
use crate::textio::{
    fmt_rat, parse_protocol, parse_rat, parse_trace, parse_two_counter_machine, serialize_trace,
    TraceFile,
};

const EXIT_YES: i32 = 0;
const EXIT_NO: i32 = 1;
const EXIT_INCONCLUSIVE: i32 = 2;
const EXIT_UNSUPPORTED: i32 = 3;
const EXIT_USAGE: i32 = 64;
const EXIT_PARSE: i32 = 65;
const EXIT_NO_INPUT: i32 = 66;

#[derive(Parser)]
#[command(
    name = "ptbp",
    version,
    about = "Parametric timed broadcast protocols: validation, simulation and decision procedures"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Parse a protocol file and report structural diagnostics.
    Validate {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Report clock count, parameter roles, fragment class and boundedness.
    Classify {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Decide, semi-decide or refuse a reachability question.
    Check {
        file: PathBuf,
        #[arg(long)]
        problem: ProblemArg,
        #[arg(long)]
        semantics: SemanticsArg,
        /// Goal location name.
        #[arg(long)]
        goal: String,
        /// Ask at one valuation: comma-separated NAME=VALUE with exact
        /// rationals (tl=19/2).
        #[arg(long)]
        pval: Option<String>,
        /// Largest network size tried by semi-decisions.
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Step budget for simulation-backed procedures.
        #[arg(long, default_value_t = 10_000)]
        step_max: usize,
        /// Where to write a found witness trace.
        #[arg(long)]
        witness: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Run a random execution, or replay a recorded trace.
    Simulate {
        file: PathBuf,
        /// Replay this trace file instead of simulating.
        #[arg(long, conflicts_with_all = ["n", "pval", "semantics", "seed", "trace"])]
        replay: Option<PathBuf>,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        pval: Option<String>,
        #[arg(long)]
        semantics: Option<SemanticsArg>,
        #[arg(long, default_value_t = 10_000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the executed run to this trace file.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Compile a two-counter machine listing into a broadcast protocol.
    #[command(name = "encode-2cm")]
    Encode2cm {
        machine: PathBuf,
        #[arg(long)]
        target: TargetArg,
        /// Prepend the integrality probe (ef-reconf only).
        #[arg(long)]
        with_integer_gadget: bool,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Dump the fixed-size region graph or a coverability basis.
    Regions {
        file: PathBuf,
        #[arg(long)]
        pval: Option<String>,
        /// Network size for the region-word graph summary.
        #[arg(long, conflicts_with = "basis_of")]
        n: Option<usize>,
        /// Goal location for the backward coverability basis.
        #[arg(long)]
        basis_of: Option<String>,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SemanticsArg {
    #[value(alias = "reconf")]
    Reconfigurable,
    Clique,
}

impl SemanticsArg {
    fn mode(self) -> Mode {
        match self {
            SemanticsArg::Reconfigurable => Mode::Reconfigurable,
            SemanticsArg::Clique => Mode::Clique,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ProblemArg {
    EfExistence,
    EfUniversality,
    AfExistence,
    AfUniversality,
}

impl ProblemArg {
    fn kind(self) -> ProblemKind {
        match self {
            ProblemArg::EfExistence => ProblemKind::EfExistence,
            ProblemArg::EfUniversality => ProblemKind::EfUniversality,
            ProblemArg::AfExistence => ProblemKind::AfExistence,
            ProblemArg::AfUniversality => ProblemKind::AfUniversality,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TargetArg {
    EfReconf,
    AfClique,
    EfuClique,
}

/// Default cap of the lower end-loop parameter in efu-clique encodings.
const EFU_LOWER_CAP: u64 = 4;

#[derive(Serialize)]
struct JsonStats {
    states_explored: Option<usize>,
    basis_size: Option<usize>,
}

/// The one machine-readable document every command can emit.
#[derive(Serialize)]
struct JsonDoc {
    command: &'static str,
    verdict: String,
    witness: Option<String>,
    statistics: JsonStats,
}

impl JsonDoc {
    fn new(command: &'static str, verdict: impl Into<String>) -> JsonDoc {
        JsonDoc {
            command,
            verdict: verdict.into(),
            witness: None,
            statistics: JsonStats {
                states_explored: None,
                basis_size: None,
            },
        }
    }

    fn print(&self) {
        println!("{}", serde_json::to_string(self).expect("fixed schema serializes"));
    }
}

pub fn run() -> i32 {
    let started = Instant::now();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let ok = matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion);
            let _ = e.print();
            return if ok { EXIT_YES } else { EXIT_USAGE };
        }
    };
    let code = dispatch(cli.command);
    eprintln!("wall time: {}ms", started.elapsed().as_millis());
    code
}

fn dispatch(cmd: Cmd) -> i32 {
    match cmd {
        Cmd::Validate { file, json } => cmd_validate(&file, json),
        Cmd::Classify { file, json } => cmd_classify(&file, json),
        Cmd::Check {
            file,
            problem,
            semantics,
            goal,
            pval,
            n_max,
            step_max,
            witness,
            json,
        } => cmd_check(&file, problem, semantics, &goal, pval.as_deref(), n_max, step_max, witness, json),
        Cmd::Simulate {
            file,
            replay,
            n,
            pval,
            semantics,
            steps,
            seed,
            trace,
            json,
        } => match replay {
            Some(tr) => cmd_replay(&file, &tr, json),
            None => cmd_simulate(&file, n, pval.as_deref(), semantics, steps, seed, trace, json),
        },
        Cmd::Encode2cm {
            machine,
            target,
            with_integer_gadget,
            output,
            json,
        } => cmd_encode(&machine, target, with_integer_gadget, &output, json),
        Cmd::Regions {
            file,
            pval,
            n,
            basis_of,
            json,
        } => cmd_regions(&file, pval.as_deref(), n, basis_of.as_deref(), json),
    }
}

fn read_input(path: &Path) -> Result<String, i32> {
    std::fs::read_to_string(path).map_err(|e| {
        eprintln!("{}: {}", path.display(), e);
        EXIT_NO_INPUT
    })
}

fn load_protocol(path: &Path) -> Result<Protocol, i32> {
    let text = read_input(path)?;
    parse_protocol(&text).map_err(|e| {
        eprintln!("{}: {}: {} [{}]", path.display(), e.span, e.message, e.code.as_str());
        EXIT_PARSE
    })
}

fn parse_pval_pairs(s: &str) -> Result<Vec<(String, Rat)>, String> {
    let mut out: Vec<(String, Rat)> = Vec::new();
    for piece in s.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            continue;
        }
        let (name, value) = piece
            .split_once('=')
            .ok_or_else(|| format!("expected NAME=VALUE, got '{}'", piece))?;
        let value = parse_rat(value.trim())
            .ok_or_else(|| format!("'{}' is not a nonnegative rational", value))?;
        let name = name.trim().to_string();
        if out.iter().any(|(n, _)| *n == name) {
            return Err(format!("parameter '{}' assigned twice", name));
        }
        out.push((name, value));
    }
    Ok(out)
}

/// Parses `--pval` and resolves it against the protocol's parameters.
fn valuation_arg(p: &Protocol, arg: Option<&str>) -> Result<Option<(Vec<(String, Rat)>, Valuation)>, i32> {
    let Some(arg) = arg else {
        return Ok(None);
    };
    let pairs = parse_pval_pairs(arg).map_err(|msg| {
        eprintln!("--pval: {}", msg);
        EXIT_USAGE
    })?;
    let refs: Vec<(&str, Rat)> = pairs.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
    let val = valuation_of(p, &refs).map_err(|e| {
        eprintln!("--pval: {}", e);
        EXIT_USAGE
    })?;
    Ok(Some((pairs, val)))
}

fn resolve_goal(p: &Protocol, name: &str) -> Result<crate::model::LocId, i32> {
    p.loc_id(name).ok_or_else(|| {
        eprintln!("unknown location '{}'", name);
        EXIT_USAGE
    })
}

fn print_config(p: &Protocol, cfg: &Config) {
    for (i, &loc) in cfg.locs.iter().enumerate() {
        let mut parts = vec![p.loc_name(loc).to_string()];
        parts.extend(cfg.clocks[i].iter().map(fmt_rat));
        println!("({})", parts.join(", "));
    }
}

fn cmd_validate(file: &Path, json: bool) -> i32 {
    let text = match read_input(file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let p = match parse_protocol(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}: {}: {} [{}]", file.display(), e.span, e.message, e.code.as_str());
            if json {
                JsonDoc::new("validate", "parse error").print();
            }
            return EXIT_PARSE;
        }
    };
    let diags = crate::model::validate(&p);
    for d in &diags {
        eprintln!("{}: {}", file.display(), d);
    }
    let verdict = if diags.is_empty() { "ok" } else { "invalid" };
    if json {
        JsonDoc::new("validate", verdict).print();
    } else {
        println!("{}", verdict);
    }
    if diags.is_empty() {
        EXIT_YES
    } else {
        EXIT_NO
    }
}

fn cmd_classify(file: &Path, json: bool) -> i32 {
    let p = match load_protocol(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let info = classify(&p);
    if json {
        JsonDoc::new("classify", info.class.as_str()).print();
        return EXIT_YES;
    }
    println!("clocks: {}", info.clock_count);
    for (i, role) in info.roles.iter().enumerate() {
        let pid = crate::model::ParamId(i);
        println!(
            "param {}: {}, bound {}",
            p.param_name(pid),
            role.as_str(),
            p.bound_or_default(pid)
        );
    }
    println!("class: {}", info.class.as_str());
    println!("boundedness: {}", info.boundedness.as_str());
    EXIT_YES
}

fn verdict_line(v: &Verdict) -> String {
    match &v.status {
        Status::Decided { answer: true } => "DECIDED YES".to_string(),
        Status::Decided { answer: false } => "DECIDED NO".to_string(),
        Status::SemiDecided => {
            let n = v.witness.as_ref().map(|w| w.n).unwrap_or_default();
            format!("SEMIDECIDED YES (N={})", n)
        }
        Status::Inconclusive { explored_up_to } => format!("INCONCLUSIVE (N<={})", explored_up_to),
        Status::Unsupported { citation } => format!("UNSUPPORTED ({})", citation.as_str()),
    }
}

fn exit_of(v: &Verdict) -> i32 {
    match &v.status {
        Status::Decided { answer: true } | Status::SemiDecided => EXIT_YES,
        Status::Decided { answer: false } => EXIT_NO,
        Status::Inconclusive { .. } => EXIT_INCONCLUSIVE,
        Status::Unsupported { .. } => EXIT_UNSUPPORTED,
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    file: &Path,
    problem: ProblemArg,
    semantics: SemanticsArg,
    goal: &str,
    pval: Option<&str>,
    n_max: usize,
    step_max: usize,
    witness_out: Option<PathBuf>,
    json: bool,
) -> i32 {
    let p = match load_protocol(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let goal = match resolve_goal(&p, goal) {
        Ok(g) => g,
        Err(code) => return code,
    };
    let val = match valuation_arg(&p, pval) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let spec = ProblemSpec {
        protocol: p.clone(),
        goal,
        mode: semantics.mode(),
        kind: problem.kind(),
        limits: SearchLimits { n_max, step_max },
        pval: val.map(|(_, v)| v),
    };
    let verdict = match solve(&spec) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("check: {}", e);
            return EXIT_USAGE;
        }
    };

    let mut witness_path = None;
    if let Some(w) = &verdict.witness {
        let path = witness_out.unwrap_or_else(|| default_witness_path(file));
        let pairs: Vec<(String, Rat)> = p
            .params
            .iter()
            .enumerate()
            .filter_map(|(i, name)| {
                w.pval
                    .get(&crate::model::ParamId(i))
                    .map(|v| (name.clone(), v.clone()))
            })
            .collect();
        let tf = TraceFile::from_execution(&p.name, &pairs, &w.trace);
        if let Err(e) = std::fs::write(&path, serialize_trace(&tf)) {
            eprintln!("cannot write witness {}: {}", path.display(), e);
            return EXIT_NO;
        }
        witness_path = Some(path);
    }

    if json {
        let mut doc = JsonDoc::new("check", verdict_line(&verdict));
        doc.witness = witness_path.as_ref().map(|p| p.display().to_string());
        doc.statistics.states_explored = verdict.stats.as_ref().map(|s| s.states);
        doc.statistics.basis_size = verdict.stats.as_ref().map(|s| s.basis);
        doc.print();
    } else {
        println!("{}", verdict_line(&verdict));
        if let Some(c) = verdict.citation {
            println!("citation: {}", c.as_str());
            eprintln!("{}: {}", c.as_str(), c.describe());
        }
        println!("procedure: {}", verdict.procedure);
        if let Some(path) = &witness_path {
            println!("witness: {}", path.display());
        }
        match &verdict.counterexample {
            Some(AfCounterexample::Stuck { trace }) => {
                println!("counterexample: stuck after {} steps", trace.labels.len());
            }
            Some(AfCounterexample::Lasso { stem, cycle_edges }) => {
                let edges: Vec<String> = cycle_edges.iter().map(|e| e.to_string()).collect();
                println!(
                    "counterexample: lasso after {} steps, cycle edges [{}]",
                    stem.labels.len(),
                    edges.join(", ")
                );
            }
            None => {}
        }
        if let Some(s) = &verdict.stats {
            println!("explored states: {}", s.states);
            println!("basis size: {}", s.basis);
        }
    }
    exit_of(&verdict)
}

fn default_witness_path(input: &Path) -> PathBuf {
    let stem = input
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "check".to_string());
    PathBuf::from(format!("{}.witness.trace", stem))
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    file: &Path,
    n: Option<usize>,
    pval: Option<&str>,
    semantics: Option<SemanticsArg>,
    steps: usize,
    seed: u64,
    trace_out: Option<PathBuf>,
    json: bool,
) -> i32 {
    let p = match load_protocol(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let (Some(n), Some(semantics)) = (n, semantics) else {
        eprintln!("simulate needs --n and --semantics (or --replay)");
        return EXIT_USAGE;
    };
    let val = match valuation_arg(&p, pval) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let (pairs, conc) = match concretize(&p, val) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let (exec, end) = match simulate(&conc, semantics.mode(), n, steps, seed) {
        Ok(x) => x,
        Err(e) => {
            eprintln!("simulate: {}", e);
            return EXIT_USAGE;
        }
    };
    let mut trace_path = None;
    if let Some(path) = trace_out {
        let tf = TraceFile::from_execution(&p.name, &pairs, &exec);
        if let Err(e) = std::fs::write(&path, serialize_trace(&tf)) {
            eprintln!("cannot write trace {}: {}", path.display(), e);
            return EXIT_NO;
        }
        eprintln!("trace written: {}", path.display());
        trace_path = Some(path);
    }
    let endword = match end {
        RunEnd::Terminal => "terminal",
        RunEnd::Truncated => "truncated",
    };
    eprintln!("steps: {}, end: {}", exec.labels.len(), endword);
    if json {
        let mut doc = JsonDoc::new("simulate", endword);
        doc.witness = trace_path.as_ref().map(|p| p.display().to_string());
        doc.statistics.states_explored = Some(exec.states.len());
        doc.print();
    } else {
        print_config(&conc, exec.last());
    }
    EXIT_YES
}

/// Substitutes the valuation when the protocol has parameters; a missing or
/// partial assignment is a usage error.
fn concretize(
    p: &Protocol,
    val: Option<(Vec<(String, Rat)>, Valuation)>,
) -> Result<(Vec<(String, Rat)>, Protocol), i32> {
    let (pairs, val) = val.unwrap_or_default();
    if p.params.is_empty() {
        return Ok((pairs, p.clone()));
    }
    let conc = substitute(p, &val).map_err(|e| {
        eprintln!("--pval: {}", e);
        EXIT_USAGE
    })?;
    Ok((pairs, conc))
}

fn cmd_replay(file: &Path, trace: &Path, json: bool) -> i32 {
    let p = match load_protocol(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let text = match read_input(trace) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let tf = match parse_trace(&text) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}: {}: {} [{}]", trace.display(), e.span, e.message, e.code.as_str());
            return EXIT_PARSE;
        }
    };
    if tf.protocol != p.name {
        eprintln!(
            "warning: trace was recorded for protocol '{}', file defines '{}'",
            tf.protocol, p.name
        );
    }
    let refs: Vec<(&str, Rat)> = tf.pval.iter().map(|(n, v)| (n.as_str(), v.clone())).collect();
    let val = match valuation_of(&p, &refs) {
        Ok(v) => v,
        Err(e) => {
            eprintln!("trace pval: {}", e);
            return EXIT_USAGE;
        }
    };
    let (_, conc) = match concretize(&p, Some((tf.pval.clone(), val))) {
        Ok(x) => x,
        Err(code) => return code,
    };
    match replay(&conc, tf.mode, tf.n, &tf.steps) {
        Ok((exec, end)) => {
            let endword = match end {
                RunEnd::Terminal => "terminal",
                RunEnd::Truncated => "truncated",
            };
            eprintln!("steps: {}, end: {}", exec.labels.len(), endword);
            if json {
                let mut doc = JsonDoc::new("simulate", "replayed");
                doc.statistics.states_explored = Some(exec.states.len());
                doc.print();
            } else {
                print_config(&conc, exec.last());
            }
            EXIT_YES
        }
        Err(e) => {
            eprintln!("REPLAY_FAIL: {}", e);
            if json {
                JsonDoc::new("simulate", "REPLAY_FAIL").print();
            }
            EXIT_NO
        }
    }
}

fn cmd_encode(machine: &Path, target: TargetArg, with_gadget: bool, output: &Path, json: bool) -> i32 {
    if with_gadget && target != TargetArg::EfReconf {
        eprintln!("--with-integer-gadget applies to --target ef-reconf only");
        return EXIT_USAGE;
    }
    let text = match read_input(machine) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let m = match parse_two_counter_machine(&text) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("{}: {}: {} [{}]", machine.display(), e.span, e.message, e.code.as_str());
            return EXIT_PARSE;
        }
    };
    let (p, variant) = match target {
        TargetArg::EfReconf => {
            let variant = if with_gadget {
                "ef-reconf with integer gadget"
            } else {
                "ef-reconf"
            };
            (encode_ef_reconf(&m, with_gadget), variant)
        }
        TargetArg::AfClique => (encode_af_clique(&m), "af-clique"),
        TargetArg::EfuClique => (
            encode_ef_univ_clique(&m, EndTiming::TwoParams { lower_cap: EFU_LOWER_CAP }),
            "efu-clique",
        ),
    };
    let p = match p {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{}: {}", machine.display(), e);
            return EXIT_PARSE;
        }
    };
    if let Err(e) = std::fs::write(output, serialize_generated(&p, &m, variant)) {
        eprintln!("cannot write {}: {}", output.display(), e);
        return EXIT_NO;
    }
    if json {
        let mut doc = JsonDoc::new("encode-2cm", "ok");
        doc.witness = Some(output.display().to_string());
        doc.print();
    } else {
        println!("wrote {}", output.display());
    }
    EXIT_YES
}

fn cmd_regions(file: &Path, pval: Option<&str>, n: Option<usize>, basis_of: Option<&str>, json: bool) -> i32 {
    let p = match load_protocol(file) {
        Ok(p) => p,
        Err(code) => return code,
    };
    let val = match valuation_arg(&p, pval) {
        Ok(v) => v,
        Err(code) => return code,
    };
    let (_, conc) = match concretize(&p, val) {
        Ok(x) => x,
        Err(code) => return code,
    };
    let region_count_line = {
        let (k, scale) = crate::model::max_constant(&conc);
        let _ = scale;
        format!("2K+2 = {} single-process regions", 2 * k + 2)
    };
    match (n, basis_of) {
        (Some(n), None) => {
            if n == 0 {
                eprintln!("--n must be at least 1");
                return EXIT_USAGE;
            }
            let summary = match region_graph_summary(&conc, Mode::Reconfigurable, n) {
                Ok(s) => s,
                Err(e) => return region_refusal(e),
            };
            if json {
                let mut doc = JsonDoc::new("regions", "ok");
                doc.statistics.states_explored = Some(summary.words);
                doc.print();
            } else {
                println!("{}", region_count_line);
                println!("region words: {}", summary.words);
                println!("time edges: {}", summary.time_edges);
                println!("discrete edges: {}", summary.discrete_edges);
            }
            EXIT_YES
        }
        (None, Some(goal)) => {
            let goal = match resolve_goal(&conc, goal) {
                Ok(g) => g,
                Err(code) => return code,
            };
            let oc = match OneClock::build(&conc) {
                Ok(oc) => oc,
                Err(e) => return region_refusal(e),
            };
            let out = match backward_coverability(&oc, goal) {
                Ok(o) => o,
                Err(e) => return region_refusal(e),
            };
            let verdict = if out.reachable { "reachable" } else { "unreachable" };
            if json {
                let mut doc = JsonDoc::new("regions", verdict);
                doc.statistics.states_explored = Some(out.stats.states);
                doc.statistics.basis_size = Some(out.stats.basis);
                doc.print();
            } else {
                println!("{}", region_count_line);
                println!("{}", verdict);
                println!("basis size: {}", out.basis.len());
                for w in &out.basis {
                    println!("{}", format_word(&conc, w));
                }
            }
            if out.reachable {
                EXIT_YES
            } else {
                EXIT_NO
            }
        }
        _ => {
            eprintln!("regions needs exactly one of --n or --basis-of");
            EXIT_USAGE
        }
    }
}

fn region_refusal(e: RegionError) -> i32 {
    match e {
        RegionError::NotOneClock { .. } => eprintln!("MULTI_CLOCK: {}", e),
        _ => eprintln!("{}", e),
    }
    EXIT_UNSUPPORTED
}
