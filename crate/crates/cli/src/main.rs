use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use cata_core::analysis::{
    builtin_signature, check_range_overapprox, classify_associative, combine_catas, unroll_bound, BUILTIN_NAMES,
};
use cata_core::backend::{Session, SolverConfig, SolverKind};
use cata_core::engine::{decide, BoundUse, EngineConfig, Outcome, UnknownReason, Verdict};
use cata_core::frontend::{core_declarations, lower_to_core, print_cata_definition, print_sort, Dialect};
use cata_core::normalizer::Normalizer;
use cata_core::oracle::{brute_force_sat, Bounds, Interp, SearchResult, Value};
use cata_core::{parse_script, CataClass, Script, Signature, Sort, Symbol};

const EXIT_SAT: u8 = 10;
const EXIT_UNSAT: u8 = 20;
const EXIT_UNKNOWN: u8 = 30;
const EXIT_USAGE: u8 = 1;
const EXIT_BACKEND: u8 = 2;

#[derive(Parser)]
#[command(name = "cata", version, about = "Satisfiability modulo catamorphisms by incremental unrolling")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Decide an extended SMT-LIB script.
    Solve {
        file: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Write the lowered SMT-LIB script to standard output instead of solving.
        #[arg(long)]
        emit_core_smt2: bool,
        /// Print a single-line JSON report.
        #[arg(long)]
        json: bool,
    },
    /// Classify the catamorphisms of a script, or named builtins.
    Analyze {
        /// Script file; omit to analyze builtins given with --builtin.
        file: Option<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        builtin: Vec<String>,
        /// Disequality count used for the bound.
        #[arg(long, default_value_t = 0)]
        p: u64,
        #[command(flatten)]
        solver: SolverArgs,
    },
    /// Print the standard-form clauses of a script's assertions.
    Normalize {
        file: PathBuf,
        /// Print a complete SMT-LIB script asserting the disjunction of the clauses.
        #[arg(long)]
        emit: bool,
    },
    /// Build the componentwise product of associative builtin catamorphisms.
    Combine {
        #[arg(required = true)]
        names: Vec<String>,
    },
    /// Decide a script by exhaustive search over small trees.
    Oracle {
        file: PathBuf,
        /// Element values, comma separated, e.g. `0,1,2` or `"clean","dirty"`.
        #[arg(long, value_delimiter = ',', required = true)]
        domain: Vec<String>,
        #[arg(long, default_value_t = 5)]
        max_size: usize,
        /// Uninterpreted predicate as `name=v1,v2`: true exactly on the listed values.
        #[arg(long)]
        interp: Vec<String>,
    },
    /// Run every `.smt2` file of a directory against its `.expect` file.
    Bench {
        dir: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        /// Wall-clock limit per file.
        #[arg(long, default_value_t = 10_000)]
        file_timeout_ms: u64,
    },
}

#[derive(Args, Clone)]
struct SolverArgs {
    /// z3, cvc, path:<exe> or replay:<trace>
    #[arg(long, default_value = "z3")]
    solver: SolverKind,
    #[arg(long, default_value_t = 64)]
    max_unroll: usize,
    #[arg(long, default_value = "auto")]
    bound_mode: BoundUse,
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
    /// Write the solver dialogue to this file.
    #[arg(long)]
    emit_trace: Option<PathBuf>,
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig::new(self.solver.clone()).with_timeout_ms(self.timeout_ms)
    }

    fn engine(&self) -> EngineConfig {
        EngineConfig { max_unroll: self.max_unroll, bound_use: self.bound_mode }
    }

    fn start(&self) -> Result<Session> {
        let cfg = self.config();
        Session::start(&cfg).with_context(|| format!("starting {}", cfg.kind))
    }

    fn save_trace(&self, session: &Session) -> Result<()> {
        if let Some(p) = &self.emit_trace {
            fs::write(p, session.trace()).with_context(|| format!("writing {}", p.display()))?;
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct RunReport {
    input: String,
    verdict: String,
    depth: usize,
    time_ms: u64,
    backend: String,
    bound: Option<usize>,
    rounds_ms: Vec<u64>,
}

/// Errors that map to the usage exit code rather than the backend one.
#[derive(Debug)]
struct Usage(anyhow::Error);

impl std::fmt::Display for Usage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for Usage {}

fn usage(e: impl Into<anyhow::Error>) -> anyhow::Error {
    anyhow::Error::new(Usage(e.into()))
}

fn read_script(path: &Path) -> Result<Script> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display())).map_err(usage)?;
    parse_script(&text).map_err(|e| usage(anyhow::anyhow!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<Usage>().is_some() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::from(EXIT_BACKEND)
            }
        }
    }
}

fn run(cmd: Command) -> Result<u8> {
    match cmd {
        Command::Solve { file, solver, emit_core_smt2, json } => cmd_solve(&file, &solver, emit_core_smt2, json),
        Command::Analyze { file, builtin, p, solver } => cmd_analyze(file.as_deref(), &builtin, p, &solver),
        Command::Normalize { file, emit } => cmd_normalize(&file, emit),
        Command::Combine { names } => cmd_combine(&names),
        Command::Oracle { file, domain, max_size, interp } => cmd_oracle(&file, &domain, max_size, &interp),
        Command::Bench { dir, solver, file_timeout_ms } => cmd_bench(&dir, &solver, file_timeout_ms),
    }
}

fn exit_code(v: &Verdict) -> u8 {
    match &v.outcome {
        Outcome::Sat { .. } => EXIT_SAT,
        Outcome::Unsat => EXIT_UNSAT,
        Outcome::SatByBound => EXIT_UNKNOWN,
        Outcome::Unknown(UnknownReason::Backend(_)) => EXIT_BACKEND,
        Outcome::Unknown(_) => EXIT_UNKNOWN,
    }
}

fn solve_file(path: &Path, solver: &SolverArgs) -> Result<(Verdict, u64, String)> {
    let script = read_script(path)?;
    let mut session = solver.start()?;
    let start = Instant::now();
    let result = decide(&script, &mut session, &solver.engine());
    let time_ms = start.elapsed().as_millis() as u64;
    solver.save_trace(&session)?;
    let name = session.name().to_string();
    session.close();
    Ok((result.map_err(usage)?, time_ms, name))
}

fn cmd_solve(path: &Path, solver: &SolverArgs, emit_core: bool, json: bool) -> Result<u8> {
    if emit_core {
        let script = read_script(path)?;
        print!("{}", lower_to_core(&script, solver.config().dialect()));
        return Ok(0);
    }
    let (v, time_ms, backend) = solve_file(path, solver)?;
    if json {
        let report = RunReport {
            input: path.display().to_string(),
            verdict: v.outcome.label().to_string(),
            depth: v.depth,
            time_ms,
            backend,
            bound: v.bound,
            rounds_ms: v.rounds.iter().map(|r| r.elapsed_ms).collect(),
        };
        println!("{}", serde_json::to_string(&report)?);
    } else {
        println!("{} {} {}", v.outcome.label(), v.depth, time_ms);
        match &v.outcome {
            Outcome::Sat { model: Some(m) } => println!("{m}"),
            Outcome::Unknown(r) => eprintln!("unknown: {r}"),
            _ => {}
        }
    }
    Ok(exit_code(&v))
}

fn cmd_analyze(file: Option<&Path>, builtins: &[String], p: u64, solver: &SolverArgs) -> Result<u8> {
    let (sig, names): (Signature, Vec<Symbol>) = match file {
        Some(f) => {
            let s = read_script(f)?;
            let names = s.signature.catas.iter().map(|c| c.name.clone()).collect();
            (s.signature, names)
        }
        None => {
            if builtins.is_empty() {
                return Err(usage(anyhow::anyhow!("give a script or --builtin (one of {})", BUILTIN_NAMES.join(", "))));
            }
            let refs: Vec<&str> = builtins.iter().map(String::as_str).collect();
            let sig = builtin_signature(&refs).map_err(usage)?;
            (sig, builtins.iter().map(Symbol::new).collect())
        }
    };
    let mut session = solver.start()?;
    for n in &names {
        let c = sig.cata(n).expect("listed catamorphism");
        let [syn, sem] = classify_associative(c, &sig, &mut session)?;
        println!("{syn}");
        println!("{sem}");
        println!("{}", check_range_overapprox(c, &sig, &mut session)?);
        let class =
            if c.class == CataClass::Unclassified && syn.result.holds() { CataClass::Associative } else { c.class };
        match unroll_bound(n, class, p) {
            Ok(b) => println!("bound[{n}] {b}"),
            Err(e) => println!("bound[{n}] none: {e}"),
        }
    }
    solver.save_trace(&session)?;
    Ok(0)
}

fn cmd_normalize(path: &Path, emit: bool) -> Result<u8> {
    let script = read_script(path)?;
    let sig = &script.signature;
    let clauses = Normalizer::new(sig).to_standard_form(&script.formula()).map_err(usage)?;
    if !emit {
        for (i, c) in clauses.iter().enumerate() {
            println!("; clause {i}, p = {}", c.p());
            println!("{c}");
        }
        if clauses.is_empty() {
            println!("; no clauses (unsatisfiable)");
        }
        return Ok(0);
    }
    let d = Dialect::Z3;
    for l in core_declarations(&script, d) {
        println!("{l}");
    }
    let declared: BTreeSet<&str> = sig.constants.iter().map(|v| v.name.as_str()).collect();
    let mut fresh = BTreeSet::new();
    for c in &clauses {
        for v in cata_core::free_vars(&c.to_formula()) {
            if !declared.contains(v.name.as_str()) {
                fresh.insert((v.name.to_string(), print_sort(&v.sort, d)));
            }
        }
    }
    for (n, s) in fresh {
        println!("(declare-fun {n} () {s})");
    }
    let disj: Vec<String> = clauses.iter().map(|c| c.to_string()).collect();
    match disj.len() {
        0 => println!("(assert false)"),
        1 => println!("(assert {})", disj[0]),
        _ => println!("(assert (or {}))", disj.join(" ")),
    }
    println!("(check-sat)");
    Ok(0)
}

fn cmd_combine(names: &[String]) -> Result<u8> {
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut sig = builtin_signature(&refs).map_err(usage)?;
    let syms: Vec<Symbol> = names.iter().map(Symbol::new).collect();
    let n = combine_catas(&mut sig, &syms).map_err(usage)?;
    println!("{}", print_cata_definition(sig.cata(&n).unwrap(), &sig));
    Ok(0)
}

fn element_sort(sig: &Signature) -> Option<Sort> {
    sig.datatypes.iter().find_map(|d| d.binary_view()).map(|v| v.elem_sort)
}

fn cmd_oracle(path: &Path, domain: &[String], max_size: usize, interps: &[String]) -> Result<u8> {
    let script = read_script(path)?;
    let sig = &script.signature;
    let sort = element_sort(sig).unwrap_or(Sort::Int);
    let values = parse_values(domain, &sort)?;
    let mut interp = Interp::new();
    for spec in interps {
        let (name, members) =
            spec.split_once('=').ok_or_else(|| usage(anyhow::anyhow!("--interp expects name=v1,v2")))?;
        let f = sig
            .function(&Symbol::new(name))
            .ok_or_else(|| usage(anyhow::anyhow!("no uninterpreted function {name}")))?;
        if f.params.len() != 1 || f.result != Sort::Bool {
            return Err(usage(anyhow::anyhow!("{name} is not a unary predicate")));
        }
        let ms: Vec<String> = members.split(',').filter(|m| !m.is_empty()).map(str::to_string).collect();
        interp = interp.with_predicate(name, parse_values(&ms, &f.params[0])?);
    }
    let bounds = Bounds::new(max_size, values);
    match brute_force_sat(&script.formula(), sig, &interp, &bounds).map_err(usage)? {
        SearchResult::Sat(w) => {
            println!("sat");
            println!("{w}");
            Ok(EXIT_SAT)
        }
        SearchResult::NoModelWithinBounds => {
            println!("no model within bounds (size <= {max_size})");
            Ok(EXIT_UNSAT)
        }
    }
}

fn parse_values(texts: &[String], sort: &Sort) -> Result<Vec<Value>> {
    texts
        .iter()
        .map(|t| {
            let t = t.trim();
            Value::parse_element(t, sort)
                .or_else(|| Value::parse_element(&format!("\"{t}\""), sort))
                .ok_or_else(|| usage(anyhow::anyhow!("`{t}` is not a value of sort {sort}")))
        })
        .collect()
}

fn cmd_bench(dir: &Path, solver: &SolverArgs, file_timeout_ms: u64) -> Result<u8> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))
        .map_err(usage)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "smt2"))
        .collect();
    files.sort();
    let mut ran = 0;
    let mut failed = Vec::new();
    let mut skipped = Vec::new();
    println!("{:<28} {:<8} {:<14} {:>9}", "benchmark", "expect", "result", "time(s)");
    for f in &files {
        let name = f.file_stem().unwrap().to_string_lossy().to_string();
        let Ok(expect) = fs::read_to_string(f.with_extension("expect")) else {
            skipped.push(name);
            continue;
        };
        let expect = expect.trim().to_string();
        ran += 1;
        let (result, time_ms) = match solve_file(f, solver) {
            Ok((v, ms, _)) => (v.outcome.label().to_string(), ms),
            Err(e) => (format!("error: {e:#}"), 0),
        };
        let matches = match expect.as_str() {
            "sat" => result == "sat" || result == "sat-by-bound",
            other => result == other,
        };
        let ok = matches && time_ms <= file_timeout_ms;
        println!(
            "{name:<28} {expect:<8} {result:<14} {:>9.3}{}",
            time_ms as f64 / 1000.0,
            if ok { "" } else { "  MISMATCH" }
        );
        if !ok {
            failed.push(name);
        }
    }
    println!("{ran} benchmarks, {} mismatched, {} skipped", failed.len(), skipped.len());
    for s in &skipped {
        println!("skipped {s}: no .expect file");
    }
    if !failed.is_empty() {
        bail!("mismatched: {}", failed.join(", "));
    }
    Ok(0)
}
