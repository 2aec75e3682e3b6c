//! Incremental SMT-LIB sessions with an external solver process, plus a
//! replay backend answering from a recorded trace.

mod transport;

use std::fmt;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::frontend::{read_all, Dialect, Sexp};

pub use transport::{ProcessTransport, ReplayTransport, Transport, RESPONSE_PREFIX};

/// Environment variable overriding the solver executable.
pub const SOLVER_PATH_ENV: &str = "CATA_SOLVER_PATH";

/// Extra time granted past the solver's own per-check limit before the
/// process is killed.
const KILL_GRACE: Duration = Duration::from_millis(2000);

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum BackendError {
    #[error("cannot start {program}: {message}")]
    Spawn { program: String, message: String },
    #[error("solver error: {0}")]
    Solver(String),
    #[error("unexpected solver output: {0:?}")]
    Protocol(String),
    #[error("{0}")]
    Io(String),
    #[error("solver {0} exited")]
    Exited(String),
    #[error("session is closed")]
    Closed,
    #[error("{trace}:{line}: replay diverged: expected {expected:?}, sent {sent:?}")]
    ReplayDivergence { trace: String, line: usize, expected: String, sent: String },
    #[error("invalid solver {0:?}; expected z3, cvc, path:<exe> or replay:<file>")]
    BadSpec(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverKind {
    Z3,
    Cvc,
    Path(PathBuf),
    Replay(PathBuf),
}

impl std::str::FromStr for SolverKind {
    type Err = BackendError;

    /// `z3`, `cvc`, `path:<exe>` or `replay:<file>`.
    fn from_str(s: &str) -> Result<SolverKind, BackendError> {
        match s {
            "z3" => Ok(SolverKind::Z3),
            "cvc" | "cvc4" | "cvc5" => Ok(SolverKind::Cvc),
            _ => {
                if let Some(p) = s.strip_prefix("path:").filter(|p| !p.is_empty()) {
                    Ok(SolverKind::Path(p.into()))
                } else if let Some(p) = s.strip_prefix("replay:").filter(|p| !p.is_empty()) {
                    Ok(SolverKind::Replay(p.into()))
                } else {
                    Err(BackendError::BadSpec(s.to_string()))
                }
            }
        }
    }
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverKind::Z3 => f.write_str("z3"),
            SolverKind::Cvc => f.write_str("cvc"),
            SolverKind::Path(p) => write!(f, "path:{}", p.display()),
            SolverKind::Replay(p) => write!(f, "replay:{}", p.display()),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SolverConfig {
    pub kind: SolverKind,
    /// Per check, in milliseconds; always positive.
    pub timeout_ms: u64,
    pub logic: Option<String>,
    pub extra_args: Vec<String>,
}

impl SolverConfig {
    pub fn new(kind: SolverKind) -> SolverConfig {
        SolverConfig { kind, timeout_ms: 10_000, logic: None, extra_args: Vec::new() }
    }

    pub fn z3() -> SolverConfig {
        SolverConfig::new(SolverKind::Z3)
    }

    pub fn replay(path: impl Into<PathBuf>) -> SolverConfig {
        SolverConfig::new(SolverKind::Replay(path.into()))
    }

    pub fn with_timeout_ms(mut self, ms: u64) -> SolverConfig {
        self.timeout_ms = ms.max(1);
        self
    }

    /// Printer dialect for this solver. Replay traces are recorded from z3.
    pub fn dialect(&self) -> Dialect {
        match &self.kind {
            SolverKind::Cvc => Dialect::Cvc5,
            SolverKind::Path(p) if p.file_name().is_some_and(|n| n.to_string_lossy().contains("cvc")) => Dialect::Cvc5,
            SolverKind::Path(_) => Dialect::Z3,
            _ => {
                if matches!(self.kind, SolverKind::Z3) {
                    if let Some(p) = std::env::var_os(SOLVER_PATH_ENV) {
                        if Path::new(&p).file_name().is_some_and(|n| n.to_string_lossy().contains("cvc")) {
                            return Dialect::Cvc5;
                        }
                    }
                }
                Dialect::Z3
            }
        }
    }

    fn program(&self) -> PathBuf {
        if let Some(p) = std::env::var_os(SOLVER_PATH_ENV) {
            if !matches!(self.kind, SolverKind::Path(_)) {
                return p.into();
            }
        }
        match &self.kind {
            SolverKind::Z3 => "z3".into(),
            SolverKind::Cvc => "cvc5".into(),
            SolverKind::Path(p) | SolverKind::Replay(p) => p.clone(),
        }
    }

    fn args(&self) -> Vec<String> {
        let mut args = match self.dialect() {
            Dialect::Cvc5 => vec![
                "--lang".to_string(),
                "smt2".into(),
                "--incremental".into(),
                "--produce-models".into(),
                format!("--tlimit-per={}", self.timeout_ms),
            ],
            _ => vec!["-in".to_string(), "-smt2".into(), format!("-t:{}", self.timeout_ms), "smt.case_split=0".into()],
        };
        args.extend(self.extra_args.iter().cloned());
        args
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SatVerdict {
    Sat,
    Unsat,
    Unknown,
}

impl fmt::Display for SatVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SatVerdict::Sat => "sat",
            SatVerdict::Unsat => "unsat",
            SatVerdict::Unknown => "unknown",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckResult {
    pub verdict: SatVerdict,
    /// Raw `get-model` output; only for sat answers when a model was asked for.
    pub model: Option<String>,
    pub elapsed_ms: u64,
}

/// One incremental solver session.
pub struct Session {
    transport: Box<dyn Transport>,
    dialect: Dialect,
    timeout: Duration,
    depth: usize,
    trace: String,
    alive: bool,
    name: String,
}

impl Session {
    /// Starts the solver and sends `(set-option :produce-models true)`, then
    /// `set-logic` when a logic is configured.
    pub fn start(config: &SolverConfig) -> Result<Session, BackendError> {
        let transport: Box<dyn Transport> = match &config.kind {
            SolverKind::Replay(p) => Box::new(ReplayTransport::open(p)?),
            _ => Box::new(ProcessTransport::spawn(&config.program(), &config.args())?),
        };
        let mut s = Session::with_transport(transport, config.dialect(), Duration::from_millis(config.timeout_ms));
        s.name = config.kind.to_string();
        s.send("(set-option :produce-models true)")?;
        if let Some(l) = &config.logic {
            s.send(&format!("(set-logic {l})"))?;
        }
        log::debug!("started solver session {}", s.name);
        Ok(s)
    }

    pub fn with_transport(transport: Box<dyn Transport>, dialect: Dialect, timeout: Duration) -> Session {
        Session { transport, dialect, timeout, depth: 0, trace: String::new(), alive: true, name: "custom".into() }
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Current push depth.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Everything sent and received so far; responses are `;; `-prefixed.
    pub fn trace(&self) -> &str {
        &self.trace
    }

    /// Sends one command, which must be a single line.
    pub fn send(&mut self, command: &str) -> Result<(), BackendError> {
        if !self.alive {
            return Err(BackendError::Closed);
        }
        debug_assert!(!command.contains('\n'));
        self.trace.push_str(command);
        self.trace.push('\n');
        let r = self.transport.send_line(command);
        if r.is_err() {
            self.alive = false;
        }
        r
    }

    pub fn assert(&mut self, formula_text: &str) -> Result<(), BackendError> {
        self.send(&format!("(assert {formula_text})"))
    }

    pub fn push(&mut self) -> Result<(), BackendError> {
        self.send("(push)")?;
        self.depth += 1;
        Ok(())
    }

    pub fn pop(&mut self) -> Result<(), BackendError> {
        assert!(self.depth > 0, "pop without matching push");
        self.depth -= 1;
        self.send("(pop)")
    }

    fn recv(&mut self, deadline: Instant) -> Result<Option<String>, BackendError> {
        if !self.alive {
            return Err(BackendError::Closed);
        }
        let wait = deadline.saturating_duration_since(Instant::now());
        match self.transport.recv_line(wait) {
            Ok(Some(l)) => {
                self.trace.push_str(RESPONSE_PREFIX);
                self.trace.push_str(&l);
                self.trace.push('\n');
                Ok(Some(l))
            }
            Ok(None) => {
                log::warn!("solver {} did not answer in time; killing it", self.name);
                self.close();
                Ok(None)
            }
            Err(e) => {
                self.alive = false;
                Err(e)
            }
        }
    }

    /// `(check-sat)` on the current assertion stack. A solver that does not
    /// answer in time is killed and the check reported unknown.
    pub fn check(&mut self) -> Result<CheckResult, BackendError> {
        self.send("(check-sat)")?;
        let start = Instant::now();
        let deadline = start + self.timeout + KILL_GRACE;
        loop {
            let Some(line) = self.recv(deadline)? else {
                return Ok(CheckResult { verdict: SatVerdict::Unknown, model: None, elapsed_ms: ms_since(start) });
            };
            let verdict = match line.trim() {
                "" => continue,
                "sat" => SatVerdict::Sat,
                "unsat" => SatVerdict::Unsat,
                "unknown" => SatVerdict::Unknown,
                other if other.starts_with("(error") => {
                    let rest = self.read_balanced(line.clone(), deadline)?;
                    return Err(BackendError::Solver(error_message(&rest)));
                }
                _ => return Err(BackendError::Protocol(line)),
            };
            return Ok(CheckResult { verdict, model: None, elapsed_ms: ms_since(start) });
        }
    }

    /// `(get-model)`; the raw s-expression text, lines joined with `\n`.
    pub fn get_model(&mut self) -> Result<String, BackendError> {
        self.send("(get-model)")?;
        let deadline = Instant::now() + self.timeout + KILL_GRACE;
        let first = loop {
            match self.recv(deadline)? {
                Some(l) if l.trim().is_empty() => continue,
                Some(l) => break l,
                None => return Err(BackendError::Protocol("no answer to get-model".into())),
            }
        };
        if !first.trim_start().starts_with('(') {
            return Err(BackendError::Protocol(first));
        }
        let text = self.read_balanced(first, deadline)?;
        if text.trim_start().starts_with("(error") {
            return Err(BackendError::Solver(error_message(&text)));
        }
        Ok(text)
    }

    fn read_balanced(&mut self, first: String, deadline: Instant) -> Result<String, BackendError> {
        let mut text = first;
        while paren_balance(&text) > 0 {
            match self.recv(deadline)? {
                Some(l) => {
                    text.push('\n');
                    text.push_str(&l);
                }
                None => return Err(BackendError::Protocol(text)),
            }
        }
        Ok(text)
    }

    /// Pushes a frame, asserts each formula, checks, optionally fetches a
    /// model for a sat answer, and pops. The frame is popped on error paths
    /// too, whenever the session is still usable.
    pub fn check_frame(&mut self, assertions: &[String], want_model: bool) -> Result<CheckResult, BackendError> {
        let depth = self.depth;
        self.push()?;
        let r = (|| {
            for a in assertions {
                self.assert(a)?;
            }
            let mut r = self.check()?;
            if want_model && r.verdict == SatVerdict::Sat {
                r.model = Some(self.get_model()?);
            }
            Ok(r)
        })();
        if self.alive {
            self.pop()?;
        } else {
            self.depth = depth;
        }
        debug_assert_eq!(self.depth, depth);
        r
    }

    pub fn is_alive(&self) -> bool {
        self.alive
    }

    pub fn close(&mut self) {
        if self.alive {
            self.transport.close();
            self.alive = false;
        }
    }
}

impl Drop for Session {
    fn drop(&mut self) {
        if self.alive {
            let _ = self.transport.send_line("(exit)");
        }
        self.close();
    }
}

fn ms_since(t: Instant) -> u64 {
    t.elapsed().as_millis() as u64
}

/// Open minus close parentheses outside string literals and quoted symbols.
fn paren_balance(text: &str) -> i64 {
    let mut depth = 0i64;
    let mut in_str = false;
    let mut in_quote = false;
    for c in text.chars() {
        match c {
            '"' if !in_quote => in_str = !in_str,
            '|' if !in_str => in_quote = !in_quote,
            '(' if !in_str && !in_quote => depth += 1,
            ')' if !in_str && !in_quote => depth -= 1,
            _ => {}
        }
    }
    depth
}

fn error_message(text: &str) -> String {
    match read_all(text).ok().as_deref() {
        Some([Sexp::List { items, .. }]) if items.len() == 2 => match &items[1] {
            Sexp::Atom { text, .. } => text.clone(),
            other => other.to_string(),
        },
        _ => text.trim().to_string(),
    }
}

/// Values of the nullary definitions in a model, as printed by the solver.
pub fn model_values(model: &str) -> Vec<(String, String)> {
    let Ok(sexps) = read_all(model) else { return Vec::new() };
    let mut out = Vec::new();
    let mut visit = |items: &[Sexp]| {
        for it in items {
            if let Some([head, name, params, _sort, value]) = it.list() {
                if head.symbol() == Some("define-fun") && params.list().is_some_and(|p| p.is_empty()) {
                    if let Some(n) = name.symbol() {
                        out.push((n.to_string(), value.to_string()));
                    }
                }
            }
        }
    };
    for s in &sexps {
        if let Some(items) = s.list() {
            match items.first().and_then(Sexp::symbol) {
                Some("model") => visit(&items[1..]),
                _ => visit(items),
            }
        }
    }
    out
}

/// Whether the configured solver can be started.
pub fn solver_available(config: &SolverConfig) -> bool {
    match Session::start(config) {
        Ok(mut s) => matches!(s.check(), Ok(CheckResult { verdict: SatVerdict::Sat, .. })),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn replay(text: &str) -> Session {
        let t = ReplayTransport::from_text(Path::new("mem.trace"), text);
        Session::with_transport(Box::new(t), Dialect::Z3, Duration::from_secs(1))
    }

    #[test]
    fn solver_spec_parsing() {
        assert_eq!("z3".parse::<SolverKind>().unwrap(), SolverKind::Z3);
        assert_eq!("path:/bin/x".parse::<SolverKind>().unwrap(), SolverKind::Path("/bin/x".into()));
        assert_eq!("replay:a.trace".parse::<SolverKind>().unwrap(), SolverKind::Replay("a.trace".into()));
        assert!("path:".parse::<SolverKind>().is_err());
        assert!("yices".parse::<SolverKind>().is_err());
    }

    #[test]
    fn replay_answers_and_records() {
        let mut s = replay(
            "(declare-fun x () Int)\n(check-sat)\n;; sat\n(push)\n(assert false)\n(check-sat)\n;; unsat\n(pop)\n",
        );
        s.send("(declare-fun x () Int)").unwrap();
        assert_eq!(s.check().unwrap().verdict, SatVerdict::Sat);
        let r = s.check_frame(&["false".into()], true).unwrap();
        assert_eq!(r.verdict, SatVerdict::Unsat);
        assert_eq!(s.depth(), 0);
        assert!(s.trace().ends_with("(check-sat)\n;; unsat\n(pop)\n"));
    }

    #[test]
    fn replay_divergence_is_an_error() {
        let mut s = replay("(check-sat)\n;; sat\n");
        let e = s.send("(declare-fun y () Int)").unwrap_err();
        assert!(matches!(e, BackendError::ReplayDivergence { line: 1, .. }));
    }

    #[test]
    fn garbage_verdict_is_a_protocol_error() {
        let mut s = replay("(check-sat)\n;; sta\n");
        assert_eq!(s.check().unwrap_err(), BackendError::Protocol("sta".into()));
    }

    #[test]
    fn solver_error_line() {
        let mut s = replay("(check-sat)\n;; (error \"line 3 column 10: unknown constant y\")\n");
        assert_eq!(s.check().unwrap_err(), BackendError::Solver("line 3 column 10: unknown constant y".into()));
    }

    #[test]
    fn frame_is_popped_when_the_check_fails() {
        let mut s = replay("(push)\n(assert true)\n(check-sat)\n;; bogus\n(pop)\n");
        assert!(s.check_frame(&["true".into()], false).is_err());
        assert_eq!(s.depth(), 0);
    }

    #[test]
    fn multi_line_model() {
        let mut s = replay(
            "(check-sat)\n;; sat\n(get-model)\n;; (\n;;   (define-fun t2 () RealTree\n;;     Leaf)\n;;   (define-fun x () Real\n;;     (- 5.0))\n;; )\n",
        );
        s.check().unwrap();
        let m = s.get_model().unwrap();
        assert_eq!(model_values(&m), vec![("t2".to_string(), "Leaf".to_string()), ("x".into(), "(- 5.0)".into())]);
    }

    #[test]
    fn missing_executable() {
        let cfg = SolverConfig::new(SolverKind::Path("/nonexistent/solver".into()));
        assert!(matches!(Session::start(&cfg), Err(BackendError::Spawn { .. })));
    }

    #[test]
    fn paren_balance_ignores_strings() {
        assert_eq!(paren_balance("(error \"(\""), 1);
        assert_eq!(paren_balance("(a |)| b)"), 0);
    }
}
