use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use super::BackendError;

/// Line-oriented channel to a solver.
pub trait Transport: Send {
    fn send_line(&mut self, line: &str) -> Result<(), BackendError>;

    /// The next output line, or `None` when `timeout` elapses first.
    fn recv_line(&mut self, timeout: Duration) -> Result<Option<String>, BackendError>;

    fn close(&mut self);
}

/// A solver child process. A reader thread forwards stdout lines so reads
/// can time out.
pub struct ProcessTransport {
    child: Child,
    stdin: Option<ChildStdin>,
    lines: Receiver<std::io::Result<String>>,
    program: String,
}

impl ProcessTransport {
    pub fn spawn(program: &Path, args: &[String]) -> Result<ProcessTransport, BackendError> {
        let name = program.display().to_string();
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(|e| BackendError::Spawn { program: name.clone(), message: e.to_string() })?;
        let stdout = child.stdout.take().expect("piped stdout");
        let stdin = child.stdin.take();
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                let stop = line.is_err();
                if tx.send(line).is_err() || stop {
                    break;
                }
            }
        });
        Ok(ProcessTransport { child, stdin, lines: rx, program: name })
    }
}

impl Transport for ProcessTransport {
    fn send_line(&mut self, line: &str) -> Result<(), BackendError> {
        let stdin = self.stdin.as_mut().ok_or(BackendError::Closed)?;
        writeln!(stdin, "{line}")
            .and_then(|_| stdin.flush())
            .map_err(|e| BackendError::Io(format!("writing to {}: {e}", self.program)))
    }

    fn recv_line(&mut self, timeout: Duration) -> Result<Option<String>, BackendError> {
        match self.lines.recv_timeout(timeout) {
            Ok(Ok(l)) => Ok(Some(l)),
            Ok(Err(e)) => Err(BackendError::Io(format!("reading from {}: {e}", self.program))),
            Err(RecvTimeoutError::Timeout) => Ok(None),
            Err(RecvTimeoutError::Disconnected) => Err(BackendError::Exited(self.program.clone())),
        }
    }

    fn close(&mut self) {
        self.stdin = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl Drop for ProcessTransport {
    fn drop(&mut self) {
        self.close();
    }
}

/// Prefix marking solver output in trace files.
pub const RESPONSE_PREFIX: &str = ";; ";

/// Answers from a recorded trace. Every line sent must equal the next
/// recorded command; responses are the recorded `;; `-prefixed lines.
pub struct ReplayTransport {
    path: PathBuf,
    lines: Vec<String>,
    pos: usize,
}

impl ReplayTransport {
    pub fn open(path: &Path) -> Result<ReplayTransport, BackendError> {
        let text = fs::read_to_string(path).map_err(|e| BackendError::Spawn {
            program: format!("replay:{}", path.display()),
            message: e.to_string(),
        })?;
        Ok(ReplayTransport::from_text(path, &text))
    }

    pub fn from_text(path: &Path, text: &str) -> ReplayTransport {
        ReplayTransport { path: path.to_path_buf(), lines: text.lines().map(str::to_string).collect(), pos: 0 }
    }

    fn divergence(&self, sent: &str, expected: Option<&str>) -> BackendError {
        BackendError::ReplayDivergence {
            trace: self.path.display().to_string(),
            line: self.pos + 1,
            expected: expected.unwrap_or("<end of trace>").to_string(),
            sent: sent.to_string(),
        }
    }
}

impl Transport for ReplayTransport {
    fn send_line(&mut self, line: &str) -> Result<(), BackendError> {
        // unread responses to commands that produced output are skipped
        while self.lines.get(self.pos).is_some_and(|l| l.starts_with(RESPONSE_PREFIX)) {
            self.pos += 1;
        }
        match self.lines.get(self.pos) {
            Some(l) if l == line => {
                self.pos += 1;
                Ok(())
            }
            other => Err(self.divergence(line, other.map(String::as_str))),
        }
    }

    fn recv_line(&mut self, _timeout: Duration) -> Result<Option<String>, BackendError> {
        match self.lines.get(self.pos).and_then(|l| l.strip_prefix(RESPONSE_PREFIX)) {
            Some(r) => {
                self.pos += 1;
                Ok(Some(r.to_string()))
            }
            None => Err(BackendError::ReplayDivergence {
                trace: self.path.display().to_string(),
                line: self.pos + 1,
                expected: self.lines.get(self.pos).cloned().unwrap_or_else(|| "<end of trace>".into()),
                sent: "<waiting for a response>".into(),
            }),
        }
    }

    fn close(&mut self) {}
}
