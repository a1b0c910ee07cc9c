//! Running an external SMT-LIB solver on an emitted script.

use std::env;
use std::fmt;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

pub const SOLVER_ENV: &str = "PHFL_SMT_SOLVER";
pub const TIMEOUT_ENV: &str = "PHFL_SMT_TIMEOUT_SECS";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    pub program: PathBuf,
    pub timeout: Duration,
}

impl SolverConfig {
    /// Explicit values win over the environment; the program defaults to `z3` on the search path
    /// and the timeout to 60 seconds.
    pub fn resolve(program: Option<PathBuf>, timeout_secs: Option<u64>) -> Result<Self, SolverError> {
        let program = program.or_else(|| env::var_os(SOLVER_ENV).filter(|v| !v.is_empty()).map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("z3"));
        let timeout_secs = match timeout_secs {
            Some(t) => t,
            None => match env::var(TIMEOUT_ENV) {
                Ok(v) => v.trim().parse().map_err(|_| SolverError::Config(format!("{TIMEOUT_ENV}=`{v}` is not a number of seconds")))?,
                Err(_) => 60,
            },
        };
        Ok(SolverConfig { program, timeout: Duration::from_secs(timeout_secs) })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverAnswer {
    Sat,
    Unsat,
    Unknown(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SolverError {
    Config(String),
    Spawn { program: String, msg: String },
    Timeout(Duration),
    /// The solver ran but printed no verdict.
    Output(String),
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Config(m) => write!(f, "{m}"),
            SolverError::Spawn { program, msg } => write!(f, "cannot run solver `{program}`: {msg} (set {SOLVER_ENV})"),
            SolverError::Timeout(d) => write!(f, "solver timed out after {}s", d.as_secs()),
            SolverError::Output(o) => write!(f, "solver gave no verdict: {o}"),
        }
    }
}

impl std::error::Error for SolverError {}

/// First `sat`/`unsat`/`unknown` line of the solver's output.
pub fn parse_answer(out: &str) -> Option<SolverAnswer> {
    out.lines().map(str::trim).find_map(|l| match l {
        "sat" => Some(SolverAnswer::Sat),
        "unsat" => Some(SolverAnswer::Unsat),
        "unknown" | "timeout" => Some(SolverAnswer::Unknown(String::from(l))),
        _ => None,
    })
}

/// Runs the solver on `script` written to a temporary file and waits at most the configured timeout.
pub fn run_solver(script: &str, cfg: &SolverConfig) -> Result<(SolverAnswer, String), SolverError> {
    let spawn_err = |e: std::io::Error| SolverError::Spawn { program: cfg.program.display().to_string(), msg: e.to_string() };
    let mut file = tempfile::Builder::new().suffix(".smt2").tempfile().map_err(spawn_err)?;
    file.write_all(script.as_bytes()).map_err(spawn_err)?;
    let mut child = Command::new(&cfg.program)
        .arg(file.path())
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(spawn_err)?;
    let mut stdout = child.stdout.take().expect("piped");
    let reader = thread::spawn(move || {
        let mut s = String::new();
        let _ = stdout.read_to_string(&mut s);
        s
    });
    let start = Instant::now();
    loop {
        match child.try_wait().map_err(spawn_err)? {
            Some(_) => break,
            None if start.elapsed() >= cfg.timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(SolverError::Timeout(cfg.timeout));
            }
            None => thread::sleep(Duration::from_millis(5)),
        }
    }
    let out = reader.join().unwrap_or_default();
    match parse_answer(&out) {
        Some(a) => Ok((a, out)),
        None => {
            let mut err = String::new();
            if let Some(mut e) = child.stderr.take() {
                let _ = e.read_to_string(&mut err);
            }
            Err(SolverError::Output(format!("{}{}", out.trim(), err.trim())))
        }
    }
}

/// Whether the configured solver can be started at all.
pub fn solver_available(cfg: &SolverConfig) -> bool {
    Command::new(&cfg.program).arg("-version").stdout(Stdio::null()).stderr(Stdio::null()).status().is_ok()
}
