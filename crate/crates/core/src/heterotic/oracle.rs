//! External Base executors.
//!
//! The process protocol is one JSON object per line in each direction:
//! the request `{"initial": ["s", "t"]}` and the response
//! `{"final": ["ccf", "c"], "steps": 3}`, configurations written as one
//! canonical multiset string per compartment.

use std::io::{self, BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::HeteroticError;
use crate::psystem::{apply_assignment, choose_assignment, is_halted, PConfiguration, PSystem};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleRequest {
    pub initial: PConfiguration,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleAnswer {
    #[serde(rename = "final")]
    pub final_configuration: PConfiguration,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub steps: Option<usize>,
}

/// Runs the Base computation from a given initial configuration.
pub trait Oracle {
    fn evaluate(&mut self, initial: &PConfiguration) -> Result<OracleAnswer, HeteroticError>;
}

/// Seeded simulation to a halted configuration.
pub fn simulate_to_halt(
    ps: &PSystem,
    start: &PConfiguration,
    seed: u64,
    depth_cap: usize,
) -> Result<OracleAnswer, HeteroticError> {
    ps.check_configuration(start)?;
    let mut cfg = start.clone();
    let mut steps = 0;
    while !is_halted(ps, &cfg) {
        if steps == depth_cap {
            return Err(HeteroticError::DepthCapExceeded {
                start: start.clone(),
                cap: depth_cap,
            });
        }
        let a = choose_assignment(ps, &cfg, seed)?;
        cfg = apply_assignment(ps, &cfg, &a)?;
        steps += 1;
    }
    Ok(OracleAnswer {
        final_configuration: cfg,
        steps: Some(steps),
    })
}

/// The built-in simulator behind the oracle interface.
#[derive(Clone, Debug)]
pub struct SimulatorOracle {
    pub psystem: PSystem,
    pub seed: u64,
    pub depth_cap: usize,
}

impl SimulatorOracle {
    pub fn new(psystem: PSystem, seed: u64, depth_cap: usize) -> Self {
        SimulatorOracle {
            psystem,
            seed,
            depth_cap,
        }
    }
}

impl Oracle for SimulatorOracle {
    fn evaluate(&mut self, initial: &PConfiguration) -> Result<OracleAnswer, HeteroticError> {
        simulate_to_halt(&self.psystem, initial, self.seed, self.depth_cap)
    }
}

/// Answers protocol requests from `input` until it closes. A request that
/// cannot be served gets `{"error": "..."}`.
pub fn serve_oracle(
    ps: &PSystem,
    seed: u64,
    depth_cap: usize,
    input: impl BufRead,
    mut output: impl Write,
) -> io::Result<()> {
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = serde_json::from_str::<OracleRequest>(&line)
            .map_err(|e| e.to_string())
            .and_then(|req| {
                simulate_to_halt(ps, &req.initial, seed, depth_cap).map_err(|e| e.to_string())
            });
        let text = match reply {
            Ok(answer) => serde_json::to_string(&answer).map_err(io::Error::other)?,
            Err(msg) => serde_json::json!({ "error": msg }).to_string(),
        };
        writeln!(output, "{text}")?;
        output.flush()?;
    }
    Ok(())
}

struct Live {
    child: Child,
    stdin: ChildStdin,
    lines: Receiver<io::Result<String>>,
}

impl Live {
    fn stop(mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A child process speaking the line protocol. The process is started on
/// first use and kept for later requests; after a timeout it is killed and
/// a fresh one is started for the retry.
pub struct ProcessOracle {
    program: String,
    args: Vec<String>,
    timeout: Duration,
    retries: u32,
    live: Option<Live>,
}

impl ProcessOracle {
    pub fn new(program: impl Into<String>, args: Vec<String>) -> Self {
        ProcessOracle {
            program: program.into(),
            args,
            timeout: Duration::from_millis(5_000),
            retries: 0,
            live: None,
        }
    }

    pub fn with_timeout(mut self, timeout: Duration) -> Self {
        self.timeout = timeout;
        self
    }

    pub fn with_retries(mut self, retries: u32) -> Self {
        self.retries = retries;
        self
    }

    fn spawn(&self) -> io::Result<Live> {
        let mut child = Command::new(&self.program)
            .args(&self.args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()?;
        let stdin = child.stdin.take().expect("stdin is piped");
        let stdout = child.stdout.take().expect("stdout is piped");
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        Ok(Live {
            child,
            stdin,
            lines: rx,
        })
    }
}

impl Drop for ProcessOracle {
    fn drop(&mut self) {
        if let Some(live) = self.live.take() {
            live.stop();
        }
    }
}

impl Oracle for ProcessOracle {
    fn evaluate(&mut self, initial: &PConfiguration) -> Result<OracleAnswer, HeteroticError> {
        let request = serde_json::to_string(&OracleRequest {
            initial: initial.clone(),
        })
        .map_err(|e| HeteroticError::OracleIo(e.to_string()))?;
        let io_err = |e: io::Error| HeteroticError::OracleIo(e.to_string());
        for _ in 0..=self.retries {
            if self.live.is_none() {
                self.live = Some(self.spawn().map_err(io_err)?);
            }
            let live = self.live.as_mut().expect("started above");
            writeln!(live.stdin, "{request}")
                .and_then(|_| live.stdin.flush())
                .map_err(io_err)?;
            match live.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => {
                    return serde_json::from_str::<OracleAnswer>(&line)
                        .map_err(|e| HeteroticError::OracleInvalidResult(format!("{e}: {line}")));
                }
                Ok(Err(e)) => return Err(io_err(e)),
                Err(RecvTimeoutError::Disconnected) => {
                    if let Some(a) = self.live.take() {
                        Live::stop(a)
                    }
                    return Err(HeteroticError::OracleIo(
                        "oracle process closed its output".into(),
                    ));
                }
                Err(RecvTimeoutError::Timeout) => {
                    if let Some(a) = self.live.take() {
                        Live::stop(a)
                    }
                }
            }
        }
        Err(HeteroticError::OracleTimeout {
            ms: self.timeout.as_millis() as u64,
            attempts: self.retries + 1,
        })
    }
}
