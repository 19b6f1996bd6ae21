//! Client for models running as separate processes.
//!
//! The wire protocol is newline-delimited JSON over the child's standard
//! streams. One request per line:
//!
//! ```json
//! {"id": 1, "signals": [[0.1, 0.2], [0.3, 0.4]]}
//! ```
//!
//! and exactly one response per request, in order, echoing the id:
//!
//! ```json
//! {"id": 1, "logits": [[1.0, -1.0], [0.5, 0.5]]}
//! ```
//!
//! `f64` values survive the trip bit-exactly: serialization uses the
//! shortest decimal form that parses back to the same float. Any protocol
//! violation (dead process, malformed line, wrong id, wrong row count,
//! timeout) surfaces as [`Error::EndpointError`] with a diagnosis.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::sync::Mutex;
use std::time::Duration;

use ndarray::ArrayView2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{BlackBoxModel, ModelOutput};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireRequest {
    pub id: u64,
    pub signals: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WireResponse {
    pub id: u64,
    pub logits: Vec<Vec<f64>>,
}

struct Endpoint {
    child: Child,
    stdin: ChildStdin,
    /// Lines from the child's stdout, pumped by a reader thread so
    /// requests can time out instead of blocking forever.
    lines: Receiver<std::io::Result<String>>,
    next_id: u64,
}

impl Drop for Endpoint {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// A classifier living in a child process. Input length and class count
/// are unknown until the first response; queries are serialized because
/// the protocol is strictly request-reply.
pub struct ExternalModel {
    endpoint: Mutex<Endpoint>,
    timeout: Duration,
    describe: String,
}

impl ExternalModel {
    pub fn spawn(program: &str, args: &[String]) -> Result<Self> {
        Self::spawn_with_timeout(program, args, Duration::from_secs(30))
    }

    pub fn spawn_with_timeout(program: &str, args: &[String], timeout: Duration) -> Result<Self> {
        let describe = std::iter::once(program)
            .chain(args.iter().map(String::as_str))
            .collect::<Vec<_>>()
            .join(" ");
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .map_err(|e| Error::EndpointError(format!("cannot spawn {describe:?}: {e}")))?;
        let stdin = child.stdin.take().expect("stdin was piped");
        let stdout = child.stdout.take().expect("stdout was piped");
        let (tx, lines) = mpsc::channel();
        std::thread::Builder::new()
            .name("endpoint-reader".into())
            .spawn(move || {
                let reader = BufReader::new(stdout);
                for line in reader.lines() {
                    if tx.send(line).is_err() {
                        break;
                    }
                }
            })
            .map_err(|e| Error::EndpointError(format!("cannot start reader thread: {e}")))?;
        Ok(ExternalModel {
            endpoint: Mutex::new(Endpoint { child, stdin, lines, next_id: 0 }),
            timeout,
            describe,
        })
    }

    fn roundtrip(&self, signals: Vec<Vec<f64>>) -> Result<WireResponse> {
        let mut ep = self.endpoint.lock().expect("endpoint lock poisoned");
        ep.next_id += 1;
        let request = WireRequest { id: ep.next_id, signals };
        let mut line = serde_json::to_string(&request).expect("request serializes");
        line.push('\n');
        ep.stdin.write_all(line.as_bytes()).map_err(|e| {
            Error::EndpointError(format!("{} stopped accepting input: {e}", self.describe))
        })?;
        ep.stdin.flush().map_err(|e| {
            Error::EndpointError(format!("{} stopped accepting input: {e}", self.describe))
        })?;

        loop {
            let line = match ep.lines.recv_timeout(self.timeout) {
                Ok(Ok(line)) => line,
                Ok(Err(e)) => {
                    return Err(Error::EndpointError(format!(
                        "{} broke its output stream: {e}",
                        self.describe
                    )))
                }
                Err(RecvTimeoutError::Timeout) => {
                    return Err(Error::EndpointError(format!(
                        "{} did not answer within {:?}",
                        self.describe, self.timeout
                    )))
                }
                Err(RecvTimeoutError::Disconnected) => {
                    return Err(Error::EndpointError(format!(
                        "{} exited without answering",
                        self.describe
                    )))
                }
            };
            if line.trim().is_empty() {
                continue;
            }
            let response: WireResponse = serde_json::from_str(&line).map_err(|e| {
                Error::EndpointError(format!(
                    "{} sent a malformed response ({e}): {}",
                    self.describe,
                    &line[..line.len().min(200)]
                ))
            })?;
            if response.id != request.id {
                return Err(Error::EndpointError(format!(
                    "{} answered id {} to request {}",
                    self.describe, response.id, request.id
                )));
            }
            return Ok(response);
        }
    }
}

impl BlackBoxModel for ExternalModel {
    fn input_len(&self) -> Option<usize> {
        None
    }

    fn num_classes(&self) -> Option<usize> {
        None
    }

    fn predict_batch(&self, batch: ArrayView2<'_, f64>) -> Result<Vec<ModelOutput>> {
        let signals: Vec<Vec<f64>> = batch.rows().into_iter().map(|r| r.to_vec()).collect();
        let rows = signals.len();
        let response = self.roundtrip(signals)?;
        if response.logits.len() != rows {
            return Err(Error::EndpointError(format!(
                "{} returned {} logit rows for {rows} signals",
                self.describe,
                response.logits.len()
            )));
        }
        let width = response.logits.first().map(Vec::len);
        response
            .logits
            .into_iter()
            .map(|row| {
                if Some(row.len()) != width {
                    return Err(Error::EndpointError(format!(
                        "{} returned ragged logit rows",
                        self.describe
                    )));
                }
                ModelOutput::new(row).map_err(|e| {
                    Error::EndpointError(format!("{} returned unusable logits: {e}", self.describe))
                })
            })
            .collect()
    }
}

/// What the test endpoint answers with.
#[derive(Debug, Clone)]
pub enum EchoMode {
    /// Logits are the signals themselves; makes wire fidelity testable.
    Echo,
    /// The same fixed logit row for every signal.
    Fixed(Vec<f64>),
}

/// Serves the wire protocol on this process's standard streams until
/// stdin closes. This is the loop behind the bundled echo endpoint.
pub fn serve_echo(mode: EchoMode) -> std::io::Result<()> {
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let request: WireRequest = match serde_json::from_str(&line) {
            Ok(r) => r,
            Err(e) => {
                eprintln!("echo endpoint: ignoring malformed request: {e}");
                continue;
            }
        };
        let logits = match &mode {
            EchoMode::Echo => request.signals,
            EchoMode::Fixed(row) => vec![row.clone(); request.signals.len()],
        };
        let response = WireResponse { id: request.id, logits };
        let mut out = stdout.lock();
        serde_json::to_writer(&mut out, &response)?;
        out.write_all(b"\n")?;
        out.flush()?;
    }
    Ok(())
}
