//! Client side of the adapter wire protocol.
//!
//! An adapter is a child process exchanging one JSON object per line over
//! its standard input and output. Requests, in engine order:
//!
//! ```text
//! {"cmd":"handshake","version":1}
//! {"cmd":"fit","seed":S,"X":[[...],...],"y":[...]}
//! {"cmd":"predict_proba","X":[[...],...]}
//! {"cmd":"importance_supported?"}
//! {"cmd":"shutdown"}
//! ```
//!
//! Replies are `{"ok":true}` (handshake, fit, shutdown),
//! `{"ok":true,"proba":[...]}` (predict_proba, P(positive) per row) or
//! `{"ok":false,"error":"..."}`. A handshake reply may carry the adapter's
//! self-declared `"config"` string and the capability reply a `"supported"`
//! boolean; any other field, a missing reply, or a malformed one is a
//! protocol violation. Adapter stderr is forwarded to the log.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, ChildStdin, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::{BenchError, Matrix, Result};

use super::{ModelSpec, ProbModel};

pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Timeouts {
    pub fit: Duration,
    pub predict: Duration,
    pub shutdown: Duration,
}

#[derive(Serialize)]
struct Handshake {
    cmd: &'static str,
    version: u32,
}

#[derive(Serialize)]
struct Fit<'a> {
    cmd: &'static str,
    seed: u64,
    #[serde(rename = "X")]
    x: &'a Matrix,
    y: &'a [u8],
}

#[derive(Serialize)]
struct Predict<'a> {
    cmd: &'static str,
    #[serde(rename = "X")]
    x: &'a Matrix,
}

#[derive(Serialize)]
struct Bare {
    cmd: &'static str,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Reply {
    ok: bool,
    #[serde(default)]
    proba: Option<Vec<f64>>,
    #[serde(default)]
    error: Option<String>,
    #[serde(default)]
    config: Option<String>,
    #[serde(default)]
    supported: Option<bool>,
}

/// Live connection to one adapter process. One request in flight at a time.
#[derive(Debug)]
pub struct AdapterSession {
    model_id: String,
    child: Child,
    stdin: Option<ChildStdin>,
    replies: Receiver<String>,
    timeouts: Timeouts,
    config: Option<String>,
    broken: bool,
    closed: bool,
}

impl AdapterSession {
    /// Starts the adapter and performs the handshake.
    pub fn spawn(spec: &ModelSpec) -> Result<Self> {
        let command = spec.command.as_deref().unwrap_or("");
        let mut parts = command.split_whitespace();
        let program = parts.next().ok_or_else(|| BenchError::Model {
            model: spec.model_id.clone(),
            message: "empty adapter command".into(),
        })?;
        let timeouts = spec.timeouts()?;
        let mut child = Command::new(program)
            .args(parts)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| BenchError::Model {
                model: spec.model_id.clone(),
                message: format!("failed to spawn `{command}`: {e}"),
            })?;

        let stdout = child.stdout.take().expect("piped stdout");
        let (tx, replies) = mpsc::channel();
        thread::spawn(move || {
            for line in BufReader::new(stdout).lines() {
                match line {
                    Ok(l) => {
                        if tx.send(l).is_err() {
                            break;
                        }
                    }
                    Err(_) => break,
                }
            }
        });
        let stderr = child.stderr.take().expect("piped stderr");
        let tag = spec.model_id.clone();
        thread::spawn(move || {
            for line in BufReader::new(stderr)
                .lines()
                .map_while(std::io::Result::ok)
            {
                log::info!("[adapter {tag}] {line}");
            }
        });

        let stdin = child.stdin.take();
        let mut session = Self {
            model_id: spec.model_id.clone(),
            child,
            stdin,
            replies,
            timeouts,
            config: None,
            broken: false,
            closed: false,
        };
        let reply = session
            .request(
                "handshake",
                &Handshake {
                    cmd: "handshake",
                    version: PROTOCOL_VERSION,
                },
                timeouts.predict,
            )
            .and_then(|r| session.expect_ok("handshake", r));
        match reply {
            Ok(r) => {
                if r.proba.is_some() || r.supported.is_some() {
                    let e = session.violation("unexpected fields in handshake reply");
                    session.kill();
                    return Err(e);
                }
                session.config = r.config;
                Ok(session)
            }
            Err(e) => {
                session.kill();
                Err(e)
            }
        }
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn config(&self) -> Option<&str> {
        self.config.as_deref()
    }

    fn violation(&self, message: impl Into<String>) -> BenchError {
        BenchError::Protocol {
            model: self.model_id.clone(),
            message: message.into(),
        }
    }

    fn request<T: Serialize>(&mut self, cmd: &str, msg: &T, timeout: Duration) -> Result<Reply> {
        if self.broken || self.closed {
            return Err(BenchError::Model {
                model: self.model_id.clone(),
                message: "adapter session is no longer usable".into(),
            });
        }
        let mut line = serde_json::to_string(msg)?;
        line.push('\n');
        let write = self
            .stdin
            .as_mut()
            .map(|s| s.write_all(line.as_bytes()).and_then(|_| s.flush()));
        if !matches!(write, Some(Ok(()))) {
            self.broken = true;
            return Err(BenchError::Model {
                model: self.model_id.clone(),
                message: format!("adapter closed its input before `{cmd}`"),
            });
        }
        let raw = match self.replies.recv_timeout(timeout) {
            Ok(raw) => raw,
            Err(RecvTimeoutError::Timeout) => {
                self.broken = true;
                return Err(BenchError::Timeout {
                    model: self.model_id.clone(),
                    cmd: cmd.to_string(),
                    seconds: timeout.as_secs_f64(),
                });
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.broken = true;
                return Err(BenchError::Model {
                    model: self.model_id.clone(),
                    message: format!("adapter exited before replying to `{cmd}`"),
                });
            }
        };
        serde_json::from_str::<Reply>(&raw).map_err(|e| {
            self.broken = true;
            self.violation(format!("malformed reply to `{cmd}`: {e}: {raw:?}"))
        })
    }

    fn expect_ok(&mut self, cmd: &str, reply: Reply) -> Result<Reply> {
        if reply.ok {
            if reply.error.is_some() {
                self.broken = true;
                return Err(self.violation(format!("`{cmd}` reply has ok=true and an error")));
            }
            Ok(reply)
        } else {
            match reply.error {
                Some(message) => Err(BenchError::Model {
                    model: self.model_id.clone(),
                    message: format!("`{cmd}` failed: {message}"),
                }),
                None => {
                    self.broken = true;
                    Err(self.violation(format!("`{cmd}` reply has ok=false without error")))
                }
            }
        }
    }

    fn only_ok(&mut self, cmd: &str, reply: Reply) -> Result<()> {
        let r = self.expect_ok(cmd, reply)?;
        if r.proba.is_some() || r.config.is_some() || r.supported.is_some() {
            self.broken = true;
            return Err(self.violation(format!("unexpected fields in `{cmd}` reply")));
        }
        Ok(())
    }

    pub fn fit(&mut self, x: &Matrix, y: &[u8], seed: u64) -> Result<()> {
        let msg = Fit {
            cmd: "fit",
            seed,
            x,
            y,
        };
        let reply = self.request("fit", &msg, self.timeouts.fit)?;
        self.only_ok("fit", reply)
    }

    /// Optional capability query; adapters that do not understand it
    /// (error reply) are reported as unsupported.
    pub fn importance_supported(&mut self) -> Result<bool> {
        let reply = self.request(
            "importance_supported?",
            &Bare {
                cmd: "importance_supported?",
            },
            self.timeouts.predict,
        )?;
        if !reply.ok {
            return Ok(false);
        }
        Ok(reply.supported.unwrap_or(false))
    }

    /// Gracefully stops the adapter; kills it if it does not exit within
    /// the shutdown timeout. A session that already failed is killed
    /// straight away.
    pub fn shutdown(mut self) {
        self.close();
    }

    fn close(&mut self) {
        if self.closed {
            return;
        }
        if self.broken {
            self.kill();
            return;
        }
        let outcome = self
            .request(
                "shutdown",
                &Bare { cmd: "shutdown" },
                self.timeouts.shutdown,
            )
            .and_then(|r| self.only_ok("shutdown", r));
        if let Err(e) = outcome {
            log::warn!("adapter `{}`: shutdown: {e}", self.model_id);
        }
        self.closed = true;
        drop(self.stdin.take());
        let deadline = Instant::now() + self.timeouts.shutdown;
        loop {
            match self.child.try_wait() {
                Ok(Some(status)) => {
                    if !status.success() {
                        log::warn!("adapter `{}` exited with {status}", self.model_id);
                    }
                    return;
                }
                Ok(None) if Instant::now() < deadline => thread::sleep(Duration::from_millis(10)),
                _ => break,
            }
        }
        log::warn!(
            "adapter `{}` did not exit within {:.1}s; killing it",
            self.model_id,
            self.timeouts.shutdown.as_secs_f64()
        );
        self.kill();
    }

    fn kill(&mut self) {
        self.closed = true;
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

impl ProbModel for AdapterSession {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn predict_proba(&mut self, x: &Matrix) -> Result<Vec<f64>> {
        let reply = self.request(
            "predict_proba",
            &Predict {
                cmd: "predict_proba",
                x,
            },
            self.timeouts.predict,
        )?;
        let reply = self.expect_ok("predict_proba", reply)?;
        if reply.config.is_some() || reply.supported.is_some() {
            self.broken = true;
            return Err(self.violation("unexpected fields in `predict_proba` reply"));
        }
        let proba = match reply.proba {
            Some(p) => p,
            None => {
                self.broken = true;
                return Err(self.violation("`predict_proba` reply has no `proba`"));
            }
        };
        if proba.len() != x.n_rows() {
            self.broken = true;
            return Err(self.violation(format!(
                "`predict_proba` returned {} probabilities for {} rows",
                proba.len(),
                x.n_rows()
            )));
        }
        if let Some(i) = proba.iter().position(|p| !(0.0..=1.0).contains(p)) {
            self.broken = true;
            return Err(self.violation(format!(
                "probability {} at sample {i} is outside [0,1]",
                proba[i]
            )));
        }
        Ok(proba)
    }
}

impl Drop for AdapterSession {
    fn drop(&mut self) {
        self.close();
    }
}
