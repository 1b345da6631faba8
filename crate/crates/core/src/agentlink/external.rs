//! Line protocol to an out-of-process agent.
//!
//! One JSON object per line over the agent's stdin/stdout. The engine opens
//! with `hello`, the agent answers `hello_ack`; then every decision is one
//! `act` → `action` pair, every finished extraction produces a `reward`
//! message (no reply), and `bye` closes the session. Unknown fields are
//! ignored on both sides. Any failure (timeout, malformed reply, version
//! mismatch, closed pipe) degrades the session to immediate-finish for the
//! rest of the run.

use std::io::{BufRead, BufReader, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError};
use std::thread;
use std::time::{Duration, Instant};

use log::{info, warn};
use serde::{Deserialize, Serialize};

use super::{ActRequest, ActWire, EpisodeRecord, Op, Policy, PROTOCOL_VERSION};
use crate::extraction::{Action, PolicyDecision};
use crate::musgraph::Watermark;

/// Messages sent by the engine.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum EngineMessage {
    Hello {
        version: u32,
        num_constraints: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        instance: Option<String>,
        /// Offer of incremental edge transfer.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        delta: bool,
    },
    Act(ActWire),
    Reward {
        op: Op,
        reward: f64,
        n_correction: u64,
        result: Vec<usize>,
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        aborted: bool,
    },
    Bye,
}

/// Messages sent by the agent.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum AgentMessage {
    HelloAck {
        version: u32,
        /// Accepts the delta offer.
        #[serde(default, skip_serializing_if = "std::ops::Not::not")]
        delta: bool,
    },
    Action {
        action: Action,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        log_prob: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
    },
    Error {
        message: String,
    },
}

#[derive(Clone, Debug)]
pub struct ExternalOptions {
    pub timeout: Duration,
    pub offer_delta: bool,
    pub instance: Option<String>,
}

impl Default for ExternalOptions {
    fn default() -> Self {
        ExternalOptions {
            timeout: Duration::from_secs(30),
            offer_delta: false,
            instance: None,
        }
    }
}

/// A policy answered by an agent process (or any pair of streams).
pub struct ExternalPolicy {
    child: Option<Child>,
    writer: Option<Box<dyn Write + Send>>,
    lines: Receiver<std::io::Result<String>>,
    timeout: Duration,
    delta: bool,
    sent: Option<Watermark>,
    degraded: Option<String>,
    transcript: Option<Vec<String>>,
}

impl ExternalPolicy {
    /// Spawns `sh -c cmd` and performs the handshake. Never fails: a process
    /// that cannot be started or does not shake hands yields a degraded
    /// session.
    pub fn spawn(cmd: &str, num_constraints: usize, opts: ExternalOptions) -> Self {
        let child = Command::new("sh")
            .arg("-c")
            .arg(cmd)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn();
        match child {
            Ok(mut child) => {
                let stdin = child.stdin.take().expect("piped stdin");
                let stdout = child.stdout.take().expect("piped stdout");
                let mut p =
                    Self::from_streams(BufReader::new(stdout), stdin, num_constraints, opts);
                p.child = Some(child);
                p
            }
            Err(e) => {
                let (_tx, rx) = mpsc::channel();
                let mut p = ExternalPolicy {
                    child: None,
                    writer: None,
                    lines: rx,
                    timeout: opts.timeout,
                    delta: false,
                    sent: None,
                    degraded: None,
                    transcript: None,
                };
                p.degrade(format!("cannot start agent `{cmd}`: {e}"));
                p
            }
        }
    }

    /// Runs the protocol over arbitrary streams.
    pub fn from_streams<R, W>(
        reader: R,
        writer: W,
        num_constraints: usize,
        opts: ExternalOptions,
    ) -> Self
    where
        R: BufRead + Send + 'static,
        W: Write + Send + 'static,
    {
        let (tx, rx) = mpsc::channel();
        thread::spawn(move || {
            for line in reader.lines() {
                if tx.send(line).is_err() {
                    break;
                }
            }
        });
        let mut p = ExternalPolicy {
            child: None,
            writer: Some(Box::new(writer)),
            lines: rx,
            timeout: opts.timeout,
            delta: false,
            sent: None,
            degraded: None,
            transcript: None,
        };
        p.handshake(num_constraints, opts.instance, opts.offer_delta);
        p
    }

    /// Keeps a copy of every line sent and received (`>` engine, `<` agent).
    pub fn keep_transcript(&mut self) {
        self.transcript.get_or_insert_with(Vec::new);
    }

    pub fn transcript(&self) -> &[String] {
        self.transcript.as_deref().unwrap_or(&[])
    }

    pub fn degradation(&self) -> Option<&str> {
        self.degraded.as_deref()
    }

    pub fn delta_enabled(&self) -> bool {
        self.delta
    }

    fn degrade(&mut self, why: String) {
        if self.degraded.is_none() {
            warn!("external agent degraded to immediate-finish: {why}");
            self.degraded = Some(why);
            self.writer = None;
        }
    }

    fn send(&mut self, msg: &EngineMessage) -> bool {
        let line = serde_json::to_string(msg).expect("engine messages serialize");
        let Some(w) = self.writer.as_mut() else {
            return false;
        };
        let res = writeln!(w, "{line}").and_then(|_| w.flush());
        if let Some(t) = self.transcript.as_mut() {
            t.push(format!("> {line}"));
        }
        match res {
            Ok(()) => true,
            Err(e) => {
                self.degrade(format!("write failed: {e}"));
                false
            }
        }
    }

    fn receive(&mut self) -> Option<AgentMessage> {
        let deadline = Instant::now() + self.timeout;
        let line = match self
            .lines
            .recv_timeout(deadline.saturating_duration_since(Instant::now()))
        {
            Ok(Ok(line)) => line,
            Ok(Err(e)) => {
                self.degrade(format!("read failed: {e}"));
                return None;
            }
            Err(RecvTimeoutError::Timeout) => {
                self.degrade(format!("no reply within {:?}", self.timeout));
                return None;
            }
            Err(RecvTimeoutError::Disconnected) => {
                self.degrade("agent closed its output".into());
                return None;
            }
        };
        if let Some(t) = self.transcript.as_mut() {
            t.push(format!("< {line}"));
        }
        match serde_json::from_str::<AgentMessage>(&line) {
            Ok(m) => Some(m),
            Err(e) => {
                self.degrade(format!("malformed reply `{line}`: {e}"));
                None
            }
        }
    }

    fn handshake(&mut self, num_constraints: usize, instance: Option<String>, offer_delta: bool) {
        let hello = EngineMessage::Hello {
            version: PROTOCOL_VERSION,
            num_constraints,
            instance,
            delta: offer_delta,
        };
        if !self.send(&hello) {
            return;
        }
        match self.receive() {
            Some(AgentMessage::HelloAck { version, delta }) if version == PROTOCOL_VERSION => {
                self.delta = offer_delta && delta;
                info!(
                    "agent session open (protocol {version}, delta={})",
                    self.delta
                );
            }
            Some(AgentMessage::HelloAck { version, .. }) => self.degrade(format!(
                "protocol version mismatch: agent {version}, engine {PROTOCOL_VERSION}"
            )),
            Some(other) => self.degrade(format!("expected hello_ack, got {other:?}")),
            None => {}
        }
    }
}

impl Policy for ExternalPolicy {
    fn name(&self) -> &str {
        "extern"
    }

    fn act(&mut self, req: &ActRequest<'_>) -> PolicyDecision {
        if self.degraded.is_some() {
            return PolicyDecision::finish();
        }
        let wire = match (self.delta, self.sent) {
            (true, Some(since)) => req.to_wire_delta(since),
            (true, None) => ActRequest::to_wire_delta(req, Watermark::default()),
            (false, _) => req.to_wire(),
        };
        if !self.send(&EngineMessage::Act(wire)) {
            return PolicyDecision::finish();
        }
        self.sent = Some(req.watermark);
        match self.receive() {
            Some(AgentMessage::Action {
                action,
                log_prob,
                value,
            }) => PolicyDecision {
                action,
                log_prob,
                value,
            },
            Some(AgentMessage::Error { message }) => {
                self.degrade(format!("agent error: {message}"));
                PolicyDecision::finish()
            }
            Some(other) => {
                self.degrade(format!("expected action, got {other:?}"));
                PolicyDecision::finish()
            }
            None => PolicyDecision::finish(),
        }
    }

    fn episode_end(&mut self, record: &EpisodeRecord) {
        if self.degraded.is_some() {
            return;
        }
        self.send(&EngineMessage::Reward {
            op: record.op,
            reward: record.reward,
            n_correction: record.n_correction,
            result: record.result.clone(),
            aborted: record.aborted,
        });
    }
}

impl Drop for ExternalPolicy {
    fn drop(&mut self) {
        if self.writer.is_some() {
            self.send(&EngineMessage::Bye);
        }
        self.writer = None;
        if let Some(mut child) = self.child.take() {
            let deadline = Instant::now() + Duration::from_secs(2);
            loop {
                match child.try_wait() {
                    Ok(Some(_)) => break,
                    Ok(None) if Instant::now() < deadline => {
                        thread::sleep(Duration::from_millis(10))
                    }
                    _ => {
                        let _ = child.kill();
                        let _ = child.wait();
                        break;
                    }
                }
            }
        }
    }
}
