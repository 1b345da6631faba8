//! Reference agent for the line protocol.
//!
//! Answers `act` messages from a script of actions (then `finish`), or with
//! the frequency heuristic when no script is given. Useful for integration
//! tests and as a template for real agents.

use std::fs;
use std::io::{self, BufRead, Write};
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::{json, Value};

use musenum::agentlink::{ActWire, EngineMessage, FrequencyHeuristic, Policy, PROTOCOL_VERSION};
use musenum::{ActRequest, Action, ExplorationGraph, IncidenceExport, SubsetMask};

#[derive(Parser)]
#[command(name = "musenum-echo-agent", version)]
struct Args {
    /// JSON array of actions (`2`, `"finish"`), replayed across episodes.
    #[arg(long)]
    script: Option<PathBuf>,
    /// Protocol version to announce.
    #[arg(long, default_value_t = PROTOCOL_VERSION)]
    protocol_version: u32,
    /// Accept incremental edge transfer when offered.
    #[arg(long)]
    delta: bool,
    /// Copy every received line here.
    #[arg(long)]
    log: Option<PathBuf>,
}

fn main() -> Result<()> {
    let args = Args::parse();
    let mut script: std::collections::VecDeque<Action> = match &args.script {
        Some(p) => serde_json::from_str(
            &fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?,
        )?,
        None => Default::default(),
    };
    let scripted = args.script.is_some();
    let mut log = match &args.log {
        Some(p) => Some(fs::File::create(p)?),
        None => None,
    };
    let mut heuristic = FrequencyHeuristic::default();
    let mut graph: Option<ExplorationGraph> = None;

    let stdin = io::stdin();
    let mut out = io::stdout().lock();
    for line in stdin.lock().lines() {
        let line = line?;
        if let Some(f) = log.as_mut() {
            writeln!(f, "{line}")?;
        }
        let msg: EngineMessage = match serde_json::from_str(&line) {
            Ok(m) => m,
            Err(e) => {
                writeln!(
                    out,
                    "{}",
                    json!({"type": "error", "message": e.to_string()})
                )?;
                out.flush()?;
                continue;
            }
        };
        let reply: Option<Value> = match msg {
            EngineMessage::Hello {
                num_constraints,
                delta,
                ..
            } => {
                graph = Some(ExplorationGraph::new(num_constraints));
                Some(
                    json!({"type": "hello_ack", "version": args.protocol_version, "delta": delta && args.delta}),
                )
            }
            EngineMessage::Act(req) => {
                let action = if scripted {
                    script.pop_front().unwrap_or(Action::Finish)
                } else {
                    let g = graph.get_or_insert_with(|| ExplorationGraph::new(req.num_constraints));
                    heuristic_action(&mut heuristic, g, &req)?
                };
                Some(json!({"type": "action", "action": action}))
            }
            EngineMessage::Reward { .. } => None,
            EngineMessage::Bye => break,
        };
        if let Some(r) = reply {
            writeln!(out, "{r}")?;
            out.flush()?;
        }
    }
    Ok(())
}

/// Keeps `g` in sync with the request (full or delta) and asks the heuristic.
fn heuristic_action(
    h: &mut FrequencyHeuristic,
    g: &mut ExplorationGraph,
    req: &ActWire,
) -> Result<Action> {
    if req.edges_since.is_some() {
        g.extend(&req.mus, &req.mcs)?;
    } else {
        *g = ExplorationGraph::from_incidence(&IncidenceExport {
            num_vertices: req.num_constraints,
            mus: req.mus.clone(),
            mcs: req.mcs.clone(),
        })?;
    }
    let subset = SubsetMask::from_indices(req.num_constraints, req.subset.iter().copied());
    let ask = ActRequest {
        op: req.op,
        graph: g,
        watermark: g.watermark(),
        subset: &subset,
        candidates: &req.candidates,
        step: req.step,
        mode: req.mode,
    };
    Ok(h.act(&ask).action)
}
