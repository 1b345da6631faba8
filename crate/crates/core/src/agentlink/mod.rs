//! Policies that drive the shrink/grow loops: the built-in baselines, the
//! line protocol to an out-of-process agent, and episode logs for training.

pub mod baseline;
pub mod external;
pub mod record;

use serde::{Deserialize, Serialize};

use crate::extraction::{compute_reward, ExtractKind, ExtractionResult, PolicyDecision};
use crate::mask::SubsetMask;
use crate::musgraph::{ExplorationGraph, Watermark};

pub use baseline::{FrequencyHeuristic, ImmediateFinish, RandomPolicy, Recorded, ScriptedPolicy};
pub use external::{AgentMessage, EngineMessage, ExternalOptions, ExternalPolicy};
pub use record::{read_episodes, read_episodes_from_str, EpisodeSink, JsonlEpisodeLog};

/// Wire protocol version spoken by this engine.
pub const PROTOCOL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Op {
    Shrink,
    Grow,
}

impl Op {
    pub fn kind(self) -> ExtractKind {
        match self {
            Op::Shrink => ExtractKind::Mus,
            Op::Grow => ExtractKind::Mss,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActMode {
    /// Sample from the policy distribution (training).
    Sample,
    /// Take the most probable action (evaluation).
    #[default]
    Greedy,
}

/// One decision request, borrowing the engine state.
#[derive(Clone, Copy, Debug)]
pub struct ActRequest<'a> {
    pub op: Op,
    pub graph: &'a ExplorationGraph,
    pub watermark: Watermark,
    /// The current `S_τ`.
    pub subset: &'a SubsetMask,
    /// Shrink: members of `subset`; grow: its complement. Ascending.
    pub candidates: &'a [usize],
    /// Decisions already taken in this episode.
    pub step: usize,
    pub mode: ActMode,
}

impl ActRequest<'_> {
    pub fn num_constraints(&self) -> usize {
        self.subset.width()
    }

    /// Full wire form with the complete incidence lists.
    pub fn to_wire(&self) -> ActWire {
        let inc = self.graph.export_at(self.watermark);
        ActWire {
            op: self.op,
            num_constraints: self.num_constraints(),
            mus: inc.mus,
            mcs: inc.mcs,
            subset: self.subset.to_indices(),
            candidates: self.candidates.to_vec(),
            step: self.step,
            mode: self.mode,
            edges_since: None,
        }
    }

    /// Wire form carrying only edges added after `since`.
    pub fn to_wire_delta(&self, since: Watermark) -> ActWire {
        let inc = self.graph.export_since(since);
        ActWire {
            mus: inc.mus,
            mcs: inc.mcs,
            edges_since: Some(since),
            ..self.wire_header()
        }
    }

    fn wire_header(&self) -> ActWire {
        ActWire {
            op: self.op,
            num_constraints: self.num_constraints(),
            mus: Vec::new(),
            mcs: Vec::new(),
            subset: self.subset.to_indices(),
            candidates: self.candidates.to_vec(),
            step: self.step,
            mode: self.mode,
            edges_since: None,
        }
    }
}

/// Serialized decision request (`"type":"act"`).
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActWire {
    pub op: Op,
    pub num_constraints: usize,
    pub mus: Vec<Vec<usize>>,
    pub mcs: Vec<Vec<usize>>,
    pub subset: Vec<usize>,
    pub candidates: Vec<usize>,
    #[serde(default)]
    pub step: usize,
    #[serde(default)]
    pub mode: ActMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edges_since: Option<Watermark>,
}

/// A decision-maker for the shrink/grow loops.
pub trait Policy {
    fn name(&self) -> &str;

    fn act(&mut self, req: &ActRequest<'_>) -> PolicyDecision;

    /// Called once per completed extraction with its terminal reward.
    fn episode_end(&mut self, _record: &EpisodeRecord) {}
}

/// One shrink/grow episode, the unit of policy training.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub instance: String,
    pub op: Op,
    pub num_constraints: usize,
    pub watermark: Watermark,
    pub initial: Vec<usize>,
    pub actions: Vec<PolicyDecision>,
    pub reward: f64,
    pub n_correction: u64,
    pub result: Vec<usize>,
    #[serde(default)]
    pub aborted: bool,
}

impl EpisodeRecord {
    pub fn from_result(instance: &str, watermark: Watermark, res: &ExtractionResult) -> Self {
        EpisodeRecord {
            instance: instance.to_string(),
            op: match res.kind {
                ExtractKind::Mus => Op::Shrink,
                ExtractKind::Mss => Op::Grow,
            },
            num_constraints: res.subset.width(),
            watermark,
            initial: res.initial.to_indices(),
            actions: res.actions.clone(),
            reward: res.reward,
            n_correction: res.checks_correction,
            result: res.subset.to_indices(),
            aborted: res.aborted,
        }
    }

    /// The reward implied by the stored counts.
    pub fn recompute_reward(&self) -> f64 {
        let result_size = match self.op {
            Op::Shrink => self.result.len(),
            Op::Grow => self.num_constraints - self.result.len(),
        };
        compute_reward(
            self.op.kind(),
            self.n_correction,
            result_size,
            self.initial.len(),
            self.num_constraints,
        )
    }
}
