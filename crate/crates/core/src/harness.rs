//! One budgeted run of one instance, with the agent chosen by name.

use std::panic::{self, AssertUnwindSafe};
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::agentlink::{
    ActMode, EpisodeRecord, ExternalOptions, ExternalPolicy, FrequencyHeuristic, ImmediateFinish,
    Policy, RandomPolicy,
};
use crate::enumeration::{enumerate, EnumeratorConfig, RunOptions, Strategy};
use crate::formula::CnfInstance;
use crate::metrics::{InstanceRecord, RecordHeader};

pub const DEFAULT_TIME_LIMIT: Duration = Duration::from_secs(600);

#[derive(Clone, Debug, PartialEq)]
pub enum AgentSpec {
    /// Standard shrink/grow, no policy.
    None,
    Finish,
    Random {
        p_finish: f64,
    },
    Freq {
        max_ratio: f64,
    },
    /// Shell command of an external agent.
    Extern(String),
}

impl AgentSpec {
    pub fn label(&self) -> String {
        match self {
            AgentSpec::None => "none".into(),
            AgentSpec::Finish => "finish".into(),
            AgentSpec::Random { .. } => "random".into(),
            AgentSpec::Freq { .. } => "freq".into(),
            AgentSpec::Extern(cmd) => format!("extern:{cmd}"),
        }
    }
}

impl FromStr for AgentSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "none" => Ok(AgentSpec::None),
            "finish" => Ok(AgentSpec::Finish),
            "random" => Ok(AgentSpec::Random { p_finish: 0.1 }),
            "freq" => Ok(AgentSpec::Freq {
                max_ratio: FrequencyHeuristic::default().max_ratio,
            }),
            _ => match s.strip_prefix("extern:") {
                Some(cmd) if !cmd.trim().is_empty() => Ok(AgentSpec::Extern(cmd.to_string())),
                Some(_) => Err("extern: needs a command".into()),
                None => Err(format!(
                    "unknown agent `{s}` (expected none, finish, random, freq or extern:<cmd>)"
                )),
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub cfg: EnumeratorConfig,
    pub budget: Option<u64>,
    pub time_limit: Option<Duration>,
    pub agent: AgentSpec,
    pub mode: ActMode,
    pub agent_timeout: Duration,
    /// Offer incremental edge transfer to external agents.
    pub agent_delta: bool,
    pub record_episodes: bool,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec {
            cfg: EnumeratorConfig::default(),
            budget: None,
            time_limit: Some(DEFAULT_TIME_LIMIT),
            agent: AgentSpec::None,
            mode: ActMode::Greedy,
            agent_timeout: Duration::from_secs(30),
            agent_delta: false,
            record_episodes: false,
        }
    }
}

/// Runs one instance. Errors and panics become excluded records; they never
/// propagate.
pub fn run_instance(
    inst: &CnfInstance,
    id: &str,
    spec: &RunSpec,
) -> (InstanceRecord, Vec<EpisodeRecord>) {
    let header = RecordHeader {
        instance: id.to_string(),
        hash: inst.content_hash(),
        algo: format!("{:?}", spec.cfg.algo).to_lowercase(),
        agent: spec.agent.label(),
        budget: spec.budget,
        num_constraints: inst.num_clauses(),
    };
    let start = Instant::now();
    let outcome = panic::catch_unwind(AssertUnwindSafe(|| run_inner(inst, id, spec, start)));
    let ms = start.elapsed().as_millis() as u64;
    match outcome {
        Ok(Ok((run, episodes))) => (InstanceRecord::from_run(header, &run, ms), episodes),
        Ok(Err(e)) => (
            InstanceRecord::failed(header, format!("error: {e}"), ms),
            Vec::new(),
        ),
        Err(p) => {
            let msg = p
                .downcast_ref::<String>()
                .map(String::as_str)
                .or_else(|| p.downcast_ref::<&str>().copied())
                .unwrap_or("unknown panic");
            (
                InstanceRecord::failed(header, format!("panic: {msg}"), ms),
                Vec::new(),
            )
        }
    }
}

fn run_inner(
    inst: &CnfInstance,
    id: &str,
    spec: &RunSpec,
    start: Instant,
) -> Result<(crate::enumeration::RunResult, Vec<EpisodeRecord>), crate::enumeration::EnumError> {
    let mut episodes: Vec<EpisodeRecord> = Vec::new();
    let mut policy: Option<Box<dyn Policy>> = match &spec.agent {
        AgentSpec::None => None,
        AgentSpec::Finish => Some(Box::new(ImmediateFinish)),
        AgentSpec::Random { p_finish } => {
            Some(Box::new(RandomPolicy::new(spec.cfg.rng_seed, *p_finish)))
        }
        AgentSpec::Freq { max_ratio } => Some(Box::new(FrequencyHeuristic {
            max_ratio: *max_ratio,
        })),
        AgentSpec::Extern(cmd) => {
            let opts = ExternalOptions {
                timeout: spec.agent_timeout,
                offer_delta: spec.agent_delta,
                instance: Some(id.to_string()),
            };
            Some(Box::new(ExternalPolicy::spawn(
                cmd,
                inst.num_clauses(),
                opts,
            )))
        }
    };
    let strategy = match policy.as_deref_mut() {
        None => Strategy::Standard,
        Some(p) => Strategy::Agent {
            policy: p,
            mode: spec.mode,
        },
    };
    let opts = RunOptions {
        strategy,
        deadline: spec.time_limit.map(|t| start + t),
        recorder: if spec.record_episodes {
            Some(&mut episodes)
        } else {
            None
        },
        instance_id: id.to_string(),
    };
    let run = enumerate(inst, &spec.cfg, spec.budget, opts)?;
    drop(policy);
    Ok((run, episodes))
}
