//! In-process policies: baselines and test doubles.

use std::collections::VecDeque;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ActRequest, ActWire, EpisodeRecord, Op, Policy};
use crate::extraction::{Action, PolicyDecision};

/// Always finishes; reproduces the agent-free shrink/grow path.
#[derive(Clone, Copy, Debug, Default)]
pub struct ImmediateFinish;

impl Policy for ImmediateFinish {
    fn name(&self) -> &str {
        "finish"
    }

    fn act(&mut self, _req: &ActRequest<'_>) -> PolicyDecision {
        PolicyDecision::finish()
    }
}

/// Finishes with probability `p_finish`, otherwise picks a uniform candidate.
#[derive(Clone, Debug)]
pub struct RandomPolicy {
    rng: ChaCha8Rng,
    p_finish: f64,
}

impl RandomPolicy {
    pub fn new(seed: u64, p_finish: f64) -> Self {
        assert!(
            p_finish > 0.0 && p_finish <= 1.0,
            "p_finish must lie in (0, 1]"
        );
        RandomPolicy {
            rng: ChaCha8Rng::seed_from_u64(seed),
            p_finish,
        }
    }
}

impl Policy for RandomPolicy {
    fn name(&self) -> &str {
        "random"
    }

    fn act(&mut self, req: &ActRequest<'_>) -> PolicyDecision {
        let k = req.candidates.len();
        if k == 0 || self.rng.gen_bool(self.p_finish) {
            let lp = if k == 0 { 0.0 } else { self.p_finish.ln() };
            return PolicyDecision {
                action: Action::Finish,
                log_prob: Some(lp),
                value: None,
            };
        }
        let i = req.candidates[self.rng.gen_range(0..k)];
        PolicyDecision {
            action: Action::Constraint(i),
            log_prob: Some(((1.0 - self.p_finish) / k as f64).ln()),
            value: None,
        }
    }
}

/// Hypergraph-statistics heuristic.
///
/// Shrink deletes the candidate in the fewest MUS hyperedges, grow adds the
/// candidate in the fewest MCS hyperedges (ties to the lowest index). It
/// finishes when the relevant edge class is empty, when every candidate
/// already lies in some edge of that class, or when the fraction of the
/// episode's moves reaches `max_ratio`.
#[derive(Clone, Debug)]
pub struct FrequencyHeuristic {
    pub max_ratio: f64,
}

impl Default for FrequencyHeuristic {
    fn default() -> Self {
        FrequencyHeuristic { max_ratio: 0.5 }
    }
}

impl Policy for FrequencyHeuristic {
    fn name(&self) -> &str {
        "freq"
    }

    fn act(&mut self, req: &ActRequest<'_>) -> PolicyDecision {
        let g = req.graph;
        let wm = req.watermark;
        let edges = match req.op {
            Op::Shrink => &g.mus_edges()[..wm.mus],
            Op::Grow => &g.mcs_edges()[..wm.mcs],
        };
        if edges.is_empty() || req.candidates.is_empty() {
            return PolicyDecision::finish();
        }
        let initial = req.step + req.candidates.len();
        if req.step as f64 >= self.max_ratio * initial as f64 {
            return PolicyDecision::finish();
        }
        let degree = |v: usize| edges.iter().filter(|e| e.contains(v)).count();
        let (best, deg) = req
            .candidates
            .iter()
            .map(|&v| (v, degree(v)))
            .min_by_key(|&(v, d)| (d, v))
            .expect("nonempty candidates");
        if deg > 0 {
            return PolicyDecision::finish();
        }
        PolicyDecision::pick(best)
    }
}

/// Replays a fixed decision list, then finishes.
#[derive(Clone, Debug, Default)]
pub struct ScriptedPolicy {
    script: VecDeque<PolicyDecision>,
    pub episodes: Vec<EpisodeRecord>,
}

impl ScriptedPolicy {
    pub fn new(script: Vec<PolicyDecision>) -> Self {
        ScriptedPolicy {
            script: script.into(),
            episodes: Vec::new(),
        }
    }
}

impl Policy for ScriptedPolicy {
    fn name(&self) -> &str {
        "scripted"
    }

    fn act(&mut self, _req: &ActRequest<'_>) -> PolicyDecision {
        self.script
            .pop_front()
            .unwrap_or_else(PolicyDecision::finish)
    }

    fn episode_end(&mut self, record: &EpisodeRecord) {
        self.episodes.push(record.clone());
    }
}

/// Wraps a policy and keeps the wire form of every request it saw.
#[derive(Debug)]
pub struct Recorded<P> {
    pub inner: P,
    pub requests: Vec<ActWire>,
    pub episodes: Vec<EpisodeRecord>,
}

impl<P> Recorded<P> {
    pub fn new(inner: P) -> Self {
        Recorded {
            inner,
            requests: Vec::new(),
            episodes: Vec::new(),
        }
    }
}

impl<P: Policy> Policy for Recorded<P> {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn act(&mut self, req: &ActRequest<'_>) -> PolicyDecision {
        self.requests.push(req.to_wire());
        self.inner.act(req)
    }

    fn episode_end(&mut self, record: &EpisodeRecord) {
        self.episodes.push(record.clone());
        self.inner.episode_end(record);
    }
}
