//! Shrink/grow: the deletion-based standard procedures, the policy-driven
//! variants, and the corrections that turn a policy's tentative subset into
//! a valid MUS/MSS.
//!
//! Check accounting for one policy-driven extraction:
//! - the policy loop performs no oracle checks;
//! - the correction first classifies the tentative subset (phase `Classify`),
//!   which is charged to the ledger but not to `N_correction`;
//! - restore/removal checks (phase `Correction`) and the standard
//!   shrink/grow checks (phases `Shrink`/`Grow`) make up `N_correction`.
//!
//! With this convention `|MUS| <= N_correction <= 2|S_0|` for shrink and
//! `|C\MSS| <= N_correction <= 2|C\S_0|` for grow, for any policy.

use std::fmt;

use log::warn;
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::agentlink::{ActMode, ActRequest, Op, Policy};
use crate::mask::SubsetMask;
use crate::musgraph::ExplorationGraph;
use crate::oracle::{OracleError, Phase, SubsetOracle};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExtractError {
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error("contract violation: {0}")]
    Contract(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExtractKind {
    Mus,
    Mss,
}

/// A policy action: a constraint to delete/add, or stop.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    Finish,
    Constraint(usize),
}

impl Serialize for Action {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Action::Finish => s.serialize_str("finish"),
            Action::Constraint(i) => s.serialize_u64(*i as u64),
        }
    }
}

impl<'de> Deserialize<'de> for Action {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct V;
        impl Visitor<'_> for V {
            type Value = Action;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a constraint index or \"finish\"")
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Action, E> {
                Ok(Action::Constraint(v as usize))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Action, E> {
                usize::try_from(v)
                    .map(Action::Constraint)
                    .map_err(|_| E::custom("negative constraint index"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Action, E> {
                if v == "finish" {
                    Ok(Action::Finish)
                } else {
                    Err(E::invalid_value(de::Unexpected::Str(v), &self))
                }
            }
        }
        d.deserialize_any(V)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PolicyDecision {
    pub action: Action,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub log_prob: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
}

impl PolicyDecision {
    pub fn finish() -> Self {
        PolicyDecision {
            action: Action::Finish,
            log_prob: None,
            value: None,
        }
    }

    pub fn pick(i: usize) -> Self {
        PolicyDecision {
            action: Action::Constraint(i),
            log_prob: None,
            value: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtractionResult {
    pub kind: ExtractKind,
    pub subset: SubsetMask,
    pub initial: SubsetMask,
    /// `N_correction`: correction checks excluding the classification check.
    pub checks_correction: u64,
    /// Every ledger check spent by this extraction.
    pub checks_total: u64,
    pub actions: Vec<PolicyDecision>,
    pub policy_calls: u64,
    pub reward: f64,
    /// The policy broke the candidate rule; the extraction fell back to the
    /// immediate-finish path and `actions` is empty.
    pub aborted: bool,
}

/// Episode reward: `1 - (N_correction - lower_bound) / span`, where the
/// lower bound is `|MUS|` (shrink) or `|C\MSS|` (grow) and the span is
/// `|S_0|` (shrink) or `|C\S_0|` (grow). A zero span yields 1.
pub fn compute_reward(
    kind: ExtractKind,
    n_correction: u64,
    result_size: usize,
    initial_size: usize,
    universe: usize,
) -> f64 {
    let span = match kind {
        ExtractKind::Mus => initial_size,
        ExtractKind::Mss => universe - initial_size,
    };
    if span == 0 {
        return 1.0;
    }
    let excess = n_correction as i64 - result_size as i64;
    1.0 - excess as f64 / span as f64
}

/// Deletion-based shrink in ascending index order; exactly `|s|` checks.
pub fn shrink_standard<O: SubsetOracle + ?Sized>(
    oracle: &mut O,
    s: &SubsetMask,
) -> Result<SubsetMask, ExtractError> {
    let mut m = s.clone();
    for c in s.iter() {
        m.remove(c);
        if oracle.is_sat(&m, Phase::Shrink)? {
            m.insert(c);
        }
    }
    // Nothing removed means s was an MUS or satisfiable; the latter breaks the contract.
    if cfg!(debug_assertions) && m == *s && oracle.check_unbudgeted(s).is_sat() {
        return Err(ExtractError::Contract("shrink input is satisfiable".into()));
    }
    Ok(m)
}

/// Addition-based grow in ascending index order; exactly `|C\s|` checks.
pub fn grow_standard<O: SubsetOracle + ?Sized>(
    oracle: &mut O,
    s: &SubsetMask,
) -> Result<SubsetMask, ExtractError> {
    let mut m = s.clone();
    for c in s.complement().iter() {
        m.insert(c);
        if !oracle.is_sat(&m, Phase::Grow)? {
            m.remove(c);
        }
    }
    if cfg!(debug_assertions) && m == *s && !oracle.check_unbudgeted(s).is_sat() {
        return Err(ExtractError::Contract("grow input is unsatisfiable".into()));
    }
    Ok(m)
}

/// Repairs a tentative shrink output. Returns the MUS and `N_correction`.
pub fn correct_shrink<O: SubsetOracle + ?Sized>(
    oracle: &mut O,
    tentative: &SubsetMask,
    deletions: &[usize],
) -> Result<(SubsetMask, u64), ExtractError> {
    let mut restores = 0u64;
    let mut m = tentative.clone();
    if oracle.is_sat(tentative, Phase::Classify)? {
        let mut pending = deletions.to_vec();
        loop {
            let c = pending.pop().ok_or_else(|| {
                ExtractError::Contract("deletion list exhausted while still satisfiable".into())
            })?;
            m.insert(c);
            restores += 1;
            if !oracle.is_sat(&m, Phase::Correction)? {
                break;
            }
        }
    }
    let shrink_checks = m.len() as u64;
    let mus = shrink_standard(oracle, &m)?;
    Ok((mus, restores + shrink_checks))
}

/// Repairs a tentative grow output. Returns the MSS and `N_correction`.
pub fn correct_grow<O: SubsetOracle + ?Sized>(
    oracle: &mut O,
    tentative: &SubsetMask,
    additions: &[usize],
) -> Result<(SubsetMask, u64), ExtractError> {
    let mut removals = 0u64;
    let mut m = tentative.clone();
    if !oracle.is_sat(tentative, Phase::Classify)? {
        let mut pending = additions.to_vec();
        loop {
            let c = pending.pop().ok_or_else(|| {
                ExtractError::Contract("addition list exhausted while still unsatisfiable".into())
            })?;
            m.remove(c);
            removals += 1;
            if oracle.is_sat(&m, Phase::Correction)? {
                break;
            }
        }
    }
    let grow_checks = (m.width() - m.len()) as u64;
    let mss = grow_standard(oracle, &m)?;
    Ok((mss, removals + grow_checks))
}

struct Episode {
    subset: SubsetMask,
    trail: Vec<usize>,
    actions: Vec<PolicyDecision>,
    calls: u64,
    aborted: bool,
}

/// Runs the policy loop without touching the oracle.
fn run_policy(
    op: Op,
    initial: &SubsetMask,
    graph: &ExplorationGraph,
    policy: &mut dyn Policy,
    mode: ActMode,
) -> Episode {
    let mut ep = Episode {
        subset: initial.clone(),
        trail: Vec::new(),
        actions: Vec::new(),
        calls: 0,
        aborted: false,
    };
    loop {
        let candidates = match op {
            Op::Shrink => ep.subset.to_indices(),
            Op::Grow => ep.subset.complement().to_indices(),
        };
        if candidates.is_empty() {
            break;
        }
        let req = ActRequest {
            op,
            graph,
            watermark: graph.watermark(),
            subset: &ep.subset,
            candidates: &candidates,
            step: ep.trail.len(),
            mode,
        };
        let decision = policy.act(&req);
        ep.calls += 1;
        match decision.action {
            Action::Finish => {
                ep.actions.push(decision);
                break;
            }
            Action::Constraint(i) if candidates.binary_search(&i).is_ok() => {
                match op {
                    Op::Shrink => ep.subset.remove(i),
                    Op::Grow => ep.subset.insert(i),
                };
                ep.trail.push(i);
                ep.actions.push(decision);
            }
            Action::Constraint(i) => {
                warn!(
                    "policy {} chose {i} outside the candidate set; falling back to finish",
                    policy.name()
                );
                ep.subset = initial.clone();
                ep.trail.clear();
                ep.actions.clear();
                ep.aborted = true;
                break;
            }
        }
    }
    ep
}

/// Policy-driven shrink of an unsatisfiable `initial`, then correction.
pub fn shrink_with_agent<O: SubsetOracle + ?Sized>(
    oracle: &mut O,
    initial: &SubsetMask,
    graph: &ExplorationGraph,
    policy: &mut dyn Policy,
    mode: ActMode,
) -> Result<ExtractionResult, ExtractError> {
    let start = oracle.ledger().total();
    let ep = run_policy(Op::Shrink, initial, graph, policy, mode);
    debug_assert_eq!(oracle.ledger().total(), start, "policy loop must not check");
    let (mus, n_corr) = correct_shrink(oracle, &ep.subset, &ep.trail)?;
    let reward = compute_reward(
        ExtractKind::Mus,
        n_corr,
        mus.len(),
        initial.len(),
        initial.width(),
    );
    Ok(ExtractionResult {
        kind: ExtractKind::Mus,
        subset: mus,
        initial: initial.clone(),
        checks_correction: n_corr,
        checks_total: oracle.ledger().total() - start,
        actions: ep.actions,
        policy_calls: ep.calls,
        reward,
        aborted: ep.aborted,
    })
}

/// Policy-driven grow of a satisfiable `initial`, then correction.
pub fn grow_with_agent<O: SubsetOracle + ?Sized>(
    oracle: &mut O,
    initial: &SubsetMask,
    graph: &ExplorationGraph,
    policy: &mut dyn Policy,
    mode: ActMode,
) -> Result<ExtractionResult, ExtractError> {
    let start = oracle.ledger().total();
    let ep = run_policy(Op::Grow, initial, graph, policy, mode);
    debug_assert_eq!(oracle.ledger().total(), start, "policy loop must not check");
    let (mss, n_corr) = correct_grow(oracle, &ep.subset, &ep.trail)?;
    let mcs_size = mss.width() - mss.len();
    let reward = compute_reward(
        ExtractKind::Mss,
        n_corr,
        mcs_size,
        initial.len(),
        initial.width(),
    );
    Ok(ExtractionResult {
        kind: ExtractKind::Mss,
        subset: mss,
        initial: initial.clone(),
        checks_correction: n_corr,
        checks_total: oracle.ledger().total() - start,
        actions: ep.actions,
        policy_calls: ep.calls,
        reward,
        aborted: ep.aborted,
    })
}

/// Definitional MUS check with uncounted calls (`|m| + 1` of them).
pub fn is_mus<O: SubsetOracle + ?Sized>(oracle: &mut O, m: &SubsetMask) -> bool {
    if oracle.check_unbudgeted(m).is_sat() {
        return false;
    }
    m.iter().all(|c| {
        let mut t = m.clone();
        t.remove(c);
        oracle.check_unbudgeted(&t).is_sat()
    })
}

/// Definitional MSS check with uncounted calls (`|C\m| + 1` of them).
pub fn is_mss<O: SubsetOracle + ?Sized>(oracle: &mut O, m: &SubsetMask) -> bool {
    if !oracle.check_unbudgeted(m).is_sat() {
        return false;
    }
    m.complement().iter().all(|c| {
        let mut t = m.clone();
        t.insert(c);
        !oracle.check_unbudgeted(&t).is_sat()
    })
}
