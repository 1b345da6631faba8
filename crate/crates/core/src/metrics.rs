//! Per-instance run records and the comparisons computed from them.
//!
//! Every aggregate here is a pure function of persisted [`InstanceRecord`]s.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::enumeration::{RunResult, RunStats, RunStatus, TrajectoryPoint};
use crate::oracle::CheckLedger;

pub const DEFAULT_WATERMARKS: [u64; 3] = [1000, 5000, 10000];

/// One line of an `enumerate` output file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceRecord {
    pub instance: String,
    pub hash: String,
    pub algo: String,
    pub agent: String,
    pub budget: Option<u64>,
    pub num_constraints: usize,
    /// Set when the instance is left out of comparisons.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub excluded: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<RunStatus>,
    pub muses: usize,
    pub msses: usize,
    pub ledger: CheckLedger,
    pub trajectory: Vec<TrajectoryPoint>,
    pub stats: RunStats,
    pub elapsed_ms: u64,
}

impl InstanceRecord {
    pub fn from_run(header: RecordHeader, run: &RunResult, elapsed_ms: u64) -> Self {
        let excluded =
            (run.status == RunStatus::TimedOut).then(|| "time limit exceeded".to_string());
        InstanceRecord {
            instance: header.instance,
            hash: header.hash,
            algo: header.algo,
            agent: header.agent,
            budget: header.budget,
            num_constraints: header.num_constraints,
            excluded,
            status: Some(run.status),
            muses: run.muses.len(),
            msses: run.msses.len(),
            ledger: run.ledger.clone(),
            trajectory: run.trajectory.clone(),
            stats: run.stats.clone(),
            elapsed_ms,
        }
    }

    pub fn failed(header: RecordHeader, reason: String, elapsed_ms: u64) -> Self {
        InstanceRecord {
            instance: header.instance,
            hash: header.hash,
            algo: header.algo,
            agent: header.agent,
            budget: header.budget,
            num_constraints: header.num_constraints,
            excluded: Some(reason),
            status: None,
            muses: 0,
            msses: 0,
            ledger: CheckLedger::default(),
            trajectory: Vec::new(),
            stats: RunStats::default(),
            elapsed_ms,
        }
    }

    pub fn found(&self) -> usize {
        self.muses + self.msses
    }

    /// Sets found within the first `checks` ledger checks.
    pub fn found_at(&self, checks: u64) -> usize {
        self.trajectory
            .iter()
            .take_while(|p| p.checks <= checks)
            .last()
            .map_or(0, |p| p.found)
    }

    /// Ran to exhaustion using at most `checks` checks.
    pub fn completed_by(&self, checks: u64) -> bool {
        self.status == Some(RunStatus::Exhausted) && self.ledger.total() <= checks
    }

    /// Step-function points `(checks, found)` starting at the origin.
    pub fn curve(&self) -> Vec<(u64, usize)> {
        std::iter::once((0, 0))
            .chain(self.trajectory.iter().map(|p| (p.checks, p.found)))
            .collect()
    }
}

/// Identifying fields shared by successful and failed records.
#[derive(Clone, Debug)]
pub struct RecordHeader {
    pub instance: String,
    pub hash: String,
    pub algo: String,
    pub agent: String,
    pub budget: Option<u64>,
    pub num_constraints: usize,
}

pub fn improvement_ratio(with: usize, without: usize) -> Option<f64> {
    (without > 0).then(|| with as f64 / without as f64)
}

/// Sample mean and standard deviation (`n - 1` denominator; 0 for one value).
pub fn mean_std(xs: &[f64]) -> Option<(f64, f64)> {
    if xs.is_empty() {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() == 1 {
        return Some((mean, 0.0));
    }
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Some((mean, var.sqrt()))
}

/// Quartile (1..=4) of each key, ranked ascending by value, ties by key.
pub fn quartiles<K: Ord + Clone>(values: &[(K, usize)]) -> BTreeMap<K, u8> {
    let mut order: Vec<&(K, usize)> = values.iter().collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| a.0.cmp(&b.0)));
    let n = order.len();
    order
        .iter()
        .enumerate()
        .map(|(rank, (k, _))| (k.clone(), (rank * 4 / n) as u8 + 1))
        .collect()
}

#[derive(Debug, Error, PartialEq)]
pub enum CompareError {
    #[error("instance `{0}` is present in only one of the result sets")]
    Unmatched(String),
    #[error("instance `{0}` has different content hashes in the two result sets")]
    HashMismatch(String),
    #[error("instance `{0}` appears more than once")]
    Duplicate(String),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstanceComparison {
    pub instance: String,
    pub watermark: u64,
    pub without: usize,
    pub with: usize,
    pub ratio: Option<f64>,
    pub quartile: u8,
    /// Both arms enumerated every set within the watermark.
    pub completed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub watermark: u64,
    /// `Q1`..`Q4` or `overall`.
    pub group: String,
    pub n: usize,
    pub mean: Option<f64>,
    pub std: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub watermarks: Vec<u64>,
    pub instances: Vec<InstanceComparison>,
    pub table: Vec<GroupRow>,
    /// Instances dropped from both arms, with the reason.
    pub excluded: Vec<(String, String)>,
    pub curves: Vec<CurveSeries>,
}

/// Cumulative count against checks for one instance and arm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurveSeries {
    pub instance: String,
    pub arm: String,
    pub points: Vec<(u64, usize)>,
}

fn index(records: &[InstanceRecord]) -> Result<BTreeMap<&str, &InstanceRecord>, CompareError> {
    let mut out = BTreeMap::new();
    for r in records {
        if out.insert(r.instance.as_str(), r).is_some() {
            return Err(CompareError::Duplicate(r.instance.clone()));
        }
    }
    Ok(out)
}

/// Compares an agent arm against a no-agent arm over matching instances.
pub fn compare(
    with: &[InstanceRecord],
    without: &[InstanceRecord],
    watermarks: &[u64],
) -> Result<CompareReport, CompareError> {
    let w = index(with)?;
    let wo = index(without)?;
    let names: BTreeSet<&str> = w.keys().chain(wo.keys()).copied().collect();
    let mut pairs = Vec::new();
    let mut excluded = Vec::new();
    for name in names {
        let (Some(a), Some(b)) = (w.get(name), wo.get(name)) else {
            return Err(CompareError::Unmatched(name.to_string()));
        };
        if a.hash != b.hash {
            return Err(CompareError::HashMismatch(name.to_string()));
        }
        match (&a.excluded, &b.excluded) {
            (Some(r), _) => excluded.push((name.to_string(), format!("with agent: {r}"))),
            (None, Some(r)) => excluded.push((name.to_string(), format!("without agent: {r}"))),
            (None, None) => pairs.push((name, *a, *b)),
        }
    }

    let mut instances = Vec::new();
    let mut table = Vec::new();
    for &wm in watermarks {
        let base: Vec<(&str, usize)> = pairs.iter().map(|(n, _, b)| (*n, b.found_at(wm))).collect();
        let quart = quartiles(&base);
        let mut groups: BTreeMap<u8, Vec<f64>> = BTreeMap::new();
        let mut all = Vec::new();
        for (name, a, b) in &pairs {
            let (cw, cwo) = (a.found_at(wm), b.found_at(wm));
            let completed = a.completed_by(wm) && b.completed_by(wm);
            let ratio = if completed {
                Some(1.0)
            } else {
                improvement_ratio(cw, cwo)
            };
            let q = quart[name];
            if let Some(r) = ratio {
                groups.entry(q).or_default().push(r);
                all.push(r);
            } else {
                log::info!("{name}: no sets without the agent within {wm} checks; ratio undefined");
            }
            instances.push(InstanceComparison {
                instance: name.to_string(),
                watermark: wm,
                without: cwo,
                with: cw,
                ratio,
                quartile: q,
                completed,
            });
        }
        for q in 1..=4u8 {
            let xs = groups.get(&q).map(Vec::as_slice).unwrap_or(&[]);
            table.push(row(wm, format!("Q{q}"), xs));
        }
        table.push(row(wm, "overall".into(), &all));
    }

    let mut curves = Vec::new();
    for (name, a, b) in &pairs {
        curves.push(CurveSeries {
            instance: name.to_string(),
            arm: "with".into(),
            points: a.curve(),
        });
        curves.push(CurveSeries {
            instance: name.to_string(),
            arm: "without".into(),
            points: b.curve(),
        });
    }
    Ok(CompareReport {
        watermarks: watermarks.to_vec(),
        instances,
        table,
        excluded,
        curves,
    })
}

fn row(watermark: u64, group: String, xs: &[f64]) -> GroupRow {
    let ms = mean_std(xs);
    GroupRow {
        watermark,
        group,
        n: xs.len(),
        mean: ms.map(|m| m.0),
        std: ms.map(|m| m.1),
    }
}

/// Checks saved per policy call: `(n_check - n_check_agent) / n_infer`.
pub fn r_eff(n_check: f64, n_check_agent: f64, n_infer: f64) -> Option<f64> {
    (n_infer > 0.0).then(|| (n_check - n_check_agent) / n_infer)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffTriple {
    pub n_check: f64,
    pub n_check_agent: f64,
    pub n_infer: f64,
}

impl EffTriple {
    /// Counterfactual triple of an agent run: the standard procedures' cost on
    /// the same seeds, the agent's correction plus classification checks, and
    /// the number of policy calls.
    pub fn from_record(r: &InstanceRecord) -> Self {
        EffTriple {
            n_check: r.stats.baseline_checks as f64,
            n_check_agent: (r.stats.extraction_checks
                + r.ledger.phase(crate::oracle::Phase::Classify)) as f64,
            n_infer: r.stats.policy_calls as f64,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffReport {
    pub n: usize,
    pub excluded: usize,
    /// Mean and sample std of per-instance ratios.
    pub mean_of_ratios: Option<f64>,
    pub std_of_ratios: Option<f64>,
    /// `(mean n_check - mean n_check_agent) / mean n_infer` over included instances.
    pub ratio_of_means: Option<f64>,
    pub mean_n_check: Option<f64>,
    pub mean_n_check_agent: Option<f64>,
    pub mean_n_infer: Option<f64>,
}

pub fn r_eff_report(triples: &[EffTriple]) -> EffReport {
    let kept: Vec<&EffTriple> = triples.iter().filter(|t| t.n_infer > 0.0).collect();
    let ratios: Vec<f64> = kept
        .iter()
        .filter_map(|t| r_eff(t.n_check, t.n_check_agent, t.n_infer))
        .collect();
    let ms = mean_std(&ratios);
    let mean = |f: fn(&EffTriple) -> f64| {
        mean_std(&kept.iter().map(|t| f(t)).collect::<Vec<_>>()).map(|m| m.0)
    };
    let (a, b, c) = (
        mean(|t| t.n_check),
        mean(|t| t.n_check_agent),
        mean(|t| t.n_infer),
    );
    EffReport {
        n: kept.len(),
        excluded: triples.len() - kept.len(),
        mean_of_ratios: ms.map(|m| m.0),
        std_of_ratios: ms.map(|m| m.1),
        ratio_of_means: match (a, b, c) {
            (Some(a), Some(b), Some(c)) => r_eff(a, b, c),
            _ => None,
        },
        mean_n_check: a,
        mean_n_check_agent: b,
        mean_n_infer: c,
    }
}
