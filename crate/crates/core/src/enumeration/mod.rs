//! Online MUS/MSS enumeration: MARCO, TOME and ReMUS over a shared
//! [`PowerSetMap`], with either the standard or a policy-driven shrink/grow.
//!
//! TOME and ReMUS are reconstructions. TOME takes a maximal unexplored seed
//! `T`, a minimal unexplored `B ⊆ T`, orders `T\B` at random into a chain
//! from `B` to `T`, binary-searches the sat/unsat boundary of the chain, then
//! shrinks the first unsatisfiable element and grows the last satisfiable
//! one. Every element of such a chain is unexplored, so both results are new
//! and no classification check is needed. ReMUS runs the MARCO loop inside a
//! domain; after each MUS `M` from a seed `S` it recurses into
//! `M ∪ R`, where `R` is a random `remus_reduction` fraction (rounded up) of
//! `S\M`. A satisfiable seed below the top level is grown to a global MSS and
//! ends that level.

mod map;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use map::{PowerSetMap, SeedPolarity};

use crate::agentlink::{ActMode, EpisodeRecord, EpisodeSink, Policy};
use crate::extraction::{
    grow_standard, grow_with_agent, shrink_standard, shrink_with_agent, ExtractError, ExtractKind,
    ExtractionResult,
};
use crate::formula::CnfInstance;
use crate::mask::SubsetMask;
use crate::musgraph::{ExplorationGraph, GraphError};
use crate::oracle::{CheckLedger, CnfOracle, OracleError, Phase, SubsetOracle};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algo {
    #[default]
    Marco,
    Tome,
    Remus,
}

impl std::str::FromStr for Algo {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "marco" => Ok(Algo::Marco),
            "tome" => Ok(Algo::Tome),
            "remus" => Ok(Algo::Remus),
            other => Err(format!(
                "unknown algorithm `{other}` (expected marco, tome or remus)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumeratorConfig {
    pub algo: Algo,
    pub seed_polarity: SeedPolarity,
    /// Fraction of `S\M` kept when ReMUS recurses.
    pub remus_reduction: f64,
    /// Drives TOME chain orders and ReMUS domain sampling.
    pub rng_seed: u64,
}

impl Default for EnumeratorConfig {
    fn default() -> Self {
        EnumeratorConfig {
            algo: Algo::Marco,
            seed_polarity: SeedPolarity::Maximal,
            remus_reduction: 0.9,
            rng_seed: 0,
        }
    }
}

impl EnumeratorConfig {
    pub fn new(algo: Algo) -> Self {
        EnumeratorConfig {
            algo,
            ..Default::default()
        }
    }
}

/// How seeds are shrunk and grown.
pub enum Strategy<'p> {
    Standard,
    Agent {
        policy: &'p mut dyn Policy,
        mode: ActMode,
    },
}

pub struct RunOptions<'p> {
    pub strategy: Strategy<'p>,
    pub deadline: Option<Instant>,
    pub recorder: Option<&'p mut dyn EpisodeSink>,
    pub instance_id: String,
}

impl Default for RunOptions<'_> {
    fn default() -> Self {
        RunOptions {
            strategy: Strategy::Standard,
            deadline: None,
            recorder: None,
            instance_id: String::new(),
        }
    }
}

impl<'p> RunOptions<'p> {
    pub fn with_policy(policy: &'p mut dyn Policy) -> Self {
        RunOptions {
            strategy: Strategy::Agent {
                policy,
                mode: ActMode::Greedy,
            },
            ..Default::default()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    /// Every MUS and MSS was enumerated.
    Exhausted,
    BudgetExhausted,
    TimedOut,
}

/// State after one recorded set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    /// Ledger total when the set was recorded.
    pub checks: u64,
    /// Classification checks included in `checks`.
    pub classify: u64,
    /// Cumulative MUS + MSS count.
    pub found: usize,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub extractions: u64,
    /// Sum of `N_correction` (or of standard shrink/grow checks).
    pub extraction_checks: u64,
    /// What the standard procedures would have spent on the same seeds.
    pub baseline_checks: u64,
    pub policy_calls: u64,
    pub aborted_episodes: u64,
    pub map_calls: u64,
}

#[derive(Debug, Error)]
pub enum EnumError {
    #[error(transparent)]
    Extract(#[from] ExtractError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub muses: Vec<SubsetMask>,
    pub msses: Vec<SubsetMask>,
    pub graph: ExplorationGraph,
    pub ledger: CheckLedger,
    pub trajectory: Vec<TrajectoryPoint>,
    pub status: RunStatus,
    pub stats: RunStats,
}

impl RunResult {
    pub fn found(&self) -> usize {
        self.muses.len() + self.msses.len()
    }

    /// Sets found within the first `checks` ledger checks.
    pub fn found_at(&self, checks: u64) -> usize {
        self.trajectory
            .iter()
            .take_while(|p| p.checks <= checks)
            .last()
            .map_or(0, |p| p.found)
    }
}

enum Stop {
    Budget,
    Timeout,
    Fatal(EnumError),
}

impl From<OracleError> for Stop {
    fn from(_: OracleError) -> Self {
        Stop::Budget
    }
}

impl From<ExtractError> for Stop {
    fn from(e: ExtractError) -> Self {
        match e {
            ExtractError::Oracle(_) => Stop::Budget,
            e => Stop::Fatal(e.into()),
        }
    }
}

impl From<GraphError> for Stop {
    fn from(e: GraphError) -> Self {
        Stop::Fatal(e.into())
    }
}

struct Engine<'o, 'p> {
    oracle: &'o mut dyn SubsetOracle,
    opts: RunOptions<'p>,
    cfg: EnumeratorConfig,
    m: usize,
    map: PowerSetMap,
    graph: ExplorationGraph,
    muses: Vec<SubsetMask>,
    msses: Vec<SubsetMask>,
    trajectory: Vec<TrajectoryPoint>,
    stats: RunStats,
    rng: ChaCha8Rng,
}

impl<'o, 'p> Engine<'o, 'p> {
    fn new(oracle: &'o mut dyn SubsetOracle, cfg: &EnumeratorConfig, opts: RunOptions<'p>) -> Self {
        let m = oracle.num_constraints();
        Engine {
            oracle,
            opts,
            cfg: cfg.clone(),
            m,
            map: PowerSetMap::new(m),
            graph: ExplorationGraph::new(m),
            muses: Vec::new(),
            msses: Vec::new(),
            trajectory: Vec::new(),
            stats: RunStats::default(),
            rng: ChaCha8Rng::seed_from_u64(cfg.rng_seed),
        }
    }

    fn tick(&self) -> Result<(), Stop> {
        if self.opts.deadline.is_some_and(|d| Instant::now() >= d) {
            return Err(Stop::Timeout);
        }
        if self.oracle.ledger().is_exhausted() {
            return Err(Stop::Budget);
        }
        Ok(())
    }

    fn seed(&mut self, domain: Option<&SubsetMask>, polarity: SeedPolarity) -> Option<SubsetMask> {
        match domain {
            None => self.map.next_seed(polarity),
            Some(d) => self.map.next_seed_within(d, polarity),
        }
    }

    fn classify(&mut self, s: &SubsetMask) -> Result<bool, Stop> {
        Ok(self.oracle.is_sat(s, Phase::Seed)?)
    }

    fn extract(&mut self, kind: ExtractKind, s: &SubsetMask) -> Result<SubsetMask, Stop> {
        self.tick()?;
        let span = match kind {
            ExtractKind::Mus => s.len(),
            ExtractKind::Mss => self.m - s.len(),
        } as u64;
        let (found, n) = match &mut self.opts.strategy {
            Strategy::Standard => {
                let r = match kind {
                    ExtractKind::Mus => shrink_standard(&mut *self.oracle, s)?,
                    ExtractKind::Mss => grow_standard(&mut *self.oracle, s)?,
                };
                (r, span)
            }
            Strategy::Agent { policy, mode } => {
                let wm = self.graph.watermark();
                let res: ExtractionResult = match kind {
                    ExtractKind::Mus => {
                        shrink_with_agent(&mut *self.oracle, s, &self.graph, &mut **policy, *mode)?
                    }
                    ExtractKind::Mss => {
                        grow_with_agent(&mut *self.oracle, s, &self.graph, &mut **policy, *mode)?
                    }
                };
                let rec = EpisodeRecord::from_result(&self.opts.instance_id, wm, &res);
                policy.episode_end(&rec);
                if let Some(sink) = self.opts.recorder.as_mut() {
                    sink.record(&rec);
                }
                self.stats.policy_calls += res.policy_calls;
                self.stats.aborted_episodes += res.aborted as u64;
                (res.subset, res.checks_correction)
            }
        };
        self.stats.extractions += 1;
        self.stats.extraction_checks += n;
        self.stats.baseline_checks += span;
        Ok(found)
    }

    fn record(&mut self, kind: ExtractKind, s: SubsetMask) -> Result<(), Stop> {
        match kind {
            ExtractKind::Mus => {
                let fresh = self.graph.record_mus(&s)?;
                debug_assert!(fresh, "blocking prevents repeated MUSes");
                self.map.block_mus(&s);
                self.muses.push(s);
            }
            ExtractKind::Mss => {
                self.graph.record_mss(&s)?;
                self.map.block_mss(&s);
                self.msses.push(s);
            }
        }
        let ledger = self.oracle.ledger();
        self.trajectory.push(TrajectoryPoint {
            checks: ledger.total(),
            classify: ledger.phase(Phase::Classify),
            found: self.muses.len() + self.msses.len(),
        });
        Ok(())
    }

    fn marco(&mut self) -> Result<(), Stop> {
        loop {
            self.tick()?;
            let Some(seed) = self.seed(None, self.cfg.seed_polarity) else {
                return Ok(());
            };
            let kind = if self.classify(&seed)? {
                ExtractKind::Mss
            } else {
                ExtractKind::Mus
            };
            let found = self.extract(kind, &seed)?;
            self.record(kind, found)?;
        }
    }

    fn tome(&mut self) -> Result<(), Stop> {
        loop {
            self.tick()?;
            let Some(top) = self.seed(None, SeedPolarity::Maximal) else {
                return Ok(());
            };
            let bottom = self
                .seed(Some(&top), SeedPolarity::Minimal)
                .expect("the top seed itself is unexplored");
            let mut order = top.difference(&bottom).to_indices();
            order.shuffle(&mut self.rng);
            let element = |k: usize| {
                let mut x = bottom.clone();
                for &c in &order[..k] {
                    x.insert(c);
                }
                x
            };
            let len = order.len() + 1;
            let mut fail = None;
            let first_unsat = chain_boundary(len, |k| {
                match self.oracle.is_sat(&element(k), Phase::Seed) {
                    Ok(sat) => sat,
                    Err(e) => {
                        fail = Some(e);
                        false
                    }
                }
            });
            if let Some(e) = fail {
                return Err(e.into());
            }
            if first_unsat < len {
                let mus = self.extract(ExtractKind::Mus, &element(first_unsat))?;
                self.record(ExtractKind::Mus, mus)?;
            }
            if first_unsat > 0 {
                let mss = self.extract(ExtractKind::Mss, &element(first_unsat - 1))?;
                self.record(ExtractKind::Mss, mss)?;
            }
        }
    }

    fn remus(&mut self, domain: Option<&SubsetMask>, depth: usize) -> Result<(), Stop> {
        loop {
            self.tick()?;
            let Some(seed) = self.seed(domain, self.cfg.seed_polarity) else {
                return Ok(());
            };
            if self.classify(&seed)? {
                let mss = self.extract(ExtractKind::Mss, &seed)?;
                self.record(ExtractKind::Mss, mss)?;
                if depth > 0 {
                    return Ok(());
                }
                continue;
            }
            let mus = self.extract(ExtractKind::Mus, &seed)?;
            let rest = seed.difference(&mus).to_indices();
            self.record(ExtractKind::Mus, mus.clone())?;
            if depth < self.m && !rest.is_empty() {
                let keep = ((self.cfg.remus_reduction * rest.len() as f64).ceil() as usize)
                    .min(rest.len());
                let mut sub = mus;
                for &c in rest.choose_multiple(&mut self.rng, keep) {
                    sub.insert(c);
                }
                self.remus(Some(&sub), depth + 1)?;
            }
        }
    }
}

/// Index of the first element where `probe` turns false on a chain of `len`
/// monotone elements (`probe` true on a prefix, false on the rest). Returns
/// `len` when every probe is true. Uses at most `⌈log2(len + 1)⌉` probes.
pub fn chain_boundary(len: usize, mut probe: impl FnMut(usize) -> bool) -> usize {
    let (mut lo, mut hi) = (-1i64, len as i64);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if probe(mid as usize) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi as usize
}

/// Runs `cfg.algo` until the map is exhausted, the ledger budget is spent,
/// or the deadline passes.
pub fn run(
    oracle: &mut dyn SubsetOracle,
    cfg: &EnumeratorConfig,
    opts: RunOptions<'_>,
) -> Result<RunResult, EnumError> {
    let mut e = Engine::new(oracle, cfg, opts);
    let outcome = match cfg.algo {
        Algo::Marco => e.marco(),
        Algo::Tome => e.tome(),
        Algo::Remus => e.remus(None, 0),
    };
    let status = match outcome {
        Ok(()) => RunStatus::Exhausted,
        Err(Stop::Budget) => RunStatus::BudgetExhausted,
        Err(Stop::Timeout) => RunStatus::TimedOut,
        Err(Stop::Fatal(err)) => return Err(err),
    };
    e.stats.map_calls = e.map.solver_calls;
    Ok(RunResult {
        muses: e.muses,
        msses: e.msses,
        graph: e.graph,
        ledger: e.oracle.ledger().clone(),
        trajectory: e.trajectory,
        status,
        stats: e.stats,
    })
}

pub fn run_marco(
    oracle: &mut dyn SubsetOracle,
    opts: RunOptions<'_>,
) -> Result<RunResult, EnumError> {
    run(oracle, &EnumeratorConfig::new(Algo::Marco), opts)
}

pub fn run_tome(
    oracle: &mut dyn SubsetOracle,
    rng_seed: u64,
    opts: RunOptions<'_>,
) -> Result<RunResult, EnumError> {
    run(
        oracle,
        &EnumeratorConfig {
            rng_seed,
            ..EnumeratorConfig::new(Algo::Tome)
        },
        opts,
    )
}

pub fn run_remus(
    oracle: &mut dyn SubsetOracle,
    rng_seed: u64,
    opts: RunOptions<'_>,
) -> Result<RunResult, EnumError> {
    run(
        oracle,
        &EnumeratorConfig {
            rng_seed,
            ..EnumeratorConfig::new(Algo::Remus)
        },
        opts,
    )
}

/// Convenience wrapper building a fresh [`CnfOracle`] with `budget`.
pub fn enumerate(
    inst: &CnfInstance,
    cfg: &EnumeratorConfig,
    budget: Option<u64>,
    opts: RunOptions<'_>,
) -> Result<RunResult, EnumError> {
    let mut oracle = CnfOracle::new(inst, budget);
    run(&mut oracle, cfg, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agentlink::{FrequencyHeuristic, ImmediateFinish, RandomPolicy, Recorded};
    use crate::extraction::{is_mss, is_mus};
    use crate::formula::{generate_sr, GeneratorConfig};
    use crate::oracle::check_unbudgeted;
    use std::collections::BTreeSet;

    fn toy() -> CnfInstance {
        CnfInstance::new(2, vec![vec![1], vec![-1], vec![1, 2]]).unwrap()
    }

    fn mask(m: usize, ix: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(m, ix.iter().copied())
    }

    /// MUSes and MSSes by truth-table evaluation of every subset.
    fn brute(inst: &CnfInstance) -> (BTreeSet<SubsetMask>, BTreeSet<SubsetMask>) {
        let m = inst.num_clauses();
        let n = inst.num_vars() as usize;
        let mut sat = vec![false; 1 << m];
        for a in 0u32..1 << n {
            let asg: Vec<bool> = (0..n).map(|v| a >> v & 1 == 1).collect();
            let bits: usize = (0..m)
                .filter(|&i| inst.clause_satisfied(i, &asg))
                .map(|i| 1 << i)
                .sum();
            sat[bits] = true;
        }
        for s in (0..1usize << m).rev() {
            if sat[s] {
                for i in 0..m {
                    sat[s & !(1 << i)] = true;
                }
            }
        }
        let to_mask = |s: usize| SubsetMask::from_indices(m, (0..m).filter(|i| s >> i & 1 == 1));
        let mut muses = BTreeSet::new();
        let mut msses = BTreeSet::new();
        for s in 0..1usize << m {
            if !sat[s]
                && (0..m)
                    .filter(|i| s >> i & 1 == 1)
                    .all(|i| sat[s & !(1 << i)])
            {
                muses.insert(to_mask(s));
            }
            if sat[s] && (0..m).filter(|i| s >> i & 1 == 0).all(|i| !sat[s | 1 << i]) {
                msses.insert(to_mask(s));
            }
        }
        (muses, msses)
    }

    fn sets(v: &[SubsetMask]) -> BTreeSet<SubsetMask> {
        let s: BTreeSet<SubsetMask> = v.iter().cloned().collect();
        assert_eq!(s.len(), v.len(), "duplicate set reported");
        s
    }

    fn small_instances(count: usize) -> Vec<CnfInstance> {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let cfg = GeneratorConfig::sr(3, 6, 0);
        let mut out = Vec::new();
        while out.len() < count {
            let inst = generate_sr(&cfg, &mut rng).unwrap();
            if inst.num_clauses() <= 10 {
                out.push(inst);
            }
        }
        out
    }

    #[test]
    fn toy_marco() {
        let r = enumerate(
            &toy(),
            &EnumeratorConfig::default(),
            None,
            RunOptions::default(),
        )
        .unwrap();
        assert_eq!(r.status, RunStatus::Exhausted);
        assert_eq!(sets(&r.muses), [mask(3, &[0, 1])].into());
        assert_eq!(sets(&r.msses), [mask(3, &[0, 2]), mask(3, &[1, 2])].into());
        assert_eq!(r.found(), r.trajectory.last().unwrap().found);
    }

    #[test]
    fn toy_all_algorithms_agree() {
        for algo in [Algo::Marco, Algo::Tome, Algo::Remus] {
            let r = enumerate(
                &toy(),
                &EnumeratorConfig::new(algo),
                None,
                RunOptions::default(),
            )
            .unwrap();
            let (mu, ms) = brute(&toy());
            assert_eq!(sets(&r.muses), mu, "{algo:?}");
            assert_eq!(sets(&r.msses), ms, "{algo:?}");
        }
    }

    #[test]
    fn brute_force_equivalence_all_strategies() {
        for (k, inst) in small_instances(25).iter().enumerate() {
            let (mu, ms) = brute(inst);
            for algo in [Algo::Marco, Algo::Tome, Algo::Remus] {
                for pol in [
                    SeedPolarity::Maximal,
                    SeedPolarity::Minimal,
                    SeedPolarity::Default,
                ] {
                    let cfg = EnumeratorConfig {
                        algo,
                        seed_polarity: pol,
                        rng_seed: k as u64,
                        ..Default::default()
                    };
                    let r = enumerate(inst, &cfg, None, RunOptions::default()).unwrap();
                    assert_eq!(sets(&r.muses), mu, "{algo:?} {pol:?} instance {k}");
                    assert_eq!(sets(&r.msses), ms, "{algo:?} {pol:?} instance {k}");
                }
                let mut pol = RandomPolicy::new(k as u64, 0.2);
                let r = enumerate(
                    inst,
                    &EnumeratorConfig::new(algo),
                    None,
                    RunOptions::with_policy(&mut pol),
                )
                .unwrap();
                assert_eq!(sets(&r.muses), mu, "{algo:?} agent instance {k}");
                assert_eq!(sets(&r.msses), ms, "{algo:?} agent instance {k}");
            }
        }
    }

    #[test]
    fn trajectory_and_anytime_correctness_under_budget() {
        for inst in small_instances(10) {
            for budget in [0, 5, 17, 40] {
                for algo in [Algo::Marco, Algo::Tome, Algo::Remus] {
                    let mut pol = FrequencyHeuristic::default();
                    let r = enumerate(
                        &inst,
                        &EnumeratorConfig::new(algo),
                        Some(budget),
                        RunOptions::with_policy(&mut pol),
                    )
                    .unwrap();
                    assert!(r.ledger.total() <= budget);
                    assert!(r
                        .trajectory
                        .windows(2)
                        .all(|w| w[0].checks <= w[1].checks && w[0].found < w[1].found));
                    assert_eq!(r.found(), r.trajectory.last().map_or(0, |p| p.found));
                    let mut o = CnfOracle::new(&inst, None);
                    assert!(r.muses.iter().all(|m| is_mus(&mut o, m)));
                    assert!(r.msses.iter().all(|m| is_mss(&mut o, m)));
                    if budget == 0 {
                        assert_eq!(r.found(), 0);
                        assert_eq!(r.status, RunStatus::BudgetExhausted);
                    }
                }
            }
        }
    }

    #[test]
    fn finish_policy_matches_standard() {
        for inst in small_instances(10) {
            for algo in [Algo::Marco, Algo::Tome, Algo::Remus] {
                let cfg = EnumeratorConfig::new(algo);
                let plain = enumerate(&inst, &cfg, None, RunOptions::default()).unwrap();
                let mut fin = ImmediateFinish;
                let agent =
                    enumerate(&inst, &cfg, None, RunOptions::with_policy(&mut fin)).unwrap();
                assert_eq!(plain.muses, agent.muses);
                assert_eq!(plain.msses, agent.msses);
                let strip = |r: &RunResult| {
                    r.trajectory
                        .iter()
                        .map(|p| (p.checks - p.classify, p.found))
                        .collect::<Vec<_>>()
                };
                assert_eq!(strip(&plain), strip(&agent));
                assert_eq!(agent.ledger.phase(Phase::Classify), agent.stats.extractions);
                assert_eq!(
                    plain.ledger.total() + agent.stats.extractions,
                    agent.ledger.total()
                );
            }
        }
    }

    #[test]
    fn seeds_never_revisit_explored_region() {
        for inst in small_instances(10) {
            let mut o = CnfOracle::new(&inst, None);
            let m = inst.num_clauses();
            let mut map = PowerSetMap::new(m);
            let mut muses: Vec<SubsetMask> = Vec::new();
            let mut msses: Vec<SubsetMask> = Vec::new();
            while let Some(s) = map.next_seed(SeedPolarity::Default) {
                assert!(!muses.iter().any(|u| u.is_subset(&s)));
                assert!(!msses.iter().any(|u| s.is_subset(u)));
                if check_unbudgeted(&inst, &s).is_sat() {
                    let x = grow_standard(&mut o, &s).unwrap();
                    map.block_mss(&x);
                    msses.push(x);
                } else {
                    let x = shrink_standard(&mut o, &s).unwrap();
                    map.block_mus(&x);
                    muses.push(x);
                }
            }
            let (mu, ms) = brute(&inst);
            assert_eq!(sets(&muses), mu);
            assert_eq!(sets(&msses), ms);
        }
    }

    #[test]
    fn chain_boundary_probe_count() {
        for len in 1..200usize {
            let bound = (usize::BITS - len.leading_zeros()) as usize; // ceil(log2(len + 1))
            for cut in 0..=len {
                let mut probes = 0;
                let got = chain_boundary(len, |k| {
                    probes += 1;
                    k < cut
                });
                assert_eq!(got, cut);
                assert!(probes <= bound, "len {len} cut {cut}: {probes} probes");
            }
        }
    }

    #[test]
    fn tome_seed_checks_are_logarithmic() {
        for inst in small_instances(10) {
            let r = enumerate(
                &inst,
                &EnumeratorConfig::new(Algo::Tome),
                None,
                RunOptions::default(),
            )
            .unwrap();
            let m = inst.num_clauses();
            let per_round = (usize::BITS - (m + 1).leading_zeros()) as u64;
            assert!(r.ledger.phase(Phase::Seed) <= per_round * r.found() as u64);
        }
    }

    #[test]
    fn recorded_watermarks_replay_against_final_graph() {
        let inst = &small_instances(3)[2];
        let mut pol = Recorded::new(FrequencyHeuristic::default());
        let mut sink: Vec<EpisodeRecord> = Vec::new();
        let opts = RunOptions {
            strategy: Strategy::Agent {
                policy: &mut pol,
                mode: ActMode::Greedy,
            },
            recorder: Some(&mut sink),
            instance_id: "replay".into(),
            deadline: None,
        };
        let r = enumerate(inst, &EnumeratorConfig::default(), None, opts).unwrap();
        assert_eq!(sink.len() as u64, r.stats.extractions);
        assert_eq!(sink, pol.episodes);
        let mut req = pol.requests.iter();
        for ep in &sink {
            assert_eq!(ep.recompute_reward().to_bits(), ep.reward.to_bits());
            let snap = r.graph.export_at(ep.watermark);
            for _ in 0..ep.actions.len() {
                let w = req.next().expect("one request per decision");
                assert_eq!((&w.mus, &w.mcs), (&snap.mus, &snap.mcs));
            }
        }
    }

    #[test]
    fn deadline_in_the_past_times_out() {
        let opts = RunOptions {
            deadline: Some(Instant::now()),
            ..Default::default()
        };
        let r = enumerate(&toy(), &EnumeratorConfig::default(), None, opts).unwrap();
        assert_eq!(r.status, RunStatus::TimedOut);
        assert_eq!(r.found(), 0);
    }
}
