//! Acceptance criteria, one PASS/FAIL line each. Exits non-zero on failure.

use std::collections::BTreeSet;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use musenum::agentlink::{
    read_episodes_from_str, FrequencyHeuristic, ImmediateFinish, RandomPolicy,
};
use musenum::enumeration::{
    enumerate, Algo, EnumeratorConfig, RunOptions, RunResult, RunStatus, TrajectoryPoint,
};
use musenum::extraction::{grow_standard, grow_with_agent, shrink_standard, shrink_with_agent};
use musenum::formula::{generate_dataset, CnfInstance, GeneratorConfig};
use musenum::metrics::{compare, r_eff, r_eff_report, EffTriple, InstanceRecord, RecordHeader};
use musenum::{
    ActMode, CnfOracle, EpisodeRecord, ExplorationGraph, Op, Phase, SubsetMask, SubsetOracle,
};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        let ok: bool = $cond;
        if !ok {
            return Err(format!($($fmt)+));
        }
    };
}

/// Satisfiability of every clause subset, by truth table. Index bit `i`
/// stands for clause `i`.
fn sat_table(inst: &CnfInstance) -> Vec<bool> {
    let m = inst.num_clauses();
    let n = inst.num_vars() as usize;
    let mut sat = vec![false; 1 << m];
    for a in 0u32..1 << n {
        let mut bits = 0usize;
        for (i, c) in inst.clauses().iter().enumerate() {
            let ok = c.iter().any(|&l| {
                let v = (a >> (l.unsigned_abs() - 1)) & 1 == 1;
                v == (l > 0)
            });
            if ok {
                bits |= 1 << i;
            }
        }
        sat[bits] = true;
    }
    for s in (0..1usize << m).rev() {
        if sat[s] {
            for i in 0..m {
                sat[s & !(1 << i)] = true;
            }
        }
    }
    sat
}

fn to_bits(s: &SubsetMask) -> usize {
    s.iter().map(|i| 1usize << i).sum()
}

fn brute_sets(inst: &CnfInstance) -> (BTreeSet<usize>, BTreeSet<usize>) {
    let m = inst.num_clauses();
    let sat = sat_table(inst);
    let members = |s: usize| (0..m).filter(move |i| s >> i & 1 == 1);
    let mut muses = BTreeSet::new();
    let mut msses = BTreeSet::new();
    for s in 0..1usize << m {
        if !sat[s] && members(s).all(|i| sat[s & !(1 << i)]) {
            muses.insert(s);
        }
        if sat[s] && (0..m).filter(|i| s >> i & 1 == 0).all(|i| !sat[s | 1 << i]) {
            msses.insert(s);
        }
    }
    (muses, msses)
}

fn bitsets(v: &[SubsetMask]) -> Result<BTreeSet<usize>, String> {
    let s: BTreeSet<usize> = v.iter().map(to_bits).collect();
    ensure!(
        s.len() == v.len(),
        "{} duplicate sets reported",
        v.len() - s.len()
    );
    Ok(s)
}

fn small_sr(count: usize, max_clauses: usize, max_vars: u32, seed: u64) -> Vec<CnfInstance> {
    let mut out = Vec::new();
    let mut s = seed;
    while out.len() < count {
        let cfg = GeneratorConfig::sr(3, max_vars, s);
        for inst in generate_dataset(&cfg, 64).expect("generator") {
            if inst.num_clauses() <= max_clauses && out.len() < count {
                out.push(inst);
            }
        }
        s += 1;
    }
    out
}

fn brute_force_equivalence() -> Outcome {
    let start = Instant::now();
    let instances = small_sr(50, 10, 8, 2024);
    let mut total_sets = 0;
    for (k, inst) in instances.iter().enumerate() {
        ensure!(
            inst.num_clauses() <= 10 && inst.num_vars() <= 8,
            "instance {k} too large"
        );
        let (mu, ms) = brute_sets(inst);
        ensure!(!mu.is_empty(), "instance {k} has no MUS");
        for algo in [Algo::Marco, Algo::Tome, Algo::Remus] {
            let cfg = EnumeratorConfig {
                rng_seed: k as u64,
                ..EnumeratorConfig::new(algo)
            };
            let r =
                enumerate(inst, &cfg, None, RunOptions::default()).map_err(|e| e.to_string())?;
            ensure!(
                r.status == RunStatus::Exhausted,
                "{algo:?} did not finish on instance {k}"
            );
            ensure!(
                bitsets(&r.muses)? == mu,
                "{algo:?} MUS set differs on instance {k}"
            );
            ensure!(
                bitsets(&r.msses)? == ms,
                "{algo:?} MSS set differs on instance {k}"
            );
        }
        total_sets += mu.len() + ms.len();
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 120.0, "took {secs:.1}s");
    Ok(format!(
        "50 instances, 3 algorithms, {total_sets} MUS+MSS sets matched per algorithm"
    ))
}

fn random_subset(rng: &mut ChaCha8Rng, m: usize) -> SubsetMask {
    let p: f64 = rng.gen_range(0.2..1.0);
    SubsetMask::from_indices(m, (0..m).filter(|_| rng.gen_bool(p)))
}

fn check_count_laws() -> Outcome {
    let instances = small_sr(40, 12, 8, 77);
    let tables: Vec<Vec<bool>> = instances.iter().map(sat_table).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut shrinks, mut grows) = (0, 0);
    while shrinks < 1000 || grows < 1000 {
        let k = rng.gen_range(0..instances.len());
        let inst = &instances[k];
        let m = inst.num_clauses();
        let s = random_subset(&mut rng, m);
        let mut o = CnfOracle::new(inst, None);
        if tables[k][to_bits(&s)] {
            if grows >= 1000 {
                continue;
            }
            let r = grow_standard(&mut o, &s).map_err(|e| e.to_string())?;
            ensure!(
                o.ledger().total() == (m - s.len()) as u64,
                "grow used {} checks, expected {}",
                o.ledger().total(),
                m - s.len()
            );
            ensure!(tables[k][to_bits(&r)], "grow returned an unsatisfiable set");
            grows += 1;
        } else {
            if shrinks >= 1000 {
                continue;
            }
            let r = shrink_standard(&mut o, &s).map_err(|e| e.to_string())?;
            ensure!(
                o.ledger().total() == s.len() as u64,
                "shrink used {} checks, expected {}",
                o.ledger().total(),
                s.len()
            );
            ensure!(!tables[k][to_bits(&r)], "shrink returned a satisfiable set");
            shrinks += 1;
        }
    }

    // Random-policy episodes against graphs from partial runs.
    let (mut eps_shrink, mut eps_grow) = (0, 0);
    let mut graphs: Vec<ExplorationGraph> = Vec::new();
    for inst in &instances {
        let r = enumerate(
            inst,
            &EnumeratorConfig::default(),
            Some(rng.gen_range(0..40)),
            RunOptions::default(),
        )
        .map_err(|e| e.to_string())?;
        graphs.push(r.graph);
    }
    while eps_shrink < 1000 || eps_grow < 1000 {
        let k = rng.gen_range(0..instances.len());
        let inst = &instances[k];
        let m = inst.num_clauses();
        let s0 = random_subset(&mut rng, m);
        let mut policy = RandomPolicy::new(rng.gen(), rng.gen_range(0.05..1.0));
        let mut o = CnfOracle::new(inst, None);
        if tables[k][to_bits(&s0)] {
            if eps_grow >= 1000 {
                continue;
            }
            let r = grow_with_agent(&mut o, &s0, &graphs[k], &mut policy, ActMode::Sample)
                .map_err(|e| e.to_string())?;
            let lower = (m - r.subset.len()) as u64;
            let upper = 2 * (m - s0.len()) as u64;
            ensure!(
                lower <= r.checks_correction && r.checks_correction <= upper,
                "grow N_corr {} outside [{lower}, {upper}]",
                r.checks_correction
            );
            ensure!(
                o.ledger().total() == r.checks_correction + o.ledger().phase(Phase::Classify),
                "grow ledger mismatch"
            );
            eps_grow += 1;
        } else {
            if eps_shrink >= 1000 {
                continue;
            }
            let r = shrink_with_agent(&mut o, &s0, &graphs[k], &mut policy, ActMode::Sample)
                .map_err(|e| e.to_string())?;
            let lower = r.subset.len() as u64;
            let upper = 2 * s0.len() as u64;
            ensure!(
                lower <= r.checks_correction && r.checks_correction <= upper,
                "shrink N_corr {} outside [{lower}, {upper}]",
                r.checks_correction
            );
            ensure!(
                o.ledger().total() == r.checks_correction + o.ledger().phase(Phase::Classify),
                "shrink ledger mismatch"
            );
            eps_shrink += 1;
        }
    }
    Ok("1000+1000 standard calls exact; 1000+1000 random-policy episodes within bounds".into())
}

fn strip(t: &[TrajectoryPoint]) -> Vec<(u64, usize)> {
    t.iter().map(|p| (p.checks - p.classify, p.found)).collect()
}

fn baseline_identity() -> Outcome {
    let cfg = GeneratorConfig::sr(5, 10, 99);
    let instances = generate_dataset(&cfg, 20).map_err(|e| e.to_string())?;
    let mut classify_total = 0;
    for (k, inst) in instances.iter().enumerate() {
        for algo in [Algo::Marco, Algo::Tome, Algo::Remus] {
            let cfg = EnumeratorConfig {
                rng_seed: 3,
                ..EnumeratorConfig::new(algo)
            };
            let none: RunResult =
                enumerate(inst, &cfg, None, RunOptions::default()).map_err(|e| e.to_string())?;
            let mut fin = ImmediateFinish;
            let finish = enumerate(inst, &cfg, None, RunOptions::with_policy(&mut fin))
                .map_err(|e| e.to_string())?;
            ensure!(
                none.muses == finish.muses && none.msses == finish.msses,
                "{algo:?} instance {k}: sets differ"
            );
            ensure!(
                strip(&none.trajectory) == strip(&finish.trajectory),
                "{algo:?} instance {k}: trajectories differ"
            );
            let classify = finish.ledger.phase(Phase::Classify);
            ensure!(
                classify == finish.stats.extractions,
                "{algo:?} instance {k}: one classification per episode expected"
            );
            ensure!(
                none.ledger.total() + classify == finish.ledger.total(),
                "{algo:?} instance {k}: ledger totals differ"
            );
            for p in [Phase::Seed, Phase::Shrink, Phase::Grow, Phase::Correction] {
                ensure!(
                    none.ledger.phase(p) == finish.ledger.phase(p),
                    "{algo:?} instance {k}: phase {p} differs"
                );
            }
            if algo == Algo::Marco {
                classify_total += classify;
            }
        }
    }
    Ok(format!("20 instances x 3 algorithms identical; MARCO classification checks reported separately: {classify_total}"))
}

fn reward_identity() -> Outcome {
    let instances = small_sr(30, 14, 10, 4242);
    let mut episodes: Vec<EpisodeRecord> = Vec::new();
    for (k, inst) in instances.iter().enumerate() {
        let mut random = RandomPolicy::new(k as u64, 0.15);
        let mut freq = FrequencyHeuristic::default();
        let mut fin = ImmediateFinish;
        for (algo, policy) in [
            (Algo::Marco, &mut random as &mut dyn musenum::Policy),
            (Algo::Tome, &mut freq),
            (Algo::Remus, &mut fin),
        ] {
            let mut sink: Vec<EpisodeRecord> = Vec::new();
            let opts = RunOptions {
                recorder: Some(&mut sink),
                instance_id: format!("i{k}"),
                ..RunOptions::with_policy(policy)
            };
            enumerate(inst, &EnumeratorConfig::new(algo), None, opts).map_err(|e| e.to_string())?;
            episodes.extend(sink);
        }
    }
    let text: String = episodes
        .iter()
        .map(|e| serde_json::to_string(e).unwrap() + "\n")
        .collect();
    let parsed = read_episodes_from_str(&text).map_err(|e| e.to_string())?;
    ensure!(parsed == episodes, "episode log round trip changed records");
    let mut perfect = 0;
    for e in &parsed {
        ensure!(
            e.recompute_reward().to_bits() == e.reward.to_bits(),
            "recomputed reward differs: {e:?}"
        );
        let (lower, span) = match e.op {
            Op::Shrink => (e.result.len(), e.initial.len()),
            Op::Grow => (
                e.num_constraints - e.result.len(),
                e.num_constraints - e.initial.len(),
            ),
        };
        let independent = if span == 0 {
            1.0
        } else {
            1.0 - (e.n_correction as f64 - lower as f64) / span as f64
        };
        ensure!(
            independent == e.reward,
            "reward formula mismatch: {independent} vs {}",
            e.reward
        );
        ensure!(
            (e.reward == 1.0) == (e.n_correction == lower as u64 || span == 0),
            "reward-1 iff tight failed: {e:?}"
        );
        perfect += (e.reward == 1.0) as usize;
    }
    Ok(format!(
        "{} episodes, {perfect} with reward 1",
        parsed.len()
    ))
}

fn record(name: &str, points: &[(u64, usize)]) -> InstanceRecord {
    let header = RecordHeader {
        instance: name.into(),
        hash: "h".into(),
        algo: "marco".into(),
        agent: "none".into(),
        budget: Some(10_000),
        num_constraints: 10,
    };
    let mut r = InstanceRecord::failed(header, String::new(), 0);
    r.excluded = None;
    r.status = Some(RunStatus::BudgetExhausted);
    r.trajectory = points
        .iter()
        .map(|&(checks, found)| TrajectoryPoint {
            checks,
            classify: 0,
            found,
        })
        .collect();
    r.muses = points.last().map_or(0, |p| p.1);
    r
}

fn metric_pipeline() -> Outcome {
    let without = [record("x", &[(4000, 50), (9000, 100)])];
    let with = [record("x", &[(4000, 90), (10_000, 179)])];
    let rep = compare(&with, &without, &[10_000]).map_err(|e| e.to_string())?;
    let ratio = rep.instances[0].ratio.ok_or("ratio undefined")?;
    ensure!(
        ratio == 179.0 / 100.0 && (ratio - 1.79).abs() < 1e-12,
        "ratio {ratio}"
    );
    let v = r_eff(85.0, 44.0, 48.0).ok_or("r_eff undefined")?;
    ensure!((v - 41.0 / 48.0).abs() < 1e-9, "r_eff {v}");
    let triples = [
        EffTriple {
            n_check: 85.0,
            n_check_agent: 44.0,
            n_infer: 48.0,
        },
        EffTriple {
            n_check: 20.0,
            n_check_agent: 10.0,
            n_infer: 5.0,
        },
        EffTriple {
            n_check: 20.0,
            n_check_agent: 20.0,
            n_infer: 0.0,
        },
    ];
    let rr = r_eff_report(&triples);
    let mor = rr.mean_of_ratios.ok_or("mean of ratios missing")?;
    let rom = rr.ratio_of_means.ok_or("ratio of means missing")?;
    ensure!(
        (mor - (41.0 / 48.0 + 2.0) / 2.0).abs() < 1e-9,
        "mean of ratios {mor}"
    );
    ensure!(
        (rom - (52.5 - 27.0) / 26.5).abs() < 1e-9,
        "ratio of means {rom}"
    );
    ensure!(rr.excluded == 1, "zero-inference instance not excluded");
    let json = serde_json::to_value(&rr).map_err(|e| e.to_string())?;
    ensure!(
        json.get("mean_of_ratios").is_some() && json.get("ratio_of_means").is_some(),
        "variants not labeled"
    );
    Ok(format!(
        "ratio {ratio:.2}; r_eff {v:.3}; mean-of-ratios and ratio-of-means both reported"
    ))
}

fn main() {
    let criteria: [Criterion; 5] = [
        ("brute-force equivalence", brute_force_equivalence),
        ("check-count laws", check_count_laws),
        ("baseline identity", baseline_identity),
        ("reward identity", reward_identity),
        ("metric pipeline", metric_pipeline),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let t = Instant::now();
        let res = std::panic::catch_unwind(f).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default())
        });
        match res {
            Ok(detail) => println!("PASS {name}: {detail} ({:.1}s)", t.elapsed().as_secs_f64()),
            Err(why) => {
                failed += 1;
                println!("FAIL {name}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
