use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;
use serde_json::json;

use musenum::agentlink::{EpisodeSink, JsonlEpisodeLog};
use musenum::formula::{emit_dimacs, generate_dataset, parse_dimacs};
use musenum::harness::{run_instance, AgentSpec, RunSpec};
use musenum::metrics::{
    compare, r_eff, r_eff_report, CompareReport, EffTriple, InstanceRecord, RecordHeader,
    DEFAULT_WATERMARKS,
};
use musenum::{ActMode, Algo, EnumeratorConfig, GeneratorConfig, SeedPolarity};

const AGENT_ENV: &str = "MUSENUM_AGENT_CMD";

#[derive(Parser)]
#[command(
    name = "musenum",
    version,
    about = "Budgeted MUS/MSS enumeration with optional policy-guided shrink/grow"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a dataset of unsatisfiable DIMACS instances.
    Gen {
        #[command(subcommand)]
        family: Family,
    },
    /// Enumerate MUSes/MSSes of every instance under a check budget.
    Enumerate(EnumerateArgs),
    /// Compare an agent run against a no-agent run.
    Compare(CompareArgs),
    /// Checks saved per agent call.
    REff(REffArgs),
}

#[derive(Subcommand)]
enum Family {
    /// Random k-SAT instances grown clause by clause until unsatisfiable.
    Sr {
        #[arg(long, default_value_t = 5)]
        min_vars: u32,
        #[arg(long, default_value_t = 20)]
        max_vars: u32,
        #[arg(long, default_value_t = 0.3)]
        geometric_p: f64,
        #[arg(long, default_value_t = 0.3)]
        bernoulli_p: f64,
        #[command(flatten)]
        common: GenCommon,
    },
    /// Uncolourable random graphs in the direct encoding.
    Gc {
        /// Node count or inclusive range `LO..HI`.
        #[arg(long, default_value = "6", value_parser = parse_range)]
        nodes: (u32, u32),
        /// Colour count or inclusive range `LO..HI`.
        #[arg(long, default_value = "3", value_parser = parse_range)]
        colors: (u32, u32),
        #[arg(long, default_value_t = 0.5)]
        edge_p: f64,
        #[command(flatten)]
        common: GenCommon,
    },
}

#[derive(Args)]
struct GenCommon {
    #[arg(long, default_value_t = 50)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory.
    #[arg(long, default_value = "dataset")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Greedy,
    Sample,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolarityArg {
    Maximal,
    Minimal,
    Default,
}

#[derive(Args)]
struct EnumerateArgs {
    /// DIMACS files or directories of `.cnf` files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    #[arg(long, default_value = "marco")]
    algo: Algo,
    /// none | finish | random | freq | extern:<cmd> | extern (command from MUSENUM_AGENT_CMD).
    #[arg(long, default_value = "none")]
    agent: String,
    #[arg(long, env = AGENT_ENV, hide_env_values = true)]
    agent_cmd: Option<String>,
    /// Check budget per instance (unlimited when omitted).
    #[arg(long)]
    budget: Option<u64>,
    /// Seconds per instance; slower instances are marked excluded. 0 disables.
    #[arg(long, default_value_t = 600)]
    time_limit: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "greedy")]
    mode: ModeArg,
    #[arg(long, value_enum, default_value = "maximal")]
    polarity: PolarityArg,
    #[arg(long, default_value_t = 0.9)]
    remus_reduction: f64,
    /// Finish probability of the random agent.
    #[arg(long, default_value_t = 0.1)]
    p_finish: f64,
    /// Seconds to wait for each external agent reply.
    #[arg(long, default_value_t = 30)]
    agent_timeout: u64,
    /// Offer incremental edge transfer to the external agent.
    #[arg(long)]
    agent_delta: bool,
    /// Append one JSON line per shrink/grow episode here.
    #[arg(long)]
    record_episodes: Option<PathBuf>,
    /// Result records (JSON lines); stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long)]
    with: PathBuf,
    #[arg(long)]
    without: PathBuf,
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_WATERMARKS)]
    watermarks: Vec<u64>,
    /// Directory for report.json, table.csv, instances.csv, curves.jsonl.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct REffArgs {
    /// Agent-run result records.
    #[arg(long, conflicts_with = "triple")]
    results: Option<PathBuf>,
    /// Explicit `N_check,N'_check,N_infer` triples.
    #[arg(long, value_parser = parse_triple)]
    triple: Vec<EffTriple>,
}

fn parse_range(s: &str) -> Result<(u32, u32), String> {
    let num = |t: &str| t.trim().parse::<u32>().map_err(|e| format!("`{t}`: {e}"));
    match s.split_once("..") {
        Some((a, b)) => Ok((num(a)?, num(b)?)),
        None => num(s).map(|v| (v, v)),
    }
}

fn parse_triple(s: &str) -> Result<EffTriple, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("`{t}`: {e}")))
        .collect::<Result<_, _>>()?;
    match v[..] {
        [n_check, n_check_agent, n_infer] => Ok(EffTriple {
            n_check,
            n_check_agent,
            n_infer,
        }),
        _ => Err("expected three comma-separated numbers".into()),
    }
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match Cli::parse().cmd {
        Cmd::Gen { family } => cmd_gen(family),
        Cmd::Enumerate(a) => cmd_enumerate(a),
        Cmd::Compare(a) => cmd_compare(a),
        Cmd::REff(a) => cmd_r_eff(a),
    }
}

fn cmd_gen(family: Family) -> Result<()> {
    let (cfg, common, prefix) = match family {
        Family::Sr {
            min_vars,
            max_vars,
            geometric_p,
            bernoulli_p,
            common,
        } => {
            let cfg = GeneratorConfig {
                geometric_p,
                bernoulli_p,
                ..GeneratorConfig::sr(min_vars, max_vars, common.seed)
            };
            (cfg, common, "sr")
        }
        Family::Gc {
            nodes,
            colors,
            edge_p,
            common,
        } => (
            GeneratorConfig::graph_coloring(nodes, colors, edge_p, common.seed),
            common,
            "gc",
        ),
    };
    let instances = generate_dataset(&cfg, common.count)?;
    fs::create_dir_all(&common.out)
        .with_context(|| format!("creating {}", common.out.display()))?;
    let mut entries = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let name = format!("{prefix}_{i:04}.cnf");
        fs::write(common.out.join(&name), emit_dimacs(inst))?;
        entries.push(json!({
            "file": name,
            "hash": inst.content_hash(),
            "num_vars": inst.num_vars(),
            "num_clauses": inst.num_clauses(),
        }));
    }
    let manifest =
        json!({ "seed": common.seed, "count": common.count, "config": cfg, "instances": entries });
    fs::write(
        common.out.join("manifest.json"),
        serde_json::to_string_pretty(&manifest)? + "\n",
    )?;
    println!(
        "wrote {} instances to {}",
        instances.len(),
        common.out.display()
    );
    Ok(())
}

fn collect_inputs(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut v: Vec<PathBuf> = fs::read_dir(p)
                .with_context(|| format!("reading {}", p.display()))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x == "cnf"))
                .collect();
            v.sort();
            files.extend(v);
        } else {
            files.push(p.clone());
        }
    }
    if files.is_empty() {
        bail!("no input instances found");
    }
    Ok(files)
}

fn instance_id(p: &Path) -> String {
    p.file_name().map_or_else(
        || p.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    )
}

fn resolve_agent(a: &EnumerateArgs) -> Result<AgentSpec> {
    let spec = if a.agent == "extern" {
        match &a.agent_cmd {
            Some(cmd) => AgentSpec::Extern(cmd.clone()),
            None => bail!("--agent extern needs a command: use extern:<cmd> or set {AGENT_ENV}"),
        }
    } else {
        a.agent.parse::<AgentSpec>().map_err(anyhow::Error::msg)?
    };
    Ok(match spec {
        AgentSpec::Random { .. } => AgentSpec::Random {
            p_finish: a.p_finish,
        },
        s => s,
    })
}

fn cmd_enumerate(a: EnumerateArgs) -> Result<()> {
    if !(a.p_finish > 0.0 && a.p_finish <= 1.0) {
        bail!("--p-finish must lie in (0, 1]");
    }
    if !(a.remus_reduction > 0.0 && a.remus_reduction < 1.0) {
        bail!("--remus-reduction must lie in (0, 1)");
    }
    let spec = RunSpec {
        cfg: EnumeratorConfig {
            algo: a.algo,
            seed_polarity: match a.polarity {
                PolarityArg::Maximal => SeedPolarity::Maximal,
                PolarityArg::Minimal => SeedPolarity::Minimal,
                PolarityArg::Default => SeedPolarity::Default,
            },
            remus_reduction: a.remus_reduction,
            rng_seed: a.seed,
        },
        budget: a.budget,
        time_limit: (a.time_limit > 0).then(|| Duration::from_secs(a.time_limit)),
        agent: resolve_agent(&a)?,
        mode: match a.mode {
            ModeArg::Greedy => ActMode::Greedy,
            ModeArg::Sample => ActMode::Sample,
        },
        agent_timeout: Duration::from_secs(a.agent_timeout),
        agent_delta: a.agent_delta,
        record_episodes: a.record_episodes.is_some(),
    };
    let files = collect_inputs(&a.inputs)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.jobs.max(1))
        .build()?;
    let results: Vec<_> = pool.install(|| {
        files
            .par_iter()
            .map(|f| {
                let id = instance_id(f);
                let parsed = fs::read_to_string(f)
                    .map_err(|e| e.to_string())
                    .and_then(|t| parse_dimacs(&t).map_err(|e| e.to_string()));
                match parsed {
                    Ok(inst) => {
                        info!("running {id}");
                        run_instance(&inst, &id, &spec)
                    }
                    Err(e) => {
                        warn!("{id}: {e}");
                        let header = RecordHeader {
                            instance: id,
                            hash: String::new(),
                            algo: format!("{:?}", spec.cfg.algo).to_lowercase(),
                            agent: spec.agent.label(),
                            budget: spec.budget,
                            num_constraints: 0,
                        };
                        (
                            InstanceRecord::failed(header, format!("input error: {e}"), 0),
                            Vec::new(),
                        )
                    }
                }
            })
            .collect()
    });

    let mut out: Box<dyn Write> = match &a.out {
        Some(p) => Box::new(BufWriter::new(
            fs::File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let mut log = match &a.record_episodes {
        Some(p) => match JsonlEpisodeLog::append(p) {
            Ok(l) => Some(l),
            Err(e) => {
                warn!(
                    "episode recording disabled: cannot open {}: {e}",
                    p.display()
                );
                None
            }
        },
        None => None,
    };
    let mut excluded = 0;
    for (rec, episodes) in &results {
        writeln!(out, "{}", serde_json::to_string(rec)?)?;
        if let Some(reason) = &rec.excluded {
            excluded += 1;
            warn!("{} excluded: {reason}", rec.instance);
        }
        if let Some(l) = log.as_mut() {
            for ep in episodes {
                l.record(ep);
            }
        }
    }
    out.flush()?;
    if let Some(mut l) = log {
        l.flush();
    }
    info!("{} instances, {excluded} excluded", results.len());
    Ok(())
}

fn read_records(path: &Path) -> Result<Vec<InstanceRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).with_context(|| format!("{}:{}", path.display(), i + 1))
        })
        .collect()
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(String::new, |v| format!("{v:.6}"))
}

fn write_compare_files(dir: &Path, r: &CompareReport) -> Result<()> {
    fs::create_dir_all(dir)?;
    fs::write(
        dir.join("report.json"),
        serde_json::to_string_pretty(r)? + "\n",
    )?;

    let mut t = csv::Writer::from_path(dir.join("table.csv"))?;
    t.write_record(["watermark", "group", "n", "mean", "std"])?;
    for g in &r.table {
        t.write_record([
            g.watermark.to_string(),
            g.group.clone(),
            g.n.to_string(),
            fmt_opt(g.mean),
            fmt_opt(g.std),
        ])?;
    }
    t.flush()?;

    let mut s = csv::Writer::from_path(dir.join("instances.csv"))?;
    s.write_record([
        "instance",
        "watermark",
        "without",
        "with",
        "ratio",
        "quartile",
        "completed",
    ])?;
    for c in &r.instances {
        s.write_record([
            c.instance.clone(),
            c.watermark.to_string(),
            c.without.to_string(),
            c.with.to_string(),
            fmt_opt(c.ratio),
            c.quartile.to_string(),
            c.completed.to_string(),
        ])?;
    }
    s.flush()?;

    let mut curves = BufWriter::new(fs::File::create(dir.join("curves.jsonl"))?);
    for c in &r.curves {
        writeln!(curves, "{}", serde_json::to_string(c)?)?;
    }
    curves.flush()?;
    Ok(())
}

fn cmd_compare(a: CompareArgs) -> Result<()> {
    let with = read_records(&a.with)?;
    let without = read_records(&a.without)?;
    let report = compare(&with, &without, &a.watermarks)?;
    let stdout = io::stdout();
    let mut o = stdout.lock();
    writeln!(
        o,
        "{:>10}  {:<8} {:>4}  {:>10}  {:>10}",
        "checks", "group", "n", "mean", "std"
    )?;
    for g in &report.table {
        writeln!(
            o,
            "{:>10}  {:<8} {:>4}  {:>10}  {:>10}",
            g.watermark,
            g.group,
            g.n,
            fmt_opt(g.mean),
            fmt_opt(g.std)
        )?;
    }
    for (name, why) in &report.excluded {
        writeln!(o, "excluded {name}: {why}")?;
    }
    if let Some(dir) = &a.out {
        write_compare_files(dir, &report)?;
    }
    Ok(())
}

fn cmd_r_eff(a: REffArgs) -> Result<()> {
    let triples = match &a.results {
        Some(p) => read_records(p)?
            .iter()
            .filter(|r| r.excluded.is_none())
            .map(EffTriple::from_record)
            .collect(),
        None if !a.triple.is_empty() => a.triple.clone(),
        None => bail!("give --results or at least one --triple"),
    };
    let per_instance: Vec<Option<f64>> = triples
        .iter()
        .map(|t| r_eff(t.n_check, t.n_check_agent, t.n_infer))
        .collect();
    let report = r_eff_report(&triples);
    let out = json!({ "per_instance": per_instance, "report": report });
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}
