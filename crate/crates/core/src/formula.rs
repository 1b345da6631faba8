//! CNF constraint systems, DIMACS I/O and the random benchmark generators.
//!
//! Clause `i` of an instance is constraint `i` everywhere else in the crate
//! (0-based). Literals keep the DIMACS convention: nonzero, 1-based,
//! negative for negation.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_distr::{Bernoulli, Distribution, Geometric};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::sat::{Lit, SolveOutcome, Solver};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FormulaError {
    #[error("clause {clause} is empty")]
    EmptyClause { clause: usize },
    #[error("clause {clause}: literal {lit} exceeds variable count {num_vars}")]
    LiteralOutOfRange {
        clause: usize,
        lit: i32,
        num_vars: u32,
    },
    #[error("clause {clause} is tautological (contains {var} and -{var})")]
    Tautology { clause: usize, var: u32 },
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("line {line}: malformed header: {msg}")]
    Header { line: usize, msg: String },
    #[error("line {line}: missing `p cnf` header before clauses")]
    MissingHeader { line: usize },
    #[error("line {line}: invalid literal `{token}`")]
    BadToken { line: usize, token: String },
    #[error("line {line}: literal {lit} out of range (header declares {num_vars} variables)")]
    LiteralOutOfRange {
        line: usize,
        lit: i64,
        num_vars: u32,
    },
    #[error("line {line}: empty clause")]
    EmptyClause { line: usize },
    #[error("line {line}: tautological clause (contains {var} and -{var})")]
    Tautology { line: usize, var: u32 },
    #[error("line {line}: header declares {expected} clauses, found {found}")]
    ClauseCount {
        line: usize,
        expected: usize,
        found: usize,
    },
}

/// An ordered set of clauses over `num_vars` Boolean variables.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnfInstance {
    num_vars: u32,
    clauses: Vec<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl CnfInstance {
    pub fn new(num_vars: u32, clauses: Vec<Vec<i32>>) -> Result<Self, FormulaError> {
        for (ci, c) in clauses.iter().enumerate() {
            if c.is_empty() {
                return Err(FormulaError::EmptyClause { clause: ci });
            }
            for &l in c {
                if l == 0 || l.unsigned_abs() > num_vars {
                    return Err(FormulaError::LiteralOutOfRange {
                        clause: ci,
                        lit: l,
                        num_vars,
                    });
                }
            }
            if let Some(var) = tautology_var(c) {
                return Err(FormulaError::Tautology { clause: ci, var });
            }
        }
        Ok(CnfInstance {
            num_vars,
            clauses,
            label: None,
        })
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn num_vars(&self) -> u32 {
        self.num_vars
    }

    pub fn num_clauses(&self) -> usize {
        self.clauses.len()
    }

    pub fn clauses(&self) -> &[Vec<i32>] {
        &self.clauses
    }

    pub fn clause(&self, i: usize) -> &[i32] {
        &self.clauses[i]
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    /// Hex SHA-256 of the DIMACS serialization.
    pub fn content_hash(&self) -> String {
        let digest = Sha256::digest(emit_dimacs(self).as_bytes());
        digest.iter().fold(String::with_capacity(64), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
    }

    /// Whether `assignment` (indexed by 0-based variable) satisfies clause `i`.
    pub fn clause_satisfied(&self, i: usize, assignment: &[bool]) -> bool {
        self.clauses[i]
            .iter()
            .any(|&l| assignment[(l.unsigned_abs() - 1) as usize] == (l > 0))
    }
}

fn tautology_var(c: &[i32]) -> Option<u32> {
    c.iter()
        .find(|&&l| c.contains(&-l))
        .map(|l| l.unsigned_abs())
}

pub fn parse_dimacs(text: &str) -> Result<CnfInstance, ParseError> {
    let mut header: Option<(u32, usize, usize)> = None;
    let mut clauses: Vec<Vec<i32>> = Vec::new();
    let mut current: Vec<i32> = Vec::new();
    let mut current_start = 0;
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        last_line = line;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('c') || trimmed.starts_with('%') {
            continue;
        }
        if trimmed.starts_with('p') {
            if header.is_some() {
                return Err(ParseError::Header {
                    line,
                    msg: "duplicate header".into(),
                });
            }
            let parts: Vec<&str> = trimmed.split_whitespace().collect();
            if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                return Err(ParseError::Header {
                    line,
                    msg: format!("expected `p cnf <vars> <clauses>`, got `{trimmed}`"),
                });
            }
            let vars = parts[2].parse::<u32>().map_err(|_| ParseError::Header {
                line,
                msg: format!("bad variable count `{}`", parts[2]),
            })?;
            let count = parts[3].parse::<usize>().map_err(|_| ParseError::Header {
                line,
                msg: format!("bad clause count `{}`", parts[3]),
            })?;
            header = Some((vars, count, line));
            continue;
        }
        let Some((num_vars, _, _)) = header else {
            return Err(ParseError::MissingHeader { line });
        };
        for tok in trimmed.split_whitespace() {
            let lit: i64 = tok.parse().map_err(|_| ParseError::BadToken {
                line,
                token: tok.to_string(),
            })?;
            if current.is_empty() {
                current_start = line;
            }
            if lit == 0 {
                if current.is_empty() {
                    return Err(ParseError::EmptyClause { line });
                }
                if let Some(var) = tautology_var(&current) {
                    return Err(ParseError::Tautology {
                        line: current_start,
                        var,
                    });
                }
                clauses.push(std::mem::take(&mut current));
            } else {
                if lit.unsigned_abs() > num_vars as u64 {
                    return Err(ParseError::LiteralOutOfRange {
                        line,
                        lit,
                        num_vars,
                    });
                }
                current.push(lit as i32);
            }
        }
    }
    let Some((num_vars, expected, header_line)) = header else {
        return Err(ParseError::MissingHeader {
            line: last_line.max(1),
        });
    };
    // A trailing clause without its terminating 0 is tolerated.
    if !current.is_empty() {
        if let Some(var) = tautology_var(&current) {
            return Err(ParseError::Tautology {
                line: current_start,
                var,
            });
        }
        clauses.push(current);
    }
    if clauses.len() != expected {
        return Err(ParseError::ClauseCount {
            line: header_line,
            expected,
            found: clauses.len(),
        });
    }
    Ok(CnfInstance {
        num_vars,
        clauses,
        label: None,
    })
}

/// Serializes to DIMACS: `p cnf V C` header, one `0`-terminated clause per
/// line, `\n` line endings, no comments.
pub fn emit_dimacs(inst: &CnfInstance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "p cnf {} {}", inst.num_vars, inst.clauses.len());
    for c in &inst.clauses {
        for l in c {
            let _ = write!(out, "{l} ");
        }
        out.push_str("0\n");
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GeneratorKind {
    Sr,
    GraphColoring,
}

/// Parameters for the random instance families.
///
/// SR clause width is `1 + Bernoulli(bernoulli_p) + Geometric(geometric_p)`.
/// Graph-colouring node and colour counts are drawn uniformly from their
/// inclusive ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub kind: GeneratorKind,
    pub min_vars: u32,
    pub max_vars: u32,
    pub geometric_p: f64,
    pub bernoulli_p: f64,
    pub gc_nodes: (u32, u32),
    pub gc_colors: (u32, u32),
    pub gc_edge_p: f64,
    pub rng_seed: u64,
}

impl GeneratorConfig {
    pub fn sr(min_vars: u32, max_vars: u32, rng_seed: u64) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::Sr,
            min_vars,
            max_vars,
            geometric_p: 0.3,
            bernoulli_p: 0.3,
            gc_nodes: (5, 12),
            gc_colors: (2, 4),
            gc_edge_p: 0.5,
            rng_seed,
        }
    }

    pub fn graph_coloring(
        nodes: (u32, u32),
        colors: (u32, u32),
        edge_p: f64,
        rng_seed: u64,
    ) -> Self {
        GeneratorConfig {
            kind: GeneratorKind::GraphColoring,
            gc_nodes: nodes,
            gc_colors: colors,
            gc_edge_p: edge_p,
            ..Self::sr(5, 20, rng_seed)
        }
    }

    pub fn validate(&self) -> Result<(), GenerateError> {
        let bad = |msg: &str| Err(GenerateError::InvalidConfig(msg.to_string()));
        let open = |p: f64| p > 0.0 && p < 1.0;
        match self.kind {
            GeneratorKind::Sr => {
                if self.min_vars == 0 || self.min_vars > self.max_vars {
                    return bad("need 0 < min_vars <= max_vars");
                }
                if !open(self.geometric_p) || !open(self.bernoulli_p) {
                    return bad("probabilities must lie in (0,1)");
                }
            }
            GeneratorKind::GraphColoring => {
                let (nl, nh) = self.gc_nodes;
                let (cl, ch) = self.gc_colors;
                if nl == 0 || nl > nh || cl == 0 || cl > ch {
                    return bad("need nonempty positive node and colour ranges");
                }
                if !open(self.gc_edge_p) {
                    return bad("edge probability must lie in (0,1)");
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum GenerateError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("generator kind mismatch: expected {expected:?}")]
    WrongKind { expected: GeneratorKind },
    #[error("no unsatisfiable instance after {clauses} clauses over {num_vars} variables")]
    SrCapExceeded { num_vars: u32, clauses: usize },
    #[error("no unsatisfiable colouring instance after {attempts} attempts")]
    GcCapExceeded { attempts: usize },
}

/// Draws an SR instance: clauses are appended until the formula first
/// becomes unsatisfiable, and that clause is kept.
pub fn generate_sr<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<CnfInstance, GenerateError> {
    if cfg.kind != GeneratorKind::Sr {
        return Err(GenerateError::WrongKind {
            expected: GeneratorKind::Sr,
        });
    }
    cfg.validate()?;
    let n = rng.gen_range(cfg.min_vars..=cfg.max_vars);
    let bern = Bernoulli::new(cfg.bernoulli_p).expect("validated");
    let geo = Geometric::new(cfg.geometric_p).expect("validated");
    let cap = 20 * n as usize;
    let mut solver = Solver::with_vars(n as usize);
    let mut clauses = Vec::new();
    while clauses.len() < cap {
        let width = loop {
            let w = 1 + bern.sample(rng) as u64 + geo.sample(rng);
            if w <= n as u64 {
                break w as usize;
            }
        };
        let clause: Vec<i32> = sample(rng, n as usize, width)
            .into_iter()
            .map(|v| {
                let v = v as i32 + 1;
                if rng.gen_bool(0.5) {
                    -v
                } else {
                    v
                }
            })
            .collect();
        let lits: Vec<Lit> = clause.iter().map(|&l| Lit::from_dimacs(l)).collect();
        solver.add_clause(&lits);
        clauses.push(clause);
        if solver.solve(&[]) == SolveOutcome::Unsat {
            return Ok(CnfInstance {
                num_vars: n,
                clauses,
                label: Some("sr".into()),
            });
        }
    }
    Err(GenerateError::SrCapExceeded {
        num_vars: n,
        clauses: cap,
    })
}

/// Direct encoding of `colors`-colourability: variable `v*colors + c + 1`
/// means node `v` has colour `c`.
pub fn encode_coloring(nodes: u32, edges: &[(u32, u32)], colors: u32) -> CnfInstance {
    let x = |v: u32, c: u32| (v * colors + c + 1) as i32;
    let mut clauses = Vec::new();
    for v in 0..nodes {
        clauses.push((0..colors).map(|c| x(v, c)).collect());
        for c1 in 0..colors {
            for c2 in c1 + 1..colors {
                clauses.push(vec![-x(v, c1), -x(v, c2)]);
            }
        }
    }
    for &(u, w) in edges {
        for c in 0..colors {
            clauses.push(vec![-x(u, c), -x(w, c)]);
        }
    }
    CnfInstance {
        num_vars: nodes * colors,
        clauses,
        label: Some("gc".into()),
    }
}

const GC_ATTEMPTS: usize = 200;

/// Draws Erdős–Rényi graphs until one is not colourable with the drawn
/// number of colours.
pub fn generate_graph_coloring<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<CnfInstance, GenerateError> {
    if cfg.kind != GeneratorKind::GraphColoring {
        return Err(GenerateError::WrongKind {
            expected: GeneratorKind::GraphColoring,
        });
    }
    cfg.validate()?;
    for _ in 0..GC_ATTEMPTS {
        let nodes = rng.gen_range(cfg.gc_nodes.0..=cfg.gc_nodes.1);
        let colors = rng.gen_range(cfg.gc_colors.0..=cfg.gc_colors.1);
        let mut edges = Vec::new();
        for u in 0..nodes {
            for w in u + 1..nodes {
                if rng.gen_bool(cfg.gc_edge_p) {
                    edges.push((u, w));
                }
            }
        }
        let inst = encode_coloring(nodes, &edges, colors);
        if !is_satisfiable(&inst) {
            return Ok(inst);
        }
    }
    Err(GenerateError::GcCapExceeded {
        attempts: GC_ATTEMPTS,
    })
}

pub fn generate<R: Rng + ?Sized>(
    cfg: &GeneratorConfig,
    rng: &mut R,
) -> Result<CnfInstance, GenerateError> {
    match cfg.kind {
        GeneratorKind::Sr => generate_sr(cfg, rng),
        GeneratorKind::GraphColoring => generate_graph_coloring(cfg, rng),
    }
}

/// `count` instances from one ChaCha8 stream seeded with `cfg.rng_seed`.
pub fn generate_dataset(
    cfg: &GeneratorConfig,
    count: usize,
) -> Result<Vec<CnfInstance>, GenerateError> {
    cfg.validate()?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    (0..count).map(|_| generate(cfg, &mut rng)).collect()
}

pub fn is_satisfiable(inst: &CnfInstance) -> bool {
    let mut s = Solver::with_vars(inst.num_vars as usize);
    for c in &inst.clauses {
        let lits: Vec<Lit> = c.iter().map(|&l| Lit::from_dimacs(l)).collect();
        if !s.add_clause(&lits) {
            return false;
        }
    }
    s.solve(&[]) == SolveOutcome::Sat
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Truth-table satisfiability, independent of the CDCL path.
    fn brute_sat(inst: &CnfInstance) -> bool {
        let n = inst.num_vars();
        (0u64..1 << n).any(|bits| {
            inst.clauses().iter().all(|c| {
                c.iter()
                    .any(|&l| (bits >> (l.unsigned_abs() - 1) & 1 == 1) == (l > 0))
            })
        })
    }

    #[test]
    fn parse_minimal_unsat_pair() {
        let inst = parse_dimacs("p cnf 2 2\n1 0\n-1 0\n").unwrap();
        assert_eq!(inst.num_vars(), 2);
        assert_eq!(inst.clauses(), &[vec![1], vec![-1]]);
    }

    #[test]
    fn parse_rejects_tautology() {
        let err = parse_dimacs("c x\np cnf 1 1\n1 -1 0\n").unwrap_err();
        assert_eq!(err, ParseError::Tautology { line: 3, var: 1 });
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        assert!(matches!(
            parse_dimacs("p cnf x 1\n1 0\n"),
            Err(ParseError::Header { line: 1, .. })
        ));
        assert!(matches!(
            parse_dimacs("p dnf 1 1\n1 0\n"),
            Err(ParseError::Header { line: 1, .. })
        ));
        assert!(matches!(
            parse_dimacs("p cnf 1 1\n2 0\n"),
            Err(ParseError::LiteralOutOfRange {
                line: 2,
                lit: 2,
                ..
            })
        ));
        assert_eq!(
            parse_dimacs("p cnf 1 2\n1 0\n0\n"),
            Err(ParseError::EmptyClause { line: 3 })
        );
        assert_eq!(
            parse_dimacs("c\np cnf 1 3\n1 0\n-1 0\n"),
            Err(ParseError::ClauseCount {
                line: 2,
                expected: 3,
                found: 2
            })
        );
        assert_eq!(
            parse_dimacs("1 0\n"),
            Err(ParseError::MissingHeader { line: 1 })
        );
        assert!(matches!(
            parse_dimacs("p cnf 1 1\n1 a 0\n"),
            Err(ParseError::BadToken { line: 2, .. })
        ));
    }

    #[test]
    fn parse_multiline_clause() {
        let inst = parse_dimacs("p cnf 3 2\n1 2\n3 0 -1\n0\n").unwrap();
        assert_eq!(inst.clauses(), &[vec![1, 2, 3], vec![-1]]);
    }

    #[test]
    fn emit_examples() {
        let inst = CnfInstance::new(1, vec![vec![1], vec![-1]]).unwrap();
        assert_eq!(emit_dimacs(&inst), "p cnf 1 2\n1 0\n-1 0\n");
        let empty = CnfInstance::new(0, vec![]).unwrap();
        assert_eq!(emit_dimacs(&empty), "p cnf 0 0\n");
    }

    #[test]
    fn construction_invariants() {
        assert_eq!(
            CnfInstance::new(1, vec![vec![]]),
            Err(FormulaError::EmptyClause { clause: 0 })
        );
        assert!(CnfInstance::new(1, vec![vec![2]]).is_err());
        assert_eq!(
            CnfInstance::new(2, vec![vec![2, -2]]),
            Err(FormulaError::Tautology { clause: 0, var: 2 })
        );
    }

    #[test]
    fn sr_five_vars_seed_seven_is_unsat() {
        let cfg = GeneratorConfig::sr(5, 5, 7);
        let inst = generate_sr(&cfg, &mut ChaCha8Rng::seed_from_u64(cfg.rng_seed)).unwrap();
        assert_eq!(inst.num_vars(), 5);
        assert!(!brute_sat(&inst));
        // Every proper prefix is satisfiable: generation stops at the first unsat clause.
        let prefix =
            CnfInstance::new(5, inst.clauses()[..inst.num_clauses() - 1].to_vec()).unwrap();
        assert!(brute_sat(&prefix));
    }

    #[test]
    fn sr_is_deterministic() {
        let cfg = GeneratorConfig::sr(5, 20, 99);
        let a = generate_sr(&cfg, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        let b = generate_sr(&cfg, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
        assert_eq!(emit_dimacs(&a), emit_dimacs(&b));
    }

    #[test]
    fn sr_batch_all_unsat_with_a_mus() {
        let cfg = GeneratorConfig::sr(5, 20, 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut small = 0;
        for _ in 0..100 {
            let inst = generate_sr(&cfg, &mut rng).unwrap();
            assert!((5..=20).contains(&inst.num_vars()));
            if inst.num_vars() <= 15 {
                assert!(!brute_sat(&inst));
            } else {
                assert!(!is_satisfiable(&inst));
            }
            if inst.num_clauses() <= 12 {
                small += 1;
                // Some subset is unsat and minimal; the full set being unsat
                // already implies one, so check the minimum-size unsat subset exists.
                let m = inst.num_clauses();
                let has_mus = (1u32..1 << m).any(|bits| {
                    let sub: Vec<Vec<i32>> = (0..m)
                        .filter(|i| bits >> i & 1 == 1)
                        .map(|i| inst.clause(i).to_vec())
                        .collect();
                    let s = CnfInstance::new(inst.num_vars(), sub).unwrap();
                    !brute_sat(&s)
                        && (0..m).filter(|i| bits >> i & 1 == 1).all(|drop| {
                            let sub: Vec<Vec<i32>> = (0..m)
                                .filter(|&i| bits >> i & 1 == 1 && i != drop)
                                .map(|i| inst.clause(i).to_vec())
                                .collect();
                            brute_sat(&CnfInstance::new(inst.num_vars(), sub).unwrap())
                        })
                });
                assert!(has_mus);
            }
        }
        assert!(small > 0);
    }

    #[test]
    fn triangle_two_colors_unsat() {
        let inst = encode_coloring(3, &[(0, 1), (1, 2), (0, 2)], 2);
        assert!(!brute_sat(&inst));
        assert!(!is_satisfiable(&inst));
        let three = encode_coloring(3, &[(0, 1), (1, 2), (0, 2)], 3);
        assert!(brute_sat(&three));
    }

    #[test]
    fn single_node_single_color_exhausts_resampling() {
        let cfg = GeneratorConfig::graph_coloring((1, 1), (1, 1), 0.5, 3);
        assert!(brute_sat(&encode_coloring(1, &[], 1)));
        let err = generate_graph_coloring(&cfg, &mut ChaCha8Rng::seed_from_u64(3)).unwrap_err();
        assert_eq!(err, GenerateError::GcCapExceeded { attempts: 200 });
    }

    #[test]
    fn gc_batch_unsat() {
        let cfg = GeneratorConfig::graph_coloring((6, 6), (3, 3), 0.7, 5);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let inst = generate_graph_coloring(&cfg, &mut rng).unwrap();
            assert_eq!(inst.num_vars(), 18);
            assert!(!brute_sat(&inst));
        }
    }

    #[test]
    fn wrong_kind_and_bad_config() {
        let cfg = GeneratorConfig::sr(5, 4, 0);
        assert!(matches!(
            generate_sr(&cfg, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(GenerateError::InvalidConfig(_))
        ));
        let gc = GeneratorConfig::graph_coloring((3, 3), (2, 2), 0.5, 0);
        assert!(matches!(
            generate_sr(&gc, &mut ChaCha8Rng::seed_from_u64(0)),
            Err(GenerateError::WrongKind { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]
        #[test]
        fn dimacs_round_trip(seed in any::<u64>()) {
            let cfg = GeneratorConfig::sr(3, 12, seed);
            let inst = generate_sr(&cfg, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let text = emit_dimacs(&inst);
            let back = parse_dimacs(&text).unwrap();
            prop_assert_eq!(back.clauses(), inst.clauses());
            prop_assert_eq!(back.num_vars(), inst.num_vars());
            prop_assert_eq!(emit_dimacs(&back), text);
        }
    }
}
