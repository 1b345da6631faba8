//! Subset satisfiability oracle with check accounting.
//!
//! Every constraint `i` is guarded by a selector variable `s_i`; the solver
//! holds `(¬s_i ∨ clause_i)` and a subset query assumes `s_i` for members
//! and `¬s_i` for the rest. Learnt clauses are implied by the guarded
//! database, so they stay valid for every later query.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::CnfInstance;
use crate::mask::SubsetMask;
use crate::sat::{Lit, SolveOutcome, Solver, Var};

/// What a counted check was spent on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    /// Seed classification and chain probes in the enumerators.
    Seed,
    Shrink,
    Grow,
    /// Restore/removal checks of the correction procedures.
    Correction,
    /// The first check of a correction, on the agent's tentative output.
    Classify,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Phase::Seed => "seed",
            Phase::Shrink => "shrink",
            Phase::Grow => "grow",
            Phase::Correction => "correction",
            Phase::Classify => "classify",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("check budget of {budget} exhausted")]
    BudgetExhausted { budget: u64 },
}

/// Counts satisfiability checks, per phase, against an optional budget.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CheckLedger {
    total: u64,
    budget: Option<u64>,
    per_phase: BTreeMap<Phase, u64>,
}

impl CheckLedger {
    pub fn new(budget: Option<u64>) -> Self {
        CheckLedger {
            total: 0,
            budget,
            per_phase: BTreeMap::new(),
        }
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn budget(&self) -> Option<u64> {
        self.budget
    }

    pub fn phase(&self, p: Phase) -> u64 {
        self.per_phase.get(&p).copied().unwrap_or(0)
    }

    pub fn per_phase(&self) -> &BTreeMap<Phase, u64> {
        &self.per_phase
    }

    pub fn is_exhausted(&self) -> bool {
        self.budget.is_some_and(|b| self.total >= b)
    }

    /// Reserves one check. Fails without counting once the budget is spent.
    pub fn charge(&mut self, phase: Phase) -> Result<(), OracleError> {
        if let Some(budget) = self.budget {
            if self.total >= budget {
                return Err(OracleError::BudgetExhausted { budget });
            }
        }
        self.total += 1;
        *self.per_phase.entry(phase).or_insert(0) += 1;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Satisfiable,
    Unsatisfiable,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleVerdict {
    pub status: Status,
    /// Assignment to the instance variables, present iff satisfiable.
    pub model: Option<Vec<bool>>,
}

impl OracleVerdict {
    pub fn is_sat(&self) -> bool {
        self.status == Status::Satisfiable
    }
}

/// Anything that can decide constraint subsets and account for it.
pub trait SubsetOracle {
    fn num_constraints(&self) -> usize;

    /// One counted satisfiability check.
    fn check(&mut self, subset: &SubsetMask, phase: Phase) -> Result<OracleVerdict, OracleError>;

    /// Same decision procedure, no ledger mutation.
    fn check_unbudgeted(&mut self, subset: &SubsetMask) -> OracleVerdict;

    fn ledger(&self) -> &CheckLedger;

    fn is_sat(&mut self, subset: &SubsetMask, phase: Phase) -> Result<bool, OracleError> {
        Ok(self.check(subset, phase)?.is_sat())
    }
}

/// Incremental CDCL oracle over a CNF instance.
pub struct CnfOracle<'a> {
    inst: &'a CnfInstance,
    solver: Solver,
    selectors: Vec<Var>,
    ledger: CheckLedger,
}

impl<'a> CnfOracle<'a> {
    pub fn new(inst: &'a CnfInstance, budget: Option<u64>) -> Self {
        let n = inst.num_vars() as usize;
        let mut solver = Solver::with_vars(n + inst.num_clauses());
        let selectors: Vec<Var> = (0..inst.num_clauses())
            .map(|i| Var((n + i) as u32))
            .collect();
        for (i, c) in inst.clauses().iter().enumerate() {
            let mut lits: Vec<Lit> = Vec::with_capacity(c.len() + 1);
            lits.push(selectors[i].negative());
            lits.extend(c.iter().map(|&l| Lit::from_dimacs(l)));
            solver.add_clause(&lits);
        }
        CnfOracle {
            inst,
            solver,
            selectors,
            ledger: CheckLedger::new(budget),
        }
    }

    pub fn instance(&self) -> &CnfInstance {
        self.inst
    }

    pub fn into_ledger(self) -> CheckLedger {
        self.ledger
    }

    fn decide(&mut self, subset: &SubsetMask) -> OracleVerdict {
        assert_eq!(
            subset.width(),
            self.inst.num_clauses(),
            "subset width must equal clause count"
        );
        let assumptions: Vec<Lit> = self
            .selectors
            .iter()
            .enumerate()
            .map(|(i, s)| {
                if subset.contains(i) {
                    s.positive()
                } else {
                    s.negative()
                }
            })
            .collect();
        match self.solver.solve(&assumptions) {
            SolveOutcome::Unsat => OracleVerdict {
                status: Status::Unsatisfiable,
                model: None,
            },
            SolveOutcome::Sat => {
                let model: Vec<bool> =
                    self.solver.model()[..self.inst.num_vars() as usize].to_vec();
                for i in subset.iter() {
                    assert!(
                        self.inst.clause_satisfied(i, &model),
                        "solver model violates selected clause {i}"
                    );
                }
                OracleVerdict {
                    status: Status::Satisfiable,
                    model: Some(model),
                }
            }
        }
    }
}

impl SubsetOracle for CnfOracle<'_> {
    fn num_constraints(&self) -> usize {
        self.inst.num_clauses()
    }

    fn check(&mut self, subset: &SubsetMask, phase: Phase) -> Result<OracleVerdict, OracleError> {
        self.ledger.charge(phase)?;
        Ok(self.decide(subset))
    }

    fn check_unbudgeted(&mut self, subset: &SubsetMask) -> OracleVerdict {
        self.decide(subset)
    }

    fn ledger(&self) -> &CheckLedger {
        &self.ledger
    }
}

/// One-shot uncounted check on a fresh solver.
pub fn check_unbudgeted(inst: &CnfInstance, subset: &SubsetMask) -> OracleVerdict {
    CnfOracle::new(inst, None).decide(subset)
}
