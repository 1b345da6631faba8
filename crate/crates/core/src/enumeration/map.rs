//! The map of explored subsets: one selector variable per constraint and a
//! blocking clause per enumerated set. Map queries are never charged to the
//! check ledger.

use serde::{Deserialize, Serialize};

use crate::mask::SubsetMask;
use crate::sat::{Lit, Polarity, SolveOutcome, Solver, Var};

/// Which end of the unexplored region a seed is pushed towards.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SeedPolarity {
    /// Maximal among unexplored subsets (selectors default to true).
    #[default]
    Maximal,
    /// Minimal among unexplored subsets.
    Minimal,
    /// Whatever the map solver returns with phase saving.
    Default,
}

pub struct PowerSetMap {
    m: usize,
    solver: Solver,
    /// `∨_{i∈M} ¬s_i` for each blocked MUS `M`.
    mus_blocks: Vec<SubsetMask>,
    /// `∨_{i∉M} s_i` for each blocked MSS `M`, stored as `C\M`.
    mss_blocks: Vec<SubsetMask>,
    mus_occ: Vec<Vec<usize>>,
    mss_occ: Vec<Vec<usize>>,
    pub solver_calls: u64,
}

impl PowerSetMap {
    pub fn new(m: usize) -> Self {
        PowerSetMap {
            m,
            solver: Solver::with_vars(m),
            mus_blocks: Vec::new(),
            mss_blocks: Vec::new(),
            mus_occ: vec![Vec::new(); m],
            mss_occ: vec![Vec::new(); m],
            solver_calls: 0,
        }
    }

    pub fn num_selectors(&self) -> usize {
        self.m
    }

    pub fn num_blocks(&self) -> usize {
        self.mus_blocks.len() + self.mss_blocks.len()
    }

    /// Removes `mus` and all its supersets.
    pub fn block_mus(&mut self, mus: &SubsetMask) {
        assert_eq!(mus.width(), self.m);
        let lits: Vec<Lit> = mus.iter().map(|i| Var(i as u32).negative()).collect();
        self.solver.add_clause(&lits);
        for i in mus.iter() {
            self.mus_occ[i].push(self.mus_blocks.len());
        }
        self.mus_blocks.push(mus.clone());
    }

    /// Removes `mss` and all its subsets.
    pub fn block_mss(&mut self, mss: &SubsetMask) {
        assert_eq!(mss.width(), self.m);
        let mcs = mss.complement();
        let lits: Vec<Lit> = mcs.iter().map(|i| Var(i as u32).positive()).collect();
        self.solver.add_clause(&lits);
        for i in mcs.iter() {
            self.mss_occ[i].push(self.mss_blocks.len());
        }
        self.mss_blocks.push(mcs);
    }

    /// Whether `s` satisfies every blocking clause.
    pub fn is_unexplored(&self, s: &SubsetMask) -> bool {
        self.mus_blocks.iter().all(|b| !b.is_subset(s))
            && self
                .mss_blocks
                .iter()
                .all(|b| b.iter().any(|i| s.contains(i)))
    }

    /// An unexplored subset, or `None` once everything is explored.
    pub fn next_seed(&mut self, polarity: SeedPolarity) -> Option<SubsetMask> {
        self.next_seed_within(&SubsetMask::full(self.m), polarity)
    }

    /// An unexplored subset of `domain`, extremal within `domain` for the
    /// maximal/minimal polarities.
    pub fn next_seed_within(
        &mut self,
        domain: &SubsetMask,
        polarity: SeedPolarity,
    ) -> Option<SubsetMask> {
        assert_eq!(domain.width(), self.m);
        self.solver.set_polarity(match polarity {
            SeedPolarity::Maximal => Polarity::AlwaysTrue,
            SeedPolarity::Minimal => Polarity::AlwaysFalse,
            SeedPolarity::Default => Polarity::Saved,
        });
        let outside: Vec<Lit> = domain
            .complement()
            .iter()
            .map(|i| Var(i as u32).negative())
            .collect();
        self.solver_calls += 1;
        if self.solver.solve(&outside) == SolveOutcome::Unsat {
            return None;
        }
        let mut seed = SubsetMask::from_bools(&self.solver.model()[..self.m]);
        match polarity {
            SeedPolarity::Maximal => self.maximize(&mut seed, domain),
            SeedPolarity::Minimal => self.minimize(&mut seed),
            SeedPolarity::Default => {}
        }
        debug_assert!(seed.is_subset(domain) && self.is_unexplored(&seed));
        Some(seed)
    }

    /// Adds domain elements while no MUS block becomes violated.
    fn maximize(&self, seed: &mut SubsetMask, domain: &SubsetMask) {
        // missing[b]: members of MUS block b absent from the seed.
        let mut missing: Vec<usize> = self
            .mus_blocks
            .iter()
            .map(|b| b.difference(seed).len())
            .collect();
        for i in domain.difference(seed).to_indices() {
            if self.mus_occ[i].iter().all(|&b| missing[b] > 1) {
                seed.insert(i);
                for &b in &self.mus_occ[i] {
                    missing[b] -= 1;
                }
            }
        }
    }

    /// Drops elements while no MSS block becomes violated.
    fn minimize(&self, seed: &mut SubsetMask) {
        // present[b]: members of the complement block b inside the seed.
        let mut present: Vec<usize> = self
            .mss_blocks
            .iter()
            .map(|b| b.intersection(seed).len())
            .collect();
        for i in seed.to_indices() {
            if self.mss_occ[i].iter().all(|&b| present[b] > 1) {
                seed.remove(i);
                for &b in &self.mss_occ[i] {
                    present[b] -= 1;
                }
            }
        }
    }
}
