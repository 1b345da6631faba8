//! The MUS/MCS hypergraph accumulated during one enumeration run.
//!
//! Vertices are constraints. Every enumerated MUS becomes a hyperedge of the
//! MUS class, and the complement of every enumerated MSS becomes a
//! hyperedge of the MCS class. Edge lists are append-only, so a pair of edge
//! counts ([`Watermark`]) identifies any earlier state of the graph.
//!
//! Exported incidence lists use 0-based vertex indices; constraint `i` here
//! is DIMACS clause `i + 1`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::mask::SubsetMask;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GraphError {
    #[error("an MUS hyperedge cannot be empty")]
    EmptyMus,
    #[error("mask width {got} does not match vertex count {expected}")]
    Width { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Watermark {
    pub mus: usize,
    pub mcs: usize,
}

#[derive(Clone, Debug)]
pub struct ExplorationGraph {
    num_vertices: usize,
    mus_edges: Vec<SubsetMask>,
    mcs_edges: Vec<SubsetMask>,
    mus_seen: HashSet<SubsetMask>,
    mcs_seen: HashSet<SubsetMask>,
    mus_degree: Vec<u32>,
    mcs_degree: Vec<u32>,
    whole_satisfiable: bool,
}

impl ExplorationGraph {
    pub fn new(num_vertices: usize) -> Self {
        ExplorationGraph {
            num_vertices,
            mus_edges: Vec::new(),
            mcs_edges: Vec::new(),
            mus_seen: HashSet::new(),
            mcs_seen: HashSet::new(),
            mus_degree: vec![0; num_vertices],
            mcs_degree: vec![0; num_vertices],
            whole_satisfiable: false,
        }
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn mus_edges(&self) -> &[SubsetMask] {
        &self.mus_edges
    }

    pub fn mcs_edges(&self) -> &[SubsetMask] {
        &self.mcs_edges
    }

    /// Number of MUS hyperedges containing vertex `v`.
    pub fn mus_degree(&self, v: usize) -> u32 {
        self.mus_degree[v]
    }

    pub fn mcs_degree(&self, v: usize) -> u32 {
        self.mcs_degree[v]
    }

    /// Set when an MSS equal to the whole constraint set was recorded.
    pub fn whole_satisfiable(&self) -> bool {
        self.whole_satisfiable
    }

    pub fn watermark(&self) -> Watermark {
        Watermark {
            mus: self.mus_edges.len(),
            mcs: self.mcs_edges.len(),
        }
    }

    fn check_width(&self, m: &SubsetMask) -> Result<(), GraphError> {
        if m.width() != self.num_vertices {
            return Err(GraphError::Width {
                expected: self.num_vertices,
                got: m.width(),
            });
        }
        Ok(())
    }

    /// Appends `mus` as a hyperedge. Returns false for a duplicate.
    pub fn record_mus(&mut self, mus: &SubsetMask) -> Result<bool, GraphError> {
        self.check_width(mus)?;
        if mus.is_empty() {
            return Err(GraphError::EmptyMus);
        }
        if !self.mus_seen.insert(mus.clone()) {
            return Ok(false);
        }
        for v in mus.iter() {
            self.mus_degree[v] += 1;
        }
        self.mus_edges.push(mus.clone());
        Ok(true)
    }

    /// Appends the complement of `mss` as an MCS hyperedge. Returns false for
    /// a duplicate, or when `mss` is everything (nothing to record).
    pub fn record_mss(&mut self, mss: &SubsetMask) -> Result<bool, GraphError> {
        self.check_width(mss)?;
        let mcs = mss.complement();
        if mcs.is_empty() {
            self.whole_satisfiable = true;
            return Ok(false);
        }
        if !self.mcs_seen.insert(mcs.clone()) {
            return Ok(false);
        }
        for v in mcs.iter() {
            self.mcs_degree[v] += 1;
        }
        self.mcs_edges.push(mcs);
        Ok(true)
    }

    /// Rebuilds a graph from exported incidence lists (e.g. on the agent side).
    pub fn from_incidence(inc: &IncidenceExport) -> Result<Self, GraphError> {
        let mut g = ExplorationGraph::new(inc.num_vertices);
        g.extend(&inc.mus, &inc.mcs)?;
        Ok(g)
    }

    /// Appends MUS and MCS edges given as index lists.
    pub fn extend(&mut self, mus: &[Vec<usize>], mcs: &[Vec<usize>]) -> Result<(), GraphError> {
        let n = self.num_vertices;
        let to_mask = |e: &Vec<usize>| -> Result<SubsetMask, GraphError> {
            match e.iter().find(|&&v| v >= n) {
                Some(&v) => Err(GraphError::Width {
                    expected: n,
                    got: v + 1,
                }),
                None => Ok(SubsetMask::from_indices(n, e.iter().copied())),
            }
        };
        for e in mus {
            self.record_mus(&to_mask(e)?)?;
        }
        for e in mcs {
            self.record_mss(&to_mask(e)?.complement())?;
        }
        Ok(())
    }

    pub fn export_incidence(&self) -> IncidenceExport {
        self.export_at(self.watermark())
    }

    /// Incidence lists of the graph as it was when it had `wm` edges.
    pub fn export_at(&self, wm: Watermark) -> IncidenceExport {
        let lists = |edges: &[SubsetMask], n: usize| -> Vec<Vec<usize>> {
            edges[..n.min(edges.len())]
                .iter()
                .map(|e| e.to_indices())
                .collect()
        };
        IncidenceExport {
            num_vertices: self.num_vertices,
            mus: lists(&self.mus_edges, wm.mus),
            mcs: lists(&self.mcs_edges, wm.mcs),
        }
    }

    /// Edges appended after `since`, as incidence lists.
    pub fn export_since(&self, since: Watermark) -> IncidenceExport {
        let lists = |edges: &[SubsetMask], from: usize| -> Vec<Vec<usize>> {
            edges[from.min(edges.len())..]
                .iter()
                .map(|e| e.to_indices())
                .collect()
        };
        IncidenceExport {
            num_vertices: self.num_vertices,
            mus: lists(&self.mus_edges, since.mus),
            mcs: lists(&self.mcs_edges, since.mcs),
        }
    }
}

/// Canonical incidence form: ascending vertex lists in discovery order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceExport {
    pub num_vertices: usize,
    pub mus: Vec<Vec<usize>>,
    pub mcs: Vec<Vec<usize>>,
}

impl IncidenceExport {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("incidence lists always serialize")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mask(m: usize, ix: &[usize]) -> SubsetMask {
        SubsetMask::from_indices(m, ix.iter().copied())
    }

    #[test]
    fn record_and_dedup() {
        let mut g = ExplorationGraph::new(3);
        assert!(g.record_mus(&mask(3, &[0, 1])).unwrap());
        assert!(!g.record_mus(&mask(3, &[0, 1])).unwrap());
        assert_eq!(g.mus_edges().len(), 1);
        assert!(g.record_mss(&mask(3, &[0, 2])).unwrap());
        assert!(!g.record_mss(&mask(3, &[0, 2])).unwrap());
        assert_eq!(g.mcs_edges(), &[mask(3, &[1])]);
        assert_eq!(g.mus_degree(0), 1);
        assert_eq!(g.mcs_degree(1), 1);
        assert_eq!(g.mcs_degree(0), 0);
    }

    #[test]
    fn classes_are_deduplicated_independently() {
        let mut g = ExplorationGraph::new(2);
        assert!(g.record_mus(&mask(2, &[1])).unwrap());
        // MSS {0} has complement {1}, equal to the MUS as a vertex set.
        assert!(g.record_mss(&mask(2, &[0])).unwrap());
        assert_eq!(g.watermark(), Watermark { mus: 1, mcs: 1 });
    }

    #[test]
    fn contract_errors() {
        let mut g = ExplorationGraph::new(3);
        assert_eq!(
            g.record_mus(&SubsetMask::empty(3)),
            Err(GraphError::EmptyMus)
        );
        assert_eq!(
            g.record_mus(&mask(4, &[0])),
            Err(GraphError::Width {
                expected: 3,
                got: 4
            })
        );
        assert_eq!(g.record_mss(&SubsetMask::full(3)), Ok(false));
        assert!(g.whole_satisfiable());
        assert!(g.mcs_edges().is_empty());
    }

    #[test]
    fn export_examples() {
        let g = ExplorationGraph::new(3);
        assert_eq!(
            g.export_incidence(),
            IncidenceExport {
                num_vertices: 3,
                mus: vec![],
                mcs: vec![]
            }
        );
        let mut g = ExplorationGraph::new(3);
        g.record_mus(&mask(3, &[0, 1])).unwrap();
        g.record_mss(&mask(3, &[0, 2])).unwrap();
        let e = g.export_incidence();
        assert_eq!(
            e,
            IncidenceExport {
                num_vertices: 3,
                mus: vec![vec![0, 1]],
                mcs: vec![vec![1]]
            }
        );
        assert_eq!(
            e.to_json(),
            r#"{"num_vertices":3,"mus":[[0,1]],"mcs":[[1]]}"#
        );
        let back: IncidenceExport = serde_json::from_str(&e.to_json()).unwrap();
        assert_eq!(back, e);
        let rebuilt = ExplorationGraph::from_incidence(&back).unwrap();
        assert_eq!(rebuilt.export_incidence(), e);
        assert_eq!(rebuilt.mcs_degree(1), 1);
        let bad = IncidenceExport {
            num_vertices: 2,
            mus: vec![vec![2]],
            mcs: vec![],
        };
        assert!(ExplorationGraph::from_incidence(&bad).is_err());
    }

    #[test]
    fn watermark_snapshots() {
        let mut g = ExplorationGraph::new(4);
        g.record_mus(&mask(4, &[0, 1])).unwrap();
        let wm = g.watermark();
        let before = g.export_incidence();
        g.record_mus(&mask(4, &[2, 3])).unwrap();
        g.record_mss(&mask(4, &[0, 2])).unwrap();
        assert_eq!(g.export_at(wm), before);
        let delta = g.export_since(wm);
        assert_eq!(delta.mus, vec![vec![2, 3]]);
        assert_eq!(delta.mcs, vec![vec![1, 3]]);
    }
}
