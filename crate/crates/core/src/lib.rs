//! Online MUS/MSS enumeration with policy-guided shrink and grow.
//!
//! The engine enumerates minimal unsatisfiable subsets (MUSes) and maximal
//! satisfiable subsets (MSSes) of a CNF formula's clauses with MARCO, TOME or
//! ReMUS. Each shrink/grow call can be delegated to a [`agentlink::Policy`]
//! that sees the MUS/MCS hypergraph explored so far; its tentative answer is
//! repaired into a valid MUS/MSS by a correction step, and every oracle call
//! is counted in a [`oracle::CheckLedger`].

pub mod agentlink;
pub mod enumeration;
pub mod extraction;
pub mod formula;
pub mod harness;
pub mod mask;
pub mod metrics;
pub mod musgraph;
pub mod oracle;
pub mod sat;

pub use agentlink::{ActMode, ActRequest, EpisodeRecord, Op, Policy};
pub use enumeration::{
    enumerate, Algo, EnumeratorConfig, RunOptions, RunResult, RunStatus, SeedPolarity, Strategy,
};
pub use extraction::{Action, ExtractKind, ExtractionResult, PolicyDecision};
pub use formula::{CnfInstance, GeneratorConfig, GeneratorKind};
pub use mask::SubsetMask;
pub use musgraph::{ExplorationGraph, IncidenceExport, Watermark};
pub use oracle::{CheckLedger, CnfOracle, Phase, SubsetOracle};
