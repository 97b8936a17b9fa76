//! In-memory columnar equi-joins with clustered materialization.

pub mod engine;
pub mod error;
pub mod exec;
pub mod harness;
pub mod hash_match;
pub mod memory;
pub mod merge_match;
pub mod model;
pub mod oracle;
pub mod primitives;
pub mod selector;
pub mod workloads;

pub use engine::{run_join, JoinOptions, JoinOutput, JoinTask, PhaseReport, Variant};
pub use error::{Error, Result};
pub use exec::ExecCtx;
pub use memory::{phase_scope, MemLedger, Phase, PeakSnapshot};
pub use model::{make_relation, Column, MatchSet, Relation, TupleIdSemantics, ValueKind};
