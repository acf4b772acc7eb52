//! Trace-driven selection of the smallest two-level inclusive data cache
//! hierarchy (P private caches in front of one shared cache) that meets a
//! data-memory-operation deadline.
//!
//! The pipeline:
//!
//! 1. [`chpp`] turns the trace and deadline into miss budgets without any
//!    cache simulation.
//! 2. [`spcs`] simulates every private-level configuration in one pass over
//!    the trace, with write-invalidate coherence, abandoning set-count levels
//!    whose misses already exceed the budget.
//! 3. [`sscs`] simulates every shared configuration in one pass over the
//!    sequentialized private misses.
//! 4. [`select`] combines the two into a [`SelectionReport`] and can reselect
//!    for a tighter deadline from cached results.
//!
//! [`oracle`] is an independent brute-force simulator used as ground truth.

pub mod chpp;
pub mod design;
pub mod engine;
pub mod oracle;
pub mod persist;
pub mod select;
pub mod spcs;
pub mod sscs;
pub mod timing;
pub mod trace;

use thiserror::Error;

pub use chpp::{predict_budgets, BudgetPredictor, PerfBudget, SlackBound};
pub use design::{CacheConfig, DesignSpace, HierarchyConfig, Replacement, SpaceError};
pub use oracle::{exhaustive_select, simulate_hierarchy, simulate_private_only, OracleOptions};
pub use select::{reselect, run_selection, SelectionOptions, SelectionReport, Strategy};
pub use spcs::{
    emit_secondary_trace, select_private, simulate_private, PrivateSimResult, SecondaryTrace,
};
pub use sscs::{select_shared, simulate_shared, simulate_shared_bounded, SharedSimResult};
pub use timing::{amt, feasible, max_tam, AccessCounts, Deadline, TimingParams};
pub use trace::{
    count_tap, generate_synthetic, parse_trace, AccessRecord, Op, SyntheticTraceSpec, Trace,
    TraceError,
};

/// Simulation input errors.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("simulation configured for {found} processors but the trace has {expected}")]
    ProcessorMismatch { expected: u32, found: u32 },
    #[error("record from processor {processor} but only {processor_count} simulated")]
    ProcessorOutOfRange { processor: u32, processor_count: u32 },
    #[error("shared block size {shared} differs from private block size {private}")]
    BlockSizeMismatch { private: u32, shared: u32 },
}

/// Errors from the selection pipeline. Each names the stage that failed.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SelectError {
    #[error("deadline {wcdmot_ns} ns is below the {private_ns} ns spent at the private level alone")]
    InfeasibleDeadline { wcdmot_ns: u64, private_ns: u64 },
    #[error("no private level configuration can meet the deadline")]
    NoFeasiblePrivate,
    #[error("no shared cache configuration meets the deadline{}", private.map(|p| format!(" behind private {p}")).unwrap_or_default())]
    NoFeasibleShared { private: Option<CacheConfig> },
    #[error("deadline {requested_ns} ns is looser than the cached {original_ns} ns; run a full selection")]
    RequiresFullRun { original_ns: u64, requested_ns: u64 },
    #[error("cached results belong to trace {expected}, not {found}")]
    StaleCache { expected: String, found: String },
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl SelectError {
    /// Stable machine-readable reason code.
    pub fn code(&self) -> &'static str {
        match self {
            SelectError::InfeasibleDeadline { .. } => "InfeasibleDeadline",
            SelectError::NoFeasiblePrivate => "NoFeasiblePrivate",
            SelectError::NoFeasibleShared { .. } => "NoFeasibleShared",
            SelectError::RequiresFullRun { .. } => "RequiresFullRun",
            SelectError::StaleCache { .. } => "StaleCache",
            SelectError::Space(_) => "InvalidSpace",
            SelectError::Sim(_) => "InvalidInput",
        }
    }

    /// Pipeline stage the error came from.
    pub fn stage(&self) -> &'static str {
        match self {
            SelectError::InfeasibleDeadline { .. } => "budget",
            SelectError::NoFeasiblePrivate => "private",
            SelectError::NoFeasibleShared { .. } => "shared",
            SelectError::RequiresFullRun { .. } | SelectError::StaleCache { .. } => "cache",
            SelectError::Space(_) | SelectError::Sim(_) => "input",
        }
    }

    /// True when the inputs were valid but no hierarchy meets the deadline.
    pub fn is_infeasible(&self) -> bool {
        matches!(
            self,
            SelectError::InfeasibleDeadline { .. }
                | SelectError::NoFeasiblePrivate
                | SelectError::NoFeasibleShared { .. }
        )
    }
}
