//! End-to-end hierarchy selection and deadline-tightening reselection.
//!
//! Flow: budgets from the slack bound, one private-level pass over the
//! trace, then shared-level passes over the misses of the private
//! configurations that remain candidates.
//!
//! Two ways of choosing the private level are offered:
//!
//! * [`Strategy::CapacitySearch`] (default) walks the feasible private
//!   configurations from smallest to largest. For each it emits the
//!   secondary trace and runs the shared pass with that configuration's
//!   memory budget as miss limit. Every shared cache within the budget forms
//!   a feasible hierarchy, and the smallest one overall wins. Shared caches
//!   that could not beat the best hierarchy so far are not simulated, and
//!   the walk stops once `P x private capacity + smallest shared capacity`
//!   exceeds it.
//! * [`Strategy::LargestTamPrime`] picks the single private configuration
//!   leaving the largest memory budget and selects the shared cache behind
//!   it. With slack-only budgets this is the private configuration with the
//!   fewest misses, usually the largest one.
//!
//! Reselection for a tighter deadline never re-runs the private pass: every
//! private configuration that can meet a tighter deadline already met the
//! looser miss limit and so has exact counts in the cached result. Shared
//! passes are reused when their miss and capacity limits were at least as
//! loose.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::chpp::{BudgetPredictor, PerfBudget, SlackBound};
use crate::design::{CacheConfig, DesignSpace, HierarchyConfig};
use crate::spcs::{emit_secondary_trace, private_candidates, select_private, simulate_private, PrivateSimResult};
use crate::sscs::{select_shared, simulate_shared_bounded, SharedSimResult};
use crate::timing::{amt, AccessCounts, Deadline, TimingParams};
use crate::trace::{count_tap, Trace};
use crate::{SelectError, SpaceError};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    #[default]
    CapacitySearch,
    LargestTamPrime,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SelectionOptions {
    pub strategy: Strategy,
}

/// Simulation work done while producing one report.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageWork {
    pub private_passes: u32,
    pub shared_passes: u32,
    pub shared_reused: u32,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SelectionReport {
    pub hierarchy: HierarchyConfig,
    pub counts: AccessCounts,
    pub amt_ns: u64,
    pub deadline: Deadline,
    pub params: TimingParams,
    pub budget: PerfBudget,
    /// Memory-access budget left by the chosen private configuration.
    pub tam_prime: u64,
    pub options: SelectionOptions,
    pub private_space: DesignSpace,
    pub shared_space: DesignSpace,
    pub private_result: PrivateSimResult,
    /// One shared pass per private configuration evaluated so far.
    pub shared_results: Vec<SharedSimResult>,
    pub work: StageWork,
    #[serde(skip)]
    pub elapsed: Duration,
}

impl SelectionReport {
    pub fn trace_hash(&self) -> &str {
        &self.private_result.trace_hash
    }

    /// The shared pass behind the chosen private configuration.
    pub fn chosen_shared_result(&self) -> Option<&SharedSimResult> {
        self.shared_results
            .iter()
            .find(|r| r.private == self.hierarchy.private())
    }
}

pub fn run_selection(
    trace: &Trace,
    private_space: &DesignSpace,
    shared_space: &DesignSpace,
    params: TimingParams,
    deadline: Deadline,
    options: SelectionOptions,
) -> Result<SelectionReport, SelectError> {
    let started = Instant::now();
    if private_space.block_bytes() != shared_space.block_bytes() {
        return Err(SpaceError::BlockMismatch {
            private: private_space.block_bytes(),
            shared: shared_space.block_bytes(),
        }
        .into());
    }
    let budget = SlackBound.predict(count_tap(trace), params, deadline)?;
    let private_result = simulate_private(
        trace,
        private_space,
        trace.processor_count(),
        Some(budget.tas_limit),
    )?;
    let mut work = StageWork {
        private_passes: 1,
        ..Default::default()
    };
    let mut shared_results = Vec::new();
    let chosen = choose(
        trace,
        &private_result,
        shared_space,
        &mut shared_results,
        &budget,
        params,
        deadline,
        options,
        &mut work,
    )?;
    Ok(finish(
        chosen,
        trace,
        budget,
        params,
        deadline,
        options,
        private_space,
        shared_space,
        private_result,
        shared_results,
        work,
        started,
    ))
}

/// Selects for `new_deadline` from the results cached in `report`.
///
/// `trace` must be the trace the report was computed from; it is only read
/// again if a shared pass has to be redone.
pub fn reselect(
    report: &SelectionReport,
    trace: &Trace,
    new_deadline: Deadline,
) -> Result<SelectionReport, SelectError> {
    let started = Instant::now();
    if new_deadline > report.deadline {
        return Err(SelectError::RequiresFullRun {
            original_ns: report.deadline.ns(),
            requested_ns: new_deadline.ns(),
        });
    }
    let found = trace.fingerprint();
    if found != report.trace_hash() {
        return Err(SelectError::StaleCache {
            expected: report.trace_hash().to_string(),
            found,
        });
    }
    let params = report.params;
    let budget = SlackBound.predict(report.private_result.tap_observed, params, new_deadline)?;
    let mut shared_results = report.shared_results.clone();
    let mut work = StageWork::default();
    let chosen = choose(
        trace,
        &report.private_result,
        &report.shared_space,
        &mut shared_results,
        &budget,
        params,
        new_deadline,
        report.options,
        &mut work,
    )?;
    Ok(finish(
        chosen,
        trace,
        budget,
        params,
        new_deadline,
        report.options,
        &report.private_space,
        &report.shared_space,
        report.private_result.clone(),
        shared_results,
        work,
        started,
    ))
}

struct Choice {
    private: CacheConfig,
    shared: CacheConfig,
    tam_prime: u64,
    tas: u64,
    tam: u64,
}

#[allow(clippy::too_many_arguments)]
fn finish(
    c: Choice,
    trace: &Trace,
    budget: PerfBudget,
    params: TimingParams,
    deadline: Deadline,
    options: SelectionOptions,
    private_space: &DesignSpace,
    shared_space: &DesignSpace,
    private_result: PrivateSimResult,
    shared_results: Vec<SharedSimResult>,
    work: StageWork,
    started: Instant,
) -> SelectionReport {
    let hierarchy = HierarchyConfig::new(c.private, c.shared, trace.processor_count())
        .expect("spaces share one block size");
    let counts = AccessCounts::new(budget.tap_observed, c.tas, c.tam);
    let amt_ns = amt(counts, params);
    debug_assert!(amt_ns <= deadline.ns());
    SelectionReport {
        hierarchy,
        counts,
        amt_ns,
        deadline,
        params,
        budget,
        tam_prime: c.tam_prime,
        options,
        private_space: private_space.clone(),
        shared_space: shared_space.clone(),
        private_result,
        shared_results,
        work,
        elapsed: started.elapsed(),
    }
}

/// Returns a shared pass for `private` valid for `miss_limit` and
/// `capacity_limit`, reusing a cached one whose limits were at least as loose.
#[allow(clippy::too_many_arguments)]
fn shared_pass<'a>(
    trace: &Trace,
    private: CacheConfig,
    miss_limit: u64,
    capacity_limit: Option<u64>,
    shared_space: &DesignSpace,
    cache: &'a mut Vec<SharedSimResult>,
    work: &mut StageWork,
) -> Result<&'a SharedSimResult, SelectError> {
    let covers = |have: Option<u64>, need: Option<u64>| match (have, need) {
        (None, _) => true,
        (Some(_), None) => false,
        (Some(h), Some(n)) => h >= n,
    };
    let reusable = cache.iter().position(|r| {
        r.private == private
            && r.space == *shared_space
            && covers(r.miss_limit, Some(miss_limit))
            && covers(r.capacity_limit, capacity_limit)
    });
    let idx = match reusable {
        Some(i) => {
            work.shared_reused += 1;
            i
        }
        None => {
            let secondary = emit_secondary_trace(trace, private, trace.processor_count());
            let result = simulate_shared_bounded(&secondary, shared_space, Some(miss_limit), capacity_limit)?;
            work.shared_passes += 1;
            cache.retain(|r| r.private != private);
            cache.push(result);
            cache.len() - 1
        }
    };
    Ok(&cache[idx])
}

#[allow(clippy::too_many_arguments)]
fn choose(
    trace: &Trace,
    private_result: &PrivateSimResult,
    shared_space: &DesignSpace,
    cache: &mut Vec<SharedSimResult>,
    budget: &PerfBudget,
    params: TimingParams,
    deadline: Deadline,
    options: SelectionOptions,
    work: &mut StageWork,
) -> Result<Choice, SelectError> {
    let tas_of = |p: &CacheConfig| private_result.get(p).expect("candidate was simulated").tas_prime;
    let processors = u64::from(private_result.processor_count);

    match options.strategy {
        Strategy::LargestTamPrime => {
            let (private, tam_prime) = select_private(private_result, budget, params, deadline)?;
            if tam_prime < private_result.distinct_blocks {
                return Err(SelectError::NoFeasibleShared { private: Some(private) });
            }
            let result = shared_pass(trace, private, tam_prime, None, shared_space, cache, work)?;
            let shared = select_shared(result, tam_prime)?;
            let tam = result.get(&shared).unwrap().misses;
            Ok(Choice {
                private,
                shared,
                tam_prime,
                tas: tas_of(&private),
                tam,
            })
        }
        Strategy::CapacitySearch => {
            let mut candidates = private_candidates(private_result, budget, params, deadline);
            if candidates.is_empty() {
                return Err(SelectError::NoFeasiblePrivate);
            }
            candidates.sort_by_key(|(c, _)| c.size_key());
            let min_shared = shared_space.min_capacity();
            let mut best: Option<(HierarchyConfig, Choice)> = None;
            for (private, tam_prime) in candidates {
                let private_total = processors * private.capacity();
                // Shared caches above this size cannot beat the best so far.
                let capacity_limit = match &best {
                    Some((h, _)) if private_total + min_shared > h.capacity() => break,
                    Some((h, _)) => Some(h.capacity() - private_total),
                    None => None,
                };
                // Cold misses alone exceed the budget.
                if tam_prime < private_result.distinct_blocks {
                    continue;
                }
                let result = shared_pass(trace, private, tam_prime, capacity_limit, shared_space, cache, work)?;
                for c in result.configs.iter().filter(|c| !c.excluded && c.misses <= tam_prime) {
                    let h = HierarchyConfig::new(private, c.config, private_result.processor_count)?;
                    if best.as_ref().is_none_or(|(b, _)| h.selection_key() < b.selection_key()) {
                        let choice = Choice {
                            private,
                            shared: c.config,
                            tam_prime,
                            tas: tas_of(&private),
                            tam: c.misses,
                        };
                        best = Some((h, choice));
                    }
                }
            }
            best.map(|(_, c)| c)
                .ok_or(SelectError::NoFeasibleShared { private: None })
        }
    }
}
