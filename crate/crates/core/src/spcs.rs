//! Private level: every configuration of the `P` coherent private caches in
//! one pass over the trace, then private selection and secondary trace
//! emission.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::chpp::PerfBudget;
use crate::design::{CacheConfig, DesignSpace};
use crate::engine::SinglePassSim;
use crate::timing::{max_tam, Deadline, TimingParams};
use crate::trace::{AccessRecord, Trace};
use crate::{SelectError, SimError};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateConfigResult {
    pub config: CacheConfig,
    pub misses_per_processor: Vec<u64>,
    /// Sum over processors: the shared-level accesses this level generates.
    pub tas_prime: u64,
    /// Set when the level was abandoned; counts are then lower bounds that
    /// already exceed the miss limit.
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrivateSimResult {
    pub space: DesignSpace,
    pub processor_count: u32,
    pub configs: Vec<PrivateConfigResult>,
    pub tap_observed: u64,
    pub tas_limit: Option<u64>,
    pub records_read: u64,
    /// Distinct blocks referenced. Every one of them misses at least once in
    /// any shared cache. Only a lower bound once every level is excluded.
    pub distinct_blocks: u64,
    pub trace_hash: String,
}

impl PrivateSimResult {
    pub fn get(&self, config: &CacheConfig) -> Option<&PrivateConfigResult> {
        self.configs.iter().find(|c| c.config == *config)
    }

    pub fn excluded_count(&self) -> usize {
        self.configs.iter().filter(|c| c.excluded).count()
    }
}

/// Simulates every configuration of `space` for the trace's private level.
/// `tas_limit` enables level exclusion.
pub fn simulate_private(
    trace: &Trace,
    space: &DesignSpace,
    processor_count: u32,
    tas_limit: Option<u64>,
) -> Result<PrivateSimResult, SimError> {
    if processor_count != trace.processor_count() {
        return Err(SimError::ProcessorMismatch {
            expected: trace.processor_count(),
            found: processor_count,
        });
    }
    let mut result =
        simulate_private_stream(trace.records().iter().copied(), space, processor_count, tas_limit)?;
    result.trace_hash = trace.fingerprint();
    Ok(result)
}

/// Like [`simulate_private`] but over any record source, which is consumed
/// once. The trace hash is left empty.
pub fn simulate_private_stream<I>(
    records: I,
    space: &DesignSpace,
    processor_count: u32,
    tas_limit: Option<u64>,
) -> Result<PrivateSimResult, SimError>
where
    I: IntoIterator<Item = AccessRecord>,
{
    let shift = space.block_bytes().trailing_zeros();
    let mut sim = SinglePassSim::new(space, processor_count, true, tas_limit);
    let mut tap = 0u64;
    let mut last_cycle = None;
    let mut read = 0u64;
    for rec in records {
        read += 1;
        if rec.processor >= processor_count {
            return Err(SimError::ProcessorOutOfRange {
                processor: rec.processor,
                processor_count,
            });
        }
        if last_cycle != Some(rec.cycle) {
            tap += 1;
            last_cycle = Some(rec.cycle);
        }
        sim.access(rec.processor, rec.address >> shift, rec.op.is_write());
    }
    let configs = sim
        .results()
        .into_iter()
        .map(|c| PrivateConfigResult {
            config: CacheConfig::new(c.sets, c.assoc, space.block_bytes()).unwrap(),
            tas_prime: c.total(),
            misses_per_processor: c.misses_per_processor,
            excluded: c.excluded,
        })
        .collect();
    Ok(PrivateSimResult {
        space: space.clone(),
        processor_count,
        configs,
        tap_observed: tap,
        tas_limit,
        records_read: read,
        distinct_blocks: sim.lookup_table().len() as u64,
        trace_hash: String::new(),
    })
}

/// Non-excluded configurations that can still meet the deadline, with the
/// memory-access budget (TAM') each leaves for the shared cache.
pub fn private_candidates(
    result: &PrivateSimResult,
    budget: &PerfBudget,
    params: TimingParams,
    deadline: Deadline,
) -> Vec<(CacheConfig, u64)> {
    result
        .configs
        .iter()
        .filter(|c| !c.excluded)
        .filter_map(|c| {
            max_tam(result.tap_observed, c.tas_prime, params, deadline)
                .filter(|&t| t <= budget.tam_limit)
                .map(|t| (c.config, t))
        })
        .collect()
}

/// Picks the private configuration leaving the largest memory-access budget;
/// ties go to the smaller capacity, then the smaller associativity.
pub fn select_private(
    result: &PrivateSimResult,
    budget: &PerfBudget,
    params: TimingParams,
    deadline: Deadline,
) -> Result<(CacheConfig, u64), SelectError> {
    private_candidates(result, budget, params, deadline)
        .into_iter()
        .min_by_key(|(c, t)| (std::cmp::Reverse(*t), c.size_key()))
        .ok_or(SelectError::NoFeasiblePrivate)
}

/// One private miss forwarded to the shared cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondaryAccess {
    pub cycle: u64,
    pub processor: u32,
    pub block: u64,
}

/// Private misses of one configuration, sequentialized by cycle and then
/// processor id.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondaryTrace {
    pub accesses: Vec<SecondaryAccess>,
    pub private: CacheConfig,
    pub trace_hash: String,
}

impl SecondaryTrace {
    pub fn len(&self) -> usize {
        self.accesses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accesses.is_empty()
    }

    pub fn blocks(&self) -> impl Iterator<Item = u64> + '_ {
        self.accesses.iter().map(|a| a.block)
    }

    /// Identifies the stream by its source trace and private configuration,
    /// which together determine it. Trusts `trace_hash`.
    pub fn source_id(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.trace_hash.as_bytes());
        h.update(format!(":{}:{}:{}", self.private.sets(), self.private.assoc(), self.private.block_bytes()));
        format!("{:x}", h.finalize())
    }

    /// Hash over the full contents.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.trace_hash.as_bytes());
        h.update(format!("{}:{}:{}", self.private.sets(), self.private.assoc(), self.private.block_bytes()));
        for a in &self.accesses {
            h.update(a.cycle.to_le_bytes());
            h.update(a.processor.to_le_bytes());
            h.update(a.block.to_le_bytes());
        }
        format!("{:x}", h.finalize())
    }
}

/// Re-simulates `chosen` alone and emits one shared access per private miss,
/// reads and writes alike.
pub fn emit_secondary_trace(trace: &Trace, chosen: CacheConfig, processor_count: u32) -> SecondaryTrace {
    let space = DesignSpace::new(vec![chosen.sets()], vec![chosen.assoc()], chosen.block_bytes())
        .expect("a valid config forms a valid space");
    let shift = chosen.block_bytes().trailing_zeros();
    let mut sim = SinglePassSim::new(&space, processor_count, true, None);
    let mut accesses = Vec::new();
    let mut cycle_start = 0;
    let mut current = None;
    for rec in trace.records() {
        if current != Some(rec.cycle) {
            accesses[cycle_start..].sort_by_key(|a: &SecondaryAccess| a.processor);
            cycle_start = accesses.len();
            current = Some(rec.cycle);
        }
        let block = rec.address >> shift;
        if sim.access(rec.processor, block, rec.op.is_write()) > 0 {
            accesses.push(SecondaryAccess {
                cycle: rec.cycle,
                processor: rec.processor,
                block,
            });
        }
    }
    accesses[cycle_start..].sort_by_key(|a| a.processor);
    SecondaryTrace {
        accesses,
        private: chosen,
        trace_hash: trace.fingerprint(),
    }
}
