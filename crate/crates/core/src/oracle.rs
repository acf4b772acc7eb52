//! Brute-force reference simulation.
//!
//! Everything here simulates one configuration at a time with plain
//! `VecDeque` FIFO sets and linear search. It shares no state or code with
//! the single-pass engine so the two can be checked against each other.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::{CacheConfig, DesignSpace, HierarchyConfig};
use crate::timing::{amt, AccessCounts, Deadline, TimingParams};
use crate::trace::{count_tap, AccessRecord, Trace};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct OracleOptions {
    /// Evict a block from every private cache when the shared cache evicts
    /// it, so the shared cache strictly contains the private ones.
    pub back_invalidate: bool,
}

/// A single FIFO set-associative cache over block ids.
#[derive(Clone, Debug)]
pub struct FifoCache {
    sets: Vec<VecDeque<u64>>,
    assoc: usize,
}

/// Outcome of one cache access.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Lookup {
    Hit,
    Miss { evicted: Option<u64> },
}

impl FifoCache {
    pub fn new(config: &CacheConfig) -> Self {
        Self {
            sets: vec![VecDeque::new(); config.sets() as usize],
            assoc: config.assoc() as usize,
        }
    }

    fn set_of(&self, block: u64) -> usize {
        (block % self.sets.len() as u64) as usize
    }

    pub fn contains(&self, block: u64) -> bool {
        self.sets[self.set_of(block)].contains(&block)
    }

    /// Looks `block` up, allocating it on a miss.
    pub fn access(&mut self, block: u64) -> Lookup {
        let idx = self.set_of(block);
        let set = &mut self.sets[idx];
        if set.contains(&block) {
            return Lookup::Hit;
        }
        let evicted = if set.len() == self.assoc {
            set.pop_front()
        } else {
            None
        };
        set.push_back(block);
        Lookup::Miss { evicted }
    }

    pub fn remove(&mut self, block: u64) -> bool {
        let idx = self.set_of(block);
        let set = &mut self.sets[idx];
        match set.iter().position(|&b| b == block) {
            Some(pos) => {
                set.remove(pos);
                true
            }
            None => false,
        }
    }
}

/// `P` write-invalidate private caches of one configuration.
struct PrivateLevel {
    caches: Vec<FifoCache>,
    shift: u32,
}

impl PrivateLevel {
    fn new(config: &CacheConfig, processors: u32) -> Self {
        Self {
            caches: (0..processors).map(|_| FifoCache::new(config)).collect(),
            shift: config.block_bytes().trailing_zeros(),
        }
    }

    /// Returns the block id when the access misses.
    fn access(&mut self, rec: &AccessRecord) -> Option<u64> {
        let block = rec.address >> self.shift;
        let me = rec.processor as usize;
        let missed = matches!(self.caches[me].access(block), Lookup::Miss { .. });
        if rec.op.is_write() {
            for (i, cache) in self.caches.iter_mut().enumerate() {
                if i != me {
                    cache.remove(block);
                }
            }
        }
        missed.then_some(block)
    }
}

/// Per-processor miss counts of the private level alone.
pub fn simulate_private_only(trace: &Trace, config: &CacheConfig, processors: u32) -> Vec<u64> {
    let mut level = PrivateLevel::new(config, processors);
    let mut misses = vec![0u64; processors as usize];
    for rec in trace.records() {
        if level.access(rec).is_some() {
            misses[rec.processor as usize] += 1;
        }
    }
    misses
}

/// Misses of a single cache over a block stream.
pub fn simulate_cache<I: IntoIterator<Item = u64>>(blocks: I, config: &CacheConfig) -> u64 {
    let mut cache = FifoCache::new(config);
    blocks
        .into_iter()
        .filter(|&b| matches!(cache.access(b), Lookup::Miss { .. }))
        .count() as u64
}

/// Private misses in shared-cache order: by cycle, then processor.
pub fn private_miss_stream(trace: &Trace, config: &CacheConfig) -> Vec<(u64, u32, u64)> {
    let mut level = PrivateLevel::new(config, trace.processor_count());
    let mut out: Vec<(u64, u32, u64)> = trace
        .records()
        .iter()
        .filter_map(|rec| level.access(rec).map(|b| (rec.cycle, rec.processor, b)))
        .collect();
    // Stable: within (cycle, processor) there is at most one record anyway.
    out.sort_by_key(|&(c, p, _)| (c, p));
    out
}

/// Full two-level simulation of one hierarchy.
///
/// Each cycle's accesses go through the private caches in trace order; the
/// resulting misses are then sent to the shared cache ordered by processor
/// id.
pub fn simulate_hierarchy(trace: &Trace, h: &HierarchyConfig, options: OracleOptions) -> AccessCounts {
    let mut private = PrivateLevel::new(&h.private(), h.processor_count());
    let mut shared = FifoCache::new(&h.shared());
    let mut tas = 0u64;
    let mut tam = 0u64;
    let records = trace.records();
    let mut start = 0;
    let mut pending: Vec<(u32, u64)> = Vec::new();
    while start < records.len() {
        let cycle = records[start].cycle;
        let end = start + records[start..].iter().take_while(|r| r.cycle == cycle).count();
        pending.clear();
        for rec in &records[start..end] {
            if let Some(block) = private.access(rec) {
                pending.push((rec.processor, block));
            }
        }
        pending.sort_by_key(|&(p, _)| p);
        for &(_, block) in &pending {
            tas += 1;
            if let Lookup::Miss { evicted } = shared.access(block) {
                tam += 1;
                if let (Some(victim), true) = (evicted, options.back_invalidate) {
                    for cache in &mut private.caches {
                        cache.remove(victim);
                    }
                }
            }
        }
        start = end;
    }
    AccessCounts::new(count_tap(trace), tas, tam)
}

/// One (private, shared) pair of the feasibility matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatrixRow {
    pub private: CacheConfig,
    pub shared: CacheConfig,
    pub counts: AccessCounts,
    pub amt_ns: u64,
    pub feasible: bool,
}

/// Counts for every (private, shared) pair, ordered by private then shared
/// configuration.
///
/// Without back-invalidation the shared cache never influences the private
/// level, so each private configuration is simulated once and its miss
/// stream replayed into every shared configuration. With back-invalidation
/// every pair is simulated in full.
pub fn feasibility_matrix(
    trace: &Trace,
    private_space: &DesignSpace,
    shared_space: &DesignSpace,
    params: TimingParams,
    deadline: Deadline,
    options: OracleOptions,
) -> Vec<MatrixRow> {
    let tap = count_tap(trace);
    let p = trace.processor_count();
    let shared_configs = shared_space.enumerate();
    let row = |private: CacheConfig, shared: CacheConfig, counts: AccessCounts| {
        let amt_ns = amt(counts, params);
        MatrixRow {
            private,
            shared,
            counts,
            amt_ns,
            feasible: amt_ns <= deadline.ns(),
        }
    };
    private_space
        .enumerate()
        .into_par_iter()
        .flat_map_iter(|pc| {
            let rows: Vec<MatrixRow> = if options.back_invalidate {
                shared_configs
                    .iter()
                    .map(|&sc| {
                        let h = HierarchyConfig::new(pc, sc, p).expect("spaces share block size");
                        row(pc, sc, simulate_hierarchy(trace, &h, options))
                    })
                    .collect()
            } else {
                let stream = private_miss_stream(trace, &pc);
                let tas = stream.len() as u64;
                shared_configs
                    .iter()
                    .map(|&sc| {
                        let tam = simulate_cache(stream.iter().map(|e| e.2), &sc);
                        row(pc, sc, AccessCounts::new(tap, tas, tam))
                    })
                    .collect()
            };
            rows
        })
        .collect()
}

/// Minimum-capacity feasible hierarchy among `rows`, using
/// [`HierarchyConfig::selection_key`] to break ties.
pub fn select_from_matrix(rows: &[MatrixRow], processors: u32) -> Option<(HierarchyConfig, AccessCounts)> {
    rows.iter()
        .filter(|r| r.feasible)
        .map(|r| {
            let h = HierarchyConfig::new(r.private, r.shared, processors).expect("same block size");
            (h, r.counts)
        })
        .min_by_key(|(h, _)| h.selection_key())
}

/// Exhaustive search over both spaces (no back-invalidation).
pub fn exhaustive_select(
    trace: &Trace,
    private_space: &DesignSpace,
    shared_space: &DesignSpace,
    processors: u32,
    params: TimingParams,
    deadline: Deadline,
) -> Option<HierarchyConfig> {
    debug_assert_eq!(processors, trace.processor_count());
    let rows = feasibility_matrix(
        trace,
        private_space,
        shared_space,
        params,
        deadline,
        OracleOptions::default(),
    );
    select_from_matrix(&rows, processors).map(|(h, _)| h)
}
