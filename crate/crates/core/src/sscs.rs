//! Shared level: every shared cache configuration over one pass of the
//! secondary trace.
//!
//! This is the private-level engine with a single cache and no coherence.

use serde::{Deserialize, Serialize};

use crate::design::{CacheConfig, DesignSpace};
use crate::engine::SinglePassSim;
use crate::spcs::SecondaryTrace;
use crate::{SelectError, SimError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedConfigResult {
    pub config: CacheConfig,
    /// Memory accesses (TAM'').
    pub misses: u64,
    pub excluded: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SharedSimResult {
    pub space: DesignSpace,
    pub configs: Vec<SharedConfigResult>,
    pub miss_limit: Option<u64>,
    /// Configurations above this many bytes were not simulated.
    pub capacity_limit: Option<u64>,
    pub records_read: u64,
    /// Private configuration whose misses formed the input.
    pub private: CacheConfig,
    /// [`SecondaryTrace::source_id`] of the input.
    pub secondary_hash: String,
    pub trace_hash: String,
}

impl SharedSimResult {
    pub fn get(&self, config: &CacheConfig) -> Option<&SharedConfigResult> {
        self.configs.iter().find(|c| c.config == *config)
    }

    pub fn excluded_count(&self) -> usize {
        self.configs.iter().filter(|c| c.excluded).count()
    }
}

pub fn simulate_shared(
    secondary: &SecondaryTrace,
    space: &DesignSpace,
    miss_limit: Option<u64>,
) -> Result<SharedSimResult, SimError> {
    simulate_shared_bounded(secondary, space, miss_limit, None)
}

/// [`simulate_shared`] restricted to configurations of at most
/// `capacity_limit` bytes.
pub fn simulate_shared_bounded(
    secondary: &SecondaryTrace,
    space: &DesignSpace,
    miss_limit: Option<u64>,
    capacity_limit: Option<u64>,
) -> Result<SharedSimResult, SimError> {
    if space.block_bytes() != secondary.private.block_bytes() {
        return Err(SimError::BlockSizeMismatch {
            private: secondary.private.block_bytes(),
            shared: space.block_bytes(),
        });
    }
    let mut sim = SinglePassSim::new(space, 1, false, miss_limit);
    if let Some(bytes) = capacity_limit {
        sim = sim.with_capacity_limit(bytes);
    }
    let (configs, records_read) = run_shared(sim, secondary.blocks(), space);
    Ok(SharedSimResult {
        space: space.clone(),
        configs,
        miss_limit,
        capacity_limit,
        records_read,
        private: secondary.private,
        secondary_hash: secondary.source_id(),
        trace_hash: secondary.trace_hash.clone(),
    })
}

/// Runs the shared engine over a raw block stream, consuming it once.
/// Returns per-configuration results and the number of blocks read.
pub fn simulate_shared_blocks<I>(
    blocks: I,
    space: &DesignSpace,
    miss_limit: Option<u64>,
) -> (Vec<SharedConfigResult>, u64)
where
    I: IntoIterator<Item = u64>,
{
    run_shared(SinglePassSim::new(space, 1, false, miss_limit), blocks, space)
}

fn run_shared<I>(mut sim: SinglePassSim, blocks: I, space: &DesignSpace) -> (Vec<SharedConfigResult>, u64)
where
    I: IntoIterator<Item = u64>,
{
    for block in blocks {
        sim.access(0, block, false);
    }
    let configs = sim
        .results()
        .into_iter()
        .map(|c| SharedConfigResult {
            config: CacheConfig::new(c.sets, c.assoc, space.block_bytes()).unwrap(),
            misses: c.total(),
            excluded: c.excluded,
        })
        .collect();
    (configs, sim.accesses())
}

/// Picks the configuration with the most memory accesses that still fits
/// `miss_limit`; ties go to the smaller capacity, then smaller associativity.
pub fn select_shared(result: &SharedSimResult, miss_limit: u64) -> Result<CacheConfig, SelectError> {
    select_shared_from(&result.configs, miss_limit).ok_or(SelectError::NoFeasibleShared {
        private: Some(result.private),
    })
}

pub(crate) fn select_shared_from(configs: &[SharedConfigResult], miss_limit: u64) -> Option<CacheConfig> {
    configs
        .iter()
        .filter(|c| !c.excluded && c.misses <= miss_limit)
        .min_by_key(|c| (std::cmp::Reverse(c.misses), c.config.size_key()))
        .map(|c| c.config)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: u32, a: u32) -> CacheConfig {
        CacheConfig::new(s, a, 4).unwrap()
    }

    fn misses(blocks: &[u64], sets: u32, assoc: u32) -> u64 {
        let space = DesignSpace::new(vec![sets], vec![assoc], 4).unwrap();
        simulate_shared_blocks(blocks.iter().copied(), &space, None).0[0].misses
    }

    #[test]
    fn empty_stream() {
        let (r, n) = simulate_shared_blocks(std::iter::empty(), &DesignSpace::small(), Some(0));
        assert_eq!(n, 0);
        assert!(r.iter().all(|c| c.misses == 0 && !c.excluded));
    }

    #[test]
    fn small_hand_examples() {
        assert_eq!(misses(&[0, 1, 0], 1, 1), 3);
        assert_eq!(misses(&[0, 1, 0], 1, 2), 2);
        // 0 and 2 both map to set 0 of a 2-set cache and thrash a 1-way set.
        assert_eq!(misses(&[0, 2, 0, 2], 2, 1), 4);
        // 0 and 1 map to different sets.
        assert_eq!(misses(&[0, 1, 0, 1], 2, 1), 2);
    }

    fn result(counts: &[(CacheConfig, u64)]) -> SharedSimResult {
        SharedSimResult {
            space: DesignSpace::small(),
            configs: counts
                .iter()
                .map(|&(config, misses)| SharedConfigResult {
                    config,
                    misses,
                    excluded: false,
                })
                .collect(),
            miss_limit: None,
            capacity_limit: None,
            records_read: 0,
            private: cfg(1, 1),
            secondary_hash: String::new(),
            trace_hash: String::new(),
        }
    }

    #[test]
    fn select_largest_fitting() {
        let r = result(&[(cfg(1, 1), 500), (cfg(2, 1), 420), (cfg(4, 1), 300)]);
        assert_eq!(select_shared(&r, 450).unwrap(), cfg(2, 1));
        let r = result(&[(cfg(4, 4), 10)]);
        assert_eq!(select_shared(&r, 10).unwrap(), cfg(4, 4));
        let r = result(&[(cfg(1, 1), 500), (cfg(2, 1), 420)]);
        assert!(matches!(select_shared(&r, 100), Err(SelectError::NoFeasibleShared { .. })));
    }

    #[test]
    fn select_ties_prefer_smaller() {
        let r = result(&[(cfg(2, 2), 7), (cfg(1, 2), 7), (cfg(2, 1), 7)]);
        assert_eq!(select_shared(&r, 7).unwrap(), cfg(2, 1));
    }
}
