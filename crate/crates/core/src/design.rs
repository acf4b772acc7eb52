//! Cache configurations and the design space searched at each level.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpaceError {
    #[error("set count {0} is not a power of two")]
    SetsNotPowerOfTwo(u32),
    #[error("block size {0} is not a power of two")]
    BlockNotPowerOfTwo(u32),
    #[error("associativity must be at least 1")]
    ZeroAssoc,
    #[error("{0} list is empty")]
    Empty(&'static str),
    #[error("{0} list is not strictly increasing")]
    NotIncreasing(&'static str),
    #[error("private block size {private} differs from shared block size {shared}")]
    BlockMismatch { private: u32, shared: u32 },
    #[error("processor count must be at least 1")]
    NoProcessors,
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
}

/// Only FIFO is modeled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Replacement {
    #[default]
    Fifo,
}

/// One cache: `sets` x `assoc` lines of `block_bytes` each.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CacheConfig {
    sets: u32,
    assoc: u32,
    block_bytes: u32,
    #[serde(default)]
    replacement: Replacement,
}

impl CacheConfig {
    pub fn new(sets: u32, assoc: u32, block_bytes: u32) -> Result<Self, SpaceError> {
        if !sets.is_power_of_two() {
            return Err(SpaceError::SetsNotPowerOfTwo(sets));
        }
        if assoc == 0 {
            return Err(SpaceError::ZeroAssoc);
        }
        if !block_bytes.is_power_of_two() {
            return Err(SpaceError::BlockNotPowerOfTwo(block_bytes));
        }
        Ok(Self {
            sets,
            assoc,
            block_bytes,
            replacement: Replacement::Fifo,
        })
    }

    pub fn sets(&self) -> u32 {
        self.sets
    }

    pub fn assoc(&self) -> u32 {
        self.assoc
    }

    pub fn block_bytes(&self) -> u32 {
        self.block_bytes
    }

    pub fn replacement(&self) -> Replacement {
        self.replacement
    }

    /// Capacity in bytes.
    pub fn capacity(&self) -> u64 {
        u64::from(self.sets) * u64::from(self.assoc) * u64::from(self.block_bytes)
    }

    /// Total order used for tie-breaking: capacity, then associativity.
    pub fn size_key(&self) -> (u64, u32) {
        (self.capacity(), self.assoc)
    }
}

impl fmt::Display for CacheConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}X{})", self.sets, self.assoc)
    }
}

/// The grid of configurations considered for one cache level.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesignSpace {
    set_sizes: Vec<u32>,
    assocs: Vec<u32>,
    block_bytes: u32,
}

impl DesignSpace {
    pub fn new(set_sizes: Vec<u32>, assocs: Vec<u32>, block_bytes: u32) -> Result<Self, SpaceError> {
        if set_sizes.is_empty() {
            return Err(SpaceError::Empty("set size"));
        }
        if assocs.is_empty() {
            return Err(SpaceError::Empty("associativity"));
        }
        if let Some(&s) = set_sizes.iter().find(|s| !s.is_power_of_two()) {
            return Err(SpaceError::SetsNotPowerOfTwo(s));
        }
        if assocs.contains(&0) {
            return Err(SpaceError::ZeroAssoc);
        }
        if !block_bytes.is_power_of_two() {
            return Err(SpaceError::BlockNotPowerOfTwo(block_bytes));
        }
        if set_sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpaceError::NotIncreasing("set size"));
        }
        if assocs.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SpaceError::NotIncreasing("associativity"));
        }
        Ok(Self {
            set_sizes,
            assocs,
            block_bytes,
        })
    }

    /// `S = 1..16384`, `A = 1,2,4,8,16`, `B = 4`: 75 configurations.
    pub fn full() -> Self {
        Self::powers_of_two(16384, &[1, 2, 4, 8, 16], 4)
    }

    /// `S = 1..256`, `A = 1,2,4,8,16`, `B = 4`: 45 configurations.
    pub fn small() -> Self {
        Self::powers_of_two(256, &[1, 2, 4, 8, 16], 4)
    }

    fn powers_of_two(max_sets: u32, assocs: &[u32], block: u32) -> Self {
        let sets = std::iter::successors(Some(1u32), |s| Some(s * 2))
            .take_while(|&s| s <= max_sets)
            .collect();
        Self::new(sets, assocs.to_vec(), block).expect("static space is valid")
    }

    pub fn set_sizes(&self) -> &[u32] {
        &self.set_sizes
    }

    pub fn assocs(&self) -> &[u32] {
        &self.assocs
    }

    pub fn block_bytes(&self) -> u32 {
        self.block_bytes
    }

    pub fn len(&self) -> usize {
        self.set_sizes.len() * self.assocs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All configurations ordered by sets, then associativity.
    pub fn enumerate(&self) -> Vec<CacheConfig> {
        self.set_sizes
            .iter()
            .flat_map(|&s| {
                self.assocs
                    .iter()
                    .map(move |&a| CacheConfig::new(s, a, self.block_bytes).unwrap())
            })
            .collect()
    }

    pub fn contains(&self, config: &CacheConfig) -> bool {
        config.block_bytes == self.block_bytes
            && self.set_sizes.contains(&config.sets)
            && self.assocs.contains(&config.assoc)
    }

    /// Smallest capacity of any configuration in the space.
    pub fn min_capacity(&self) -> u64 {
        u64::from(self.set_sizes[0]) * u64::from(self.assocs[0]) * u64::from(self.block_bytes)
    }
}

/// Parses a set-size list: either `lo..hi` (every power of two in between,
/// inclusive) or a comma separated list.
pub fn parse_set_sizes(input: &str) -> Result<Vec<u32>, SpaceError> {
    let err = |reason: &str| SpaceError::Parse {
        input: input.to_string(),
        reason: reason.to_string(),
    };
    let input_t = input.trim();
    if let Some((lo, hi)) = input_t.split_once("..") {
        let lo: u32 = lo.trim().parse().map_err(|_| err("bad range start"))?;
        let hi: u32 = hi.trim().parse().map_err(|_| err("bad range end"))?;
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            return Err(err("range bounds must be powers of two with lo <= hi"));
        }
        let mut out = Vec::new();
        let mut s = lo;
        loop {
            out.push(s);
            if s == hi {
                break;
            }
            s *= 2;
        }
        Ok(out)
    } else {
        parse_list(input)
    }
}

/// Parses a comma separated list of positive integers.
pub fn parse_list(input: &str) -> Result<Vec<u32>, SpaceError> {
    input
        .split(',')
        .map(|v| {
            v.trim().parse::<u32>().map_err(|_| SpaceError::Parse {
                input: input.to_string(),
                reason: format!("`{}` is not a positive integer", v.trim()),
            })
        })
        .collect()
}

impl FromStr for CacheConfig {
    type Err = SpaceError;

    /// `SxA` or `SxAxB` (`x` or `X`); B defaults to 4.
    fn from_str(s: &str) -> Result<Self, SpaceError> {
        let parts: Vec<&str> = s
            .trim()
            .trim_start_matches('(')
            .trim_end_matches(')')
            .split(['x', 'X'])
            .collect();
        let nums: Result<Vec<u32>, _> = parts.iter().map(|p| p.trim().parse::<u32>()).collect();
        let err = || SpaceError::Parse {
            input: s.to_string(),
            reason: "expected SxA or SxAxB".to_string(),
        };
        match nums.map_err(|_| err())?.as_slice() {
            [sets, assoc] => CacheConfig::new(*sets, *assoc, 4),
            [sets, assoc, block] => CacheConfig::new(*sets, *assoc, *block),
            _ => Err(err()),
        }
    }
}

/// `processor_count` identical private caches backed by one shared cache.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HierarchyConfig {
    private: CacheConfig,
    shared: CacheConfig,
    processor_count: u32,
}

impl HierarchyConfig {
    pub fn new(
        private: CacheConfig,
        shared: CacheConfig,
        processor_count: u32,
    ) -> Result<Self, SpaceError> {
        if private.block_bytes != shared.block_bytes {
            return Err(SpaceError::BlockMismatch {
                private: private.block_bytes,
                shared: shared.block_bytes,
            });
        }
        if processor_count == 0 {
            return Err(SpaceError::NoProcessors);
        }
        Ok(Self {
            private,
            shared,
            processor_count,
        })
    }

    pub fn private(&self) -> CacheConfig {
        self.private
    }

    pub fn shared(&self) -> CacheConfig {
        self.shared
    }

    pub fn processor_count(&self) -> u32 {
        self.processor_count
    }

    /// Bytes over all private caches plus the shared cache.
    pub fn capacity(&self) -> u64 {
        u64::from(self.processor_count) * self.private.capacity() + self.shared.capacity()
    }

    /// Ordering used to pick among equally sized hierarchies: total
    /// capacity, shared capacity, private capacity, private associativity,
    /// shared associativity.
    pub fn selection_key(&self) -> (u64, u64, u64, u32, u32) {
        (
            self.capacity(),
            self.shared.capacity(),
            self.private.capacity(),
            self.private.assoc,
            self.shared.assoc,
        )
    }
}

impl fmt::Display for HierarchyConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}x private {} + shared {}",
            self.processor_count, self.private, self.shared
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: u32, a: u32) -> CacheConfig {
        CacheConfig::new(s, a, 4).unwrap()
    }

    #[test]
    fn full_space_has_75_configs() {
        let space = DesignSpace::full();
        assert_eq!(space.set_sizes().len(), 15);
        assert_eq!(space.enumerate().len(), 75);
    }

    #[test]
    fn small_space_has_45_configs() {
        assert_eq!(DesignSpace::small().enumerate().len(), 45);
    }

    #[test]
    fn singleton_space() {
        let space = DesignSpace::new(vec![8], vec![2], 4).unwrap();
        assert_eq!(space.enumerate(), vec![cfg(8, 2)]);
    }

    #[test]
    fn enumerate_order_is_sets_then_assoc() {
        let space = DesignSpace::new(vec![1, 4], vec![1, 3], 4).unwrap();
        let got: Vec<_> = space.enumerate().iter().map(|c| (c.sets(), c.assoc())).collect();
        assert_eq!(got, vec![(1, 1), (1, 3), (4, 1), (4, 3)]);
    }

    #[test]
    fn capacities() {
        assert_eq!(cfg(8, 16).capacity(), 512);
        assert_eq!(cfg(1, 1).capacity(), 4);
        assert_eq!(cfg(8, 2).capacity(), 64);
    }

    #[test]
    fn hierarchy_capacity() {
        let h = HierarchyConfig::new(cfg(8, 2), cfg(1, 2), 6).unwrap();
        assert_eq!(h.capacity(), 392);
        let h = HierarchyConfig::new(cfg(1, 1), cfg(1, 1), 1).unwrap();
        assert_eq!(h.capacity(), 8);
        let h = HierarchyConfig::new(cfg(1, 1), cfg(1, 1), 2).unwrap();
        assert_eq!(h.capacity(), 2 * 4 + 4);
    }

    #[test]
    fn hierarchy_rejects_mixed_block_sizes() {
        let wide = CacheConfig::new(1, 1, 8).unwrap();
        assert!(matches!(
            HierarchyConfig::new(cfg(1, 1), wide, 2),
            Err(SpaceError::BlockMismatch { .. })
        ));
    }

    #[test]
    fn invalid_configs() {
        assert_eq!(CacheConfig::new(3, 1, 4), Err(SpaceError::SetsNotPowerOfTwo(3)));
        assert_eq!(CacheConfig::new(1, 0, 4), Err(SpaceError::ZeroAssoc));
        assert_eq!(CacheConfig::new(1, 1, 6), Err(SpaceError::BlockNotPowerOfTwo(6)));
        assert!(CacheConfig::new(1, 3, 4).is_ok());
        assert!(DesignSpace::new(vec![], vec![1], 4).is_err());
        assert!(DesignSpace::new(vec![2, 1], vec![1], 4).is_err());
        assert!(DesignSpace::new(vec![1], vec![2, 2], 4).is_err());
        assert!(DesignSpace::new(vec![1, 6], vec![1], 4).is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_set_sizes("1..16").unwrap(), vec![1, 2, 4, 8, 16]);
        assert_eq!(parse_set_sizes("4..4").unwrap(), vec![4]);
        assert_eq!(parse_set_sizes("2, 8").unwrap(), vec![2, 8]);
        assert!(parse_set_sizes("3..16").is_err());
        assert_eq!(parse_list("1,2,4,8,16").unwrap(), vec![1, 2, 4, 8, 16]);
        assert!(parse_list("1,x").is_err());
        assert_eq!("8x2".parse::<CacheConfig>().unwrap(), cfg(8, 2));
        assert_eq!("(16X16)".parse::<CacheConfig>().unwrap(), cfg(16, 16));
        assert_eq!(
            "4x2x8".parse::<CacheConfig>().unwrap(),
            CacheConfig::new(4, 2, 8).unwrap()
        );
        assert!("4".parse::<CacheConfig>().is_err());
    }

    #[test]
    fn capacity_strictly_monotone_in_each_parameter() {
        for s in [1u32, 2, 4, 8] {
            for a in 1u32..5 {
                for b in [1u32, 2, 4] {
                    let base = CacheConfig::new(s, a, b).unwrap().capacity();
                    assert!(CacheConfig::new(s * 2, a, b).unwrap().capacity() > base);
                    assert!(CacheConfig::new(s, a + 1, b).unwrap().capacity() > base);
                    assert!(CacheConfig::new(s, a, b * 2).unwrap().capacity() > base);
                }
            }
        }
    }
}
