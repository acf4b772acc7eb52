//! Single-pass multi-configuration FIFO simulation.
//!
//! One [`SinglePassSim`] evaluates every (sets, associativity) pair of a
//! [`DesignSpace`] for `P` caches at once while the access stream is read a
//! single time. Two structures hold the state:
//!
//! * the simulation tree: one level per set count, each level holding one
//!   node per set, each node holding one FIFO queue per processor per
//!   associativity option;
//! * the lookup table: one entry per block ever seen, with a presence bit per
//!   (level, processor, associativity). Entries are grouped into buckets by
//!   `block mod max_sets` and kept sorted inside a bucket, so a lookup is a
//!   binary search.
//!
//! A presence bit is set exactly when the block sits in the corresponding
//! queue. Hits are decided from the bits alone; the queues only supply FIFO
//! order for eviction and invalidation.
//!
//! With coherence on, a write by one processor removes the block from every
//! other processor's queue of the same configuration (write-invalidate). The
//! writer's own copy stays valid. Removal compacts the queue; the remaining
//! blocks keep their relative order.
//!
//! A level is excluded once the smallest total miss count over its
//! associativity options exceeds the miss limit. FIFO is not a stack
//! algorithm, so misses are not monotone in associativity and only the
//! minimum is a safe trigger. Excluded levels are frozen: their counts are
//! lower bounds from then on.

use crate::design::DesignSpace;

/// Block presence index.
#[derive(Clone, Debug)]
pub struct LookupTable {
    bucket_mask: u64,
    /// (block, entry slot), sorted by block.
    buckets: Vec<Vec<(u64, u32)>>,
    /// Block id of each entry slot.
    blocks: Vec<u64>,
    bits: Vec<u64>,
    words_per_entry: usize,
    bits_per_entry: usize,
    entries: usize,
}

const MIN_BUCKETS: usize = 1 << 14;

/// Storage index of the `i`-th oldest element of a ring of `assoc` starting
/// at `head`.
#[inline]
fn ring_index(head: u32, i: u32, assoc: usize) -> usize {
    let j = head as usize + i as usize;
    if j >= assoc {
        j - assoc
    } else {
        j
    }
}

impl LookupTable {
    pub fn new(bucket_count: usize, bits_per_entry: usize) -> Self {
        debug_assert!(bucket_count.is_power_of_two());
        Self {
            bucket_mask: bucket_count as u64 - 1,
            buckets: vec![Vec::new(); bucket_count],
            blocks: Vec::new(),
            bits: Vec::new(),
            words_per_entry: bits_per_entry.div_ceil(64).max(1),
            bits_per_entry,
            entries: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries == 0
    }

    /// Presence bits per entry: levels x processors x associativity options.
    pub fn bits_per_entry(&self) -> usize {
        self.bits_per_entry
    }

    pub fn bucket_count(&self) -> usize {
        self.buckets.len()
    }

    fn bucket(&self, block: u64) -> &Vec<(u64, u32)> {
        &self.buckets[(block & self.bucket_mask) as usize]
    }

    pub fn find(&self, block: u64) -> Option<u32> {
        let bucket = self.bucket(block);
        bucket
            .binary_search_by_key(&block, |e| e.0)
            .ok()
            .map(|i| bucket[i].1)
    }

    pub fn find_or_insert(&mut self, block: u64) -> u32 {
        let slot = self.entries as u32;
        let bucket = &mut self.buckets[(block & self.bucket_mask) as usize];
        match bucket.binary_search_by_key(&block, |e| e.0) {
            Ok(i) => bucket[i].1,
            Err(i) => {
                bucket.insert(i, (block, slot));
                self.blocks.push(block);
                self.bits.resize(self.bits.len() + self.words_per_entry, 0);
                self.entries += 1;
                slot
            }
        }
    }

    pub fn block(&self, slot: u32) -> u64 {
        self.blocks[slot as usize]
    }

    #[inline]
    pub fn get(&self, slot: u32, bit: usize) -> bool {
        let w = slot as usize * self.words_per_entry + bit / 64;
        self.bits[w] >> (bit % 64) & 1 == 1
    }

    #[inline]
    fn set(&mut self, slot: u32, bit: usize) {
        let w = slot as usize * self.words_per_entry + bit / 64;
        self.bits[w] |= 1 << (bit % 64);
    }

    #[inline]
    fn clear(&mut self, slot: u32, bit: usize) {
        let w = slot as usize * self.words_per_entry + bit / 64;
        self.bits[w] &= !(1 << (bit % 64));
    }

    fn count_set_bits(&self) -> u64 {
        self.bits.iter().map(|w| u64::from(w.count_ones())).sum()
    }
}

/// All queues for one set count.
#[derive(Clone, Debug)]
struct Level {
    sets: u32,
    excluded: bool,
    /// Associativity options simulated, a prefix of the ascending list.
    live_assocs: usize,
    /// Queue storage: for each (set, processor), the queues of every
    /// associativity option laid out back to back, holding lookup entry
    /// slots. Each queue is a ring starting at its head.
    slots: Vec<u32>,
    /// (occupancy, head) of each (set, processor, assoc) queue.
    rings: Vec<[u32; 2]>,
    /// Misses indexed by (processor, assoc).
    misses: Vec<u64>,
    /// Misses summed over processors, per assoc.
    totals: Vec<u64>,
}

/// Per-configuration outcome of a run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigCounts {
    pub sets: u32,
    pub assoc: u32,
    pub misses_per_processor: Vec<u64>,
    pub excluded: bool,
}

impl ConfigCounts {
    pub fn total(&self) -> u64 {
        self.misses_per_processor.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct SinglePassSim {
    processors: usize,
    coherent: bool,
    assocs: Vec<u32>,
    offsets: Vec<usize>,
    ways_per_node: usize,
    levels: Vec<Level>,
    table: LookupTable,
    block_bytes: u64,
    miss_limit: Option<u64>,
    live_levels: usize,
    accesses: u64,
}

impl SinglePassSim {
    /// `coherent` enables write-invalidate between the `processors` caches.
    /// `miss_limit` enables level exclusion.
    pub fn new(
        space: &DesignSpace,
        processors: u32,
        coherent: bool,
        miss_limit: Option<u64>,
    ) -> Self {
        let processors = processors as usize;
        let assocs = space.assocs().to_vec();
        let mut offsets = Vec::with_capacity(assocs.len());
        let mut ways_per_node = 0usize;
        for &a in &assocs {
            offsets.push(ways_per_node);
            ways_per_node += a as usize;
        }
        let na = assocs.len();
        let levels = space
            .set_sizes()
            .iter()
            .map(|&sets| Level {
                sets,
                excluded: false,
                live_assocs: na,
                slots: vec![0; sets as usize * processors * ways_per_node],
                rings: vec![[0, 0]; sets as usize * processors * na],
                misses: vec![0; processors * na],
                totals: vec![0; na],
            })
            .collect::<Vec<_>>();
        // Buckets are keyed by the low block bits shared with every level's
        // set index; small spaces still get enough buckets to stay short.
        let max_sets = *space.set_sizes().last().unwrap() as usize;
        let table = LookupTable::new(max_sets.max(MIN_BUCKETS), levels.len() * processors * na);
        let live_levels = levels.len();
        Self {
            processors,
            coherent,
            assocs,
            offsets,
            ways_per_node,
            levels,
            table,
            block_bytes: u64::from(space.block_bytes()),
            miss_limit,
            live_levels,
            accesses: 0,
        }
    }

    /// Stops simulating configurations larger than `bytes`. They are reported
    /// as excluded, and a level whose remaining options all exceed the miss
    /// limit is excluded as usual.
    pub fn with_capacity_limit(mut self, bytes: u64) -> Self {
        assert_eq!(self.accesses, 0, "capacity limit must be set before simulating");
        for level in &mut self.levels {
            let fits = self
                .assocs
                .iter()
                .take_while(|&&a| u64::from(level.sets) * u64::from(a) * self.block_bytes <= bytes)
                .count();
            level.live_assocs = fits;
            if fits == 0 && !level.excluded {
                level.excluded = true;
                self.live_levels -= 1;
            }
        }
        self
    }

    pub fn accesses(&self) -> u64 {
        self.accesses
    }

    pub fn lookup_table(&self) -> &LookupTable {
        &self.table
    }

    /// Feeds one access; returns how many misses it caused across all live
    /// configurations of the requesting processor.
    pub fn access(&mut self, processor: u32, block: u64, write: bool) -> u32 {
        let proc = processor as usize;
        debug_assert!(proc < self.processors);
        self.accesses += 1;
        if self.live_levels == 0 {
            return 0;
        }
        let p = self.processors;
        let na = self.assocs.len();
        let slot = self.table.find_or_insert(block);
        let table = &mut self.table;
        let mut new_misses = 0;

        for (li, level) in self.levels.iter_mut().enumerate() {
            if level.excluded {
                continue;
            }
            let set = (block & (u64::from(level.sets) - 1)) as usize;
            for (a, &assoc) in self.assocs[..level.live_assocs].iter().enumerate() {
                let assoc = assoc as usize;
                let bit = (li * p + proc) * na + a;
                if !table.get(slot, bit) {
                    new_misses += 1;
                    level.misses[proc * na + a] += 1;
                    level.totals[a] += 1;
                    let q = (set * p + proc) * na + a;
                    let base = (set * p + proc) * self.ways_per_node + self.offsets[a];
                    let [len, head] = level.rings[q];
                    let queue = &mut level.slots[base..base + assoc];
                    if len as usize == assoc {
                        let h = head as usize;
                        table.clear(queue[h], bit);
                        queue[h] = slot;
                        level.rings[q][1] = if h + 1 == assoc { 0 } else { head + 1 };
                    } else {
                        queue[ring_index(head, len, assoc)] = slot;
                        level.rings[q][0] += 1;
                    }
                    table.set(slot, bit);
                }
                if write && self.coherent {
                    for other in (0..p).filter(|&o| o != proc) {
                        let obit = (li * p + other) * na + a;
                        if !table.get(slot, obit) {
                            continue;
                        }
                        let q = (set * p + other) * na + a;
                        let base = (set * p + other) * self.ways_per_node + self.offsets[a];
                        let [len, head] = level.rings[q];
                        let queue = &mut level.slots[base..base + assoc];
                        let pos = (0..len)
                            .position(|i| queue[ring_index(head, i, assoc)] == slot)
                            .expect("presence bit implies queue membership")
                            as u32;
                        // Close the gap, keeping the survivors in order.
                        for i in pos..len - 1 {
                            queue[ring_index(head, i, assoc)] = queue[ring_index(head, i + 1, assoc)];
                        }
                        level.rings[q][0] -= 1;
                        table.clear(slot, obit);
                    }
                }
            }
            if let Some(limit) = self.miss_limit {
                if level.totals[..level.live_assocs].iter().copied().min().unwrap_or(0) > limit {
                    level.excluded = true;
                    self.live_levels -= 1;
                }
            }
        }
        new_misses
    }

    /// Checks that presence bits and queue contents agree, that every queued
    /// block sits in its own set, and that lookup buckets are sorted.
    pub fn audit(&self) -> Result<(), String> {
        let p = self.processors;
        let na = self.assocs.len();
        for (bi, bucket) in self.table.buckets.iter().enumerate() {
            if bucket.windows(2).any(|w| w[0].0 >= w[1].0) {
                return Err(format!("lookup bucket {bi} is not strictly sorted"));
            }
            if let Some(e) = bucket.iter().find(|e| (e.0 & self.table.bucket_mask) as usize != bi) {
                return Err(format!("block {:#x} filed under bucket {bi}", e.0));
            }
        }
        let mut queued = 0u64;
        for (li, level) in self.levels.iter().enumerate() {
            for set in 0..level.sets as usize {
                for proc in 0..p {
                    for (a, &assoc) in self.assocs.iter().enumerate() {
                        let q = (set * p + proc) * na + a;
                        let [len, head] = level.rings[q];
                        if len > assoc || head >= assoc {
                            return Err(format!("queue over capacity at level {li}"));
                        }
                        let base = (set * p + proc) * self.ways_per_node + self.offsets[a];
                        let queue: Vec<u32> = (0..len)
                            .map(|i| level.slots[base + ring_index(head, i, assoc as usize)])
                            .collect();
                        for (i, &s) in queue.iter().enumerate() {
                            if s as usize >= self.table.len() {
                                return Err(format!("queue holds unknown entry slot {s}"));
                            }
                            let b = self.table.block(s);
                            if queue[..i].contains(&s) {
                                return Err(format!("block {b:#x} queued twice"));
                            }
                            if (b & (u64::from(level.sets) - 1)) as usize != set {
                                return Err(format!("block {b:#x} in wrong set {set}"));
                            }
                            if self.table.find(b) != Some(s) {
                                return Err(format!("entry slot {s} does not map back to block {b:#x}"));
                            }
                            if !self.table.get(s, (li * p + proc) * na + a) {
                                return Err(format!(
                                    "block {b:#x} queued at level {li} proc {proc} assoc {assoc} without presence bit"
                                ));
                            }
                        }
                        queued += len as u64;
                    }
                }
            }
        }
        // Every queued block accounts for one bit, so equal totals mean no
        // stray bits.
        let bits = self.table.count_set_bits();
        if bits != queued {
            return Err(format!("{bits} presence bits but {queued} queued blocks"));
        }
        Ok(())
    }

    /// Counts in (sets, assoc) order.
    pub fn results(&self) -> Vec<ConfigCounts> {
        let na = self.assocs.len();
        self.levels
            .iter()
            .flat_map(|level| {
                self.assocs.iter().enumerate().map(move |(a, &assoc)| ConfigCounts {
                    sets: level.sets,
                    assoc,
                    misses_per_processor: (0..self.processors)
                        .map(|proc| level.misses[proc * na + a])
                        .collect(),
                    excluded: level.excluded || a >= level.live_assocs,
                })
            })
            .collect()
    }

    pub fn level_excluded(&self, sets: u32) -> Option<bool> {
        self.levels.iter().find(|l| l.sets == sets).map(|l| l.excluded)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(sets: &[u32], assocs: &[u32]) -> DesignSpace {
        DesignSpace::new(sets.to_vec(), assocs.to_vec(), 4).unwrap()
    }

    #[test]
    fn lookup_table_sorted_insert() {
        let mut t = LookupTable::new(4, 3);
        for b in [9, 1, 5, 13, 2] {
            t.find_or_insert(b);
        }
        assert_eq!(t.len(), 5);
        assert_eq!(t.find_or_insert(5), 2);
        assert_eq!(t.find(4), None);
        let keys: Vec<u64> = t.buckets[1].iter().map(|e| e.0).collect();
        assert_eq!(keys, vec![1, 5, 9, 13]);
    }

    #[test]
    fn fifo_does_not_reorder_on_hit() {
        // A=2: 0,1 fill; hit 0; 2 evicts 0 (oldest), so 0 misses again.
        let mut sim = SinglePassSim::new(&space(&[1], &[2]), 1, false, None);
        let misses: Vec<u32> = [0, 1, 0, 2, 0].iter().map(|&b| sim.access(0, b, false)).collect();
        assert_eq!(misses, vec![1, 1, 0, 1, 1]);
        sim.audit().unwrap();
    }

    #[test]
    fn sequence_0120_on_two_way() {
        let mut sim = SinglePassSim::new(&space(&[1], &[2]), 1, false, None);
        for b in [0, 1, 2, 0] {
            sim.access(0, b, false);
        }
        assert_eq!(sim.results()[0].total(), 4);
    }

    #[test]
    fn write_invalidates_other_processors() {
        let mut sim = SinglePassSim::new(&space(&[1], &[1]), 2, true, None);
        sim.access(0, 0, false);
        sim.access(1, 0, false);
        sim.access(0, 0, true);
        sim.audit().unwrap();
        sim.access(1, 0, false);
        assert_eq!(sim.results()[0].misses_per_processor, vec![1, 2]);
        sim.audit().unwrap();
    }

    #[test]
    fn invalidation_compacts_queue_order() {
        // P1 holds [0,1,2] in a 3-way set; P0 writes 1; P1 then loads 3 and 4.
        // After compaction P1 has [0,2,3]; loading 4 evicts 0, leaving [2,3,4].
        let mut sim = SinglePassSim::new(&space(&[1], &[3]), 2, true, None);
        for b in [0, 1, 2] {
            sim.access(1, b, false);
        }
        sim.access(0, 1, true);
        sim.access(1, 3, false);
        sim.access(1, 4, false);
        sim.audit().unwrap();
        assert_eq!(sim.access(1, 2, false), 0);
        assert_eq!(sim.access(1, 0, false), 1);
    }

    #[test]
    fn exclusion_uses_minimum_over_assocs() {
        let mut sim = SinglePassSim::new(&space(&[1, 2], &[1, 2]), 1, false, Some(2));
        // Blocks 0 and 2 share set 0 at both levels: A=1 thrashes, A=2 holds both.
        for b in [0, 2, 0, 2, 0, 2] {
            sim.access(0, b, false);
        }
        assert_eq!(sim.level_excluded(1), Some(false));
        sim.access(0, 4, false);
        // A=2 total is now 3 > 2 at both levels.
        assert_eq!(sim.level_excluded(1), Some(true));
        assert_eq!(sim.level_excluded(2), Some(true));
        let r = sim.results();
        assert!(r.iter().all(|c| c.total() > 2));
        sim.audit().unwrap();
    }

    #[test]
    fn excluded_levels_stop_counting() {
        let mut sim = SinglePassSim::new(&space(&[1], &[1]), 1, false, Some(0));
        sim.access(0, 0, false);
        sim.access(0, 1, false);
        assert_eq!(sim.results()[0].total(), 1);
        assert_eq!(sim.accesses(), 2);
    }
}
