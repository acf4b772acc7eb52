//! Shared workloads for the benches in `benches/`.

use cachesel_core::{generate_synthetic, SyntheticTraceSpec, Trace};

/// Seeded 6-processor trace over 64 KiB.
pub fn workload(records: usize, seed: u64) -> Trace {
    generate_synthetic(&SyntheticTraceSpec {
        processor_count: 6,
        record_count: records,
        address_space_bytes: 64 * 1024,
        shared_fraction: 0.2,
        write_fraction: 0.3,
        locality_hot_fraction: 0.8,
        seed,
    })
    .expect("valid workload spec")
}
