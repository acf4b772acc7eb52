//! Multiprocessor data-access traces.
//!
//! A trace is an ordered list of timestamped accesses. Cycles never go
//! backwards, and a processor issues at most one data access per cycle, so
//! several processors may share a cycle. That sharing is what makes the
//! number of distinct access cycles smaller than the number of accesses.
//!
//! The on-disk format is line oriented:
//!
//! ```text
//! # comment
//! processors 4
//! 42 3 R 0x1a2b3c40
//! ```

use std::collections::HashSet;
use std::fmt::{self, Write as _};
use std::io::{self, BufRead, Write};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

/// Read or write.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Op {
    Read,
    Write,
}

impl Op {
    pub fn is_write(self) -> bool {
        self == Op::Write
    }

    fn symbol(self) -> char {
        match self {
            Op::Read => 'R',
            Op::Write => 'W',
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccessRecord {
    pub cycle: u64,
    pub processor: u32,
    pub op: Op,
    pub address: u64,
}

impl AccessRecord {
    pub fn new(cycle: u64, processor: u32, op: Op, address: u64) -> Self {
        Self {
            cycle,
            processor,
            op,
            address,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TraceError {
    #[error("line {line}: malformed: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("record {index}: cycle {cycle} is earlier than preceding cycle {previous}")]
    NonMonotonicCycle {
        index: usize,
        cycle: u64,
        previous: u64,
    },
    #[error("record {index}: processor {processor} already accessed memory in cycle {cycle}")]
    DuplicateProcessorCycle {
        index: usize,
        cycle: u64,
        processor: u32,
    },
    #[error("record {index}: processor {processor} out of range for {processor_count} processors")]
    ProcessorOutOfRange {
        index: usize,
        processor: u32,
        processor_count: u32,
    },
    #[error("processor count must be at least 1")]
    NoProcessors,
    #[error("block size {0} is not a power of two")]
    InvalidBlockSize(u64),
    #[error("invalid synthetic trace spec: {0}")]
    InvalidSpec(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<io::Error> for TraceError {
    fn from(err: io::Error) -> Self {
        TraceError::Io(err.to_string())
    }
}

/// A validated multiprocessor trace.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    records: Vec<AccessRecord>,
    processor_count: u32,
    #[serde(skip)]
    fingerprint: FingerprintCell,
}

/// Memoized fingerprint; ignored by equality since it is derived.
#[derive(Clone, Debug, Default)]
struct FingerprintCell(OnceLock<String>);

impl PartialEq for FingerprintCell {
    fn eq(&self, _: &Self) -> bool {
        true
    }
}

impl Eq for FingerprintCell {}

impl Trace {
    /// Validates `records` against the ordering and per-cycle rules.
    pub fn new(records: Vec<AccessRecord>, processor_count: u32) -> Result<Self, TraceError> {
        if processor_count == 0 {
            return Err(TraceError::NoProcessors);
        }
        let mut seen_this_cycle: HashSet<u32> = HashSet::new();
        let mut previous: Option<u64> = None;
        for (index, rec) in records.iter().enumerate() {
            if rec.processor >= processor_count {
                return Err(TraceError::ProcessorOutOfRange {
                    index,
                    processor: rec.processor,
                    processor_count,
                });
            }
            match previous {
                Some(prev) if rec.cycle < prev => {
                    return Err(TraceError::NonMonotonicCycle {
                        index,
                        cycle: rec.cycle,
                        previous: prev,
                    })
                }
                Some(prev) if rec.cycle == prev => {}
                _ => seen_this_cycle.clear(),
            }
            if !seen_this_cycle.insert(rec.processor) {
                return Err(TraceError::DuplicateProcessorCycle {
                    index,
                    cycle: rec.cycle,
                    processor: rec.processor,
                });
            }
            previous = Some(rec.cycle);
        }
        Ok(Self {
            records,
            processor_count,
            fingerprint: FingerprintCell::default(),
        })
    }

    pub fn empty(processor_count: u32) -> Result<Self, TraceError> {
        Self::new(Vec::new(), processor_count)
    }

    pub fn records(&self) -> &[AccessRecord] {
        &self.records
    }

    pub fn processor_count(&self) -> u32 {
        self.processor_count
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Returns the same records declared over a larger processor count.
    pub fn with_processor_count(self, processor_count: u32) -> Result<Self, TraceError> {
        Self::new(self.records, processor_count)
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn fingerprint(&self) -> String {
        self.fingerprint
            .0
            .get_or_init(|| {
                let mut hasher = Sha256::new();
                hasher.update(render_to_string(self).as_bytes());
                format!("{:x}", hasher.finalize())
            })
            .clone()
    }
}

/// Reads a trace in the line format described at the module level.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Trace, TraceError> {
    let mut processor_count: Option<u32> = None;
    let mut records = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let lineno = idx + 1;
        let malformed = |reason: &str| TraceError::MalformedLine {
            line: lineno,
            reason: reason.to_string(),
        };
        if line.starts_with('#') || line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        match processor_count {
            None => {
                if fields.len() != 2 || fields[0] != "processors" {
                    return Err(malformed("expected header `processors <P>`"));
                }
                let p = fields[1]
                    .parse::<u32>()
                    .map_err(|_| malformed("processor count is not a decimal integer"))?;
                if p == 0 {
                    return Err(malformed("processor count must be at least 1"));
                }
                processor_count = Some(p);
            }
            Some(_) => {
                if fields.len() != 4 {
                    return Err(malformed("expected `<cycle> <proc> <R|W> <0xADDR>`"));
                }
                let cycle = fields[0]
                    .parse::<u64>()
                    .map_err(|_| malformed("cycle is not a decimal integer"))?;
                let processor = fields[1]
                    .parse::<u32>()
                    .map_err(|_| malformed("processor is not a decimal integer"))?;
                let op = match fields[2] {
                    "R" => Op::Read,
                    "W" => Op::Write,
                    _ => return Err(malformed("operation must be R or W")),
                };
                let hex = fields[3]
                    .strip_prefix("0x")
                    .or_else(|| fields[3].strip_prefix("0X"))
                    .ok_or_else(|| malformed("address must start with 0x"))?;
                let address = u64::from_str_radix(hex, 16)
                    .map_err(|_| malformed("address is not hexadecimal"))?;
                records.push(AccessRecord::new(cycle, processor, op, address));
            }
        }
    }

    let processor_count = processor_count.ok_or(TraceError::MalformedLine {
        line: 0,
        reason: "missing `processors <P>` header".to_string(),
    })?;
    Trace::new(records, processor_count)
}

/// Writes `trace` in canonical form; `parse_trace` reads it back unchanged.
pub fn render<W: Write>(trace: &Trace, mut out: W) -> io::Result<()> {
    out.write_all(render_to_string(trace).as_bytes())
}

pub fn render_to_string(trace: &Trace) -> String {
    let mut s = String::with_capacity(24 * trace.len() + 16);
    writeln!(s, "processors {}", trace.processor_count).unwrap();
    for rec in &trace.records {
        writeln!(
            s,
            "{} {} {} {:#x}",
            rec.cycle,
            rec.processor,
            rec.op.symbol(),
            rec.address
        )
        .unwrap();
    }
    s
}

impl fmt::Display for Trace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render_to_string(self))
    }
}

/// Number of distinct cycles in which at least one access happened.
///
/// This is the count of sequential private-level accesses: parallel accesses
/// by different processors in one cycle cost a single private access time.
pub fn count_tap(trace: &Trace) -> u64 {
    // Cycles are non-decreasing, so distinct values are runs.
    let mut count = 0;
    let mut last = None;
    for rec in trace.records() {
        if last != Some(rec.cycle) {
            count += 1;
            last = Some(rec.cycle);
        }
    }
    count
}

pub fn block_of(address: u64, block_bytes: u64) -> Result<u64, TraceError> {
    if !block_bytes.is_power_of_two() {
        return Err(TraceError::InvalidBlockSize(block_bytes));
    }
    Ok(address >> block_bytes.trailing_zeros())
}

/// Parameters for [`generate_synthetic`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTraceSpec {
    pub processor_count: u32,
    pub record_count: usize,
    pub address_space_bytes: u64,
    /// Probability that an access targets the shared region.
    pub shared_fraction: f64,
    pub write_fraction: f64,
    /// Probability that an access falls in its region's hot window.
    pub locality_hot_fraction: f64,
    pub seed: u64,
}

impl Default for SyntheticTraceSpec {
    fn default() -> Self {
        Self {
            processor_count: 4,
            record_count: 10_000,
            address_space_bytes: 16 * 1024,
            shared_fraction: 0.2,
            write_fraction: 0.3,
            locality_hot_fraction: 0.7,
            seed: 1,
        }
    }
}

const WORD_BYTES: u64 = 4;
/// Probability that the next access starts a new cycle even though idle
/// processors remain in the current one.
const CYCLE_ADVANCE_PROB: f64 = 0.5;

impl SyntheticTraceSpec {
    fn validate(&self) -> Result<(), TraceError> {
        let bad = |msg: String| Err(TraceError::InvalidSpec(msg));
        if self.processor_count == 0 {
            return bad("processor_count must be positive".into());
        }
        for (name, v) in [
            ("shared_fraction", self.shared_fraction),
            ("write_fraction", self.write_fraction),
            ("locality_hot_fraction", self.locality_hot_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} = {v} is outside [0, 1]"));
            }
        }
        let words = self.address_space_bytes / WORD_BYTES;
        if words < 2 * u64::from(self.processor_count) {
            return bad(format!(
                "address space of {} bytes is too small for {} processors",
                self.address_space_bytes, self.processor_count
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy)]
struct Region {
    base_word: u64,
    words: u64,
    hot_words: u64,
}

impl Region {
    fn new(base_word: u64, words: u64) -> Self {
        Self {
            base_word,
            words,
            hot_words: (words / 32).max(1),
        }
    }

    fn pick(&self, rng: &mut ChaCha8Rng, hot: bool) -> u64 {
        let span = if hot { self.hot_words } else { self.words };
        (self.base_word + rng.gen_range(0..span)) * WORD_BYTES
    }
}

/// Generates a deterministic pseudo-random trace.
///
/// The address space is split into one shared region (a quarter of the
/// space) followed by equal private regions, one per processor. Each access
/// goes to the shared region with probability `shared_fraction`, otherwise to
/// the issuing processor's private region; inside a region it hits the hot
/// window (the first 1/32 of the region) with probability
/// `locality_hot_fraction` and is uniform otherwise. Addresses are word (4
/// byte) aligned.
///
/// Each op is an independent Bernoulli draw, so the realized write and
/// shared fractions have standard deviation `sqrt(f(1-f)/n)`; for 10^4
/// records that is below 0.005.
pub fn generate_synthetic(spec: &SyntheticTraceSpec) -> Result<Trace, TraceError> {
    spec.validate()?;
    let p = spec.processor_count;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let total_words = spec.address_space_bytes / WORD_BYTES;
    let shared_words = (total_words / 4).max(1);
    let private_words = (total_words - shared_words) / u64::from(p);
    let shared = Region::new(0, shared_words);
    let privates: Vec<Region> = (0..u64::from(p))
        .map(|i| Region::new(shared_words + i * private_words, private_words))
        .collect();

    let mut records = Vec::with_capacity(spec.record_count);
    let mut cycle = 0u64;
    let mut busy = vec![false; p as usize];
    let mut busy_count = 0u32;

    for _ in 0..spec.record_count {
        let advance = busy_count == p || (busy_count > 0 && rng.gen_bool(CYCLE_ADVANCE_PROB));
        if advance {
            cycle += 1 + rng.gen_range(0..3);
            busy.iter_mut().for_each(|b| *b = false);
            busy_count = 0;
        }
        // Uniform choice among processors still idle in this cycle.
        let mut nth = rng.gen_range(0..p - busy_count);
        let mut processor = 0;
        for (i, b) in busy.iter().enumerate() {
            if !*b {
                if nth == 0 {
                    processor = i;
                    break;
                }
                nth -= 1;
            }
        }
        busy[processor] = true;
        busy_count += 1;

        let op = if rng.gen_bool(spec.write_fraction) {
            Op::Write
        } else {
            Op::Read
        };
        let region = if rng.gen_bool(spec.shared_fraction) {
            shared
        } else {
            privates[processor]
        };
        let hot = rng.gen_bool(spec.locality_hot_fraction);
        let address = region.pick(&mut rng, hot);
        records.push(AccessRecord::new(cycle, processor as u32, op, address));
    }

    Trace::new(records, p)
}

/// Iterator adapter that counts how many items were pulled through it.
///
/// Used to check that single-pass simulators read their input exactly once.
pub struct CountingIter<'a, I> {
    inner: I,
    counter: &'a std::cell::Cell<u64>,
}

impl<'a, I> CountingIter<'a, I> {
    pub fn new(inner: I, counter: &'a std::cell::Cell<u64>) -> Self {
        Self { inner, counter }
    }
}

impl<I: Iterator> Iterator for CountingIter<'_, I> {
    type Item = I::Item;

    fn next(&mut self) -> Option<I::Item> {
        let item = self.inner.next();
        if item.is_some() {
            self.counter.set(self.counter.get() + 1);
        }
        item
    }
}
