//! Data-memory-operation time model.
//!
//! Time is charged per sequential access at each level:
//! `tap * tp + tas * ts + tam * tm`, in integer nanoseconds.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TimingError {
    #[error("latencies must satisfy 0 < tp <= ts <= tm (got {tp}, {ts}, {tm})")]
    InvalidLatencies { tp: u64, ts: u64, tm: u64 },
    #[error("cannot parse duration `{0}`: {1}")]
    Parse(String, &'static str),
}

/// Per-access latencies in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TimingParams {
    tp: u64,
    ts: u64,
    tm: u64,
}

impl TimingParams {
    pub fn new(tp: u64, ts: u64, tm: u64) -> Result<Self, TimingError> {
        if tp == 0 || tp > ts || ts > tm {
            return Err(TimingError::InvalidLatencies { tp, ts, tm });
        }
        Ok(Self { tp, ts, tm })
    }

    pub fn tp(&self) -> u64 {
        self.tp
    }

    pub fn ts(&self) -> u64 {
        self.ts
    }

    pub fn tm(&self) -> u64 {
        self.tm
    }
}

impl Default for TimingParams {
    /// 1 ns private, 4 ns shared, 15 ns memory.
    fn default() -> Self {
        Self { tp: 1, ts: 4, tm: 15 }
    }
}

/// Sequential access counts at each level of the hierarchy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccessCounts {
    /// Private level: distinct access cycles.
    pub tap: u64,
    /// Shared level: sequentialized private misses.
    pub tas: u64,
    /// Main memory: shared misses.
    pub tam: u64,
}

impl AccessCounts {
    pub fn new(tap: u64, tas: u64, tam: u64) -> Self {
        Self { tap, tas, tam }
    }
}

impl std::ops::Add for AccessCounts {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self::new(self.tap + rhs.tap, self.tas + rhs.tas, self.tam + rhs.tam)
    }
}

/// Worst-case data memory operation time, in nanoseconds.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Deadline {
    wcdmot_ns: u64,
}

impl Deadline {
    pub fn from_ns(wcdmot_ns: u64) -> Self {
        Self { wcdmot_ns }
    }

    pub fn ns(&self) -> u64 {
        self.wcdmot_ns
    }
}

impl fmt::Display for Deadline {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.wcdmot_ns)
    }
}

impl FromStr for Deadline {
    type Err = TimingError;

    /// Accepts a decimal number with an optional `s`, `ms`, `us` or `ns`
    /// suffix (no suffix means nanoseconds). The value must be a whole
    /// number of nanoseconds.
    fn from_str(input: &str) -> Result<Self, TimingError> {
        let err = |why| TimingError::Parse(input.to_string(), why);
        let s = input.trim();
        let (num, scale): (&str, u128) = if let Some(n) = s.strip_suffix("ns") {
            (n, 1)
        } else if let Some(n) = s.strip_suffix("us") {
            (n, 1_000)
        } else if let Some(n) = s.strip_suffix("ms") {
            (n, 1_000_000)
        } else if let Some(n) = s.strip_suffix('s') {
            (n, 1_000_000_000)
        } else {
            (s, 1)
        };
        let num = num.trim();
        let (int_part, frac_part) = num.split_once('.').unwrap_or((num, ""));
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(err("missing number"));
        }
        let digits_ok = |d: &str| d.bytes().all(|b| b.is_ascii_digit());
        if !digits_ok(int_part) || !digits_ok(frac_part) {
            return Err(err("not a non-negative decimal number"));
        }
        let int_val: u128 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| err("number too large"))?
        };
        let frac_val: u128 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| err("too many fractional digits"))?
        };
        let denom = 10u128
            .checked_pow(frac_part.len() as u32)
            .ok_or_else(|| err("too many fractional digits"))?;
        let frac_ns = frac_val * scale;
        if !frac_ns.is_multiple_of(denom) {
            return Err(err("finer than one nanosecond"));
        }
        let total = int_val
            .checked_mul(scale)
            .and_then(|v| v.checked_add(frac_ns / denom))
            .filter(|&v| v <= u128::from(u64::MAX))
            .ok_or_else(|| err("number too large"))?;
        Ok(Deadline::from_ns(total as u64))
    }
}

/// Modeled data memory operation time of `counts`, in nanoseconds.
pub fn amt(counts: AccessCounts, params: TimingParams) -> u64 {
    counts.tap * params.tp + counts.tas * params.ts + counts.tam * params.tm
}

pub fn feasible(counts: AccessCounts, params: TimingParams, deadline: Deadline) -> bool {
    amt(counts, params) <= deadline.ns()
}

/// Largest number of memory accesses that still meets the deadline given
/// `tap` private and `tas` shared accesses, or `None` when even zero memory
/// accesses would be too slow.
pub fn max_tam(tap: u64, tas: u64, params: TimingParams, deadline: Deadline) -> Option<u64> {
    let used = u128::from(tap) * u128::from(params.tp) + u128::from(tas) * u128::from(params.ts);
    let slack = u128::from(deadline.ns()).checked_sub(used)?;
    Some((slack / u128::from(params.tm)) as u64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p() -> TimingParams {
        TimingParams::default()
    }

    #[test]
    fn amt_examples() {
        assert_eq!(amt(AccessCounts::new(0, 0, 0), p()), 0);
        assert_eq!(amt(AccessCounts::new(1_000_000, 400_000, 100_000), p()), 4_100_000);
        assert_eq!(amt(AccessCounts::new(1, 1, 1), p()), 20);
    }

    #[test]
    fn feasibility_boundary() {
        let c = AccessCounts::new(1, 1, 1);
        assert!(feasible(c, p(), Deadline::from_ns(20)));
        assert!(!feasible(AccessCounts::new(2, 1, 1), p(), Deadline::from_ns(20)));
        assert!(feasible(AccessCounts::default(), p(), Deadline::from_ns(0)));
    }

    #[test]
    fn max_tam_examples() {
        assert_eq!(max_tam(100, 10, p(), Deadline::from_ns(140)), Some(0));
        assert_eq!(max_tam(1000, 1000, p(), Deadline::from_ns(10_000)), Some(333));
        assert_eq!(max_tam(1000, 2000, p(), Deadline::from_ns(10_000)), Some(66));
        assert_eq!(max_tam(1000, 2251, p(), Deadline::from_ns(10_000)), None);
    }

    #[test]
    fn params_validation() {
        assert!(TimingParams::new(1, 4, 15).is_ok());
        assert!(TimingParams::new(0, 4, 15).is_err());
        assert!(TimingParams::new(5, 4, 15).is_err());
        assert!(TimingParams::new(1, 16, 15).is_err());
    }

    #[test]
    fn deadline_parsing() {
        let ns = |s: &str| s.parse::<Deadline>().map(|d| d.ns());
        assert_eq!(ns("1.0s"), Ok(1_000_000_000));
        assert_eq!(ns("0.15s"), Ok(150_000_000));
        assert_eq!(ns("250ms"), Ok(250_000_000));
        assert_eq!(ns("3us"), Ok(3_000));
        assert_eq!(ns("42ns"), Ok(42));
        assert_eq!(ns("42"), Ok(42));
        assert_eq!(ns(".5us"), Ok(500));
        assert!(ns("1.5ns").is_err());
        assert!(ns("-1s").is_err());
        assert!(ns("s").is_err());
        assert!(ns("1e9").is_err());
        assert!(ns("99999999999999999999s").is_err());
    }
}
