//! Cache-line event counts for the three physical operators: sequential
//! scan, hash-table build and hash-table probe.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::counts::AccessCounts;
use super::relation::{HashTableSpec, RelationStats};
use crate::error::Error;

/// How sequential writes of a build are counted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SwMode {
    /// Tuples that fit in the header's cache line ride on the latch write;
    /// only tuples past the first line cost sequential writes.
    #[default]
    #[serde(alias = "table")]
    TableConsistent,
    /// Every tuple slot of the bucket is priced with `M(T, W)`.
    #[serde(alias = "literal")]
    EverySlot,
}

impl FromStr for SwMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" | "table_consistent" => Ok(SwMode::TableConsistent),
            "literal" | "every_slot" => Ok(SwMode::EverySlot),
            other => Err(Error::invalid(format!("unknown sw mode {other:?} (expected table|literal)"))),
        }
    }
}

impl fmt::Display for SwMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SwMode::TableConsistent => "table",
            SwMode::EverySlot => "literal",
        })
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// Sequential scan: `ceil(|R| * W / CL)` sequential reads.
pub fn scan_counts(rel: &RelationStats, cl: u64) -> AccessCounts {
    debug_assert!(cl.is_power_of_two());
    AccessCounts { sr: rel.bytes().div_ceil(cl), ..AccessCounts::ZERO }
}

/// `M(T, W)`: cache-line writes caused by packing `t` tuples of `w` bytes
/// back to back from a line boundary. Counts every (tuple, line) overlap:
/// tuple boundaries plus line boundaries minus the boundaries shared by both.
pub fn bucket_write_events(t: u64, w: u64, cl: u64) -> u64 {
    if t == 0 {
        return 0;
    }
    debug_assert!(w >= 1 && cl >= 1);
    let last_byte = t * w - 1;
    t + last_byte / cl - last_byte / lcm(w, cl)
}

/// Number of tuples per bucket that are charged as sequential writes.
pub(crate) fn charged_tuples(spec: &HashTableSpec, cl: u64, mode: SwMode) -> u64 {
    let t = spec.tuples_per_bucket;
    match mode {
        SwMode::EverySlot => t,
        SwMode::TableConsistent => {
            let first_line_room = cl.saturating_sub(u64::from(spec.header_bytes));
            t.saturating_sub(first_line_room / u64::from(spec.tuple_width))
        }
    }
}

/// Build phase: one latch (random write) per tuple plus the sequential
/// writes of filling the buckets.
pub fn build_counts(rel: &RelationStats, ht: &HashTableSpec, cl: u64, mode: SwMode) -> AccessCounts {
    debug_assert!(ht.is_consistent_with(rel), "{ht:?} was not sized for {rel:?}");
    let charged = charged_tuples(ht, cl, mode);
    AccessCounts {
        sw: ht.bucket_count * bucket_write_events(charged, u64::from(rel.tuple_width), cl),
        rw: rel.cardinality,
        ..AccessCounts::ZERO
    }
}

/// `L(R)`: lines of a full bucket beyond the first one.
pub fn extra_probe_lines(ht: &HashTableSpec, cl: u64) -> u64 {
    let bytes = u64::from(ht.tuple_width) * ht.tuples_per_bucket + u64::from(ht.header_bytes);
    bytes.div_ceil(cl).saturating_sub(1)
}

/// Probe phase: one random read for the bucket's first line, then the rest
/// of the bucket sequentially. Output goes to a cache-resident buffer.
pub fn probe_counts(probe: &RelationStats, build_ht: &HashTableSpec, cl: u64) -> AccessCounts {
    AccessCounts {
        sr: probe.cardinality * extra_probe_lines(build_ht, cl),
        rr: probe.cardinality,
        ..AccessCounts::ZERO
    }
}
