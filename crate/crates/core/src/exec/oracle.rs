//! Software stand-in for hardware event counters: replays builds and
//! probes at cache-line granularity and classifies every line touched.
//!
//! Bucket geometry follows the model: a bucket starts on a line boundary,
//! its header takes `BH` bytes and slot `k` covers
//! `[BH + k*W, BH + (k+1)*W)`. An insert costs one random write for the
//! latched header line; the tuple's other lines are sequential writes.
//! Overflowing tuples cost one more random write and probes read one
//! extra random line per chained overflow entry.

use std::collections::HashMap;

use serde::Serialize;

use super::data::Database;
use super::hash_table::HashKind;
use crate::error::{Error, Result};
use crate::model::{scan_counts, AccessCounts, HashTableSpec, PlanNode, SwMode};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OracleCounts {
    /// Same labels and order as the model's per-operator breakdown.
    pub per_operator: Vec<(String, AccessCounts)>,
    pub total: AccessCounts,
}

impl OracleCounts {
    /// Every event reads its line; writes read before writing.
    pub fn reads(&self) -> u64 {
        self.total.reads()
    }

    pub fn writes(&self) -> u64 {
        self.total.writes()
    }

    fn from_ops(per_operator: Vec<(String, AccessCounts)>) -> Self {
        let total = per_operator.iter().map(|(_, c)| *c).sum();
        OracleCounts { per_operator, total }
    }
}

/// Events of the insert that lands in slot `k` of a bucket.
fn insert_events(k: u64, spec: &HashTableSpec, cl: u64, mode: SwMode) -> AccessCounts {
    let slots = spec.tuples_per_bucket.max(1);
    let w = u64::from(spec.tuple_width);
    if k >= slots {
        return AccessCounts { rw: 2, ..AccessCounts::ZERO };
    }
    let sw = match mode {
        SwMode::TableConsistent => {
            let start = u64::from(spec.header_bytes) + k * w;
            let (first, last) = (start / cl, (start + w - 1) / cl);
            // Lines sharing the header ride on the latch write.
            last + 1 - first.max(1).min(last + 1)
        }
        SwMode::EverySlot => {
            let start = k * w;
            (start + w - 1) / cl - start / cl + 1
        }
    };
    AccessCounts { rw: 1, sw, ..AccessCounts::ZERO }
}

/// Events of one probe into a bucket holding `occupancy` tuples.
fn probe_events(occupancy: u64, spec: &HashTableSpec, cl: u64) -> AccessCounts {
    let slots = spec.tuples_per_bucket.max(1);
    let in_place = occupancy.min(slots);
    let bytes = u64::from(spec.header_bytes) + in_place * u64::from(spec.tuple_width);
    AccessCounts { rr: 1 + occupancy - in_place, sr: bytes.div_ceil(cl).max(1) - 1, ..AccessCounts::ZERO }
}

fn build_left(build: &PlanNode, probe: &PlanNode) -> Result<bool> {
    let ((b_lo, b_hi), (p_lo, p_hi)) = (build.leaf_range(), probe.leaf_range());
    if b_hi + 1 == p_lo {
        Ok(true)
    } else if p_hi + 1 == b_lo {
        Ok(false)
    } else {
        let mut ids = build.leaves();
        ids.extend(probe.leaves());
        Err(Error::NonContiguous(ids))
    }
}

/// Output pairs `(R_lo.a, R_hi.b)` of a subtree, computed with a std map.
fn materialize(node: &PlanNode, db: &Database) -> Result<Vec<[u64; 2]>> {
    match node {
        PlanNode::Scan { relation, .. } => {
            let r = db.relation(*relation)?;
            Ok(r.a.iter().zip(&r.b).map(|(&a, &b)| [a, b]).collect())
        }
        PlanNode::HashJoin { build, probe, .. } => {
            let left = build_left(build, probe)?;
            let (bt, pt) = (materialize(build, db)?, materialize(probe, db)?);
            let mut map: HashMap<u64, Vec<u64>> = HashMap::new();
            for &[a, b] in &bt {
                let (k, v) = if left { (b, a) } else { (a, b) };
                map.entry(k).or_default().push(v);
            }
            let mut out = Vec::new();
            for &[a, b] in &pt {
                let key = if left { a } else { b };
                for &v in map.get(&key).into_iter().flatten() {
                    out.push(if left { [v, b] } else { [a, v] });
                }
            }
            Ok(out)
        }
    }
}

/// Counts the events of running `plan` over the actual data of `db`, with
/// bucket placement given by `hash`.
pub fn simulate_counts(plan: &PlanNode, db: &Database, cl: u64, mode: SwMode, hash: HashKind) -> Result<OracleCounts> {
    fn walk(
        node: &PlanNode,
        depth: usize,
        db: &Database,
        cl: u64,
        mode: SwMode,
        hash: HashKind,
        out: &mut Vec<(String, AccessCounts)>,
    ) -> Result<()> {
        match node {
            PlanNode::Scan { relation, stats } => {
                db.relation(*relation)?;
                out.push((format!("scan:{relation}"), scan_counts(stats, cl)));
            }
            PlanNode::HashJoin { build, probe, build_table: spec, .. } => {
                let left = build_left(build, probe)?;
                let mut occupancy = vec![0u64; usize::try_from(spec.bucket_count).map_err(|_| Error::invalid("too many buckets"))?];
                walk(build, depth + 1, db, cl, mode, hash, out)?;
                let mut b = AccessCounts::ZERO;
                for [a, bv] in materialize(build, db)? {
                    let key = if left { bv } else { a };
                    let slot = &mut occupancy[hash.bucket(key, spec.bucket_count) as usize];
                    b += insert_events(*slot, spec, cl, mode);
                    *slot += 1;
                }
                out.push((format!("build@{depth}"), b));
                walk(probe, depth + 1, db, cl, mode, hash, out)?;
                let mut p = AccessCounts::ZERO;
                for [a, bv] in materialize(probe, db)? {
                    let key = if left { a } else { bv };
                    p += probe_events(occupancy[hash.bucket(key, spec.bucket_count) as usize], spec, cl);
                }
                out.push((format!("probe@{depth}"), p));
            }
        }
        Ok(())
    }
    let mut ops = Vec::new();
    walk(plan, 0, db, cl, mode, hash, &mut ops)?;
    Ok(OracleCounts::from_ops(ops))
}

/// Spreads `n` items as evenly as possible over `buckets`: returns
/// `(share, buckets receiving share + 1)`.
fn even_split(n: u64, buckets: u64) -> (u64, u64) {
    (n / buckets, n % buckets)
}

/// The same replay without data: every build spreads its input evenly over
/// the buckets and probes spread evenly as well. Works at any cardinality.
pub fn simulate_counts_from_stats(plan: &PlanNode, cl: u64, mode: SwMode) -> OracleCounts {
    fn bucket_fill(occ: u64, spec: &HashTableSpec, cl: u64, mode: SwMode) -> AccessCounts {
        (0..occ).map(|k| insert_events(k, spec, cl, mode)).sum()
    }
    fn walk(node: &PlanNode, depth: usize, cl: u64, mode: SwMode, out: &mut Vec<(String, AccessCounts)>) {
        match node {
            PlanNode::Scan { relation, stats } => out.push((format!("scan:{relation}"), scan_counts(stats, cl))),
            PlanNode::HashJoin { build, probe, build_table: spec, .. } => {
                let nb = spec.bucket_count;
                let (q, fuller) = even_split(build.output().cardinality, nb);
                walk(build, depth + 1, cl, mode, out);
                let mut b = AccessCounts::ZERO;
                for (count, occ) in [(nb - fuller, q), (fuller, q + 1)] {
                    let per = bucket_fill(occ, spec, cl, mode);
                    b += AccessCounts { sr: per.sr * count, rr: per.rr * count, sw: per.sw * count, rw: per.rw * count };
                }
                out.push((format!("build@{depth}"), b));
                walk(probe, depth + 1, cl, mode, out);
                // Probes land in proportion to bucket counts; the remainder
                // goes to the fuller buckets first.
                let s = probe.output().cardinality;
                let to_fuller = (u128::from(s) * u128::from(fuller) / u128::from(nb)) as u64;
                let mut p = AccessCounts::ZERO;
                for (count, occ) in [(s - to_fuller, q), (to_fuller, q + 1)] {
                    let per = probe_events(occ, spec, cl);
                    p += AccessCounts { sr: per.sr * count, rr: per.rr * count, ..AccessCounts::ZERO };
                }
                out.push((format!("probe@{depth}"), p));
            }
        }
    }
    let mut ops = Vec::new();
    walk(plan, 0, cl, mode, &mut ops);
    OracleCounts::from_ops(ops)
}
