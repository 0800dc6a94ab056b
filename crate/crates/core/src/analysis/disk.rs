//! Page-unit accounting in the style of a disk-oriented optimizer: the
//! cost is `c_s * n_s + c_r * n_r` and the units depend only on how many
//! pages flow through each operator.

use serde::{Deserialize, Serialize};

use crate::model::{PlanNode, RelationStats};

pub const DEFAULT_PAGE_BYTES: u64 = 8192;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct DiskCostUnits {
    /// Sequential page units.
    pub n_s: u64,
    /// Random page units.
    pub n_r: u64,
}

fn pages(stats: &RelationStats, page_bytes: u64) -> u64 {
    stats.bytes().div_ceil(page_bytes)
}

/// Sequential units: every base relation page plus every page of an
/// intermediate stream handed to the next operator. Random units: one page
/// touch per page of the larger join input, which a disk optimizer would
/// treat as the outer stream. The final output is not counted.
///
/// Both terms are symmetric in build and probe, so plans that differ only
/// in which side is hashed get the same units.
pub fn disk_cost_units(plan: &PlanNode, page_bytes: u64) -> DiskCostUnits {
    fn walk(node: &PlanNode, root: bool, page_bytes: u64, acc: &mut DiskCostUnits) {
        match node {
            PlanNode::Scan { stats, .. } => acc.n_s += pages(stats, page_bytes),
            PlanNode::HashJoin { build, probe, output, .. } => {
                if !root {
                    acc.n_s += pages(output, page_bytes);
                }
                let (b, p) = (build.output(), probe.output());
                let outer = if b.bytes() >= p.bytes() { b } else { p };
                acc.n_r += pages(&outer, page_bytes);
                walk(build, false, page_bytes, acc);
                walk(probe, false, page_bytes, acc);
            }
        }
    }
    let mut acc = DiskCostUnits::default();
    walk(plan, true, page_bytes, &mut acc);
    acc
}
