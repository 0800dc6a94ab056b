use serde::{Deserialize, Serialize};

use super::counts::AccessCounts;
use super::operators::{build_counts, probe_counts, scan_counts, SwMode};
use super::relation::{HashTableSpec, RelationStats};

/// Binary join tree. The build child is stored in the hash table, the
/// probe child is streamed against it.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PlanNode {
    Scan {
        relation: usize,
        stats: RelationStats,
    },
    HashJoin {
        build: Box<PlanNode>,
        probe: Box<PlanNode>,
        build_table: HashTableSpec,
        output: RelationStats,
    },
}

impl PlanNode {
    pub fn scan(relation: usize, stats: RelationStats) -> Self {
        PlanNode::Scan { relation, stats }
    }

    /// Join with a default-sized table over the build child's output.
    pub fn join(build: PlanNode, probe: PlanNode, output: RelationStats, header_bytes: u32) -> Self {
        let build_table = HashTableSpec::sized_for(build.output(), header_bytes);
        PlanNode::HashJoin { build: Box::new(build), probe: Box::new(probe), build_table, output }
    }

    pub fn output(&self) -> RelationStats {
        match self {
            PlanNode::Scan { stats, .. } => *stats,
            PlanNode::HashJoin { output, .. } => *output,
        }
    }

    /// Relation ids in left-to-right (build-first) order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            PlanNode::Scan { relation, .. } => out.push(*relation),
            PlanNode::HashJoin { build, probe, .. } => {
                build.collect_leaves(out);
                probe.collect_leaves(out);
            }
        }
    }

    /// Smallest and largest relation id below this node.
    pub fn leaf_range(&self) -> (usize, usize) {
        match self {
            PlanNode::Scan { relation, .. } => (*relation, *relation),
            PlanNode::HashJoin { build, probe, .. } => {
                let (bl, bh) = build.leaf_range();
                let (pl, ph) = probe.leaf_range();
                (bl.min(pl), bh.max(ph))
            }
        }
    }

    pub fn join_count(&self) -> usize {
        match self {
            PlanNode::Scan { .. } => 0,
            PlanNode::HashJoin { build, probe, .. } => 1 + build.join_count() + probe.join_count(),
        }
    }

    pub fn is_left_deep(&self) -> bool {
        match self {
            PlanNode::Scan { .. } => true,
            PlanNode::HashJoin { build, probe, .. } => {
                matches!(**probe, PlanNode::Scan { .. }) && build.is_left_deep()
            }
        }
    }

    pub fn is_right_deep(&self) -> bool {
        match self {
            PlanNode::Scan { .. } => true,
            PlanNode::HashJoin { build, probe, .. } => {
                matches!(**build, PlanNode::Scan { .. }) && probe.is_right_deep()
            }
        }
    }
}

/// Event counts of a whole plan: each join contributes its build over the
/// build child's output and its probe over the probe child's output, on top
/// of both subtrees. Materializing the final result is not counted.
pub fn plan_counts(plan: &PlanNode, cl: u64, mode: SwMode) -> AccessCounts {
    match plan {
        PlanNode::Scan { stats, .. } => scan_counts(stats, cl),
        PlanNode::HashJoin { build, probe, build_table, .. } => {
            build_counts(&build.output(), build_table, cl, mode)
                + probe_counts(&probe.output(), build_table, cl)
                + plan_counts(build, cl, mode)
                + plan_counts(probe, cl, mode)
        }
    }
}

/// Per-operator breakdown in post-order: scans as `scan:<id>`, joins as
/// `build@<depth>` and `probe@<depth>`.
pub fn operator_counts(plan: &PlanNode, cl: u64, mode: SwMode) -> Vec<(String, AccessCounts)> {
    fn walk(node: &PlanNode, depth: usize, cl: u64, mode: SwMode, out: &mut Vec<(String, AccessCounts)>) {
        match node {
            PlanNode::Scan { relation, stats } => out.push((format!("scan:{relation}"), scan_counts(stats, cl))),
            PlanNode::HashJoin { build, probe, build_table, .. } => {
                walk(build, depth + 1, cl, mode, out);
                out.push((format!("build@{depth}"), build_counts(&build.output(), build_table, cl, mode)));
                walk(probe, depth + 1, cl, mode, out);
                out.push((format!("probe@{depth}"), probe_counts(&probe.output(), build_table, cl)));
            }
        }
    }
    let mut out = Vec::new();
    walk(plan, 0, cl, mode, &mut out);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn baseline_join(probe_card: u64, output: u64) -> PlanNode {
        let r = RelationStats::narrow(512_000_000);
        let table = HashTableSpec::with_buckets(r, 512_000_000, 16).unwrap();
        PlanNode::HashJoin {
            build: Box::new(PlanNode::scan(1, r)),
            probe: Box::new(PlanNode::scan(0, RelationStats::narrow(probe_card))),
            build_table: table,
            output: RelationStats::narrow(output),
        }
    }

    #[test]
    fn scan_is_base_case() {
        let s = PlanNode::scan(0, RelationStats::narrow(1000));
        assert_eq!(plan_counts(&s, 64, SwMode::TableConsistent), scan_counts(&s.output(), 64));
    }

    #[test]
    fn single_join_totals() {
        let c = plan_counts(&baseline_join(512_000_000, 512_000_000), 64, SwMode::TableConsistent);
        assert_eq!(c, AccessCounts::new(256_000_000, 512_000_000, 0, 512_000_000));
    }

    #[test]
    fn breakdown_sums_to_total() {
        let plan = baseline_join(2_048_000_000, 512_000_000);
        let parts = operator_counts(&plan, 64, SwMode::TableConsistent);
        assert_eq!(parts.len(), 4);
        let sum: AccessCounts = parts.iter().map(|(_, c)| *c).sum();
        assert_eq!(sum, plan_counts(&plan, 64, SwMode::TableConsistent));
    }

    #[test]
    fn shape_predicates() {
        let plan = baseline_join(10, 10);
        assert!(plan.is_left_deep() && plan.is_right_deep());
        assert_eq!(plan.leaves(), vec![1, 0]);
        assert_eq!(plan.leaf_range(), (0, 1));
        assert_eq!(plan.join_count(), 1);
    }
}
