use super::naming::plan_name;
use super::query::ChainQuery;
use super::shape::PlanShape;
use crate::error::{Error, Result};
use crate::model::{HashTableSpec, PlanNode, RelationStats};

/// A plan together with its display name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NamedPlan {
    pub name: String,
    pub plan: PlanNode,
}

/// Number of cross-product-free trees over a chain of `relations` inputs,
/// counting both build/probe orientations of every join.
pub fn plan_count(relations: usize) -> u64 {
    let mut counts = vec![0u64; relations + 1];
    if relations >= 1 {
        counts[1] = 1;
    }
    for len in 2..=relations {
        counts[len] = (1..len).map(|a| 2 * counts[a] * counts[len - a]).sum();
    }
    counts[relations]
}

/// All trees over `lo..=hi`, by split position, left range on the build
/// side before right range on the build side.
pub fn enumerate_shapes(lo: usize, hi: usize) -> Vec<PlanShape> {
    if lo == hi {
        return vec![PlanShape::Leaf(lo)];
    }
    let mut out = Vec::new();
    for split in lo..hi {
        let left = enumerate_shapes(lo, split);
        let right = enumerate_shapes(split + 1, hi);
        for l in &left {
            for r in &right {
                out.push(PlanShape::join(l.clone(), r.clone()));
            }
        }
        for l in &left {
            for r in &right {
                out.push(PlanShape::join(r.clone(), l.clone()));
            }
        }
    }
    out
}

fn table_for(q: &ChainQuery, input: RelationStats) -> Result<HashTableSpec> {
    match q.bucket_count {
        Some(b) => HashTableSpec::with_buckets(input, b, q.header_bytes),
        None => Ok(HashTableSpec::sized_for(input, q.header_bytes)),
    }
}

fn contiguous_range(leaves: &[usize]) -> Option<(usize, usize)> {
    let lo = *leaves.iter().min()?;
    let hi = *leaves.iter().max()?;
    let mut sorted = leaves.to_vec();
    sorted.sort_unstable();
    sorted.iter().copied().eq(lo..=hi).then_some((lo, hi))
}

/// Annotate a shape with base statistics, intermediate cardinalities and
/// hash table specs taken from the query.
pub fn annotate(shape: &PlanShape, q: &ChainQuery) -> Result<PlanNode> {
    match shape {
        PlanShape::Leaf(id) => {
            let stats = *q.relations.get(*id).ok_or(Error::UnknownRelation(*id))?;
            Ok(PlanNode::scan(*id, stats))
        }
        PlanShape::Join { build, probe } => {
            let leaves = shape.leaves();
            let (lo, hi) = contiguous_range(&leaves).ok_or_else(|| Error::NonContiguous(leaves.clone()))?;
            let build = annotate(build, q)?;
            let probe = annotate(probe, q)?;
            for side in [&build, &probe] {
                let l = side.leaves();
                if contiguous_range(&l).is_none() {
                    return Err(Error::NonContiguous(l));
                }
            }
            let build_table = table_for(q, build.output())?;
            Ok(PlanNode::HashJoin {
                build: Box::new(build),
                probe: Box::new(probe),
                build_table,
                output: q.range_stats(lo, hi),
            })
        }
    }
}

/// Recompute every node's statistics from the query: leaves get the base
/// relation statistics, joins the estimated range cardinality.
pub fn propagate_cardinalities(plan: &PlanNode, q: &ChainQuery) -> Result<PlanNode> {
    annotate(&PlanShape::of(plan), q)
}

/// Every cross-product-free plan for the query, in deterministic order.
pub fn enumerate_plans(q: &ChainQuery) -> Result<Vec<NamedPlan>> {
    q.validate()?;
    enumerate_shapes(0, q.n())
        .iter()
        .map(|shape| {
            let plan = annotate(shape, q)?;
            Ok(NamedPlan { name: plan_name(&plan), plan })
        })
        .collect()
}

/// Left-deep tree over `order`: the first two relations join first and
/// every later relation probes the accumulated result.
pub fn left_deep_shape(order: &[usize]) -> Result<PlanShape> {
    let (first, rest) = order.split_first().ok_or_else(|| Error::invalid("empty join order"))?;
    Ok(rest.iter().fold(PlanShape::Leaf(*first), |acc, &id| PlanShape::join(acc, PlanShape::Leaf(id))))
}

/// Right-deep tree over `order`: the last relation is streamed through
/// tables built on every other relation.
pub fn right_deep_shape(order: &[usize]) -> Result<PlanShape> {
    let (last, rest) = order.split_last().ok_or_else(|| Error::invalid("empty join order"))?;
    Ok(rest.iter().rev().fold(PlanShape::Leaf(*last), |acc, &id| PlanShape::join(PlanShape::Leaf(id), acc)))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::plan_space::JoinSpec;

    #[test]
    fn dp_counts() {
        assert_eq!(plan_count(1), 1);
        assert_eq!(plan_count(2), 2);
        assert_eq!(plan_count(3), 8);
        assert_eq!(plan_count(4), 40);
        for n in 1..=7 {
            assert_eq!(enumerate_shapes(0, n - 1).len() as u64, plan_count(n));
        }
    }

    #[test]
    fn shapes_are_distinct_and_cover_all_leaves() {
        let shapes = enumerate_shapes(0, 4);
        let unique: BTreeSet<_> = shapes.iter().collect();
        assert_eq!(unique.len(), shapes.len());
        for s in &shapes {
            let mut l = s.leaves();
            l.sort();
            assert_eq!(l, vec![0, 1, 2, 3, 4]);
        }
    }

    #[test]
    fn pk_fk_intermediates_follow_probe_side() {
        let q = ChainQuery::ratio_chain(1 << 20, 1, 4).unwrap();
        for np in enumerate_plans(&q).unwrap() {
            fn check(node: &PlanNode) {
                if let PlanNode::HashJoin { build, probe, output, .. } = node {
                    assert_eq!(output.cardinality, probe.output().cardinality);
                    check(build);
                    check(probe);
                }
            }
            check(&np.plan);
        }
    }

    #[test]
    fn ratio_chain_deep_patterns() {
        // Ascending chain (as seen from the deep-tree closed forms): R3 smallest.
        let q = ChainQuery::ratio_chain(2_048_000_000, 4, 4).unwrap();
        let left = annotate(&left_deep_shape(&[3, 2, 1, 0]).unwrap(), &q).unwrap();
        let mut builds = Vec::new();
        fn builds_of(node: &PlanNode, out: &mut Vec<u64>) {
            if let PlanNode::HashJoin { build, probe, .. } = node {
                out.push(build.output().cardinality);
                builds_of(build, out);
                builds_of(probe, out);
            }
        }
        builds_of(&left, &mut builds);
        // I_1..I_3 = R_2, R_1, R_0 in ascending numbering, i.e. 512M, 128M, 32M.
        assert_eq!(builds, [512_000_000, 128_000_000, 32_000_000]);

        let right = annotate(&right_deep_shape(&[3, 2, 1, 0]).unwrap(), &q).unwrap();
        fn probes_of(node: &PlanNode, out: &mut Vec<u64>) {
            if let PlanNode::HashJoin { probe, .. } = node {
                out.push(probe.output().cardinality);
                probes_of(probe, out);
            }
        }
        let mut probes = Vec::new();
        probes_of(&right, &mut probes);
        assert_eq!(probes, [2_048_000_000; 3]);
    }

    #[test]
    fn selectivity_propagates() {
        let q = ChainQuery::new(
            vec![RelationStats::narrow(2_048_000_000), RelationStats::narrow(512_000_000)],
            vec![JoinSpec::with_match_probability(0.25)],
        )
        .unwrap();
        let plans = enumerate_plans(&q).unwrap();
        assert_eq!(plans.len(), 2);
        assert!(plans.iter().all(|p| p.plan.output().cardinality == 512_000_000));
    }

    #[test]
    fn non_contiguous_rejected() {
        let q = ChainQuery::ratio_chain(64, 2, 3).unwrap();
        let bad = PlanShape::join(PlanShape::join(PlanShape::Leaf(0), PlanShape::Leaf(2)), PlanShape::Leaf(1));
        assert!(matches!(annotate(&bad, &q), Err(Error::NonContiguous(_))));
        assert!(matches!(annotate(&PlanShape::Leaf(7), &q), Err(Error::UnknownRelation(7))));
    }

    #[test]
    fn propagate_replaces_stale_stats() {
        let q = ChainQuery::ratio_chain(4096, 4, 3).unwrap();
        let stale = PlanNode::join(
            PlanNode::scan(2, RelationStats::narrow(1)),
            PlanNode::join(PlanNode::scan(1, RelationStats::narrow(1)), PlanNode::scan(0, RelationStats::narrow(1)), RelationStats::narrow(1), 16),
            RelationStats::narrow(1),
            16,
        );
        let fresh = propagate_cardinalities(&stale, &q).unwrap();
        assert_eq!(fresh.output().cardinality, 4096);
        assert_eq!(fresh, annotate(&PlanShape::of(&stale), &q).unwrap());
    }
}
