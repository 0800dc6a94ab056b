//! Closed-form counts for deep trees over a chain `R_0 .. R_n`, plus the
//! left/right-deep random-read gap for primary key to foreign key chains.
//!
//! Right-deep: every `R_i` (`i < n`) is built, and the stream `I_i` probes
//! the table on `R_{i-1}`, starting from `I_n = R_n`.
//! Left-deep: every intermediate `I_i` is built, starting from `I_n = R_0`,
//! and each base relation `R_i` (`i >= 1`) probes the table on `I_{n-i+1}`.
//!
//! Both functions take `intermediates` as `[I_1, .., I_n]` and one table
//! spec per built input, in the same index order as the built inputs.

use super::counts::AccessCounts;
use super::operators::{bucket_write_events, charged_tuples, extra_probe_lines, scan_counts, SwMode};
use super::plan::PlanNode;
use super::relation::{HashTableSpec, RelationStats};
use crate::error::{Error, Result};

fn check_lengths(rels: &[RelationStats], intermediates: &[RelationStats], specs: &[HashTableSpec]) -> Result<usize> {
    if rels.len() < 2 {
        return Err(Error::invalid("a chain needs at least two relations"));
    }
    let n = rels.len() - 1;
    if intermediates.len() != n {
        return Err(Error::LengthMismatch { what: "intermediates", expected: n, actual: intermediates.len() });
    }
    if specs.len() != n {
        return Err(Error::LengthMismatch { what: "hash table specs", expected: n, actual: specs.len() });
    }
    Ok(n)
}

fn check_specs(built: &[RelationStats], specs: &[HashTableSpec]) -> Result<()> {
    for (i, (rel, spec)) in built.iter().zip(specs).enumerate() {
        if !spec.is_consistent_with(rel) {
            return Err(Error::invalid(format!("hash table spec {i} was not sized for its input")));
        }
    }
    Ok(())
}

fn sw_term(input: &RelationStats, spec: &HashTableSpec, cl: u64, mode: SwMode) -> u64 {
    spec.bucket_count * bucket_write_events(charged_tuples(spec, cl, mode), u64::from(input.tuple_width), cl)
}

fn scans(rels: &[RelationStats], cl: u64) -> u64 {
    rels.iter().map(|r| scan_counts(r, cl).sr).sum()
}

pub fn right_deep_closed_form(
    rels: &[RelationStats],
    intermediates: &[RelationStats],
    specs: &[HashTableSpec],
    cl: u64,
    mode: SwMode,
) -> Result<AccessCounts> {
    let n = check_lengths(rels, intermediates, specs)?;
    if intermediates[n - 1].cardinality != rels[n].cardinality {
        return Err(Error::invalid("right-deep chains start the probe stream at R_n"));
    }
    check_specs(&rels[..n], specs)?;

    // I_i probes the table on R_{i-1}; index i-1 in both slices.
    let probe_sr: u64 = intermediates.iter().zip(specs).map(|(i, s)| i.cardinality * extra_probe_lines(s, cl)).sum();
    Ok(AccessCounts {
        sr: scans(rels, cl) + probe_sr,
        rr: intermediates.iter().map(|i| i.cardinality).sum(),
        sw: rels[..n].iter().zip(specs).map(|(r, s)| sw_term(r, s, cl, mode)).sum(),
        rw: rels[..n].iter().map(|r| r.cardinality).sum(),
    })
}

pub fn left_deep_closed_form(
    rels: &[RelationStats],
    intermediates: &[RelationStats],
    specs: &[HashTableSpec],
    cl: u64,
    mode: SwMode,
) -> Result<AccessCounts> {
    let n = check_lengths(rels, intermediates, specs)?;
    if intermediates[n - 1].cardinality != rels[0].cardinality {
        return Err(Error::invalid("left-deep chains start the build side at R_0"));
    }
    check_specs(intermediates, specs)?;

    // R_i probes the table on I_{n-i+1}, which sits at index n-i.
    let probe_sr: u64 = (1..=n).map(|i| rels[i].cardinality * extra_probe_lines(&specs[n - i], cl)).sum();
    Ok(AccessCounts {
        sr: scans(rels, cl) + probe_sr,
        rr: rels[1..].iter().map(|r| r.cardinality).sum(),
        sw: intermediates.iter().zip(specs).map(|(i, s)| sw_term(i, s, cl, mode)).sum(),
        rw: intermediates.iter().map(|i| i.cardinality).sum(),
    })
}

/// `R_0 ⋈ (R_1 ⋈ (.. ⋈ (R_{n-1} ⋈ R_n)))` with the base relations on the
/// build side. Relation ids are positions in `rels`.
pub fn right_deep_tree(
    rels: &[RelationStats],
    intermediates: &[RelationStats],
    specs: &[HashTableSpec],
    root_output: RelationStats,
) -> Result<PlanNode> {
    let n = check_lengths(rels, intermediates, specs)?;
    let mut tree = PlanNode::scan(n, rels[n]);
    for i in (1..=n).rev() {
        let output = if i == 1 { root_output } else { intermediates[i - 2] };
        tree = PlanNode::HashJoin {
            build: Box::new(PlanNode::scan(i - 1, rels[i - 1])),
            probe: Box::new(tree),
            build_table: specs[i - 1],
            output,
        };
    }
    Ok(tree)
}

/// `((R_0 ⋈ R_1) ⋈ ..) ⋈ R_n` with the intermediates on the build side.
pub fn left_deep_tree(
    rels: &[RelationStats],
    intermediates: &[RelationStats],
    specs: &[HashTableSpec],
    root_output: RelationStats,
) -> Result<PlanNode> {
    let n = check_lengths(rels, intermediates, specs)?;
    let mut tree = PlanNode::scan(0, rels[0]);
    for i in 1..=n {
        // Builds I_{n-i+1}, emits I_{n-i}.
        let output = if i == n { root_output } else { intermediates[n - i - 1] };
        tree = PlanNode::HashJoin {
            build: Box::new(tree),
            probe: Box::new(PlanNode::scan(i, rels[i])),
            build_table: specs[n - i],
            output,
        };
    }
    Ok(tree)
}

/// How many more random reads a right-deep tree performs than a left-deep
/// one over a primary key to foreign key chain sorted by cardinality:
/// `n * |R_n| - sum_{i=1..n} |R_i|`.
pub fn deep_rr_gap(rels: &[RelationStats]) -> Result<i64> {
    if rels.is_empty() {
        return Err(Error::invalid("empty chain"));
    }
    if let Some(i) = rels.windows(2).position(|w| w[0].cardinality > w[1].cardinality) {
        return Err(Error::Unsorted(i + 1));
    }
    let n = rels.len() - 1;
    let largest = rels[n].cardinality as i64;
    let tail: i64 = rels[1..].iter().map(|r| r.cardinality as i64).sum();
    Ok(n as i64 * largest - tail)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::plan::plan_counts;

    fn narrow(cards: &[u64]) -> Vec<RelationStats> {
        cards.iter().map(|&c| RelationStats::narrow(c)).collect()
    }

    fn sized(rels: &[RelationStats]) -> Vec<HashTableSpec> {
        rels.iter().map(|r| HashTableSpec::sized_for(*r, 16)).collect()
    }

    /// PK-FK chain sorted ascending: right-deep streams R_n all the way.
    fn right_instance(cards: &[u64]) -> (Vec<RelationStats>, Vec<RelationStats>, Vec<HashTableSpec>) {
        let rels = narrow(cards);
        let n = rels.len() - 1;
        let inter = vec![rels[n]; n];
        let specs = sized(&rels[..n]);
        (rels, inter, specs)
    }

    /// Left-deep: I_k = R_{n-k}.
    fn left_instance(cards: &[u64]) -> (Vec<RelationStats>, Vec<RelationStats>, Vec<HashTableSpec>) {
        let rels = narrow(cards);
        let n = rels.len() - 1;
        let inter: Vec<_> = (1..=n).map(|k| rels[n - k]).collect();
        let specs = sized(&inter);
        (rels, inter, specs)
    }

    const CHAIN: [u64; 4] = [32_000_000, 128_000_000, 512_000_000, 2_048_000_000];

    #[test]
    fn right_deep_matches_recursion() {
        let (rels, inter, specs) = right_instance(&CHAIN);
        let closed = right_deep_closed_form(&rels, &inter, &specs, 64, SwMode::TableConsistent).unwrap();
        let tree = right_deep_tree(&rels, &inter, &specs, rels[3]).unwrap();
        assert_eq!(closed, plan_counts(&tree, 64, SwMode::TableConsistent));
        assert_eq!(closed.rr, 3 * 2_048_000_000);
        assert_eq!(tree.leaves(), vec![0, 1, 2, 3]);
        assert!(tree.is_right_deep());
    }

    #[test]
    fn left_deep_matches_recursion() {
        let (rels, inter, specs) = left_instance(&CHAIN);
        let closed = left_deep_closed_form(&rels, &inter, &specs, 64, SwMode::TableConsistent).unwrap();
        let tree = left_deep_tree(&rels, &inter, &specs, rels[3]).unwrap();
        assert_eq!(closed, plan_counts(&tree, 64, SwMode::TableConsistent));
        assert_eq!(closed.rr, 128_000_000 + 512_000_000 + 2_048_000_000);
        assert!(tree.is_left_deep());
    }

    #[test]
    fn single_join_forms_coincide() {
        let (rels, inter, specs) = right_instance(&[100, 400]);
        let r = right_deep_closed_form(&rels, &inter, &specs, 64, SwMode::TableConsistent).unwrap();
        let (rels, inter, specs) = left_instance(&[100, 400]);
        let l = left_deep_closed_form(&rels, &inter, &specs, 64, SwMode::TableConsistent).unwrap();
        assert_eq!(r, l);
    }

    #[test]
    fn rr_gap_examples() {
        assert_eq!(deep_rr_gap(&narrow(&[7, 7, 7, 7])).unwrap(), 0);
        assert_eq!(deep_rr_gap(&narrow(&CHAIN)).unwrap(), 3_456_000_000);
        assert_eq!(deep_rr_gap(&narrow(&[5, 9])).unwrap(), 0);
        assert!(matches!(deep_rr_gap(&narrow(&[9, 5])), Err(Error::Unsorted(1))));
    }

    #[test]
    fn length_and_anchor_errors() {
        let (rels, inter, specs) = right_instance(&CHAIN);
        assert!(right_deep_closed_form(&rels, &inter[..2], &specs, 64, SwMode::TableConsistent).is_err());
        assert!(right_deep_closed_form(&rels, &inter, &specs[..1], 64, SwMode::TableConsistent).is_err());
        let (rels, inter, specs) = left_instance(&CHAIN);
        assert!(right_deep_closed_form(&rels, &inter, &specs, 64, SwMode::TableConsistent).is_err());
        assert!(left_deep_closed_form(&rels[..1], &[], &[], 64, SwMode::TableConsistent).is_err());
    }
}
