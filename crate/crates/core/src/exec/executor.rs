//! Pipelined plan execution. Each hash join's build child is evaluated to
//! completion, one subtree at a time and with all workers, before the
//! probe pipeline that uses it starts.

use std::time::Instant;

use serde::Serialize;

use super::data::Database;
use super::hash_table::{HashKind, HashTable, OverflowArena};
use crate::error::{Error, Result};
use crate::model::PlanNode;

pub const DEFAULT_BATCH: usize = 1024;
const PREFETCH_DISTANCE: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecOptions {
    pub workers: usize,
    pub batch_size: usize,
    pub prefetch: bool,
    pub hash: HashKind,
}

impl Default for ExecOptions {
    fn default() -> Self {
        ExecOptions { workers: default_workers(), batch_size: DEFAULT_BATCH, prefetch: true, hash: HashKind::default() }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

/// `MemAvailable` from the kernel, where the platform exposes it.
pub fn available_memory() -> Option<u64> {
    let info = std::fs::read_to_string("/proc/meminfo").ok()?;
    let line = info.lines().find(|l| l.starts_with("MemAvailable:"))?;
    let kib: u64 = line.split_whitespace().nth(1)?.parse().ok()?;
    Some(kib * 1024)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Phase {
    pub label: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExecutionReport {
    pub total_seconds: f64,
    pub phases: Vec<Phase>,
    /// `SUM(a + b)` over the result tuples.
    pub aggregate: u128,
    pub output_cardinality: u64,
    pub peak_bytes: u64,
}

/// Join tree with tables resolved and sides fixed. An intermediate over the
/// relation range `i..=j` travels as the pair `(R_i.a, R_j.b)`.
enum Node {
    Scan(usize),
    Join { build: Box<Node>, probe: Box<Node>, table: usize, build_left: bool },
}

fn lower(plan: &PlanNode, db: &Database, tables: &mut Vec<HashTable>, hash: HashKind) -> Result<Node> {
    match plan {
        PlanNode::Scan { relation, .. } => {
            db.relation(*relation)?;
            Ok(Node::Scan(*relation))
        }
        PlanNode::HashJoin { build, probe, build_table, .. } => {
            let (b_lo, b_hi) = build.leaf_range();
            let (p_lo, p_hi) = probe.leaf_range();
            let build_left = if b_hi + 1 == p_lo {
                true
            } else if p_hi + 1 == b_lo {
                false
            } else {
                return Err(Error::NonContiguous(plan.leaves()));
            };
            let table = tables.len();
            tables.push(HashTable::for_spec(build_table, hash)?);
            Ok(Node::Join {
                build: Box::new(lower(build, db, tables, hash)?),
                probe: Box::new(lower(probe, db, tables, hash)?),
                table,
                build_left,
            })
        }
    }
}

#[derive(Clone, Copy)]
struct Stage<'t> {
    table: &'t HashTable,
    /// The probe input sits right of the build input, so it joins on `a`.
    probe_on_a: bool,
}

impl Stage<'_> {
    #[inline]
    fn key(&self, t: [u64; 2]) -> u64 {
        if self.probe_on_a {
            t[0]
        } else {
            t[1]
        }
    }

    fn run(&self, input: &[[u64; 2]], out: &mut Vec<[u64; 2]>, prefetch: bool) {
        out.clear();
        for (i, &t) in input.iter().enumerate() {
            if prefetch {
                if let Some(&ahead) = input.get(i + PREFETCH_DISTANCE) {
                    self.table.prefetch(self.key(ahead));
                }
            }
            if self.probe_on_a {
                self.table.probe(t[0], |payload| out.push([payload, t[1]]));
            } else {
                self.table.probe(t[1], |payload| out.push([t[0], payload]));
            }
        }
    }
}

#[derive(Clone, Copy)]
enum Sink<'t> {
    Insert { table: &'t HashTable, key_is_b: bool },
    Aggregate,
}

#[derive(Default)]
struct Partial {
    sum: u128,
    count: u64,
    arena: Option<OverflowArena>,
}

struct Executor<'a> {
    db: &'a Database,
    opts: &'a ExecOptions,
    phases: Vec<Phase>,
}

impl Executor<'_> {
    /// Runs the pipeline rooted at `node` into `sink` (a table and whether
    /// it is keyed on `b`, or the final aggregate). Returns the per-worker
    /// partial results.
    fn pipeline(&mut self, node: &Node, tables: &mut [HashTable], sink: Option<(usize, bool)>) -> Vec<Partial> {
        let mut spine = Vec::new();
        let mut cur = node;
        while let Node::Join { build, probe, table, build_left } = cur {
            spine.push((build.as_ref(), *table, *build_left));
            cur = probe;
        }
        let &Node::Scan(leaf) = cur else { unreachable!("probe spine ends in a scan") };

        for &(build, table, build_left) in spine.iter().rev() {
            let parts = self.pipeline(build, tables, Some((table, build_left)));
            tables[table].seal(parts.into_iter().filter_map(|p| p.arena));
        }

        let started = Instant::now();
        let tables: &[HashTable] = tables;
        let stages: Vec<Stage> =
            spine.iter().rev().map(|&(_, t, build_left)| Stage { table: &tables[t], probe_on_a: build_left }).collect();
        let sink = match sink {
            Some((t, key_is_b)) => Sink::Insert { table: &tables[t], key_is_b },
            None => Sink::Aggregate,
        };
        let rel = &self.db.relations[leaf];
        let n = rel.len();
        let workers = self.opts.workers.clamp(1, n.max(1));
        let opts = self.opts;
        let work = |w: usize| -> Partial {
            let (lo, hi) = (n * w / workers, n * (w + 1) / workers);
            let mut acc = Partial::default();
            let mut arena = OverflowArena::new(w as u16);
            let mut input = Vec::with_capacity(opts.batch_size);
            let mut output = Vec::with_capacity(opts.batch_size);
            let mut start = lo;
            while start < hi {
                let end = (start + opts.batch_size).min(hi);
                input.clear();
                input.extend(rel.a[start..end].iter().zip(&rel.b[start..end]).map(|(&a, &b)| [a, b]));
                for stage in &stages {
                    stage.run(&input, &mut output, opts.prefetch);
                    std::mem::swap(&mut input, &mut output);
                }
                match sink {
                    Sink::Insert { table, key_is_b } => {
                        let key = |t: [u64; 2]| if key_is_b { t[1] } else { t[0] };
                        for (i, &[a, b]) in input.iter().enumerate() {
                            if opts.prefetch {
                                if let Some(&ahead) = input.get(i + PREFETCH_DISTANCE) {
                                    table.prefetch(key(ahead));
                                }
                            }
                            if key_is_b {
                                table.insert(b, a, &mut arena);
                            } else {
                                table.insert(a, b, &mut arena);
                            }
                        }
                    }
                    Sink::Aggregate => {
                        acc.count += input.len() as u64;
                        acc.sum += input.iter().map(|&[a, b]| u128::from(a) + u128::from(b)).sum::<u128>();
                    }
                }
                start = end;
            }
            acc.arena = Some(arena);
            acc
        };
        let parts: Vec<Partial> = if workers == 1 {
            vec![work(0)]
        } else {
            std::thread::scope(|s| {
                let handles: Vec<_> = (0..workers).map(|w| s.spawn(move || work(w))).collect();
                handles.into_iter().map(|h| h.join().expect("pipeline worker panicked")).collect()
            })
        };
        let label = match sink {
            Sink::Insert { .. } => format!("build<-scan:{leaf}+{}", stages.len()),
            Sink::Aggregate => format!("probe<-scan:{leaf}+{}", stages.len()),
        };
        self.phases.push(Phase { label, seconds: started.elapsed().as_secs_f64() });
        parts
    }
}

/// Runs `plan` over `db` and aggregates the result. Hash tables are
/// allocated and touched before the clock starts.
pub fn execute_plan(plan: &PlanNode, db: &Database, opts: &ExecOptions) -> Result<ExecutionReport> {
    if opts.workers == 0 || opts.batch_size == 0 {
        return Err(Error::invalid("workers and batch size must be positive"));
    }
    if opts.workers > usize::from(u16::MAX) {
        return Err(Error::invalid(format!("at most {} workers are supported", u16::MAX)));
    }
    let mut tables = Vec::new();
    let root = lower(plan, db, &mut tables, opts.hash)?;
    let mut exec = Executor { db, opts, phases: Vec::new() };
    let started = Instant::now();
    let parts = exec.pipeline(&root, &mut tables, None);
    let total_seconds = started.elapsed().as_secs_f64();
    let peak_bytes = db.bytes() + tables.iter().map(HashTable::bytes).sum::<u64>();
    Ok(ExecutionReport {
        total_seconds,
        phases: exec.phases,
        aggregate: parts.iter().map(|p| p.sum).sum(),
        output_cardinality: parts.iter().map(|p| p.count).sum(),
        peak_bytes,
    })
}

/// Bytes the executor will hold for `plan`: base data plus every table.
pub fn required_bytes(plan: &PlanNode, db_bytes: u64) -> u64 {
    fn tables(p: &PlanNode) -> u64 {
        match p {
            PlanNode::Scan { .. } => 0,
            PlanNode::HashJoin { build, probe, build_table, .. } => {
                build_table.bucket_count * (16 + 16 * build_table.tuples_per_bucket.max(1)) + tables(build) + tables(probe)
            }
        }
    }
    db_bytes + tables(plan)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exec::reference::nested_loop_chain;
    use crate::plan_space::{enumerate_plans, ChainQuery, JoinSpec};
    use crate::RelationStats;

    fn opts(workers: usize) -> ExecOptions {
        ExecOptions { workers, batch_size: 64, prefetch: true, hash: HashKind::Multiplicative }
    }

    #[test]
    fn every_plan_matches_nested_loops() {
        let q = ChainQuery::ratio_chain(2048, 4, 4).unwrap();
        let db = Database::generate(&q, 42).unwrap();
        let (count, sum) = nested_loop_chain(&db);
        assert_eq!(count, 2048);
        for p in enumerate_plans(&q).unwrap() {
            for w in [1, 3] {
                let r = execute_plan(&p.plan, &db, &opts(w)).unwrap();
                assert_eq!((r.output_cardinality, r.aggregate), (count, sum), "{} with {w} workers", p.name);
            }
        }
    }

    #[test]
    fn single_join_aggregate() {
        let q = ChainQuery::ratio_chain(10_000, 1, 2).unwrap();
        let db = Database::generate(&q, 1).unwrap();
        let p = &enumerate_plans(&q).unwrap()[0];
        let r = execute_plan(&p.plan, &db, &opts(2)).unwrap();
        assert_eq!(r.output_cardinality, 10_000);
        // Each R_0 tuple meets the R_1 tuple keyed by its b; sum a over R_0
        // plus b over R_1 since the reference is a bijection.
        let expect: u128 = db.relations[0].a.iter().map(|&a| u128::from(a)).sum::<u128>()
            + db.relations[1].b.iter().map(|&b| u128::from(b)).sum::<u128>();
        assert_eq!(r.aggregate, expect);
        assert_eq!(r.aggregate, nested_loop_chain(&db).1);
    }

    #[test]
    fn quarter_match_probability() {
        let rels = vec![RelationStats::narrow(4000), RelationStats::narrow(1000)];
        let q = ChainQuery::new(rels, vec![JoinSpec::with_match_probability(0.25)]).unwrap();
        let db = Database::generate(&q, 3).unwrap();
        for p in enumerate_plans(&q).unwrap() {
            let r = execute_plan(&p.plan, &db, &opts(2)).unwrap();
            assert_eq!(r.output_cardinality, 1000);
        }
    }

    #[test]
    fn zipf_and_selectivity_chains() {
        let rels: Vec<_> = [3000, 1500, 700, 300].into_iter().map(RelationStats::narrow).collect();
        let specs = vec![JoinSpec::zipf(1.0), JoinSpec::with_match_probability(0.5), JoinSpec::zipf(0.5)];
        let q = ChainQuery::new(rels, specs).unwrap();
        let db = Database::generate(&q, 8).unwrap();
        let expect = nested_loop_chain(&db);
        for p in enumerate_plans(&q).unwrap() {
            let r = execute_plan(&p.plan, &db, &opts(2)).unwrap();
            assert_eq!((r.output_cardinality, r.aggregate), expect, "{}", p.name);
        }
    }

    #[test]
    fn deterministic_across_workers_and_options() {
        let q = ChainQuery::ratio_chain(4096, 4, 3).unwrap();
        let db = Database::generate(&q, 5).unwrap();
        let plans = enumerate_plans(&q).unwrap();
        let base = execute_plan(&plans[0].plan, &db, &opts(1)).unwrap();
        for p in &plans {
            for o in [
                opts(4),
                ExecOptions { prefetch: false, batch_size: 1, ..opts(2) },
                ExecOptions { hash: HashKind::IdentityMod, ..opts(2) },
            ] {
                let r = execute_plan(&p.plan, &db, &o).unwrap();
                assert_eq!(r.aggregate, base.aggregate);
            }
        }
    }

    #[test]
    fn report_accounting() {
        let q = ChainQuery::ratio_chain(4096, 4, 4).unwrap();
        let db = Database::generate(&q, 5).unwrap();
        let p = &enumerate_plans(&q).unwrap()[0];
        let r = execute_plan(&p.plan, &db, &opts(2)).unwrap();
        assert_eq!(r.phases.len(), 4, "three builds and the final probe pipeline: {:?}", r.phases);
        assert!(r.phases.iter().map(|p| p.seconds).sum::<f64>() <= r.total_seconds);
        assert!(r.peak_bytes >= db.bytes());
    }

    #[test]
    fn unknown_relation_and_bad_options() {
        let q = ChainQuery::ratio_chain(64, 4, 2).unwrap();
        let db = Database::generate(&q, 5).unwrap();
        let plan = PlanNode::scan(7, RelationStats::narrow(4));
        assert!(matches!(execute_plan(&plan, &db, &opts(1)), Err(Error::UnknownRelation(7))));
        let p = &enumerate_plans(&q).unwrap()[0];
        assert!(execute_plan(&p.plan, &db, &opts(0)).is_err());
    }
}
