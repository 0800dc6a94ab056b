//! Ground truth: synthetic data, the parallel non-partitioned hash join
//! and the cache-line access oracle.

mod data;
mod executor;
mod hash_table;
mod oracle;
mod reference;

pub use data::{generate_relation, matching_tuples, Database, Relation};
pub use executor::{available_memory, default_workers, execute_plan, required_bytes, ExecOptions, ExecutionReport, Phase, DEFAULT_BATCH};
pub use hash_table::{HashKind, HashTable, OverflowArena};
pub use oracle::{simulate_counts, simulate_counts_from_stats, OracleCounts};
pub use reference::nested_loop_chain;
