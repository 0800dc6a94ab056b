//! The memory I/O cost model: per-operator cache-line event counts, their
//! composition over a join tree, and the weighted cost.

mod closed_form;
mod counts;
mod operators;
mod plan;
mod profile;
mod relation;

pub use closed_form::{
    deep_rr_gap, left_deep_closed_form, left_deep_tree, right_deep_closed_form, right_deep_tree,
};
pub use counts::{predicted_cost, AccessCounts, AccessPattern, WeightVector};
pub use operators::{bucket_write_events, build_counts, extra_probe_lines, probe_counts, scan_counts, SwMode};
pub use plan::{operator_counts, plan_counts, PlanNode};
pub use profile::{BootstrapMeta, MachineProfile};
pub use relation::{HashTableSpec, RelationStats, DEFAULT_HEADER_BYTES, DEFAULT_TUPLE_WIDTH};
