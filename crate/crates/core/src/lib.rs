//! Memory I/O cost model for multi-join hash plans over memory-resident
//! data, together with the machinery to check it: a calibration benchmark,
//! a parallel non-partitioned hash-join executor, a cache-line access
//! simulator and a linear disk-I/O baseline.

pub mod analysis;
pub mod bootstrap;
pub mod error;
pub mod exec;
pub mod experiment;
pub mod model;
pub mod plan_space;

pub use error::{Error, Result};
pub use model::{
    plan_counts, predicted_cost, AccessCounts, AccessPattern, HashTableSpec, MachineProfile, PlanNode, RelationStats,
    SwMode, WeightVector,
};
pub use plan_space::{enumerate_plans, ChainQuery, JoinSpec, NamedPlan};
