//! Chain queries and the space of cross-product-free hash-join trees over them.

mod enumerate;
mod naming;
mod query;
mod shape;

pub use enumerate::{
    annotate, enumerate_plans, enumerate_shapes, left_deep_shape, plan_count, propagate_cardinalities,
    right_deep_shape, NamedPlan,
};
pub use naming::{parse_plan_name, parse_plan_text, plan_name, shape_name, TreeShape};
pub use query::{ChainQuery, JoinSpec};
pub use shape::PlanShape;
