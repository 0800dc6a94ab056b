use std::fmt;

use crate::model::PlanNode;

/// Unannotated join tree: just relation ids and build/probe structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PlanShape {
    Leaf(usize),
    Join { build: Box<PlanShape>, probe: Box<PlanShape> },
}

impl PlanShape {
    pub fn join(build: PlanShape, probe: PlanShape) -> Self {
        PlanShape::Join { build: Box::new(build), probe: Box::new(probe) }
    }

    pub fn of(plan: &PlanNode) -> Self {
        match plan {
            PlanNode::Scan { relation, .. } => PlanShape::Leaf(*relation),
            PlanNode::HashJoin { build, probe, .. } => PlanShape::join(PlanShape::of(build), PlanShape::of(probe)),
        }
    }

    pub fn leaves(&self) -> Vec<usize> {
        match self {
            PlanShape::Leaf(id) => vec![*id],
            PlanShape::Join { build, probe } => {
                let mut v = build.leaves();
                v.extend(probe.leaves());
                v
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            PlanShape::Leaf(_) => 1,
            PlanShape::Join { build, probe } => build.leaf_count() + probe.leaf_count(),
        }
    }

    /// Single-line text form: `scan:<id>` or `join(<build>,<probe>)`.
    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for PlanShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PlanShape::Leaf(id) => write!(f, "scan:{id}"),
            PlanShape::Join { build, probe } => write!(f, "join({build},{probe})"),
        }
    }
}
