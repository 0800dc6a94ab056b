//! Plan names such as `L3210` or `RB0132` for four-relation trees, a
//! parenthesized fallback for everything else, and the `scan:`/`join(`
//! text grammar.

use super::shape::PlanShape;
use crate::error::{Error, Result};
use crate::model::PlanNode;

/// The five ordered tree shapes over four leaves, build child first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TreeShape {
    /// `((a b) c) d`
    LeftDeep,
    /// `(a (b c)) d`
    LeftBushy,
    /// `(a b) (c d)`
    Bushy,
    /// `a ((b c) d)`
    RightBushy,
    /// `a (b (c d))`
    RightDeep,
}

impl TreeShape {
    pub fn prefix(self) -> &'static str {
        match self {
            TreeShape::LeftDeep => "L",
            TreeShape::LeftBushy => "LB",
            TreeShape::Bushy => "B",
            TreeShape::RightBushy => "RB",
            TreeShape::RightDeep => "R",
        }
    }

    pub fn classify(shape: &PlanShape) -> Option<TreeShape> {
        use PlanShape::{Join, Leaf};
        let Join { build, probe } = shape else { return None };
        if shape.leaf_count() != 4 {
            return None;
        }
        match (build.as_ref(), probe.as_ref()) {
            (Join { build: b, probe: p }, Leaf(_)) => match (b.as_ref(), p.as_ref()) {
                (Join { .. }, Leaf(_)) => Some(TreeShape::LeftDeep),
                (Leaf(_), Join { .. }) => Some(TreeShape::LeftBushy),
                _ => None,
            },
            (Leaf(_), Join { build: b, probe: p }) => match (b.as_ref(), p.as_ref()) {
                (Join { .. }, Leaf(_)) => Some(TreeShape::RightBushy),
                (Leaf(_), Join { .. }) => Some(TreeShape::RightDeep),
                _ => None,
            },
            (Join { .. }, Join { .. }) => Some(TreeShape::Bushy),
            _ => None,
        }
    }

    fn build(self, l: [usize; 4]) -> PlanShape {
        let leaf = PlanShape::Leaf;
        let j = PlanShape::join;
        let [a, b, c, d] = l;
        match self {
            TreeShape::LeftDeep => j(j(j(leaf(a), leaf(b)), leaf(c)), leaf(d)),
            TreeShape::LeftBushy => j(j(leaf(a), j(leaf(b), leaf(c))), leaf(d)),
            TreeShape::Bushy => j(j(leaf(a), leaf(b)), j(leaf(c), leaf(d))),
            TreeShape::RightBushy => j(leaf(a), j(j(leaf(b), leaf(c)), leaf(d))),
            TreeShape::RightDeep => j(leaf(a), j(leaf(b), j(leaf(c), leaf(d)))),
        }
    }
}

fn parenthesized(shape: &PlanShape) -> String {
    match shape {
        PlanShape::Leaf(id) => id.to_string(),
        PlanShape::Join { build, probe } => format!("({} {})", parenthesized(build), parenthesized(probe)),
    }
}

pub fn shape_name(shape: &PlanShape) -> String {
    let leaves = shape.leaves();
    match TreeShape::classify(shape) {
        Some(kind) if leaves.iter().all(|&id| id < 10) => {
            let digits: String = leaves.iter().map(|&id| char::from(b'0' + id as u8)).collect();
            format!("{}{}", kind.prefix(), digits)
        }
        _ => parenthesized(shape),
    }
}

/// Shape letters plus leaf digits for four-leaf trees, otherwise a
/// build-first parenthesization such as `((2 1) 0)`.
pub fn plan_name(plan: &PlanNode) -> String {
    shape_name(&PlanShape::of(plan))
}

fn syntax(input: &str, reason: impl Into<String>) -> Error {
    Error::PlanSyntax { input: input.to_string(), reason: reason.into() }
}

/// Inverse of [`plan_name`].
pub fn parse_plan_name(name: &str) -> Result<PlanShape> {
    let name = name.trim();
    if name.starts_with('(') {
        return parse_parenthesized(name);
    }
    let (kind, digits) = [
        ("LB", TreeShape::LeftBushy),
        ("RB", TreeShape::RightBushy),
        ("L", TreeShape::LeftDeep),
        ("B", TreeShape::Bushy),
        ("R", TreeShape::RightDeep),
    ]
    .iter()
    .find_map(|(p, k)| name.strip_prefix(p).map(|rest| (*k, rest)))
    .ok_or_else(|| syntax(name, "unknown shape prefix"))?;
    let ids: Vec<usize> = digits
        .chars()
        .map(|c| c.to_digit(10).map(|d| d as usize))
        .collect::<Option<_>>()
        .ok_or_else(|| syntax(name, "leaf list must be decimal digits"))?;
    let leaves: [usize; 4] = ids.try_into().map_err(|_| syntax(name, "expected exactly four leaves"))?;
    Ok(kind.build(leaves))
}

struct Cursor<'a> {
    input: &'a str,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(input: &'a str) -> Self {
        Cursor { input, pos: 0 }
    }

    fn rest(&self) -> &'a str {
        &self.input[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.input.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(syntax(self.input, format!("expected {token:?} at byte {}", self.pos)))
        }
    }

    fn number(&mut self) -> Result<usize> {
        self.skip_ws();
        let len = self.rest().bytes().take_while(u8::is_ascii_digit).count();
        if len == 0 {
            return Err(syntax(self.input, format!("expected relation id at byte {}", self.pos)));
        }
        let value = self.rest()[..len].parse().map_err(|_| syntax(self.input, "relation id overflows"))?;
        self.pos += len;
        Ok(value)
    }

    fn finish(mut self, shape: PlanShape) -> Result<PlanShape> {
        self.skip_ws();
        if self.rest().is_empty() {
            Ok(shape)
        } else {
            Err(syntax(self.input, format!("trailing input at byte {}", self.pos)))
        }
    }
}

fn parse_parenthesized(name: &str) -> Result<PlanShape> {
    fn node(c: &mut Cursor<'_>) -> Result<PlanShape> {
        if c.eat("(") {
            let build = node(c)?;
            let probe = node(c)?;
            c.expect(")")?;
            Ok(PlanShape::join(build, probe))
        } else {
            c.number().map(PlanShape::Leaf)
        }
    }
    let mut c = Cursor::new(name);
    let shape = node(&mut c)?;
    c.finish(shape)
}

/// Parse the `scan:<id>` / `join(<build>,<probe>)` grammar.
pub fn parse_plan_text(text: &str) -> Result<PlanShape> {
    fn node(c: &mut Cursor<'_>) -> Result<PlanShape> {
        if c.eat("scan:") {
            c.number().map(PlanShape::Leaf)
        } else if c.eat("join(") {
            let build = node(c)?;
            c.expect(",")?;
            let probe = node(c)?;
            c.expect(")")?;
            Ok(PlanShape::join(build, probe))
        } else {
            Err(syntax(c.input, format!("expected scan: or join( at byte {}", c.pos)))
        }
    }
    let mut c = Cursor::new(text);
    let shape = node(&mut c)?;
    c.finish(shape)
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeMap, BTreeSet};

    use super::*;
    use crate::plan_space::enumerate::{enumerate_shapes, left_deep_shape, right_deep_shape};

    #[test]
    fn deep_names() {
        assert_eq!(shape_name(&left_deep_shape(&[3, 2, 1, 0]).unwrap()), "L3210");
        assert_eq!(shape_name(&right_deep_shape(&[3, 2, 1, 0]).unwrap()), "R3210");
    }

    #[test]
    fn four_leaf_names_round_trip() {
        let shapes = enumerate_shapes(0, 3);
        let mut per_kind: BTreeMap<&str, usize> = BTreeMap::new();
        let mut names = BTreeSet::new();
        for s in &shapes {
            let name = shape_name(s);
            assert_eq!(&parse_plan_name(&name).unwrap(), s, "{name}");
            *per_kind.entry(TreeShape::classify(s).unwrap().prefix()).or_default() += 1;
            names.insert(name);
        }
        assert_eq!(names.len(), 40);
        assert_eq!(per_kind.len(), 5);
        for name in ["L3210", "L2310", "R0132", "R0123", "LB2103", "L1203", "L2130", "B3210"] {
            assert!(names.contains(name), "{name} missing");
        }
    }

    #[test]
    fn mirrored_single_join() {
        let a = shape_name(&PlanShape::join(PlanShape::Leaf(0), PlanShape::Leaf(1)));
        let b = shape_name(&PlanShape::join(PlanShape::Leaf(1), PlanShape::Leaf(0)));
        assert_eq!(a, "(0 1)");
        assert_eq!(b, "(1 0)");
        assert_eq!(parse_plan_name(&b).unwrap(), PlanShape::join(PlanShape::Leaf(1), PlanShape::Leaf(0)));
    }

    #[test]
    fn general_names_round_trip() {
        for s in enumerate_shapes(0, 5) {
            let name = shape_name(&s);
            assert!(name.starts_with('('));
            assert_eq!(parse_plan_name(&name).unwrap(), s);
        }
    }

    #[test]
    fn text_grammar() {
        let s = PlanShape::join(PlanShape::Leaf(12), PlanShape::join(PlanShape::Leaf(1), PlanShape::Leaf(0)));
        let text = s.to_text();
        assert_eq!(text, "join(scan:12,join(scan:1,scan:0))");
        assert_eq!(parse_plan_text(&text).unwrap(), s);
        assert_eq!(parse_plan_text(" join( scan:1 , scan:0 ) ").unwrap().leaves(), vec![1, 0]);
        for bad in ["", "scan:", "join(scan:1)", "join(scan:1,scan:2", "scan:1 x", "tree"] {
            assert!(parse_plan_text(bad).is_err(), "{bad:?}");
        }
    }

    #[test]
    fn bad_names() {
        for bad in ["X3210", "L321", "L32100", "Lab12", "(1 2", "(1 2) 3"] {
            assert!(parse_plan_name(bad).is_err(), "{bad:?}");
        }
    }
}
