use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{RelationStats, DEFAULT_HEADER_BYTES, DEFAULT_TUPLE_WIDTH};

/// Predicate `R_k.b = R_{k+1}.a` between neighbours of a chain, described
/// from the referencing side `R_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JoinSpec {
    /// Fraction of `R_k` tuples whose `b` value finds a matching key.
    #[serde(default = "one")]
    pub match_probability: f64,
    /// Matches per matching `R_k` tuple. The synthetic schema has unique
    /// keys, so generated data always realizes a fanout of one.
    #[serde(default = "one")]
    pub fanout: f64,
    /// Zipf exponent for the referenced keys; zero means uniform.
    #[serde(default)]
    pub zipf_factor: f64,
    /// Fraction of `R_{k+1}` keys that may be referenced at all.
    #[serde(default = "one")]
    pub key_fraction: f64,
}

fn one() -> f64 {
    1.0
}

impl Default for JoinSpec {
    fn default() -> Self {
        JoinSpec::pk_fk()
    }
}

impl JoinSpec {
    /// Every referencing tuple matches exactly one key.
    pub fn pk_fk() -> Self {
        JoinSpec { match_probability: 1.0, fanout: 1.0, zipf_factor: 0.0, key_fraction: 1.0 }
    }

    pub fn with_match_probability(p: f64) -> Self {
        JoinSpec { match_probability: p, ..JoinSpec::pk_fk() }
    }

    pub fn zipf(factor: f64) -> Self {
        JoinSpec { zipf_factor: factor, ..JoinSpec::pk_fk() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.match_probability) {
            return Err(Error::invalid(format!("match probability {} outside [0, 1]", self.match_probability)));
        }
        if !(self.fanout >= 0.0 && self.fanout.is_finite()) {
            return Err(Error::invalid(format!("fanout {} must be non-negative", self.fanout)));
        }
        if !(self.zipf_factor >= 0.0 && self.zipf_factor.is_finite()) {
            return Err(Error::invalid(format!("zipf factor {} must be non-negative", self.zipf_factor)));
        }
        if !(self.key_fraction > 0.0 && self.key_fraction <= 1.0) {
            return Err(Error::invalid(format!("key fraction {} outside (0, 1]", self.key_fraction)));
        }
        Ok(())
    }

    /// Join output per referencing tuple.
    pub fn selectivity(&self) -> f64 {
        self.match_probability * self.fanout
    }
}

/// `R_0 ⋈ R_1 ⋈ .. ⋈ R_n` where only neighbours share a predicate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainQuery {
    pub relations: Vec<RelationStats>,
    /// `joins[k]` connects `R_k` and `R_{k+1}`.
    pub joins: Vec<JoinSpec>,
    #[serde(default = "default_header")]
    pub header_bytes: u32,
    /// Width of every intermediate result: the two carried attributes.
    #[serde(default = "default_width")]
    pub intermediate_width: u32,
    /// Optional fixed bucket count for every hash table.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bucket_count: Option<u64>,
}

fn default_header() -> u32 {
    DEFAULT_HEADER_BYTES
}

fn default_width() -> u32 {
    DEFAULT_TUPLE_WIDTH
}

impl ChainQuery {
    pub fn new(relations: Vec<RelationStats>, joins: Vec<JoinSpec>) -> Result<Self> {
        let q = ChainQuery {
            relations,
            joins,
            header_bytes: DEFAULT_HEADER_BYTES,
            intermediate_width: DEFAULT_TUPLE_WIDTH,
            bucket_count: None,
        };
        q.validate()?;
        Ok(q)
    }

    /// PK-FK chain where `|R_k| = ratio * |R_{k+1}|`, `R_0` being the largest.
    pub fn ratio_chain(largest: u64, ratio: u64, relations: usize) -> Result<Self> {
        if relations < 2 || ratio == 0 {
            return Err(Error::invalid("a ratio chain needs two relations and a positive ratio"));
        }
        let mut card = largest;
        let mut rels = Vec::with_capacity(relations);
        for _ in 0..relations {
            rels.push(RelationStats::narrow(card));
            card /= ratio;
        }
        ChainQuery::new(rels, vec![JoinSpec::pk_fk(); relations - 1])
    }

    pub fn validate(&self) -> Result<()> {
        if self.relations.len() < 2 {
            return Err(Error::invalid("a chain query needs at least two relations"));
        }
        if self.joins.len() != self.relations.len() - 1 {
            return Err(Error::LengthMismatch {
                what: "join specs",
                expected: self.relations.len() - 1,
                actual: self.joins.len(),
            });
        }
        if self.relations.iter().any(|r| r.tuple_width == 0) || self.intermediate_width == 0 {
            return Err(Error::invalid("tuple widths must be at least one byte"));
        }
        if self.bucket_count == Some(0) {
            return Err(Error::invalid("bucket count must be positive"));
        }
        self.joins.iter().try_for_each(JoinSpec::validate)
    }

    /// Index of the last relation.
    pub fn n(&self) -> usize {
        self.relations.len() - 1
    }

    /// Estimated output of joining the contiguous range `lo..=hi`: the
    /// referencing end `R_lo` scaled by each crossed predicate.
    pub fn range_cardinality(&self, lo: usize, hi: usize) -> u64 {
        let base = self.relations[lo].cardinality as f64;
        let factor: f64 = self.joins[lo..hi].iter().map(JoinSpec::selectivity).product();
        (base * factor).round() as u64
    }

    pub fn range_stats(&self, lo: usize, hi: usize) -> RelationStats {
        if lo == hi {
            self.relations[lo]
        } else {
            RelationStats { cardinality: self.range_cardinality(lo, hi), tuple_width: self.intermediate_width }
        }
    }

    /// Multiply every cardinality by `factor`, keeping at least one tuple.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor > 0.0 && factor.is_finite()) {
            return Err(Error::invalid(format!("scale factor {factor} must be positive")));
        }
        let mut q = self.clone();
        for r in &mut q.relations {
            r.cardinality = ((r.cardinality as f64 * factor).round() as u64).max(1);
        }
        Ok(q)
    }
}
