//! Synthetic chain data: every relation has two 8-byte attributes `a` and
//! `b`, keys `a` are a shuffled `1..=|R|`, and `b` references the next
//! relation's keys.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Zipf};

use crate::error::{Error, Result};
use crate::model::DEFAULT_TUPLE_WIDTH;
use crate::plan_space::{ChainQuery, JoinSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Relation {
    pub a: Vec<u64>,
    pub b: Vec<u64>,
}

impl Relation {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }

    pub fn bytes(&self) -> u64 {
        self.len() as u64 * u64::from(DEFAULT_TUPLE_WIDTH)
    }
}

/// Number of tuples whose `b` is meant to find a match.
pub fn matching_tuples(card: u64, spec: &JoinSpec) -> u64 {
    ((card as f64 * spec.match_probability).ceil() as u64).min(card)
}

fn referenced_keys(key_range: u64, spec: &JoinSpec) -> u64 {
    ((key_range as f64 * spec.key_fraction).round() as u64).clamp(1, key_range.max(1))
}

/// `b` values either cycle over the referenced keys, so every key is hit
/// equally often, or follow a Zipf law over key ranks when `zipf_factor`
/// is positive. Non-matching tuples point past `key_range`.
pub fn generate_relation(card: u64, key_range: u64, spec: &JoinSpec, seed: u64) -> Result<Relation> {
    spec.validate()?;
    if spec.fanout != 1.0 {
        return Err(Error::invalid(format!(
            "fanout {} cannot be realized over unique keys; only 1 is supported",
            spec.fanout
        )));
    }
    let n = usize::try_from(card).map_err(|_| Error::invalid("cardinality exceeds the address space"))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut a: Vec<u64> = (1..=card).collect();
    a.shuffle(&mut rng);

    let matches = if key_range == 0 { 0 } else { matching_tuples(card, spec) };
    let keys = referenced_keys(key_range, spec);
    let mut b = Vec::with_capacity(n);
    if spec.zipf_factor > 0.0 && matches > 0 {
        let zipf = Zipf::new(keys as f64, spec.zipf_factor).map_err(|e| Error::invalid(format!("zipf: {e}")))?;
        b.extend((0..matches).map(|_| (zipf.sample(&mut rng) as u64).clamp(1, keys)));
    } else {
        b.extend((0..matches).map(|i| i % keys + 1));
    }
    b.extend((matches..card).map(|i| key_range + 1 + i));
    b.shuffle(&mut rng);
    Ok(Relation { a, b })
}

/// All relations of a chain, `relations[k].b` referencing `relations[k+1].a`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Database {
    pub relations: Vec<Relation>,
}

impl Database {
    pub fn generate(q: &ChainQuery, seed: u64) -> Result<Self> {
        q.validate()?;
        let n = q.relations.len();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let seeds: Vec<u64> = (0..n).map(|_| rng.random()).collect();
        let relations = (0..n)
            .map(|k| {
                let card = q.relations[k].cardinality;
                if k + 1 < n {
                    generate_relation(card, q.relations[k + 1].cardinality, &q.joins[k], seeds[k])
                } else {
                    // Nothing references past the last relation; its b is
                    // just another payload column.
                    generate_relation(card, card, &JoinSpec::pk_fk(), seeds[k])
                }
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Database { relations })
    }

    pub fn relation(&self, id: usize) -> Result<&Relation> {
        self.relations.get(id).ok_or(Error::UnknownRelation(id))
    }

    pub fn bytes(&self) -> u64 {
        self.relations.iter().map(Relation::bytes).sum()
    }
}

#[cfg(test)]
mod tests {
    use std::collections::{BTreeSet, HashMap};

    use super::*;

    #[test]
    fn deterministic() {
        let s = JoinSpec::pk_fk();
        assert_eq!(generate_relation(8, 2, &s, 7).unwrap(), generate_relation(8, 2, &s, 7).unwrap());
        assert_ne!(generate_relation(64, 16, &s, 7).unwrap(), generate_relation(64, 16, &s, 8).unwrap());
    }

    #[test]
    fn keys_are_a_permutation() {
        let r = generate_relation(1000, 10, &JoinSpec::pk_fk(), 1).unwrap();
        let mut a = r.a.clone();
        a.sort_unstable();
        assert_eq!(a, (1..=1000).collect::<Vec<_>>());
        assert_ne!(r.a, a, "keys should be shuffled");
    }

    #[test]
    fn ratio_references_each_key_equally() {
        let r = generate_relation(4096, 1024, &JoinSpec::pk_fk(), 3).unwrap();
        let mut hist: HashMap<u64, u32> = HashMap::new();
        for &b in &r.b {
            *hist.entry(b).or_default() += 1;
        }
        assert_eq!(hist.len(), 1024);
        assert!(hist.iter().all(|(&k, &c)| (1..=1024).contains(&k) && c == 4));
    }

    #[test]
    fn quarter_selectivity_distinct_references() {
        let card = 4001;
        let r = generate_relation(card, 1000, &JoinSpec::with_match_probability(0.25), 5).unwrap();
        let referenced: BTreeSet<_> = r.b.iter().filter(|&&b| b <= 1000).collect();
        assert_eq!(referenced.len() as u64, card.div_ceil(4).min(1000));
        let matching = r.b.iter().filter(|&&b| b <= 1000).count() as u64;
        assert_eq!(matching, card.div_ceil(4));
    }

    #[test]
    fn zipf_concentrates_on_low_ranks() {
        let r = generate_relation(20_000, 1000, &JoinSpec::zipf(1.0), 9).unwrap();
        assert!(r.b.iter().all(|&b| (1..=1000).contains(&b)));
        let top = r.b.iter().filter(|&&b| b == 1).count();
        let tail = r.b.iter().filter(|&&b| b == 1000).count();
        assert!(top > 50 * tail.max(1), "top {top} tail {tail}");
    }

    #[test]
    fn rejects_unrealizable_specs() {
        let bad = JoinSpec { zipf_factor: -1.0, ..JoinSpec::pk_fk() };
        assert!(generate_relation(8, 8, &bad, 0).is_err());
        let fan = JoinSpec { fanout: 2.0, ..JoinSpec::pk_fk() };
        assert!(generate_relation(8, 8, &fan, 0).is_err());
    }

    #[test]
    fn empty_relation() {
        let r = generate_relation(0, 8, &JoinSpec::pk_fk(), 0).unwrap();
        assert!(r.is_empty());
    }

    #[test]
    fn database_follows_query() {
        let q = ChainQuery::ratio_chain(256, 4, 4).unwrap();
        let db = Database::generate(&q, 11).unwrap();
        let lens: Vec<_> = db.relations.iter().map(Relation::len).collect();
        assert_eq!(lens, [256, 64, 16, 4]);
        assert_eq!(db, Database::generate(&q, 11).unwrap());
        assert!(db.relation(4).is_err());
    }
}
