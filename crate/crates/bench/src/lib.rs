//! Shared fixtures for the criterion benchmarks.

use hjcost::ChainQuery;

/// The four-relation 1:4 chain scaled to `largest` tuples in `R_0`.
pub fn ratio_chain(largest: u64) -> ChainQuery {
    ChainQuery::ratio_chain(largest, 4, 4).expect("valid chain")
}
