use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bytes of bucket metadata (latch, occupancy, overflow link) by default.
pub const DEFAULT_HEADER_BYTES: u32 = 16;

/// Width of every tuple in the synthetic two-attribute schema.
pub const DEFAULT_TUPLE_WIDTH: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RelationStats {
    pub cardinality: u64,
    pub tuple_width: u32,
}

impl RelationStats {
    pub fn new(cardinality: u64, tuple_width: u32) -> Result<Self> {
        if tuple_width == 0 {
            return Err(Error::invalid("tuple width must be at least one byte"));
        }
        Ok(RelationStats { cardinality, tuple_width })
    }

    /// A relation of the default 16-byte schema.
    pub fn narrow(cardinality: u64) -> Self {
        RelationStats { cardinality, tuple_width: DEFAULT_TUPLE_WIDTH }
    }

    pub fn bytes(&self) -> u64 {
        self.cardinality * u64::from(self.tuple_width)
    }
}

/// Geometry of a bucket-chained hash table built over one input.
///
/// `tuples_per_bucket` is always `ceil(cardinality / bucket_count)` of the
/// input the table was sized for; constructors enforce it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HashTableSpec {
    pub bucket_count: u64,
    pub header_bytes: u32,
    pub tuples_per_bucket: u64,
    pub tuple_width: u32,
}

impl HashTableSpec {
    /// Table with an explicit bucket count.
    pub fn with_buckets(input: RelationStats, bucket_count: u64, header_bytes: u32) -> Result<Self> {
        if bucket_count == 0 {
            return Err(Error::invalid("hash table needs at least one bucket"));
        }
        Ok(HashTableSpec {
            bucket_count,
            header_bytes,
            tuples_per_bucket: input.cardinality.div_ceil(bucket_count),
            tuple_width: input.tuple_width,
        })
    }

    /// Default sizing: the smallest power of two not below the input
    /// cardinality, giving a load factor of at most one.
    pub fn sized_for(input: RelationStats, header_bytes: u32) -> Self {
        let bucket_count = input.cardinality.max(1).next_power_of_two();
        HashTableSpec {
            bucket_count,
            header_bytes,
            tuples_per_bucket: input.cardinality.div_ceil(bucket_count),
            tuple_width: input.tuple_width,
        }
    }

    /// `W(B) = BH + T * W`.
    pub fn bucket_bytes(&self) -> u64 {
        u64::from(self.header_bytes) + self.tuples_per_bucket * u64::from(self.tuple_width)
    }

    pub fn table_bytes(&self) -> u64 {
        self.bucket_count * self.bucket_bytes()
    }

    /// Whether this table is the one `input` would get with the same bucket count.
    pub fn is_consistent_with(&self, input: &RelationStats) -> bool {
        self.bucket_count >= 1
            && self.tuple_width == input.tuple_width
            && self.tuples_per_bucket == input.cardinality.div_ceil(self.bucket_count)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_sizing_is_power_of_two() {
        let spec = HashTableSpec::sized_for(RelationStats::narrow(1000), 16);
        assert_eq!(spec.bucket_count, 1024);
        assert_eq!(spec.tuples_per_bucket, 1);
        assert_eq!(spec.bucket_bytes(), 32);

        let empty = HashTableSpec::sized_for(RelationStats::narrow(0), 16);
        assert_eq!(empty.bucket_count, 1);
        assert_eq!(empty.tuples_per_bucket, 0);
    }

    #[test]
    fn explicit_buckets_round_up() {
        let spec = HashTableSpec::with_buckets(RelationStats::narrow(2049), 512, 16).unwrap();
        assert_eq!(spec.tuples_per_bucket, 5);
        assert_eq!(spec.bucket_bytes(), 16 + 5 * 16);
        assert!(spec.is_consistent_with(&RelationStats::narrow(2049)));
        assert!(!spec.is_consistent_with(&RelationStats::narrow(4000)));
        assert!(HashTableSpec::with_buckets(RelationStats::narrow(1), 0, 16).is_err());
    }

    #[test]
    fn zero_width_rejected() {
        assert!(RelationStats::new(10, 0).is_err());
    }
}
