//! Access patterns, per-pattern event counts and the weights that price them.

use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One of the four cache-line access patterns the model distinguishes.
///
/// The declaration order is the serialization order: sr, rr, sw, rw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccessPattern {
    SeqRead,
    RandRead,
    SeqWrite,
    RandWrite,
}

impl AccessPattern {
    pub const ALL: [AccessPattern; 4] = [
        AccessPattern::SeqRead,
        AccessPattern::RandRead,
        AccessPattern::SeqWrite,
        AccessPattern::RandWrite,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            AccessPattern::SeqRead => "sr",
            AccessPattern::RandRead => "rr",
            AccessPattern::SeqWrite => "sw",
            AccessPattern::RandWrite => "rw",
        }
    }
}

impl fmt::Display for AccessPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.mnemonic())
    }
}

/// Cache-line event counts, one per access pattern.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AccessCounts {
    pub sr: u64,
    pub rr: u64,
    pub sw: u64,
    pub rw: u64,
}

impl AccessCounts {
    pub const ZERO: AccessCounts = AccessCounts { sr: 0, rr: 0, sw: 0, rw: 0 };

    pub fn new(sr: u64, rr: u64, sw: u64, rw: u64) -> Self {
        AccessCounts { sr, rr, sw, rw }
    }

    pub fn get(&self, pattern: AccessPattern) -> u64 {
        match pattern {
            AccessPattern::SeqRead => self.sr,
            AccessPattern::RandRead => self.rr,
            AccessPattern::SeqWrite => self.sw,
            AccessPattern::RandWrite => self.rw,
        }
    }

    pub fn get_mut(&mut self, pattern: AccessPattern) -> &mut u64 {
        match pattern {
            AccessPattern::SeqRead => &mut self.sr,
            AccessPattern::RandRead => &mut self.rr,
            AccessPattern::SeqWrite => &mut self.sw,
            AccessPattern::RandWrite => &mut self.rw,
        }
    }

    /// Memory writes as a hardware counter would report them.
    pub fn writes(&self) -> u64 {
        self.sw + self.rw
    }

    /// Memory reads as a hardware counter would report them. Every write
    /// pattern includes a read of the line, so writes count here too.
    pub fn reads(&self) -> u64 {
        self.sr + self.rr + self.sw + self.rw
    }

    pub fn total(&self) -> u64 {
        self.reads()
    }
}

impl Add for AccessCounts {
    type Output = AccessCounts;

    fn add(self, rhs: AccessCounts) -> AccessCounts {
        AccessCounts {
            sr: self.sr + rhs.sr,
            rr: self.rr + rhs.rr,
            sw: self.sw + rhs.sw,
            rw: self.rw + rhs.rw,
        }
    }
}

impl AddAssign for AccessCounts {
    fn add_assign(&mut self, rhs: AccessCounts) {
        *self = *self + rhs;
    }
}

impl Sum for AccessCounts {
    fn sum<I: Iterator<Item = AccessCounts>>(iter: I) -> Self {
        iter.fold(AccessCounts::ZERO, Add::add)
    }
}

/// Relative cost of one cache-line event per access pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightVector {
    pub sr: f64,
    pub rr: f64,
    pub sw: f64,
    pub rw: f64,
}

impl WeightVector {
    /// Reference two-socket Intel server.
    pub const INTEL: WeightVector = WeightVector { sr: 1.00, rr: 3.79, sw: 5.03, rw: 6.25 };
    /// Reference two-socket AMD server.
    pub const AMD: WeightVector = WeightVector { sr: 1.00, rr: 6.44, sw: 1.88, rw: 8.42 };
    /// Reference cloud VM.
    pub const EC2: WeightVector = WeightVector { sr: 1.00, rr: 6.81, sw: 5.21, rw: 13.86 };

    pub fn new(sr: f64, rr: f64, sw: f64, rw: f64) -> Result<Self> {
        let w = WeightVector { sr, rr, sw, rw };
        w.validate()?;
        Ok(w)
    }

    pub fn validate(&self) -> Result<()> {
        for p in AccessPattern::ALL {
            let v = self.get(p);
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("weight {p} must be positive and finite, got {v}")));
            }
        }
        Ok(())
    }

    pub fn get(&self, pattern: AccessPattern) -> f64 {
        match pattern {
            AccessPattern::SeqRead => self.sr,
            AccessPattern::RandRead => self.rr,
            AccessPattern::SeqWrite => self.sw,
            AccessPattern::RandWrite => self.rw,
        }
    }

    /// Rescale so that `sr == 1`.
    pub fn normalized(&self) -> Self {
        self.scaled(1.0 / self.sr)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        WeightVector {
            sr: self.sr * factor,
            rr: self.rr * factor,
            sw: self.sw * factor,
            rw: self.rw * factor,
        }
    }
}

/// Weighted sum of cache-line events. Dimensionless; only comparable
/// between plans priced with the same weights.
pub fn predicted_cost(counts: &AccessCounts, weights: &WeightVector) -> f64 {
    AccessPattern::ALL
        .iter()
        .map(|&p| weights.get(p) * counts.get(p) as f64)
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_order_is_stable() {
        let mut shuffled = [
            AccessPattern::RandWrite,
            AccessPattern::SeqRead,
            AccessPattern::SeqWrite,
            AccessPattern::RandRead,
        ];
        shuffled.sort();
        assert_eq!(shuffled, AccessPattern::ALL);
        let names: Vec<_> = AccessPattern::ALL.iter().map(|p| p.mnemonic()).collect();
        assert_eq!(names, ["sr", "rr", "sw", "rw"]);
    }

    #[test]
    fn read_write_totals() {
        // load factor 4.0 build: 512 scan lines, 2048 latches, 512 spilled lines
        let c = AccessCounts::new(512, 0, 512, 2048);
        assert_eq!(c.writes(), 2560);
        assert_eq!(c.reads(), 3072);
    }

    #[test]
    fn weights_reject_non_positive() {
        assert!(WeightVector::new(1.0, 0.0, 1.0, 1.0).is_err());
        assert!(WeightVector::new(1.0, 2.0, f64::NAN, 1.0).is_err());
        assert!(WeightVector::new(1.0, 6.44, 1.88, 8.42).is_ok());
    }

    #[test]
    fn normalization() {
        let w = WeightVector::new(2.0, 8.0, 10.0, 13.0).unwrap().normalized();
        assert_eq!(w, WeightVector { sr: 1.0, rr: 4.0, sw: 5.0, rw: 6.5 });
    }

    #[test]
    fn cost_of_zero_is_zero() {
        assert_eq!(predicted_cost(&AccessCounts::ZERO, &WeightVector::INTEL), 0.0);
    }
}
