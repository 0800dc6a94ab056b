//! Shared, non-partitioned hash table: one contiguous bucket array, each
//! bucket a 16-byte header followed by fixed 16-byte tuple slots.
//!
//! Header word 0 holds the latch bit and the bucket's tuple count; word 1
//! links to the newest overflow entry. Tuples beyond the slot capacity are
//! chained through entries that each worker appends to its own arena, so
//! overflow needs no lock beyond the bucket latch.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::HashTableSpec;

const LATCH: u64 = 1 << 63;
const COUNT_MASK: u64 = LATCH - 1;
const HEADER_WORDS: usize = 2;
const WORDS_PER_TUPLE: usize = 2;
const WORDS_PER_LINE: usize = 8;
const ARENA_SHIFT: u32 = 48;
const INDEX_MASK: u64 = (1 << ARENA_SHIFT) - 1;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HashKind {
    /// Fibonacci hashing: golden-ratio multiply, then multiply-high onto
    /// the bucket range.
    #[default]
    Multiplicative,
    /// `key mod buckets`; gives perfectly even occupancy on dense keys.
    IdentityMod,
}

impl HashKind {
    #[inline]
    pub fn bucket(self, key: u64, buckets: u64) -> u64 {
        match self {
            HashKind::Multiplicative => {
                let h = key.wrapping_mul(0x9E37_79B9_7F4A_7C15);
                ((u128::from(h) * u128::from(buckets)) >> 64) as u64
            }
            HashKind::IdentityMod => key % buckets,
        }
    }
}

impl std::str::FromStr for HashKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "multiplicative" | "mult" => Ok(HashKind::Multiplicative),
            "identity" | "identity_mod" => Ok(HashKind::IdentityMod),
            other => Err(Error::invalid(format!("unknown hash {other:?} (expected multiplicative|identity)"))),
        }
    }
}

#[repr(C, align(64))]
#[derive(Default)]
struct Line([AtomicU64; WORDS_PER_LINE]);

#[derive(Debug, Clone, Copy)]
struct Entry {
    key: u64,
    payload: u64,
    /// Link to the next (older) entry of the same bucket, 0 at the end.
    next: u64,
}

/// Overflow entries written by one worker during a build.
#[derive(Debug, Default)]
pub struct OverflowArena {
    id: u16,
    entries: Vec<Entry>,
}

impl OverflowArena {
    pub fn new(id: u16) -> Self {
        OverflowArena { id, entries: Vec::new() }
    }

    fn push(&mut self, e: Entry) -> u64 {
        self.entries.push(e);
        ((u64::from(self.id) << ARENA_SHIFT) | (self.entries.len() as u64 - 1)) + 1
    }
}

pub struct HashTable {
    lines: Vec<Line>,
    buckets: u64,
    slots: usize,
    bucket_words: usize,
    hash: HashKind,
    arenas: Vec<Vec<Entry>>,
}

impl HashTable {
    /// Allocates and touches every line, so later inserts never fault a
    /// fresh page in.
    pub fn new(buckets: u64, slots: u64, hash: HashKind) -> Result<Self> {
        if buckets == 0 {
            return Err(Error::invalid("a hash table needs at least one bucket"));
        }
        let slots = slots.max(1) as usize;
        let bucket_words = HEADER_WORDS + slots * WORDS_PER_TUPLE;
        let words = usize::try_from(buckets)
            .ok()
            .and_then(|b| b.checked_mul(bucket_words))
            .ok_or_else(|| Error::invalid("hash table does not fit the address space"))?;
        let lines = (0..words.div_ceil(WORDS_PER_LINE)).map(|_| Line::default()).collect();
        Ok(HashTable { lines, buckets, slots, bucket_words, hash, arenas: Vec::new() })
    }

    pub fn for_spec(spec: &HashTableSpec, hash: HashKind) -> Result<Self> {
        HashTable::new(spec.bucket_count, spec.tuples_per_bucket, hash)
    }

    #[inline]
    fn words(&self) -> &[AtomicU64] {
        // SAFETY: `Line` is repr(C) over a plain array of AtomicU64, so the
        // line vector is one contiguous run of `len * 8` atomics.
        unsafe { std::slice::from_raw_parts(self.lines.as_ptr().cast::<AtomicU64>(), self.lines.len() * WORDS_PER_LINE) }
    }

    #[inline]
    pub fn bucket_of(&self, key: u64) -> u64 {
        self.hash.bucket(key, self.buckets)
    }

    pub fn buckets(&self) -> u64 {
        self.buckets
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn hash(&self) -> HashKind {
        self.hash
    }

    /// Latch the bucket, append, unlatch. Safe to call from many threads
    /// as long as each brings its own arena.
    #[inline]
    pub fn insert(&self, key: u64, payload: u64, arena: &mut OverflowArena) {
        let words = self.words();
        let base = self.bucket_of(key) as usize * self.bucket_words;
        let header = &words[base];
        let mut seen = header.load(Ordering::Relaxed);
        loop {
            if seen & LATCH == 0 {
                match header.compare_exchange_weak(seen, seen | LATCH, Ordering::Acquire, Ordering::Relaxed) {
                    Ok(_) => break,
                    Err(now) => seen = now,
                }
            } else {
                std::hint::spin_loop();
                seen = header.load(Ordering::Relaxed);
            }
        }
        let count = (seen & COUNT_MASK) as usize;
        if count < self.slots {
            let slot = base + HEADER_WORDS + count * WORDS_PER_TUPLE;
            words[slot].store(key, Ordering::Relaxed);
            words[slot + 1].store(payload, Ordering::Relaxed);
        } else {
            let link = &words[base + 1];
            let next = link.load(Ordering::Relaxed);
            link.store(arena.push(Entry { key, payload, next }), Ordering::Relaxed);
        }
        header.store((count + 1) as u64, Ordering::Release);
    }

    /// Ends the build phase: takes over the workers' overflow entries.
    pub fn seal(&mut self, arenas: impl IntoIterator<Item = OverflowArena>) {
        for a in arenas {
            let id = usize::from(a.id);
            if self.arenas.len() <= id {
                self.arenas.resize_with(id + 1, Vec::new);
            }
            debug_assert!(self.arenas[id].is_empty(), "arena {id} sealed twice");
            self.arenas[id] = a.entries;
        }
    }

    /// Number of tuples in a bucket, overflow included.
    pub fn occupancy(&self, bucket: u64) -> u64 {
        self.words()[bucket as usize * self.bucket_words].load(Ordering::Relaxed) & COUNT_MASK
    }

    pub fn len(&self) -> u64 {
        (0..self.buckets).map(|b| self.occupancy(b)).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn overflow_entries(&self) -> usize {
        self.arenas.iter().map(Vec::len).sum()
    }

    /// Buckets holding more tuples than slots.
    pub fn overflow_chains(&self) -> u64 {
        (0..self.buckets).filter(|&b| self.occupancy(b) > self.slots as u64).count() as u64
    }

    pub fn bytes(&self) -> u64 {
        let overflow: usize = self.arenas.iter().map(|a| a.capacity() * std::mem::size_of::<Entry>()).sum();
        (self.lines.len() * 64 + overflow) as u64
    }

    /// Hint the CPU to fetch the bucket holding `key`.
    #[inline]
    pub fn prefetch(&self, key: u64) {
        let line = self.bucket_of(key) as usize * self.bucket_words / WORDS_PER_LINE;
        #[cfg(target_arch = "x86_64")]
        {
            use std::arch::x86_64::{_mm_prefetch, _MM_HINT_T0};
            let p = self.lines.as_ptr().wrapping_add(line).cast::<i8>();
            // SAFETY: prefetch is a hint; it never faults, even off the end.
            unsafe { _mm_prefetch::<_MM_HINT_T0>(p) };
        }
        #[cfg(not(target_arch = "x86_64"))]
        let _ = line;
    }

    /// Calls `f(payload)` for every tuple stored under `key`. Requires a
    /// sealed table.
    #[inline]
    pub fn probe(&self, key: u64, mut f: impl FnMut(u64)) {
        let words = self.words();
        let base = self.bucket_of(key) as usize * self.bucket_words;
        let count = (words[base].load(Ordering::Relaxed) & COUNT_MASK) as usize;
        for s in 0..count.min(self.slots) {
            let slot = base + HEADER_WORDS + s * WORDS_PER_TUPLE;
            if words[slot].load(Ordering::Relaxed) == key {
                f(words[slot + 1].load(Ordering::Relaxed));
            }
        }
        if count > self.slots {
            let mut link = words[base + 1].load(Ordering::Relaxed);
            while link != 0 {
                let raw = link - 1;
                let e = &self.arenas[(raw >> ARENA_SHIFT) as usize][(raw & INDEX_MASK) as usize];
                if e.key == key {
                    f(e.payload);
                }
                link = e.next;
            }
        }
    }
}
