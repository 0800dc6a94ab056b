//! Calibration microbenchmarks: time one cache-line event of each access
//! pattern with all workers busy, and normalize the costs into weights.

use std::hint::black_box;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Barrier;
use std::time::Instant;

use rand::rngs::SmallRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::available_memory;
use crate::model::{AccessPattern, BootstrapMeta, MachineProfile, WeightVector};

/// Overrides the default worker count.
pub const WORKERS_ENV: &str = "HJCOST_WORKERS";
pub const MIN_REPETITIONS: usize = 10;
const WORD: usize = 8;
/// Elapsed times below this are clock noise.
const MIN_ELAPSED: f64 = 1e-6;
pub const PLACEMENT: &str = "first-touch by the owning worker";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchConfig {
    pub worker_count: usize,
    /// Private array per worker; the shared array is `worker_count` times
    /// this.
    pub array_bytes: u64,
    pub repetitions: usize,
    pub seed: u64,
    pub cache_line_bytes: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig {
            worker_count: workers_from_env().unwrap_or_else(crate::exec::default_workers),
            array_bytes: 128 << 20,
            repetitions: MIN_REPETITIONS,
            seed: 0x5eed,
            cache_line_bytes: 64,
        }
    }
}

/// Worker count from the environment, if set to a positive integer.
pub fn workers_from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV).ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.worker_count == 0 {
            return Err(Error::invalid("at least one worker is needed"));
        }
        if !self.cache_line_bytes.is_power_of_two() || self.cache_line_bytes < WORD as u64 {
            return Err(Error::invalid("cache line size must be a power of two of at least 8 bytes"));
        }
        if !self.array_bytes.is_power_of_two() || self.array_bytes < self.cache_line_bytes {
            return Err(Error::invalid(format!("array size {} must be a power of two of at least one line", self.array_bytes)));
        }
        if self.repetitions < MIN_REPETITIONS {
            return Err(Error::invalid(format!("need at least {MIN_REPETITIONS} repetitions, got {}", self.repetitions)));
        }
        let total = self.total_bytes();
        if let Some(avail) = available_memory() {
            if total > avail {
                return Err(Error::Benchmark(format!(
                    "{total} bytes of arrays exceed the {avail} bytes of available memory; shrink the array or the worker count"
                )));
            }
        }
        Ok(())
    }

    pub fn total_bytes(&self) -> u64 {
        self.array_bytes * self.worker_count as u64
    }

    fn lines_per_worker(&self) -> usize {
        (self.array_bytes / self.cache_line_bytes) as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub pattern: AccessPattern,
    /// Mean seconds per repetition.
    pub elapsed: f64,
    /// Lines touched per repetition, all workers together.
    pub lines_accessed: u64,
}

impl BenchResult {
    /// Seconds per cache line.
    pub fn cost(&self) -> f64 {
        self.elapsed / self.lines_accessed as f64
    }
}

/// `quota` distinct line indices out of `lines`, in random order.
pub fn random_offsets(lines: usize, quota: usize, rng: &mut impl Rng) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..lines).collect();
    let quota = quota.min(lines);
    idx.partial_shuffle(rng, quota).0.to_vec()
}

/// Runs `work(worker, repetition)` on every worker between two barriers
/// and returns the mean wall time of the barrier-delimited region.
fn timed<S, F>(cfg: &BenchConfig, setup: S, work: F) -> Result<f64>
where
    S: Fn(usize) -> Vec<usize> + Sync,
    F: Fn(usize, &[usize]) + Sync,
{
    let barrier = Barrier::new(cfg.worker_count + 1);
    let mut total = 0.0;
    std::thread::scope(|s| {
        for w in 0..cfg.worker_count {
            let (barrier, setup, work) = (&barrier, &setup, &work);
            s.spawn(move || {
                let state = setup(w);
                for _ in 0..cfg.repetitions {
                    barrier.wait();
                    work(w, &state);
                    barrier.wait();
                }
            });
        }
        for _ in 0..cfg.repetitions {
            barrier.wait();
            let start = Instant::now();
            barrier.wait();
            total += start.elapsed().as_secs_f64();
        }
    });
    let mean = total / cfg.repetitions as f64;
    if mean < MIN_ELAPSED {
        return Err(Error::Benchmark(format!("elapsed {mean:e} s is below clock resolution; use a larger array")));
    }
    Ok(mean)
}

fn private_arrays(cfg: &BenchConfig) -> Vec<std::sync::Mutex<Vec<u64>>> {
    (0..cfg.worker_count).map(|_| std::sync::Mutex::new(Vec::new())).collect()
}

/// Times one access pattern. Sequential patterns stream a private array per
/// worker; random patterns touch whole lines of one shared array at
/// pre-generated, line-aligned offsets. Offsets of different workers may
/// collide.
pub fn run_pattern(p: AccessPattern, cfg: &BenchConfig) -> Result<BenchResult> {
    cfg.validate()?;
    let words_per_line = cfg.cache_line_bytes as usize / WORD;
    let lines = cfg.lines_per_worker();
    let lines_accessed = (lines * cfg.worker_count) as u64;
    let elapsed = match p {
        AccessPattern::SeqRead | AccessPattern::SeqWrite => {
            let arrays = private_arrays(cfg);
            let words = cfg.array_bytes as usize / WORD;
            let setup = |w: usize| {
                // Filled by the owner so its pages land near it.
                let mut rng = SmallRng::seed_from_u64(cfg.seed ^ w as u64);
                *arrays[w].lock().unwrap() = (0..words).map(|_| rng.random()).collect();
                Vec::new()
            };
            let write = p == AccessPattern::SeqWrite;
            timed(cfg, setup, |w, _| {
                let mut guard = arrays[w].lock().unwrap();
                let data = &mut *guard;
                let mut acc = 0u64;
                if write {
                    for v in data.iter_mut() {
                        acc = acc.wrapping_add(*v);
                        *v = acc;
                    }
                } else {
                    for &v in data.iter() {
                        acc = acc.wrapping_add(v);
                    }
                }
                black_box(acc);
            })?
        }
        AccessPattern::RandRead | AccessPattern::RandWrite => {
            let total_lines = lines * cfg.worker_count;
            let shared: Vec<AtomicU64> = (0..total_lines * words_per_line).map(|i| AtomicU64::new(i as u64)).collect();
            let setup = |w: usize| {
                let mut rng = SmallRng::seed_from_u64(cfg.seed.wrapping_add(w as u64 + 1));
                random_offsets(total_lines, lines, &mut rng)
            };
            let write = p == AccessPattern::RandWrite;
            timed(cfg, setup, |_, offsets| {
                let mut acc = 0u64;
                for &line in offsets {
                    let words = &shared[line * words_per_line..(line + 1) * words_per_line];
                    for word in words {
                        let v = word.load(Ordering::Relaxed);
                        acc = acc.wrapping_add(v);
                        if write {
                            word.store(acc, Ordering::Relaxed);
                        }
                    }
                }
                black_box(acc);
            })?
        }
    };
    Ok(BenchResult { pattern: p, elapsed, lines_accessed })
}

/// Per-line costs of the four patterns relative to sequential reads.
pub fn derive_weights(results: &[BenchResult]) -> Result<WeightVector> {
    let cost = |p: AccessPattern| {
        results.iter().find(|r| r.pattern == p).map(BenchResult::cost).ok_or(Error::MissingPattern(p.mnemonic()))
    };
    let sr = cost(AccessPattern::SeqRead)?;
    WeightVector::new(1.0, cost(AccessPattern::RandRead)? / sr, cost(AccessPattern::SeqWrite)? / sr, cost(AccessPattern::RandWrite)? / sr)
}

/// Weights that break the usual ordering (random writes dearest,
/// sequential reads cheapest) usually mean a noisy run.
pub fn weight_warnings(w: &WeightVector) -> Vec<String> {
    let all = [w.sr, w.rr, w.sw, w.rw];
    let max = all.iter().copied().fold(f64::MIN, f64::max);
    let min = all.iter().copied().fold(f64::MAX, f64::min);
    let mut out = Vec::new();
    if w.rw < max {
        out.push(format!("random writes ({:.2}) are not the most expensive pattern ({max:.2})", w.rw));
    }
    if w.sr > min {
        out.push(format!("sequential reads are not the cheapest pattern (min {min:.2})"));
    }
    out
}

/// Runs all four patterns and packages the weights as a profile.
pub fn bootstrap_profile(cfg: &BenchConfig, label: impl Into<String>) -> Result<MachineProfile> {
    let results = AccessPattern::ALL.iter().map(|&p| run_pattern(p, cfg)).collect::<Result<Vec<_>>>()?;
    let weights = derive_weights(&results)?;
    let mut profile = MachineProfile::new(label, cfg.cache_line_bytes, weights)?;
    profile.bootstrap = Some(BootstrapMeta {
        worker_count: cfg.worker_count,
        array_bytes: cfg.array_bytes,
        repetitions: cfg.repetitions,
        seed: cfg.seed,
        placement: PLACEMENT.into(),
        ns_per_line: results.iter().map(|r| r.cost() * 1e9).collect(),
        notes: weight_warnings(&weights),
    });
    Ok(profile)
}
