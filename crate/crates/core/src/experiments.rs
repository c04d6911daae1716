//! Storage, proof-of-work and verification experiments.
//!
//! Each function returns plain rows and a serializable summary; writing CSV
//! and JSON is left to the caller.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};
use std::time::Instant;

use crate::chain::{crypto, proof_of_work, to_canonical_bytes, verify_chain, Chain, ChainBuilder, Difficulty, PowError,
    GENESIS_PREVIOUS};

pub const GROUPINGS: [usize; 3] = [1, 3, 6];

#[derive(Debug, thiserror::Error)]
pub enum ExperimentError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Pow(#[from] PowError),
    #[error("verification failed on an untampered chain ({blocks} blocks, {tx_per_block} tx/block)")]
    VerifyFailed { blocks: usize, tx_per_block: usize },
    #[error("least-squares fit failed: {0}")]
    Fit(&'static str),
}

/// Ordinary least squares `y = slope * x + intercept` with its R².
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> LinearFit {
    assert_eq!(x.len(), y.len());
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let slope = if sxx == 0.0 { 0.0 } else { sxy / sxx };
    let intercept = my - slope * mx;
    let predicted: Vec<f64> = x.iter().map(|a| slope * a + intercept).collect();
    LinearFit {
        slope,
        intercept,
        r_squared: r_squared(y, &predicted),
    }
}

/// Coefficient of determination. A constant series fitted exactly scores 1.
pub fn r_squared(observed: &[f64], predicted: &[f64]) -> f64 {
    let mean = observed.iter().sum::<f64>() / observed.len() as f64;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean).powi(2)).sum();
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p).powi(2)).sum();
    if ss_tot == 0.0 {
        if ss_res == 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    }
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n == 0 {
        return f64::NAN;
    }
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

fn digits(n: u64) -> u64 {
    n.checked_ilog10().map_or(1, |d| d as u64 + 1)
}

// ---------------------------------------------------------------- memory

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryRow {
    pub tx_per_block: usize,
    pub blocks: usize,
    pub bytes: u64,
    pub predicted: f64,
}

/// Per-block size `c_b + c_t*T + c_d*D`. A chain adds its brackets and one
/// separator between consecutive blocks; the first block is shorter because
/// its predecessor is the one-character genesis marker, not a digest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MemoryModel {
    pub c_b: f64,
    pub c_t: f64,
    pub c_d: f64,
}

/// Bytes of the empty chain `[]`.
pub const CHAIN_OVERHEAD: u64 = 2;

impl MemoryModel {
    pub fn block_size(&self, tx_per_block: usize, block_number: u64) -> f64 {
        self.c_b + self.c_t * tx_per_block as f64 + self.c_d * digits(block_number) as f64
    }

    /// Predicted serialized size of a chain of `blocks` blocks.
    pub fn chain_size(&self, tx_per_block: usize, blocks: usize) -> f64 {
        framing(blocks) as f64 + (1..=blocks as u64).map(|i| self.block_size(tx_per_block, i)).sum::<f64>()
    }
}

/// Bytes the genesis block saves by referencing `"0"` instead of a 64-digit id.
const GENESIS_SHORTFALL: u64 = 64 - GENESIS_PREVIOUS.len() as u64;

/// Chain bytes not explained by the per-block model; may be negative.
fn framing(blocks: usize) -> i64 {
    match blocks {
        0 => CHAIN_OVERHEAD as i64,
        n => CHAIN_OVERHEAD as i64 + n as i64 - 1 - GENESIS_SHORTFALL as i64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryGroupSummary {
    pub tx_per_block: usize,
    pub r_squared: f64,
    pub max_relative_error: f64,
    pub bytes_at_max: u64,
    pub bytes_per_tx_at_max: f64,
    /// Reduction of bytes per transaction relative to one transaction per block.
    pub reduction_vs_single: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MemoryReport {
    pub max_blocks: usize,
    pub payload_chars: usize,
    pub sample_every: usize,
    pub model: MemoryModel,
    pub groups: Vec<MemoryGroupSummary>,
    /// Actual average size of one serialized transaction, for comparing with `c_t`.
    pub mean_transaction_bytes: f64,
    #[serde(skip)]
    pub rows: Vec<MemoryRow>,
}

/// Grows one chain per grouping in [`GROUPINGS`], records its serialized
/// size every `sample_every` blocks and fits the size model jointly.
pub fn bench_memory(max_blocks: usize, payload_chars: usize, seed: u64) -> Result<MemoryReport, ExperimentError> {
    if max_blocks < 100 {
        return Err(ExperimentError::InvalidArgument(format!("max_blocks must be >= 100, got {max_blocks}")));
    }
    let sample_every = (max_blocks / 100).max(1);
    let difficulty = Difficulty::new(1).expect("valid");
    let mut rows = Vec::new();
    let mut tx_bytes = (0u64, 0u64);
    for (g, &t) in GROUPINGS.iter().enumerate() {
        let chain = ChainBuilder::new(seed + g as u64, difficulty)
            .with_payload_chars(payload_chars)
            .build(max_blocks, t);
        let mut size = CHAIN_OVERHEAD;
        rows.push(MemoryRow { tx_per_block: t, blocks: 0, bytes: size, predicted: 0.0 });
        for (i, block) in chain.blocks().iter().enumerate() {
            let len = to_canonical_bytes(block.as_ref()).expect("no floats").len() as u64;
            size += len + u64::from(i > 0);
            for tx in block.transactions() {
                tx_bytes.0 += to_canonical_bytes(tx).expect("no floats").len() as u64;
                tx_bytes.1 += 1;
            }
            let n = i + 1;
            if n % sample_every == 0 || n == max_blocks {
                rows.push(MemoryRow { tx_per_block: t, blocks: n, bytes: size, predicted: 0.0 });
            }
        }
        debug_assert_eq!(size, chain.canonical_bytes().len() as u64);
    }

    // Columns: blocks, blocks*T, sum of block-number digits. Framing bytes
    // are known exactly and subtracted; the empty chains carry no information.
    let digit_sums: Vec<f64> = {
        let mut acc = vec![0.0; max_blocks + 1];
        for n in 1..=max_blocks {
            acc[n] = acc[n - 1] + digits(n as u64) as f64;
        }
        acc
    };
    let fit_rows: Vec<&MemoryRow> = rows.iter().filter(|r| r.blocks > 0).collect();
    let a = DMatrix::from_fn(fit_rows.len(), 3, |r, c| {
        let row = fit_rows[r];
        let n = row.blocks as f64;
        match c {
            0 => n,
            1 => n * row.tx_per_block as f64,
            _ => digit_sums[row.blocks],
        }
    });
    let b = DVector::from_iterator(
        fit_rows.len(),
        fit_rows.iter().map(|r| (r.bytes as i64 - framing(r.blocks)) as f64),
    );
    let x = a
        .svd(true, true)
        .solve(&b, 1e-9)
        .map_err(ExperimentError::Fit)?;
    let model = MemoryModel {
        c_b: x[0],
        c_t: x[1],
        c_d: x[2],
    };
    for row in &mut rows {
        row.predicted = model.chain_size(row.tx_per_block, row.blocks);
    }

    let mut groups = Vec::new();
    let mut single_per_tx = f64::NAN;
    for &t in &GROUPINGS {
        let sel: Vec<&MemoryRow> = rows.iter().filter(|r| r.tx_per_block == t).collect();
        let observed: Vec<f64> = sel.iter().map(|r| r.bytes as f64).collect();
        let predicted: Vec<f64> = sel.iter().map(|r| r.predicted).collect();
        let max_relative_error = sel
            .iter()
            .map(|r| (r.predicted - r.bytes as f64).abs() / r.bytes as f64)
            .fold(0.0, f64::max);
        let last = sel.last().expect("at least the empty row");
        let per_tx = last.bytes as f64 / (last.blocks * t) as f64;
        if t == 1 {
            single_per_tx = per_tx;
        }
        groups.push(MemoryGroupSummary {
            tx_per_block: t,
            r_squared: r_squared(&observed, &predicted),
            max_relative_error,
            bytes_at_max: last.bytes,
            bytes_per_tx_at_max: per_tx,
            reduction_vs_single: 1.0 - per_tx / single_per_tx,
        });
    }

    Ok(MemoryReport {
        max_blocks,
        payload_chars,
        sample_every,
        model,
        groups,
        mean_transaction_bytes: tx_bytes.0 as f64 / tx_bytes.1 as f64,
        rows,
    })
}

// ------------------------------------------------------------------- pow

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PowSample {
    pub iterations: u64,
    pub wall_time: f64,
    pub hash_rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HistogramBin {
    pub lower: u64,
    pub upper: u64,
    pub count: u64,
    pub expected: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GoodnessOfFit {
    pub bins: usize,
    pub statistic: f64,
    pub degrees_of_freedom: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub critical_value: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PowReport {
    pub trials: usize,
    pub difficulty: Difficulty,
    pub expected_iterations: f64,
    pub mean_iterations: f64,
    pub median_iterations: f64,
    pub mean_relative_error: f64,
    pub hash_rate: f64,
    /// Share of trials needing 4015 to 5621 iterations.
    pub band_4015_5621: f64,
    pub band_4015_5621_expected: f64,
    /// Absent when every trial trivially takes one iteration.
    pub goodness_of_fit: Option<GoodnessOfFit>,
    #[serde(skip)]
    pub histogram: Vec<HistogramBin>,
    #[serde(skip)]
    pub samples: Vec<PowSample>,
}

pub const GOF_ALPHA: f64 = 0.01;

fn geometric_cdf(p: f64, n: u64) -> f64 {
    1.0 - (1.0 - p).powf(n as f64)
}

/// Histogram over `k` bins of roughly equal probability under the geometric
/// model; the last bin is open-ended.
pub fn equal_probability_bins(p: f64, k: usize, iterations: &[u64]) -> Vec<HistogramBin> {
    let mut uppers: Vec<u64> = (1..k)
        .map(|j| {
            let q: f64 = j as f64 / k as f64;
            ((1.0 - q).ln() / (1.0 - p).ln()).ceil().max(1.0) as u64
        })
        .collect();
    uppers.dedup();
    uppers.push(u64::MAX);
    let total = iterations.len() as f64;
    let mut lower = 1;
    uppers
        .into_iter()
        .map(|upper| {
            let prob = if upper == u64::MAX {
                1.0 - geometric_cdf(p, lower - 1)
            } else {
                geometric_cdf(p, upper) - geometric_cdf(p, lower - 1)
            };
            let count = iterations.iter().filter(|&&i| i >= lower && i <= upper).count() as u64;
            let bin = HistogramBin { lower, upper, count, expected: prob * total };
            lower = upper.saturating_add(1);
            bin
        })
        .collect()
}

pub fn chi_square_geometric(p: f64, iterations: &[u64], alpha: f64) -> Option<GoodnessOfFit> {
    if p >= 1.0 || iterations.len() < 10 {
        return None;
    }
    let k = (iterations.len() / 20).clamp(2, 20);
    let bins = equal_probability_bins(p, k, iterations);
    if bins.len() < 2 {
        return None;
    }
    let statistic: f64 = bins
        .iter()
        .map(|b| (b.count as f64 - b.expected).powi(2) / b.expected)
        .sum();
    let df = bins.len() - 1;
    let dist = ChiSquared::new(df as f64).expect("df > 0");
    let p_value = 1.0 - dist.cdf(statistic);
    Some(GoodnessOfFit {
        bins: bins.len(),
        statistic,
        degrees_of_freedom: df,
        p_value,
        alpha,
        critical_value: dist.inverse_cdf(1.0 - alpha),
        passed: p_value >= alpha,
    })
}

fn uniform_bins(iterations: &[u64], p: f64, count: usize) -> Vec<HistogramBin> {
    let max = iterations.iter().copied().max().unwrap_or(1);
    let width = max.div_ceil(count as u64).max(1);
    let total = iterations.len() as f64;
    (0..count as u64)
        .map(|j| {
            let lower = j * width + 1;
            let upper = (j + 1) * width;
            HistogramBin {
                lower,
                upper,
                count: iterations.iter().filter(|&&i| i >= lower && i <= upper).count() as u64,
                expected: (geometric_cdf(p, upper) - geometric_cdf(p, lower - 1)) * total,
            }
        })
        .take_while(|b| b.lower <= max)
        .collect()
}

/// Runs proof-of-work on `trials` random block headers.
pub fn bench_pow(trials: usize, difficulty: Difficulty, seed: u64) -> Result<PowReport, ExperimentError> {
    if trials < 100 {
        return Err(ExperimentError::InvalidArgument(format!("trials must be >= 100, got {trials}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples = Vec::with_capacity(trials);
    for _ in 0..trials {
        let number: u64 = rng.gen_range(1..1_000_000);
        let tx_hash = crypto::sha3_256(&rng.gen::<[u8; 32]>());
        let previous = crypto::sha3_256(&rng.gen::<[u8; 32]>());
        let start = Instant::now();
        let solution = proof_of_work(number, &tx_hash, &previous, difficulty, None)?;
        let wall_time = start.elapsed().as_secs_f64();
        samples.push(PowSample {
            iterations: solution.iterations,
            wall_time,
            hash_rate: if wall_time > 0.0 { solution.iterations as f64 / wall_time } else { f64::INFINITY },
        });
    }
    let iterations: Vec<u64> = samples.iter().map(|s| s.iterations).collect();
    let as_f64: Vec<f64> = iterations.iter().map(|&i| i as f64).collect();
    let expected = difficulty.expected_iterations();
    let p = difficulty.success_probability();
    let mean = as_f64.iter().sum::<f64>() / trials as f64;
    let total_time: f64 = samples.iter().map(|s| s.wall_time).sum();
    Ok(PowReport {
        trials,
        difficulty,
        expected_iterations: expected,
        mean_iterations: mean,
        median_iterations: median(&as_f64),
        mean_relative_error: (mean - expected).abs() / expected,
        hash_rate: as_f64.iter().sum::<f64>() / total_time,
        band_4015_5621: iterations.iter().filter(|&&i| (4015..=5621).contains(&i)).count() as f64 / trials as f64,
        band_4015_5621_expected: geometric_cdf(p, 5621) - geometric_cdf(p, 4014),
        goodness_of_fit: chi_square_geometric(p, &iterations, GOF_ALPHA),
        histogram: uniform_bins(&iterations, p, 25),
        samples,
    })
}

// ---------------------------------------------------------------- verify

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyRun {
    pub blocks: usize,
    pub tx_per_block: usize,
    pub workers: usize,
    pub repetitions: usize,
    pub wall_time: f64,
    pub min_time: f64,
    pub max_time: f64,
}

impl VerifyRun {
    pub fn per_block(&self) -> f64 {
        self.wall_time / self.blocks as f64
    }

    pub fn per_tx(&self) -> f64 {
        self.wall_time / (self.blocks * self.tx_per_block) as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Linearity {
    pub tx_per_block: usize,
    pub workers: usize,
    pub fit: LinearFit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Grouping {
    pub tx_per_block: usize,
    pub workers: usize,
    pub per_block: f64,
    pub per_tx: f64,
    pub per_block_change_vs_single: f64,
    pub per_tx_reduction_vs_single: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Speedup {
    pub tx_per_block: usize,
    pub workers: usize,
    pub speedup: f64,
    /// speedup(workers) / speedup(workers / 2), when both were measured.
    pub gain_over_half: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub host_cores: usize,
    pub repetitions: usize,
    pub max_blocks: usize,
    pub linearity: Vec<Linearity>,
    pub grouping: Vec<Grouping>,
    pub speedups: Vec<Speedup>,
    #[serde(skip)]
    pub runs: Vec<VerifyRun>,
}

impl VerifyReport {
    pub fn run(&self, blocks: usize, tx_per_block: usize, workers: usize) -> Option<&VerifyRun> {
        self.runs
            .iter()
            .find(|r| r.blocks == blocks && r.tx_per_block == tx_per_block && r.workers == workers)
    }
}

pub fn host_cores() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn time_once(chain: &Chain, workers: usize, difficulty: Difficulty) -> Option<f64> {
    let start = Instant::now();
    let ok = verify_chain(chain, workers, difficulty);
    let t = start.elapsed().as_secs_f64();
    ok.then_some(t)
}

/// Times chain verification for every combination, keeping the median of
/// `repetitions` runs. Chains are built at difficulty 1 from one seed per
/// grouping; shorter chains are prefixes of the longest.
pub fn bench_verify(
    block_counts: &[usize],
    tx_per_block: &[usize],
    workers: &[usize],
    repetitions: usize,
    seed: u64,
) -> Result<VerifyReport, ExperimentError> {
    if repetitions < 5 {
        return Err(ExperimentError::InvalidArgument(format!("repetitions must be >= 5, got {repetitions}")));
    }
    if block_counts.is_empty() || tx_per_block.is_empty() || workers.is_empty() {
        return Err(ExperimentError::InvalidArgument("empty parameter list".into()));
    }
    if tx_per_block.contains(&0) || workers.contains(&0) {
        return Err(ExperimentError::InvalidArgument("tx_per_block and workers must be positive".into()));
    }
    let difficulty = Difficulty::new(1).expect("valid");
    let max_blocks = *block_counts.iter().max().expect("non-empty");
    let mut runs = Vec::new();
    for (g, &t) in tx_per_block.iter().enumerate() {
        let full = ChainBuilder::new(seed + g as u64, difficulty).build(max_blocks, t);
        for &n in block_counts {
            let chain = Chain::from_blocks(full.blocks()[..n].iter().map(|b| b.as_ref().clone()));
            let failed = || ExperimentError::VerifyFailed { blocks: n, tx_per_block: t };
            // One warm-up pass, then repetitions interleaved across worker
            // counts so slow drift on the host hits every count alike.
            time_once(&chain, 1, difficulty).ok_or_else(failed)?;
            let mut times = vec![Vec::with_capacity(repetitions); workers.len()];
            for _ in 0..repetitions {
                for (slot, &w) in times.iter_mut().zip(workers) {
                    slot.push(time_once(&chain, w, difficulty).ok_or_else(failed)?);
                }
            }
            for (times, &w) in times.iter().zip(workers) {
                runs.push(VerifyRun {
                    blocks: n,
                    tx_per_block: t,
                    workers: w,
                    repetitions,
                    wall_time: median(times),
                    min_time: times.iter().copied().fold(f64::INFINITY, f64::min),
                    max_time: times.iter().copied().fold(0.0, f64::max),
                });
            }
        }
    }

    let mut report = VerifyReport {
        host_cores: host_cores(),
        repetitions,
        max_blocks,
        linearity: Vec::new(),
        grouping: Vec::new(),
        speedups: Vec::new(),
        runs,
    };
    let mut counts = block_counts.to_vec();
    counts.sort_unstable();
    counts.dedup();
    for &t in tx_per_block {
        for &w in workers {
            if counts.len() >= 2 {
                let x: Vec<f64> = counts.iter().map(|&n| n as f64).collect();
                let y: Vec<f64> = counts.iter().map(|&n| report.run(n, t, w).expect("measured").wall_time).collect();
                report.linearity.push(Linearity { tx_per_block: t, workers: w, fit: linear_fit(&x, &y) });
            }
        }
    }
    if max_blocks > 0 {
        for &w in workers {
            let single = tx_per_block.contains(&1).then(|| *report.run(max_blocks, 1, w).expect("measured"));
            for &t in tx_per_block {
                let r = *report.run(max_blocks, t, w).expect("measured");
                report.grouping.push(Grouping {
                    tx_per_block: t,
                    workers: w,
                    per_block: r.per_block(),
                    per_tx: r.per_tx(),
                    per_block_change_vs_single: single.map_or(f64::NAN, |s| r.per_block() / s.per_block() - 1.0),
                    per_tx_reduction_vs_single: single.map_or(f64::NAN, |s| 1.0 - r.per_tx() / s.per_tx()),
                });
            }
        }
        if workers.contains(&1) {
            let mut speedups = Vec::new();
            for &t in tx_per_block {
                let base = report.run(max_blocks, t, 1).expect("measured").wall_time;
                let speedup = |w: usize| report.run(max_blocks, t, w).map(|r| base / r.wall_time);
                for &w in workers {
                    let s = speedup(w).expect("measured");
                    let gain_over_half = (w % 2 == 0).then(|| speedup(w / 2)).flatten().map(|h| s / h);
                    speedups.push(Speedup { tx_per_block: t, workers: w, speedup: s, gain_over_half });
                }
            }
            report.speedups = speedups;
        }
    }
    Ok(report)
}
