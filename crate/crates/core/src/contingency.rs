//! Paired tested/not-tested counts for two algorithms and kernel-regression
//! estimation of the threshold-specific activity rate.
//!
//! The counts are the 2x2 contingency cells for active ligands: tested by
//! algorithm 1 (`q1`), by algorithm 2 (`q2`), by both (`q12`), out of
//! `n_plus` actives; each algorithm applies its own score threshold. The
//! activity rate at a threshold, `P(+ | S = t_r)`, is estimated by
//! Nadaraya-Watson regression of the activity flag on the score.

use serde::Serialize;

use crate::curves::{ranked_algo, RankedAlgo};
use crate::dataset::{summarize, ScoredDataset};
use crate::error::Result;

/// Tested/not-tested contingency cells for the active ligands.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PairedCounts {
    /// Actives tested by algorithm 1.
    pub q1: usize,
    /// Actives tested by algorithm 2.
    pub q2: usize,
    /// Actives tested by both.
    pub q12: usize,
    /// Total number of actives.
    pub n_plus: usize,
    /// Fraction of all ligands tested by both algorithms.
    pub gamma12_hat: f64,
}

impl PairedCounts {
    pub fn theta1(&self) -> f64 {
        self.q1 as f64 / self.n_plus as f64
    }

    pub fn theta2(&self) -> f64 {
        self.q2 as f64 / self.n_plus as f64
    }

    pub fn theta12(&self) -> f64 {
        self.q12 as f64 / self.n_plus as f64
    }
}

/// Kernel-regression estimate of the activity rate at a threshold.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LambdaEstimate {
    /// Estimated rate, clamped to [0, 1].
    pub value: f64,
    /// Rule-of-thumb bandwidth used (0 when degenerate).
    pub bandwidth: f64,
    /// Threshold the regression was evaluated at.
    pub threshold: f64,
    /// True when the kernel mass degenerated and the nearest-neighbor
    /// fallback was used instead.
    pub fallback: bool,
}

/// Paired counts at a common testing fraction `r`.
pub fn paired_counts(ds: &ScoredDataset, algo1: &str, algo2: &str, r: f64) -> Result<PairedCounts> {
    paired_counts_rr(ds, algo1, algo2, r, r)
}

/// Paired counts with per-algorithm testing fractions: algorithm 1 tests
/// its top `r1` fraction and algorithm 2 its top `r2` fraction.
pub fn paired_counts_rr(
    ds: &ScoredDataset,
    algo1: &str,
    algo2: &str,
    r1: f64,
    r2: f64,
) -> Result<PairedCounts> {
    let summary = summarize(ds)?;
    let s1 = ds.scores(algo1)?;
    let s2 = ds.scores(algo2)?;
    let t1 = ranked_algo(ds, algo1)?.threshold(r1)?;
    let t2 = ranked_algo(ds, algo2)?.threshold(r2)?;
    Ok(count_cells(s1, s2, ds.activity(), t1, t2, summary.n_plus))
}

pub(crate) fn count_cells(
    s1: &[f64],
    s2: &[f64],
    activity: &[bool],
    t1: f64,
    t2: f64,
    n_plus: usize,
) -> PairedCounts {
    let mut q1 = 0;
    let mut q2 = 0;
    let mut q12 = 0;
    let mut both_all = 0usize;
    for ((&a, &x1), &x2) in activity.iter().zip(s1).zip(s2) {
        let in1 = x1 > t1;
        let in2 = x2 > t2;
        if in1 && in2 {
            both_all += 1;
        }
        if a {
            q1 += in1 as usize;
            q2 += in2 as usize;
            q12 += (in1 && in2) as usize;
        }
    }
    PairedCounts {
        q1,
        q2,
        q12,
        n_plus,
        gamma12_hat: both_all as f64 / activity.len() as f64,
    }
}

/// Activity rate at the testing threshold for fraction `r`, by
/// Nadaraya-Watson regression with a Gaussian kernel and the rule-of-thumb
/// bandwidth `1.06 * sd * n^(-1/5)`.
pub fn lambda_hat(ds: &ScoredDataset, algorithm: &str, r: f64) -> Result<LambdaEstimate> {
    summarize(ds)?;
    let ranked = ranked_algo(ds, algorithm)?;
    let t = ranked.threshold(r)?;
    Ok(lambda_at_threshold(&ranked, t))
}

pub(crate) fn lambda_at_threshold(ranked: &RankedAlgo, t: f64) -> LambdaEstimate {
    let n = ranked.n;
    let h = 1.06 * ranked.score_sd * (n as f64).powf(-0.2);

    // Below this effective sample size the kernel estimate rests on too
    // few observations to be usable inside a variance formula.
    const MIN_KERNEL_MASS: f64 = 10.0;

    if t.is_finite() && h > 0.0 {
        // Weights beyond 10 bandwidths are below 3e-22 and cannot move the
        // estimate; restricting the sum keeps dense grids cheap.
        let lo = ranked.by_score.partition_point(|&(s, _)| s < t - 10.0 * h);
        let hi = ranked.by_score.partition_point(|&(s, _)| s <= t + 10.0 * h);
        let mut wsum = 0.0;
        let mut wx = 0.0;
        for &(s, a) in &ranked.by_score[lo..hi] {
            let u = (s - t) / h;
            let w = (-0.5 * u * u).exp();
            wsum += w;
            if a {
                wx += w;
            }
        }
        if wsum >= MIN_KERNEL_MASS.min(0.5 * ranked.n as f64) {
            return LambdaEstimate {
                value: (wx / wsum).clamp(0.0, 1.0),
                bandwidth: h,
                threshold: t,
                fallback: false,
            };
        }
    }

    // Degenerate kernel mass: use the activity rate among the
    // 2*ceil(sqrt(n)) scores nearest the threshold.
    let k = (2.0 * (n as f64).sqrt().ceil()) as usize;
    let k = k.clamp(1, n);
    let value = nearest_rate(&ranked.by_score, t, k);
    LambdaEstimate {
        value,
        bandwidth: h,
        threshold: t,
        fallback: true,
    }
}

// Mean activity among the k scores nearest to t; ties broken toward the
// smaller score so the result is deterministic.
fn nearest_rate(by_score: &[(f64, bool)], t: f64, k: usize) -> f64 {
    let n = by_score.len();
    let mut right = by_score.partition_point(|&(s, _)| s <= t);
    let mut left = right; // left is one past the lower candidate
    let mut active = 0usize;
    let mut taken = 0usize;
    while taken < k {
        let lower = if left > 0 {
            Some(t - by_score[left - 1].0)
        } else {
            None
        };
        let upper = if right < n {
            Some(by_score[right].0 - t)
        } else {
            None
        };
        let take_lower = match (lower, upper) {
            (Some(dl), Some(du)) => dl <= du,
            (Some(_), None) => true,
            (None, Some(_)) => false,
            (None, None) => break,
        };
        if take_lower {
            left -= 1;
            active += by_score[left].1 as usize;
        } else {
            active += by_score[right].1 as usize;
            right += 1;
        }
        taken += 1;
    }
    if taken == 0 {
        0.0
    } else {
        active as f64 / taken as f64
    }
}
