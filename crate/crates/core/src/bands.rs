//! Simultaneous confidence bands for one hit enrichment curve and for the
//! difference between two curves.
//!
//! Bands are rectanguloid: `center_i +/- q * SE_i` across the grid. The
//! Bonferroni critical value is the normal quantile at `1 - alpha / (2k)`;
//! the sup-t critical value is the Monte Carlo `1 - alpha` quantile of
//! `sup_i |Z_i| / SE_i` under the estimated covariance of the curve
//! estimates, which is the smallest rectanguloid with simultaneous
//! coverage.
//!
//! Two other constructions exist but are not worth providing: Wald
//! ellipsoids are not rectanguloid (and therefore hard to visualize along
//! a curve), and projecting the ellipsoid onto a rectanguloid gives
//! `q = sqrt(chi2_{k, 1-alpha})`, which is never narrower than the
//! Bonferroni band.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::contingency::lambda_at_threshold;
use crate::curves::{ranked_algo, FractionGrid, RankedAlgo};
use crate::dataset::{summarize, ScoredDataset};
use crate::error::{Error, Result};
use crate::linalg::{psd_factor, SquareMatrix};
use crate::pointwise::{emproc_cov_cross, emproc_cov_single};
use crate::rng::substream_rng;
use crate::stats::normal_quantile;

/// Estimated covariance matrix of curve estimates over a fraction grid.
#[derive(Debug, Clone)]
pub struct CovarianceMatrix {
    /// Snapped grid the matrix refers to.
    pub grid: FractionGrid,
    /// Test counts matching the grid.
    pub counts: Vec<usize>,
    /// Covariances of the estimates themselves (already divided by n).
    pub matrix: SquareMatrix,
}

/// Band construction method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum BandMethod {
    SupT,
    Bonferroni,
}

impl std::str::FromStr for BandMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "supt" | "sup-t" => Ok(BandMethod::SupT),
            "bonferroni" => Ok(BandMethod::Bonferroni),
            other => Err(Error::InvalidArgument(format!(
                "unknown band method '{other}'"
            ))),
        }
    }
}

/// What a band covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BandKind {
    Single,
    Difference,
}

/// Degeneracies encountered while building a band.
#[derive(Debug, Clone, Default, Serialize)]
pub struct BandFlags {
    /// Indices of grid points with zero standard error, excluded from the
    /// sup statistic; their band collapses to the center point.
    pub excluded_points: Vec<usize>,
    /// Negative eigenvalue mass exceeding 1e-8 of the trace was clipped.
    pub psd_repaired: bool,
    /// A kernel-regression fallback fed some lambda estimate.
    pub lambda_fallback: bool,
    /// Some negative variance estimate was floored by shrinking lambdas.
    pub variance_floored: bool,
}

/// A simultaneous confidence band over a fraction grid.
#[derive(Debug, Clone, Serialize)]
pub struct Band {
    pub algorithms: Vec<String>,
    pub kind: BandKind,
    pub grid: FractionGrid,
    pub counts: Vec<usize>,
    pub center: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Critical value multiplying the standard errors.
    pub q: f64,
    pub method: BandMethod,
    pub plus: bool,
    pub alpha: f64,
    pub mc_draws: Option<usize>,
    pub seed: Option<u64>,
    pub flags: BandFlags,
}

/// Options shared by band constructors.
#[derive(Debug, Clone, Copy)]
pub struct BandConfig {
    pub method: BandMethod,
    pub plus: bool,
    pub alpha: f64,
    /// Monte Carlo draws for the sup-t critical value.
    pub draws: usize,
    pub seed: u64,
}

impl Default for BandConfig {
    fn default() -> Self {
        Self {
            method: BandMethod::SupT,
            plus: true,
            alpha: 0.05,
            draws: 100_000,
            seed: 0,
        }
    }
}

// ---------------------------------------------------------------------------
// Single-curve covariance
// ---------------------------------------------------------------------------

pub(crate) struct SingleParts {
    pub rs: Vec<f64>,
    pub counts: Vec<usize>,
    /// Active ligands tested at each grid point.
    pub q: Vec<usize>,
    pub lambdas: Vec<f64>,
    pub lambda_fallback: bool,
    pub n_plus: usize,
    pub pi_hat: f64,
}

pub(crate) fn single_parts(
    ds: &ScoredDataset,
    algorithm: &str,
    grid: &FractionGrid,
) -> Result<SingleParts> {
    let summary = summarize(ds)?;
    let ranked = ranked_algo(ds, algorithm)?;
    let (grid, counts) = grid.snap_to(summary.n)?;
    let rs = grid.fractions().to_vec();
    let mut q = Vec::with_capacity(rs.len());
    let mut lambdas = Vec::with_capacity(rs.len());
    let mut fallback = false;
    for &r in &rs {
        let t = ranked.threshold(r)?;
        q.push(ranked.active_count_above(t));
        let l = lambda_at_threshold(&ranked, t);
        fallback |= l.fallback;
        lambdas.push(l.value);
    }
    Ok(SingleParts {
        rs,
        counts,
        q,
        lambdas,
        lambda_fallback: fallback,
        n_plus: summary.n_plus,
        pi_hat: summary.pi_hat,
    })
}

// The estimated deflation factor multiplying the binomial-scale variance
// is a quadratic in the lambda estimates with a root that noisy lambdas
// cross at small test counts; left unchecked, a near-root estimate makes
// a band arm collapse. Keep at least this share of the binomial variance.
const MIN_BAND_DEFLATION: f64 = 0.25;

// Shrink a lambda-parameterized variance toward the binomial regime until
// it is nonnegative (negative estimates happen at very small test counts),
// then keep at least `MIN_BAND_DEFLATION` of the binomial-scale variance.
fn floor_variance(var: impl Fn(f64) -> f64, binom: f64) -> (f64, bool) {
    let mut scale = 1.0;
    let mut v = var(scale);
    let mut floored = false;
    let mut rounds = 0;
    while v < 0.0 && rounds < 200 {
        scale *= 0.5;
        v = var(scale);
        floored = true;
        rounds += 1;
    }
    let floor = MIN_BAND_DEFLATION * binom;
    if v < floor {
        v = floor;
        floored = true;
    }
    (v, floored)
}

// Everything a band needs besides the critical value.
pub(crate) struct BandInputs {
    pub centers: Vec<f64>,
    pub matrix: SquareMatrix,
    pub floored: bool,
    /// Largest possible shift of the center due to a plus adjustment;
    /// the per-point variance is kept large enough that a pointwise
    /// interval absorbs it.
    pub shift_bound: f64,
}

// Covariance entries from parts; `plus` applies add-two-successes /
// add-two-failures to the recall proportions. With `stabilize` the
// diagonal gets the negative-variance and deflation floors needed for
// band construction; without it the entries are the raw estimates.
pub(crate) fn single_cov_from_parts(
    parts: &SingleParts,
    plus: bool,
    stabilize: bool,
) -> BandInputs {
    let k = parts.rs.len();
    let m = if plus {
        parts.n_plus as f64 + 4.0
    } else {
        parts.n_plus as f64
    };
    let thetas: Vec<f64> = parts
        .q
        .iter()
        .map(|&qi| (qi as f64 + if plus { 2.0 } else { 0.0 }) / m)
        .collect();
    let mut matrix = SquareMatrix::zeros(k);
    let mut floored = false;
    for i in 0..k {
        for j in i..k {
            let entry = |scale: f64| {
                emproc_cov_single(
                    thetas[i],
                    thetas[j],
                    scale * parts.lambdas[i],
                    scale * parts.lambdas[j],
                    parts.rs[i],
                    parts.rs[j],
                    parts.pi_hat,
                    m,
                )
            };
            let v = if i == j && stabilize {
                let binom = thetas[i] * (1.0 - thetas[i]) / m;
                let (v, f) = floor_variance(entry, binom);
                floored |= f;
                v
            } else {
                entry(1.0)
            };
            matrix.set(i, j, v);
            matrix.set(j, i, v);
        }
    }
    BandInputs {
        centers: thetas,
        matrix,
        floored,
        shift_bound: if plus { 2.0 / m } else { 0.0 },
    }
}

/// Covariance matrix of the recall estimates of one algorithm across the
/// grid (no plus adjustment).
pub fn cov_matrix_single(
    ds: &ScoredDataset,
    algorithm: &str,
    grid: &FractionGrid,
) -> Result<CovarianceMatrix> {
    let parts = single_parts(ds, algorithm, grid)?;
    let inputs = single_cov_from_parts(&parts, false, false);
    Ok(CovarianceMatrix {
        grid: FractionGrid::from_fractions(parts.rs.clone())?,
        counts: parts.counts.clone(),
        matrix: inputs.matrix,
    })
}

// ---------------------------------------------------------------------------
// Difference covariance
// ---------------------------------------------------------------------------

// Per-point tested-set bitmasks allow the O(k^2) cross-fraction cells to
// be counted with word operations.
pub(crate) struct DiffParts {
    pub rs: Vec<f64>,
    pub counts: Vec<usize>,
    pub q1: Vec<usize>,
    pub q2: Vec<usize>,
    pub l1: Vec<f64>,
    pub l2: Vec<f64>,
    pub lambda_fallback: bool,
    pub n: usize,
    pub n_plus: usize,
    masks1: Vec<Vec<u64>>,
    masks2: Vec<Vec<u64>>,
    active: Vec<u64>,
}

fn tested_masks(scores: &[f64], thresholds: &[f64]) -> Vec<Vec<u64>> {
    let words = scores.len().div_ceil(64);
    thresholds
        .iter()
        .map(|&t| {
            let mut mask = vec![0u64; words];
            for (i, &s) in scores.iter().enumerate() {
                if s > t {
                    mask[i / 64] |= 1 << (i % 64);
                }
            }
            mask
        })
        .collect()
}

impl DiffParts {
    // (actives tested by both, ligands tested by both)
    fn cross(&self, first: bool, i: usize, second: bool, j: usize) -> (usize, usize) {
        let a = if first {
            &self.masks1[i]
        } else {
            &self.masks2[i]
        };
        let b = if second {
            &self.masks1[j]
        } else {
            &self.masks2[j]
        };
        let mut both_active = 0u32;
        let mut both = 0u32;
        for ((&wa, &wb), &wx) in a.iter().zip(b).zip(&self.active) {
            let w = wa & wb;
            both += w.count_ones();
            both_active += (w & wx).count_ones();
        }
        (both_active as usize, both as usize)
    }
}

pub(crate) fn diff_parts(
    ds: &ScoredDataset,
    algo1: &str,
    algo2: &str,
    grid: &FractionGrid,
) -> Result<DiffParts> {
    let summary = summarize(ds)?;
    let ranked1 = ranked_algo(ds, algo1)?;
    let ranked2 = ranked_algo(ds, algo2)?;
    let (grid, counts) = grid.snap_to(summary.n)?;
    let rs = grid.fractions().to_vec();

    type PointStats = (Vec<f64>, Vec<usize>, Vec<f64>, bool);
    let collect = |ranked: &RankedAlgo| -> Result<PointStats> {
        let mut thresholds = Vec::with_capacity(rs.len());
        let mut q = Vec::with_capacity(rs.len());
        let mut lambdas = Vec::with_capacity(rs.len());
        let mut fallback = false;
        for &r in &rs {
            let t = ranked.threshold(r)?;
            thresholds.push(t);
            q.push(ranked.active_count_above(t));
            let l = lambda_at_threshold(ranked, t);
            fallback |= l.fallback;
            lambdas.push(l.value);
        }
        Ok((thresholds, q, lambdas, fallback))
    };
    let (t1, q1, l1, f1) = collect(&ranked1)?;
    let (t2, q2, l2, f2) = collect(&ranked2)?;

    let words = summary.n.div_ceil(64);
    let mut active = vec![0u64; words];
    for (i, &a) in ds.activity().iter().enumerate() {
        if a {
            active[i / 64] |= 1 << (i % 64);
        }
    }

    Ok(DiffParts {
        masks1: tested_masks(ds.scores(algo1)?, &t1),
        masks2: tested_masks(ds.scores(algo2)?, &t2),
        active,
        rs,
        counts,
        q1,
        q2,
        l1,
        l2,
        lambda_fallback: f1 || f2,
        n: summary.n,
        n_plus: summary.n_plus,
    })
}

// Difference covariance entries from parts; `plus` applies the
// Bonett-Price cell adjustment. `stabilize` as in single_cov_from_parts.
pub(crate) fn diff_cov_from_parts(parts: &DiffParts, plus: bool, stabilize: bool) -> BandInputs {
    let k = parts.rs.len();
    let n = parts.n as f64;
    let pi_hat = parts.n_plus as f64 / n;
    let m = if plus {
        parts.n_plus as f64 + 2.0
    } else {
        parts.n_plus as f64
    };
    let add = if plus { 1.0 } else { 0.0 };
    let theta1: Vec<f64> = parts.q1.iter().map(|&q| (q as f64 + add) / m).collect();
    let theta2: Vec<f64> = parts.q2.iter().map(|&q| (q as f64 + add) / m).collect();
    let centers: Vec<f64> = theta1.iter().zip(&theta2).map(|(a, b)| a - b).collect();

    // All four blocks share the empirical cross-fraction estimator so that
    // identical algorithms cancel exactly.
    let term =
        |cells: (usize, usize), ta: f64, tb: f64, la: f64, lb: f64, ri: f64, rj: f64| -> f64 {
            let theta_both = cells.0 as f64 / m;
            let gamma_both = cells.1 as f64 / n;
            emproc_cov_cross(theta_both, ta, tb, la, lb, ri, rj, gamma_both, pi_hat, m).0
        };

    let mut matrix = SquareMatrix::zeros(k);
    let mut floored = false;
    for i in 0..k {
        for j in i..k {
            let (ri, rj) = (parts.rs[i], parts.rs[j]);
            let entry = |scale: f64| {
                let c11 = term(
                    parts.cross(true, i, true, j),
                    theta1[i],
                    theta1[j],
                    scale * parts.l1[i],
                    scale * parts.l1[j],
                    ri,
                    rj,
                );
                let c22 = term(
                    parts.cross(false, i, false, j),
                    theta2[i],
                    theta2[j],
                    scale * parts.l2[i],
                    scale * parts.l2[j],
                    ri,
                    rj,
                );
                let c12 = term(
                    parts.cross(true, i, false, j),
                    theta1[i],
                    theta2[j],
                    scale * parts.l1[i],
                    scale * parts.l2[j],
                    ri,
                    rj,
                );
                let c21 = term(
                    parts.cross(true, j, false, i),
                    theta1[j],
                    theta2[i],
                    scale * parts.l1[j],
                    scale * parts.l2[i],
                    rj,
                    ri,
                );
                c11 + c22 - c12 - c21
            };
            let v = if i == j && stabilize {
                let t12 = parts.cross(true, i, false, i).0 as f64 / m;
                let binom = theta1[i] * (1.0 - theta1[i]) / m + theta2[i] * (1.0 - theta2[i]) / m
                    - 2.0 * (t12 - theta1[i] * theta2[i]) / m;
                let (v, f) = floor_variance(entry, binom.max(0.0));
                floored |= f;
                v
            } else {
                entry(1.0)
            };
            matrix.set(i, j, v);
            matrix.set(j, i, v);
        }
    }
    BandInputs {
        centers,
        matrix,
        floored,
        shift_bound: if plus { 2.0 / m } else { 0.0 },
    }
}

/// Covariance matrix of the recall difference between two algorithms
/// across the grid (no plus adjustment).
pub fn cov_matrix_diff(
    ds: &ScoredDataset,
    algo1: &str,
    algo2: &str,
    grid: &FractionGrid,
) -> Result<CovarianceMatrix> {
    let parts = diff_parts(ds, algo1, algo2, grid)?;
    let inputs = diff_cov_from_parts(&parts, false, false);
    Ok(CovarianceMatrix {
        grid: FractionGrid::from_fractions(parts.rs.clone())?,
        counts: parts.counts.clone(),
        matrix: inputs.matrix,
    })
}

// ---------------------------------------------------------------------------
// Critical values
// ---------------------------------------------------------------------------

/// Bonferroni critical value for `k` simultaneous normal intervals.
pub fn bonferroni_critical(k: usize, alpha: f64) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument("k must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    Ok(normal_quantile(1.0 - alpha / (2.0 * k as f64)))
}

/// Sup-t critical value and the degeneracy bookkeeping behind it.
#[derive(Debug, Clone)]
pub struct CriticalValue {
    pub q: f64,
    /// Grid indices excluded because their variance is zero.
    pub excluded_points: Vec<usize>,
    /// Fraction of the trace clipped by the PSD repair.
    pub clipped_fraction: f64,
}

/// Monte Carlo sup-t critical value for a covariance matrix.
///
/// Draws `draws >= 10_000` samples from N(0, V) (V repaired to be positive
/// semidefinite by clipping negative eigenvalues) and returns the
/// empirical `1 - alpha` quantile of `sup_i |Z_i| / SE_i`. Deterministic
/// given the seed, independent of thread count.
pub fn supt_critical(
    cov: &CovarianceMatrix,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> Result<CriticalValue> {
    supt_critical_matrix(&cov.matrix, alpha, draws, seed)
}

pub(crate) fn supt_critical_matrix(
    matrix: &SquareMatrix,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> Result<CriticalValue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    if draws < 10_000 {
        return Err(Error::InvalidArgument(
            "sup-t needs at least 10,000 Monte Carlo draws".into(),
        ));
    }
    let k = matrix.dim();
    let mut active = Vec::with_capacity(k);
    let mut excluded = Vec::new();
    for i in 0..k {
        if matrix.get(i, i) > 0.0 {
            active.push(i);
        } else {
            excluded.push(i);
        }
    }
    if active.is_empty() {
        return Err(Error::NumericalDegeneracy(
            "every grid point has zero variance; no sup-t statistic exists".into(),
        ));
    }

    let ka = active.len();
    let mut sub = SquareMatrix::zeros(ka);
    for (ai, &i) in active.iter().enumerate() {
        for (aj, &j) in active.iter().enumerate() {
            sub.set(ai, aj, matrix.get(i, j));
        }
    }
    let psd = psd_factor(&sub);
    let factor = psd.factor;
    // Standardize by the repaired covariance so the sup statistic stays a
    // proper sup of unit-variance normals (the repair can move diagonals).
    let se: Vec<f64> = (0..ka)
        .map(|i| {
            (0..ka)
                .map(|j| factor.get(i, j) * factor.get(i, j))
                .sum::<f64>()
                .sqrt()
        })
        .collect();

    const BLOCK: usize = 2048;
    let mut sups = vec![0.0_f64; draws];
    sups.par_chunks_mut(BLOCK)
        .enumerate()
        .for_each(|(block, chunk)| {
            let mut rng = substream_rng(seed, block as u64);
            let mut u = vec![0.0_f64; ka];
            for sup_out in chunk.iter_mut() {
                for ui in u.iter_mut() {
                    *ui = rng.sample(StandardNormal);
                }
                let mut sup = 0.0_f64;
                for (i, &sei) in se.iter().enumerate() {
                    if sei == 0.0 {
                        continue; // direction fully clipped, z_i is 0
                    }
                    let mut z = 0.0;
                    for (j, &uj) in u.iter().enumerate() {
                        z += factor.get(i, j) * uj;
                    }
                    sup = sup.max(z.abs() / sei);
                }
                *sup_out = sup;
            }
        });
    sups.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let idx = ((1.0 - alpha) * draws as f64).ceil() as usize;
    let q = sups[idx.clamp(1, draws) - 1];
    Ok(CriticalValue {
        q,
        excluded_points: excluded,
        clipped_fraction: psd.clipped_fraction,
    })
}

// ---------------------------------------------------------------------------
// Band construction
// ---------------------------------------------------------------------------

// Critical value plus per-point limits for prepared band inputs. Shared
// by the public constructors and the coverage studies.
pub(crate) struct BandLimits {
    pub q: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub excluded_points: Vec<usize>,
    pub psd_repaired: bool,
}

pub(crate) fn band_limits(
    inputs: &BandInputs,
    kind: BandKind,
    method: BandMethod,
    alpha: f64,
    draws: usize,
    seed: u64,
) -> Result<BandLimits> {
    let k = inputs.centers.len();
    let (clip_lo, clip_hi) = match kind {
        BandKind::Single => (0.0, 1.0),
        BandKind::Difference => (-1.0, 1.0),
    };

    // A plus adjustment moves the center by at most `shift_bound`. Give
    // every point a variance allowance for that deterministic shift on
    // top of its sampling variance, otherwise a nearly deterministic
    // count would put the band strictly beside the plain estimate.
    let mut matrix = inputs.matrix.clone();
    if inputs.shift_bound > 0.0 {
        let z = normal_quantile(1.0 - alpha / 2.0);
        let allowance = (inputs.shift_bound / z) * (inputs.shift_bound / z);
        for i in 0..k {
            matrix.set(i, i, matrix.get(i, i) + allowance);
        }
    }

    let (q, excluded_points, psd_repaired) = match method {
        BandMethod::Bonferroni => {
            let excluded: Vec<usize> = (0..k).filter(|&i| matrix.get(i, i) <= 0.0).collect();
            let k_active = k - excluded.len();
            if k_active == 0 {
                return Err(Error::NumericalDegeneracy(
                    "every grid point has zero variance".into(),
                ));
            }
            (bonferroni_critical(k_active, alpha)?, excluded, false)
        }
        BandMethod::SupT => {
            let cv = supt_critical_matrix(&matrix, alpha, draws, seed)?;
            (cv.q, cv.excluded_points, cv.clipped_fraction > 1e-8)
        }
    };

    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    for i in 0..k {
        let se = matrix.get(i, i).max(0.0).sqrt();
        lower.push((inputs.centers[i] - q * se).max(clip_lo));
        upper.push((inputs.centers[i] + q * se).min(clip_hi));
    }
    Ok(BandLimits {
        q,
        lower,
        upper,
        excluded_points,
        psd_repaired,
    })
}

fn assemble_band(
    algorithms: Vec<String>,
    kind: BandKind,
    rs: Vec<f64>,
    counts: Vec<usize>,
    inputs: BandInputs,
    lambda_fallback: bool,
    config: &BandConfig,
) -> Result<Band> {
    let limits = band_limits(
        &inputs,
        kind,
        config.method,
        config.alpha,
        config.draws,
        config.seed,
    )?;
    let (mc_draws, seed) = match config.method {
        BandMethod::SupT => (Some(config.draws), Some(config.seed)),
        BandMethod::Bonferroni => (None, None),
    };
    Ok(Band {
        algorithms,
        kind,
        grid: FractionGrid::from_fractions(rs)?,
        counts,
        center: inputs.centers,
        lower: limits.lower,
        upper: limits.upper,
        q: limits.q,
        method: config.method,
        plus: config.plus,
        alpha: config.alpha,
        mc_draws,
        seed,
        flags: BandFlags {
            excluded_points: limits.excluded_points,
            psd_repaired: limits.psd_repaired,
            lambda_fallback,
            variance_floored: inputs.floored,
        },
    })
}

/// Simultaneous band for one algorithm's hit enrichment curve.
pub fn band_single(
    ds: &ScoredDataset,
    algorithm: &str,
    grid: &FractionGrid,
    config: &BandConfig,
) -> Result<Band> {
    let parts = single_parts(ds, algorithm, grid)?;
    let inputs = single_cov_from_parts(&parts, config.plus, true);
    assemble_band(
        vec![algorithm.to_string()],
        BandKind::Single,
        parts.rs.clone(),
        parts.counts.clone(),
        inputs,
        parts.lambda_fallback,
        config,
    )
}

/// Simultaneous band for the difference between two algorithms' curves
/// (algorithm 1 minus algorithm 2).
pub fn band_difference(
    ds: &ScoredDataset,
    algo1: &str,
    algo2: &str,
    grid: &FractionGrid,
    config: &BandConfig,
) -> Result<Band> {
    let parts = diff_parts(ds, algo1, algo2, grid)?;
    let inputs = diff_cov_from_parts(&parts, config.plus, true);
    assemble_band(
        vec![algo1.to_string(), algo2.to_string()],
        BandKind::Difference,
        parts.rs.clone(),
        parts.counts.clone(),
        inputs,
        parts.lambda_fallback,
        config,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ScoreColumn;
    use crate::pointwise::{compare, var_jz, Method, MethodSpec};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    fn dataset(seed: u64, n: usize, pi: f64) -> ScoredDataset {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let activity: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < pi).collect();
        let s1: Vec<f64> = activity
            .iter()
            .map(|&a| rng.random::<f64>() + if a { 0.6 } else { 0.0 })
            .collect();
        let s2: Vec<f64> = s1
            .iter()
            .map(|&v| 0.8 * v + 0.2 * rng.random::<f64>())
            .collect();
        ScoredDataset::new(
            (0..n).map(|i| i.to_string()).collect(),
            activity,
            vec![
                ScoreColumn {
                    name: "a".into(),
                    values: s1,
                },
                ScoreColumn {
                    name: "b".into(),
                    values: s2,
                },
            ],
        )
        .unwrap()
    }

    #[test]
    fn single_cov_diagonal_is_var_jz() {
        let ds = dataset(1, 400, 0.2);
        let grid = FractionGrid::from_fractions(vec![0.05, 0.1, 0.3]).unwrap();
        let cov = cov_matrix_single(&ds, "a", &grid).unwrap();
        let parts = single_parts(&ds, "a", &grid).unwrap();
        for i in 0..3 {
            let theta = parts.q[i] as f64 / parts.n_plus as f64;
            let expected = var_jz(
                theta,
                parts.lambdas[i],
                parts.rs[i],
                parts.pi_hat,
                parts.n_plus as f64,
            );
            assert_eq!(cov.matrix.get(i, i).to_bits(), expected.to_bits());
        }
    }

    #[test]
    fn single_cov_zero_lambda_is_binomial_process() {
        let ds = dataset(2, 300, 0.25);
        let grid = FractionGrid::from_fractions(vec![0.1, 0.4]).unwrap();
        let mut parts = single_parts(&ds, "a", &grid).unwrap();
        parts.lambdas = vec![0.0; parts.rs.len()];
        let inputs = single_cov_from_parts(&parts, false, false);
        for i in 0..2 {
            for j in i..2 {
                let expected = inputs.centers[i] * (1.0 - inputs.centers[j]) / parts.n_plus as f64;
                close(inputs.matrix.get(i, j), expected, 1e-18);
            }
        }
    }

    #[test]
    fn single_cov_matches_scripted_formula() {
        // independent evaluation of the product-form covariance on a
        // two-point grid
        let ds = dataset(3, 500, 0.3);
        let grid = FractionGrid::from_fractions(vec![0.1, 0.25]).unwrap();
        let cov = cov_matrix_single(&ds, "a", &grid).unwrap();
        let parts = single_parts(&ds, "a", &grid).unwrap();

        let np = parts.n_plus as f64;
        let (t_i, t_j) = (parts.q[0] as f64 / np, parts.q[1] as f64 / np);
        let (l_i, l_j) = (parts.lambdas[0], parts.lambdas[1]);
        let (r_i, r_j) = (parts.rs[0], parts.rs[1]);
        let var_b_like = t_i * (1.0 - t_j) / np;
        let braces =
            (1.0 - l_i - l_j) + r_i * (1.0 - r_j) * l_i * l_j / (parts.pi_hat * t_i * (1.0 - t_j));
        close(cov.matrix.get(0, 1), var_b_like * braces, 1e-15);
        assert_eq!(cov.matrix.get(0, 1), cov.matrix.get(1, 0));
    }

    #[test]
    fn diff_cov_identical_algorithms_is_exactly_zero() {
        let n = 300;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(9);
        let activity: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.2).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let ds = ScoredDataset::new(
            (0..n).map(|i| i.to_string()).collect(),
            activity,
            vec![
                ScoreColumn {
                    name: "a".into(),
                    values: scores.clone(),
                },
                ScoreColumn {
                    name: "b".into(),
                    values: scores,
                },
            ],
        )
        .unwrap();
        let grid = FractionGrid::from_fractions(vec![0.05, 0.1, 0.3, 0.6]).unwrap();
        let cov = cov_matrix_diff(&ds, "a", "b", &grid).unwrap();
        for v in cov.matrix.as_slice() {
            assert_eq!(*v, 0.0);
        }
    }

    #[test]
    fn diff_cov_diagonal_matches_pointwise_emproc_variance() {
        // tie-free scores keep the empirical tested fraction equal to the
        // snapped grid fraction, where the two estimators coincide
        let ds = dataset(4, 400, 0.25);
        let grid = FractionGrid::from_fractions(vec![0.1, 0.3]).unwrap();
        let cov = cov_matrix_diff(&ds, "a", "b", &grid).unwrap();
        for (i, &r) in cov.grid.fractions().iter().enumerate() {
            let res = compare(&ds, "a", "b", r, MethodSpec::plain(Method::EmProc), 0.05).unwrap();
            close(cov.matrix.get(i, i), res.se * res.se, 1e-12);
        }
    }

    #[test]
    fn diff_cov_matches_scripted_assembly() {
        use crate::contingency::{lambda_hat, paired_counts_rr};

        let ds = dataset(5, 350, 0.3);
        let grid = FractionGrid::from_fractions(vec![0.1, 0.25]).unwrap();
        let cov = cov_matrix_diff(&ds, "a", "b", &grid).unwrap();

        // scripted evaluation of the four-block decomposition at (0, 1)
        let summary = crate::dataset::summarize(&ds).unwrap();
        let np = summary.n_plus as f64;
        let (ri, rj) = (cov.grid.fractions()[0], cov.grid.fractions()[1]);
        let lam = |algo: &str, r: f64| lambda_hat(&ds, algo, r).unwrap().value;
        let rec = |algo: &str, r: f64| crate::curves::recall_at(&ds, algo, r).unwrap();

        let block = |a1: &str, a2: &str, ra: f64, rb: f64| -> f64 {
            let cells = paired_counts_rr(&ds, a1, a2, ra, rb).unwrap();
            let t_both = cells.q12 as f64 / np;
            let g_both = cells.gamma12_hat;
            let (ta, tb) = (rec(a1, ra), rec(a2, rb));
            let (la, lb) = (lam(a1, ra), lam(a2, rb));
            let num = t_both - ta * tb;
            if num == 0.0 {
                return 0.0;
            }
            (num / np) * ((1.0 - la - lb) + (g_both - ra * rb) * la * lb / (summary.pi_hat * num))
        };
        let expected = block("a", "a", ri, rj) + block("b", "b", ri, rj)
            - block("a", "b", ri, rj)
            - block("a", "b", rj, ri);
        close(cov.matrix.get(0, 1), expected, 1e-14);
    }

    #[test]
    fn bonferroni_reference_values() {
        close(bonferroni_critical(1, 0.05).unwrap(), 1.959964, 1e-5);
        close(bonferroni_critical(2, 0.05).unwrap(), 2.2414, 2e-4);
        close(bonferroni_critical(25, 0.05).unwrap(), 3.0902, 2e-4);
        assert!(bonferroni_critical(0, 0.05).is_err());
    }

    #[test]
    fn bonferroni_matches_independent_quantile_oracle() {
        use statrs::distribution::{ContinuousCDF, Normal};
        let normal = Normal::new(0.0, 1.0).unwrap();
        for k in [1usize, 2, 5, 25, 100] {
            let expected = normal.inverse_cdf(1.0 - 0.05 / (2.0 * k as f64));
            close(bonferroni_critical(k, 0.05).unwrap(), expected, 1e-7);
        }
    }

    fn identity_cov(k: usize) -> CovarianceMatrix {
        let mut matrix = SquareMatrix::zeros(k);
        for i in 0..k {
            matrix.set(i, i, 1.0);
        }
        CovarianceMatrix {
            grid: FractionGrid::from_counts(&(1..=k).collect::<Vec<usize>>(), 1000).unwrap(),
            counts: (1..=k).collect(),
            matrix,
        }
    }

    #[test]
    fn supt_single_point_recovers_normal_quantile() {
        let cov = identity_cov(1);
        let cv = supt_critical(&cov, 0.05, 200_000, 11).unwrap();
        close(cv.q, 1.96, 0.03);
    }

    #[test]
    fn supt_rank_one_matrix_recovers_normal_quantile() {
        // perfectly correlated coordinates: the sup behaves like one
        let k = 6;
        let mut matrix = SquareMatrix::zeros(k);
        for i in 0..k {
            for j in 0..k {
                matrix.set(i, j, 4.0);
            }
        }
        let cov = CovarianceMatrix {
            grid: FractionGrid::from_counts(&(1..=k).collect::<Vec<usize>>(), 100).unwrap(),
            counts: (1..=k).collect(),
            matrix,
        };
        let cv = supt_critical(&cov, 0.05, 200_000, 13).unwrap();
        close(cv.q, 1.96, 0.03);
    }

    #[test]
    fn supt_identity_sits_between_pointwise_and_bonferroni() {
        let cov = identity_cov(25);
        let cv = supt_critical(&cov, 0.05, 100_000, 17).unwrap();
        assert!(cv.q > 1.96 && cv.q < 3.0902, "q = {}", cv.q);
    }

    #[test]
    fn supt_is_deterministic_given_seed() {
        let cov = identity_cov(8);
        let a = supt_critical(&cov, 0.05, 20_000, 5).unwrap();
        let b = supt_critical(&cov, 0.05, 20_000, 5).unwrap();
        assert_eq!(a.q.to_bits(), b.q.to_bits());
        let c = supt_critical(&cov, 0.05, 20_000, 6).unwrap();
        assert_ne!(a.q.to_bits(), c.q.to_bits());
    }

    #[test]
    fn supt_requires_enough_draws() {
        let cov = identity_cov(2);
        assert!(supt_critical(&cov, 0.05, 5_000, 1).is_err());
    }

    #[test]
    fn band_supt_is_narrower_than_bonferroni() {
        let ds = dataset(21, 600, 0.15);
        let grid = FractionGrid::from_fractions(vec![0.02, 0.05, 0.1, 0.2, 0.5]).unwrap();
        let supt = band_single(
            &ds,
            "a",
            &grid,
            &BandConfig {
                method: BandMethod::SupT,
                seed: 3,
                ..Default::default()
            },
        )
        .unwrap();
        let bonf = band_single(
            &ds,
            "a",
            &grid,
            &BandConfig {
                method: BandMethod::Bonferroni,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(supt.q <= bonf.q * 1.005, "{} vs {}", supt.q, bonf.q);
        for i in 0..supt.center.len() {
            let w_supt = supt.upper[i] - supt.lower[i];
            let w_bonf = bonf.upper[i] - bonf.lower[i];
            assert!(w_supt <= w_bonf + 1e-12);
            assert!(supt.lower[i] <= supt.center[i] && supt.center[i] <= supt.upper[i]);
        }
    }

    #[test]
    fn band_at_full_fraction_collapses() {
        let ds = dataset(23, 200, 0.2);
        let grid = FractionGrid::from_fractions(vec![0.1, 1.0]).unwrap();
        let band = band_single(
            &ds,
            "a",
            &grid,
            &BandConfig {
                plus: false,
                seed: 8,
                ..Default::default()
            },
        )
        .unwrap();
        // recall is exactly 1 at r = 1, SE = 0: excluded and collapsed
        assert_eq!(band.flags.excluded_points, vec![1]);
        assert_eq!(band.center[1], 1.0);
        assert_eq!(band.lower[1], band.upper[1]);
    }

    #[test]
    fn difference_band_is_reproducible() {
        let ds = dataset(25, 400, 0.2);
        let grid = FractionGrid::from_fractions(vec![0.05, 0.1, 0.3]).unwrap();
        let config = BandConfig {
            seed: 99,
            draws: 20_000,
            ..Default::default()
        };
        let a = band_difference(&ds, "a", "b", &grid, &config).unwrap();
        let b = band_difference(&ds, "a", "b", &grid, &config).unwrap();
        assert_eq!(a.q.to_bits(), b.q.to_bits());
        for (x, y) in a.lower.iter().zip(&b.lower) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
    }
}
