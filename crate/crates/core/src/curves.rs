//! Empirical CDFs, score thresholds with tie handling, recall estimation,
//! and hit-enrichment / enrichment-factor curves.
//!
//! Testing the top fraction `r` of a ranked library corresponds to the
//! score threshold `t_r = min{t : F(t) >= 1 - r}` under the empirical CDF
//! `F`. The tested set is `{i : S_i > t_r}`; with ties at the threshold the
//! tested set can fall short of `floor(n r)` items, which is exactly the
//! behavior wanted when ties would otherwise be broken arbitrarily.

use serde::Serialize;

use crate::dataset::{summarize, ScoredDataset};
use crate::error::{Error, Result};

/// Right-continuous empirical CDF over a score sample.
#[derive(Debug, Clone)]
pub struct EmpiricalCdf {
    /// Distinct observed values, ascending.
    values: Vec<f64>,
    /// Number of observations <= values[i].
    cum_counts: Vec<usize>,
    n: usize,
}

impl EmpiricalCdf {
    pub fn new(scores: &[f64]) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::InvalidArgument("empty score vector".into()));
        }
        if scores.iter().any(|v| v.is_nan()) {
            return Err(Error::InvalidArgument("scores contain NaN".into()));
        }
        let mut sorted = scores.to_vec();
        sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let mut values = Vec::new();
        let mut cum_counts = Vec::new();
        for (i, &v) in sorted.iter().enumerate() {
            if values.last() == Some(&v) {
                *cum_counts.last_mut().unwrap() = i + 1;
            } else {
                values.push(v);
                cum_counts.push(i + 1);
            }
        }
        Ok(Self {
            values,
            cum_counts,
            n: scores.len(),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of observations <= s.
    pub fn count_le(&self, s: f64) -> usize {
        // first index with values[i] > s
        let idx = self.values.partition_point(|&v| v <= s);
        if idx == 0 {
            0
        } else {
            self.cum_counts[idx - 1]
        }
    }

    /// F(s), the fraction of observations <= s.
    pub fn eval(&self, s: f64) -> f64 {
        self.count_le(s) as f64 / self.n as f64
    }

    /// Score threshold for testing fraction `r`: the smallest observed
    /// value `t` with `F(t) >= 1 - r`. At `r = 1` the definition
    /// degenerates and everything is tested, encoded as `-inf`.
    pub fn threshold(&self, r: f64) -> Result<f64> {
        let m = tested_count_target(self.n, r)?;
        if m >= self.n {
            return Ok(f64::NEG_INFINITY);
        }
        // F(t) >= 1 - r  <=>  (count above t) <= m; counts above are
        // decreasing in t, so take the first distinct value that works.
        let idx = self.cum_counts.partition_point(|&c| self.n - c > m);
        Ok(self.values[idx])
    }
}

/// floor(n r) with a guard for fractions that are exact multiples of 1/n.
pub(crate) fn tested_count_target(n: usize, r: f64) -> Result<usize> {
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "testing fraction {r} outside (0, 1]"
        )));
    }
    Ok((n as f64 * r + 1e-9).floor() as usize)
}

/// Ordered testing fractions in (0, 1].
#[derive(Debug, Clone, Serialize)]
pub struct FractionGrid {
    fractions: Vec<f64>,
}

impl FractionGrid {
    pub fn from_fractions(fractions: Vec<f64>) -> Result<Self> {
        if fractions.is_empty() {
            return Err(Error::InvalidArgument("empty fraction grid".into()));
        }
        for w in fractions.windows(2) {
            #[allow(clippy::neg_cmp_op_on_partial_ord)] // also rejects NaN
            if !(w[0] < w[1]) {
                return Err(Error::InvalidArgument(
                    "grid fractions must be strictly increasing".into(),
                ));
            }
        }
        if fractions.iter().any(|&r| !(r > 0.0 && r <= 1.0)) {
            return Err(Error::InvalidArgument(
                "grid fractions must lie in (0, 1]".into(),
            ));
        }
        Ok(Self { fractions })
    }

    /// Grid from integer test counts, expressed as fractions k/n.
    pub fn from_counts(counts: &[usize], n: usize) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::InvalidArgument("empty count grid".into()));
        }
        for w in counts.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::InvalidArgument(
                    "grid counts must be strictly increasing".into(),
                ));
            }
        }
        if counts[0] == 0 || *counts.last().unwrap() > n {
            return Err(Error::InvalidArgument(format!(
                "grid counts must lie in [1, {n}]"
            )));
        }
        Self::from_fractions(counts.iter().map(|&k| k as f64 / n as f64).collect())
    }

    /// `k` log-spaced fractions from `r_min` to 1.
    pub fn log_spaced(k: usize, r_min: f64) -> Result<Self> {
        if k < 2 || !(r_min > 0.0 && r_min < 1.0) {
            return Err(Error::InvalidArgument(
                "log grid needs k >= 2 and r_min in (0, 1)".into(),
            ));
        }
        let lo = r_min.ln();
        let step = -lo / (k - 1) as f64;
        Self::from_fractions(
            (0..k)
                .map(|i| (lo + step * i as f64).exp().min(1.0))
                .collect(),
        )
    }

    /// Snap each fraction to an achievable value k/n (k = floor(n r),
    /// at least one test), deduplicating collisions. Returns the snapped
    /// grid and the matching test counts.
    pub fn snap_to(&self, n: usize) -> Result<(FractionGrid, Vec<usize>)> {
        let mut counts: Vec<usize> = Vec::with_capacity(self.fractions.len());
        for &r in &self.fractions {
            let k = tested_count_target(n, r)?.max(1);
            if counts.last() != Some(&k) {
                counts.push(k);
            }
        }
        let grid = Self::from_counts(&counts, n)?;
        Ok((grid, counts))
    }

    pub fn fractions(&self) -> &[f64] {
        &self.fractions
    }

    pub fn len(&self) -> usize {
        self.fractions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fractions.is_empty()
    }
}

/// Whether a curve carries recall or recall divided by the fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveKind {
    Recall,
    EnrichmentFactor,
}

/// A curve evaluated on a fraction grid.
#[derive(Debug, Clone, Serialize)]
pub struct CurveEstimate {
    pub algorithm: String,
    pub grid: FractionGrid,
    pub values: Vec<f64>,
    pub kind: CurveKind,
}

/// Per-algorithm ranked view shared by estimators: empirical CDFs of all
/// scores and of active-ligand scores, plus score/activity pairs sorted by
/// score for kernel regression.
#[derive(Debug, Clone)]
pub(crate) struct RankedAlgo {
    pub cdf_all: EmpiricalCdf,
    pub cdf_pos: EmpiricalCdf,
    /// (score, active) sorted by score ascending.
    pub by_score: Vec<(f64, bool)>,
    /// Sample standard deviation of the scores.
    pub score_sd: f64,
    pub n: usize,
    pub n_plus: usize,
}

impl RankedAlgo {
    pub fn new(scores: &[f64], activity: &[bool]) -> Result<Self> {
        if scores.len() != activity.len() {
            return Err(Error::InvalidArgument(
                "scores and activity have different lengths".into(),
            ));
        }
        let pos: Vec<f64> = scores
            .iter()
            .zip(activity)
            .filter(|(_, &a)| a)
            .map(|(&s, _)| s)
            .collect();
        if pos.is_empty() || pos.len() == scores.len() {
            return Err(Error::DegenerateClasses(
                "need at least one active and one inactive".into(),
            ));
        }
        let mut by_score: Vec<(f64, bool)> = scores
            .iter()
            .copied()
            .zip(activity.iter().copied())
            .collect();
        by_score.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
        let n = scores.len();
        let mean = scores.iter().sum::<f64>() / n as f64;
        let score_sd = if n < 2 {
            0.0
        } else {
            (scores.iter().map(|&s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        };
        Ok(Self {
            cdf_all: EmpiricalCdf::new(scores)?,
            cdf_pos: EmpiricalCdf::new(&pos)?,
            n,
            n_plus: pos.len(),
            score_sd,
            by_score,
        })
    }

    pub fn threshold(&self, r: f64) -> Result<f64> {
        self.cdf_all.threshold(r)
    }

    /// Number of active ligands with score strictly above `t`.
    pub fn active_count_above(&self, t: f64) -> usize {
        self.n_plus - self.cdf_pos.count_le(t)
    }

    /// Estimated recall at testing fraction `r`.
    pub fn recall(&self, r: f64) -> Result<f64> {
        let t = self.threshold(r)?;
        Ok(self.active_count_above(t) as f64 / self.n_plus as f64)
    }
}

pub(crate) fn ranked_algo(ds: &ScoredDataset, algorithm: &str) -> Result<RankedAlgo> {
    RankedAlgo::new(ds.scores(algorithm)?, ds.activity())
}

/// Empirical CDF of a raw score vector.
pub fn empirical_cdf(scores: &[f64]) -> Result<EmpiricalCdf> {
    EmpiricalCdf::new(scores)
}

/// Score threshold for testing the top fraction `r` of `scores`.
pub fn threshold_at(scores: &[f64], r: f64) -> Result<f64> {
    EmpiricalCdf::new(scores)?.threshold(r)
}

/// Estimated recall for one algorithm at testing fraction `r`.
pub fn recall_at(ds: &ScoredDataset, algorithm: &str, r: f64) -> Result<f64> {
    summarize(ds)?;
    ranked_algo(ds, algorithm)?.recall(r)
}

/// Hit enrichment curve: recall per grid fraction, after snapping the grid
/// to fractions achievable with `n` ligands.
pub fn hit_enrichment_curve(
    ds: &ScoredDataset,
    algorithm: &str,
    grid: &FractionGrid,
) -> Result<CurveEstimate> {
    summarize(ds)?;
    let ranked = ranked_algo(ds, algorithm)?;
    let (grid, _) = grid.snap_to(ranked.n)?;
    let values = grid
        .fractions()
        .iter()
        .map(|&r| ranked.recall(r))
        .collect::<Result<Vec<f64>>>()?;
    Ok(CurveEstimate {
        algorithm: algorithm.to_string(),
        grid,
        values,
        kind: CurveKind::Recall,
    })
}

/// Enrichment factor curve: recall divided by the testing fraction.
pub fn enrichment_factor_curve(
    ds: &ScoredDataset,
    algorithm: &str,
    grid: &FractionGrid,
) -> Result<CurveEstimate> {
    let curve = hit_enrichment_curve(ds, algorithm, grid)?;
    let values = curve
        .grid
        .fractions()
        .iter()
        .zip(&curve.values)
        .map(|(&r, &v)| v / r)
        .collect();
    Ok(CurveEstimate {
        algorithm: curve.algorithm,
        grid: curve.grid,
        values,
        kind: CurveKind::EnrichmentFactor,
    })
}

/// Ideal and random reference curves for a given activity rate.
pub fn reference_curves(
    pi_hat: f64,
    grid: &FractionGrid,
) -> Result<(CurveEstimate, CurveEstimate)> {
    if !(pi_hat > 0.0 && pi_hat < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "pi_hat {pi_hat} outside (0, 1)"
        )));
    }
    let ideal = CurveEstimate {
        algorithm: "ideal".into(),
        grid: grid.clone(),
        values: grid
            .fractions()
            .iter()
            .map(|&r| (r / pi_hat).min(1.0))
            .collect(),
        kind: CurveKind::Recall,
    };
    let random = CurveEstimate {
        algorithm: "random".into(),
        grid: grid.clone(),
        values: grid.fractions().to_vec(),
        kind: CurveKind::Recall,
    };
    Ok((ideal, random))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ScoreColumn;
    use rand::seq::SliceRandom;

    fn dataset(activity: Vec<bool>, scores: Vec<f64>) -> ScoredDataset {
        ScoredDataset::new(
            (0..activity.len()).map(|i| i.to_string()).collect(),
            activity,
            vec![ScoreColumn {
                name: "s".into(),
                values: scores,
            }],
        )
        .unwrap()
    }

    #[test]
    fn ecdf_counts_and_ties() {
        let f = empirical_cdf(&[1.0, 2.0, 3.0]).unwrap();
        assert!((f.eval(2.0) - 2.0 / 3.0).abs() < 1e-15);

        let f = empirical_cdf(&[5.0, 5.0, 5.0]).unwrap();
        assert_eq!(f.eval(5.0), 1.0);
        assert_eq!(f.eval(4.9), 0.0);

        let f = empirical_cdf(&[0.1, 0.4, 0.4, 0.9]).unwrap();
        assert!((f.eval(0.4) - 0.75).abs() < 1e-15);

        assert!(empirical_cdf(&[]).is_err());
    }

    #[test]
    fn threshold_basic_and_boundary() {
        let t = threshold_at(&[1.0, 2.0, 3.0, 4.0], 0.25).unwrap();
        assert_eq!(t, 3.0);
        // tested set is {4.0}
        let cdf = empirical_cdf(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(cdf.n() - cdf.count_le(t), 1);

        // r = 1: everything tested
        let t = threshold_at(&[1.0, 2.0, 3.0, 4.0], 1.0).unwrap();
        assert_eq!(t, f64::NEG_INFINITY);

        assert!(threshold_at(&[1.0], 0.0).is_err());
        assert!(threshold_at(&[1.0], 1.5).is_err());
    }

    #[test]
    fn threshold_with_ties_matches_enumeration() {
        // direct enumeration of min{t in observed : F(t) >= 1 - r}
        let scores = [1.0, 2.0, 2.0, 4.0];
        let r = 0.5;
        let cdf = empirical_cdf(&scores).unwrap();
        let mut expected = f64::INFINITY;
        for &t in &[1.0, 2.0, 4.0] {
            if cdf.eval(t) >= 1.0 - r && t < expected {
                expected = t;
            }
        }
        assert_eq!(expected, 2.0);
        let t = threshold_at(&scores, r).unwrap();
        assert_eq!(t, expected);
        // ties collapse the tested set below n*r = 2
        assert_eq!(cdf.n() - cdf.count_le(t), 1);
    }

    #[test]
    fn tested_count_is_floor_nr_without_ties() {
        let scores: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let cdf = empirical_cdf(&scores).unwrap();
        for &r in &[0.01, 0.034, 0.25, 0.5, 0.999] {
            let t = cdf.threshold(r).unwrap();
            let tested = cdf.n() - cdf.count_le(t);
            assert_eq!(tested, (100.0 * r) as usize, "r = {r}");
        }
    }

    #[test]
    fn recall_perfect_ranking() {
        // 2 actives out of 10, actives ranked on top
        let activity: Vec<bool> = (0..10).map(|i| i >= 8).collect();
        let scores: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ds = dataset(activity, scores);
        // r >= pi_hat: all actives found
        assert_eq!(recall_at(&ds, "s", 0.2).unwrap(), 1.0);
        assert_eq!(recall_at(&ds, "s", 0.5).unwrap(), 1.0);
        // half of the actives at r = pi_hat / 2
        assert_eq!(recall_at(&ds, "s", 0.1).unwrap(), 0.5);
    }

    #[test]
    fn recall_random_scores_matches_fraction_on_average() {
        // Monte Carlo oracle: scores independent of activity make the
        // expected recall equal the tested fraction.
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(42);
        let n = 200;
        let r = 0.1;
        let reps = 10_000;
        let activity: Vec<bool> = (0..n).map(|i| i < 20).collect();
        let mut scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for _ in 0..reps {
            scores.shuffle(&mut rng);
            let ds = dataset(activity.clone(), scores.clone());
            let v = recall_at(&ds, "s", r).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let mean = sum / reps as f64;
        let var = (sumsq / reps as f64 - mean * mean).max(0.0);
        let mc_se = (var / reps as f64).sqrt();
        assert!(
            (mean - r).abs() <= 3.0 * mc_se,
            "mean {mean} vs {r} (3 mc se = {})",
            3.0 * mc_se
        );
    }

    #[test]
    fn curve_is_monotone_and_one_at_full_fraction() {
        let activity: Vec<bool> = (0..50).map(|i| i % 7 == 0).collect();
        let scores: Vec<f64> = (0..50).map(|i| ((i * 31) % 50) as f64).collect();
        let ds = dataset(activity, scores);
        let grid = FractionGrid::from_fractions(vec![0.05, 0.1, 0.3, 0.7, 1.0]).unwrap();
        let curve = hit_enrichment_curve(&ds, "s", &grid).unwrap();
        for w in curve.values.windows(2) {
            assert!(w[0] <= w[1] + 1e-15);
        }
        assert_eq!(*curve.values.last().unwrap(), 1.0);
    }

    #[test]
    fn enrichment_factor_is_recall_over_fraction() {
        let activity: Vec<bool> = (0..40).map(|i| i >= 36).collect();
        let scores: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let ds = dataset(activity, scores);
        let grid = FractionGrid::from_fractions(vec![0.1, 0.5, 1.0]).unwrap();
        let recall = hit_enrichment_curve(&ds, "s", &grid).unwrap();
        let ef = enrichment_factor_curve(&ds, "s", &grid).unwrap();
        for ((&r, &rv), &ev) in recall
            .grid
            .fractions()
            .iter()
            .zip(&recall.values)
            .zip(&ef.values)
        {
            assert_eq!(ev, rv / r);
        }
        // r = 1 forces EF = recall = 1
        assert_eq!(*ef.values.last().unwrap(), 1.0);
    }

    #[test]
    fn perfect_ranking_ef_is_capped_ideal() {
        // ideal EF = min(1/pi_hat, 1/r) for a perfect ranking on a grid of
        // achievable fractions
        let n = 100;
        let n_plus = 10;
        let activity: Vec<bool> = (0..n).map(|i| i >= n - n_plus).collect();
        let scores: Vec<f64> = (0..n).map(|i| i as f64).collect();
        let ds = dataset(activity, scores);
        let pi_hat = n_plus as f64 / n as f64;
        let grid = FractionGrid::from_fractions(vec![0.05, 0.1, 0.2, 0.5]).unwrap();
        let ef = enrichment_factor_curve(&ds, "s", &grid).unwrap();
        for (&r, &v) in ef.grid.fractions().iter().zip(&ef.values) {
            let expected = (1.0 / pi_hat).min(1.0 / r);
            assert!((v - expected).abs() < 1e-12, "r = {r}: {v} vs {expected}");
        }
    }

    #[test]
    fn reference_curve_values() {
        let grid = FractionGrid::from_fractions(vec![0.0265, 0.05, 0.5]).unwrap();
        let (ideal, random) = reference_curves(0.0265, &grid).unwrap();
        assert!((ideal.values[0] - 1.0).abs() < 1e-12);
        assert_eq!(random.values[2], 0.5);
        let grid2 = FractionGrid::from_fractions(vec![0.05]).unwrap();
        let (ideal2, _) = reference_curves(0.1, &grid2).unwrap();
        assert!((ideal2.values[0] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn recall_is_rank_invariant() {
        let activity: Vec<bool> = (0..30).map(|i| i % 5 == 0).collect();
        let scores: Vec<f64> = (0..30).map(|i| ((i * 17) % 30) as f64 - 10.0).collect();
        let transformed: Vec<f64> = scores.iter().map(|&s| (0.3 * s).exp()).collect();
        let d1 = dataset(activity.clone(), scores);
        let d2 = dataset(activity, transformed);
        for &r in &[0.1, 0.23, 0.5, 0.9] {
            assert_eq!(
                recall_at(&d1, "s", r).unwrap(),
                recall_at(&d2, "s", r).unwrap()
            );
        }
    }

    #[test]
    fn grid_validation_and_snapping() {
        assert!(FractionGrid::from_fractions(vec![0.2, 0.2]).is_err());
        assert!(FractionGrid::from_fractions(vec![0.0, 0.5]).is_err());
        assert!(FractionGrid::from_fractions(vec![0.5, 1.2]).is_err());

        let grid = FractionGrid::from_fractions(vec![0.001, 0.01, 0.1]).unwrap();
        let (snapped, counts) = grid.snap_to(3212).unwrap();
        assert_eq!(counts, vec![3, 32, 321]);
        assert!((snapped.fractions()[2] - 321.0 / 3212.0).abs() < 1e-15);

        // collisions dedupe, tiny fractions round up to one test
        let grid = FractionGrid::from_fractions(vec![0.0001, 0.0002, 0.5]).unwrap();
        let (_, counts) = grid.snap_to(100).unwrap();
        assert_eq!(counts, vec![1, 50]);
    }
}
