//! Synthetic screening data under binormal / bibeta / uniform mixture
//! models, and Monte Carlo studies of power, type-I error, and coverage.
//!
//! Scores for competing algorithms are drawn through a Gaussian copula:
//! each ligand gets a pair of correlated standard normals (parameter
//! `rho`, applied within each activity class), which are pushed through
//! the class-conditional marginal quantile functions. With normal
//! marginals this reproduces the bivariate normal exactly; with beta or
//! uniform marginals, `rho` is the copula parameter rather than the
//! resulting Pearson correlation.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::bands::{
    band_limits, diff_cov_from_parts, diff_parts, single_cov_from_parts, single_parts, BandKind,
    BandMethod,
};
use crate::contingency::lambda_at_threshold;
use crate::curves::{FractionGrid, RankedAlgo};
use crate::dataset::{ScoreColumn, ScoredDataset};
use crate::error::{Error, Result};
use crate::pointwise::{compare_from_parts, ComparisonParts, MethodSpec};
use crate::rng::substream_seed;
use crate::stats::{inc_beta, inv_inc_beta, normal_cdf};

// ---------------------------------------------------------------------------
// Models
// ---------------------------------------------------------------------------

/// Class-conditional score distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Marginal {
    Normal { mean: f64, sd: f64 },
    Beta { alpha: f64, beta: f64 },
    Uniform { min: f64, max: f64 },
}

impl Marginal {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Marginal::Normal { sd, .. } => sd > 0.0,
            Marginal::Beta { alpha, beta } => alpha > 0.0 && beta > 0.0,
            Marginal::Uniform { min, max } => min < max,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid marginal {self:?}")))
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => normal_cdf((x - mean) / sd),
            Marginal::Beta { alpha, beta } => inc_beta(alpha, beta, x.clamp(0.0, 1.0)),
            Marginal::Uniform { min, max } => ((x - min) / (max - min)).clamp(0.0, 1.0),
        }
    }

    /// Quantile transform of a standard normal draw.
    fn score_from_z(&self, z: f64) -> f64 {
        match *self {
            Marginal::Normal { mean, sd } => mean + sd * z,
            Marginal::Beta { alpha, beta } => inv_inc_beta(alpha, beta, normal_cdf(z)),
            Marginal::Uniform { min, max } => min + (max - min) * normal_cdf(z),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Marginal::Normal { mean, .. } => mean,
            Marginal::Beta { alpha, beta } => alpha / (alpha + beta),
            Marginal::Uniform { min, max } => 0.5 * (min + max),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Marginal::Normal { sd, .. } => sd * sd,
            Marginal::Beta { alpha, beta } => {
                let s = alpha + beta;
                alpha * beta / (s * s * (s + 1.0))
            }
            Marginal::Uniform { min, max } => (max - min) * (max - min) / 12.0,
        }
    }

    // Support bounds for root bracketing.
    fn bounds(&self) -> (f64, f64) {
        match *self {
            Marginal::Normal { mean, sd } => (mean - 20.0 * sd, mean + 20.0 * sd),
            Marginal::Beta { .. } => (0.0, 1.0),
            Marginal::Uniform { min, max } => (min, max),
        }
    }
}

/// Positive- and negative-class score distributions of one algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlgorithmModel {
    pub pos: Marginal,
    pub neg: Marginal,
}

/// Full data-generating mechanism.
#[derive(Debug, Clone, Serialize)]
pub struct ModelSpec {
    /// One entry per simulated algorithm (one or two).
    pub algorithms: Vec<AlgorithmModel>,
    /// Gaussian copula correlation between the two algorithms' scores,
    /// applied within each activity class.
    pub rho: f64,
    pub n: usize,
    pub pi_plus: f64,
    pub seed: u64,
}

impl ModelSpec {
    /// Two-algorithm binormal model: standard normal negatives, unit
    /// variance positives at means 0.8 sqrt(2) and 0.6 sqrt(2).
    pub fn binormal_study(rho: f64, n: usize, pi_plus: f64, seed: u64) -> Self {
        let neg = Marginal::Normal { mean: 0.0, sd: 1.0 };
        Self {
            algorithms: vec![
                AlgorithmModel {
                    pos: Marginal::Normal {
                        mean: 0.8 * std::f64::consts::SQRT_2,
                        sd: 1.0,
                    },
                    neg,
                },
                AlgorithmModel {
                    pos: Marginal::Normal {
                        mean: 0.6 * std::f64::consts::SQRT_2,
                        sd: 1.0,
                    },
                    neg,
                },
            ],
            rho,
            n,
            pi_plus,
            seed,
        }
    }

    /// Two-algorithm bibeta model: Beta(2,5) negatives for both, Beta(5,2)
    /// and Beta(4,2) positives.
    pub fn bibeta_study(rho: f64, n: usize, pi_plus: f64, seed: u64) -> Self {
        let neg = Marginal::Beta {
            alpha: 2.0,
            beta: 5.0,
        };
        Self {
            algorithms: vec![
                AlgorithmModel {
                    pos: Marginal::Beta {
                        alpha: 5.0,
                        beta: 2.0,
                    },
                    neg,
                },
                AlgorithmModel {
                    pos: Marginal::Beta {
                        alpha: 4.0,
                        beta: 2.0,
                    },
                    neg,
                },
            ],
            rho,
            n,
            pi_plus,
            seed,
        }
    }

    /// Single-algorithm distributional cases 1-5 used for band studies:
    /// 1. normal(0,1) vs normal(1.4,1)
    /// 2. normal(0,1) vs normal(0.5,1)
    /// 3. beta(2,5) vs beta(5,2)
    /// 4. beta(1,20) vs beta(20,1)
    /// 5. uniform(0,0.75) vs uniform(0.25,1)
    pub fn case(case: u8, n: usize, pi_plus: f64, seed: u64) -> Result<Self> {
        let (neg, pos) = match case {
            1 => (
                Marginal::Normal { mean: 0.0, sd: 1.0 },
                Marginal::Normal { mean: 1.4, sd: 1.0 },
            ),
            2 => (
                Marginal::Normal { mean: 0.0, sd: 1.0 },
                Marginal::Normal { mean: 0.5, sd: 1.0 },
            ),
            3 => (
                Marginal::Beta {
                    alpha: 2.0,
                    beta: 5.0,
                },
                Marginal::Beta {
                    alpha: 5.0,
                    beta: 2.0,
                },
            ),
            4 => (
                Marginal::Beta {
                    alpha: 1.0,
                    beta: 20.0,
                },
                Marginal::Beta {
                    alpha: 20.0,
                    beta: 1.0,
                },
            ),
            5 => (
                Marginal::Uniform {
                    min: 0.0,
                    max: 0.75,
                },
                Marginal::Uniform {
                    min: 0.25,
                    max: 1.0,
                },
            ),
            other => {
                return Err(Error::InvalidArgument(format!(
                    "case {other} outside 1..=5"
                )))
            }
        };
        Ok(Self {
            algorithms: vec![AlgorithmModel { pos, neg }],
            rho: 0.0,
            n,
            pi_plus,
            seed,
        })
    }

    /// Null variant for type-I studies: both algorithms take the marginals
    /// of algorithm `which` (zero-based), keeping the correlation.
    pub fn with_shared_marginals(mut self, which: usize) -> Result<Self> {
        let shared = *self
            .algorithms
            .get(which)
            .ok_or_else(|| Error::InvalidArgument(format!("no algorithm {which}")))?;
        for algo in &mut self.algorithms {
            *algo = shared;
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.algorithms.is_empty() || self.algorithms.len() > 2 {
            return Err(Error::InvalidArgument(
                "model needs one or two algorithms".into(),
            ));
        }
        if self.n < 2 {
            return Err(Error::InvalidArgument("n must be at least 2".into()));
        }
        if !(self.pi_plus > 0.0 && self.pi_plus < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "pi_plus {} outside (0, 1)",
                self.pi_plus
            )));
        }
        if !(self.rho > -1.0 && self.rho < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rho {} outside (-1, 1)",
                self.rho
            )));
        }
        for algo in &self.algorithms {
            algo.pos.validate()?;
            algo.neg.validate()?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Sampling
// ---------------------------------------------------------------------------

/// Draw one dataset from the model using its seed.
///
/// Activity is Bernoulli(pi_plus) per ligand; datasets with fewer than two
/// actives or two inactives are rejected with a degenerate-class error so
/// that callers can redraw.
pub fn sample(model: &ModelSpec) -> Result<ScoredDataset> {
    sample_with_seed(model, model.seed)
}

/// Single-algorithm dataset from one of the distributional cases.
pub fn sample_case(case: u8, n: usize, pi_plus: f64, seed: u64) -> Result<ScoredDataset> {
    sample(&ModelSpec::case(case, n, pi_plus, seed)?)
}

pub(crate) fn sample_with_seed(model: &ModelSpec, seed: u64) -> Result<ScoredDataset> {
    model.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    sample_with_rng(model, &mut rng)
}

fn sample_with_rng(model: &ModelSpec, rng: &mut ChaCha12Rng) -> Result<ScoredDataset> {
    let n = model.n;
    let two = model.algorithms.len() == 2;
    let beta = (1.0 - model.rho * model.rho).sqrt();

    let mut activity = Vec::with_capacity(n);
    let mut columns: Vec<Vec<f64>> = model
        .algorithms
        .iter()
        .map(|_| Vec::with_capacity(n))
        .collect();
    let mut n_plus = 0usize;
    for _ in 0..n {
        let active = rng.random::<f64>() < model.pi_plus;
        n_plus += active as usize;
        activity.push(active);
        let z1: f64 = rng.sample(StandardNormal);
        let pick = |algo: &AlgorithmModel| if active { algo.pos } else { algo.neg };
        columns[0].push(pick(&model.algorithms[0]).score_from_z(z1));
        if two {
            let z2: f64 = rng.sample(StandardNormal);
            let z2 = model.rho * z1 + beta * z2;
            columns[1].push(pick(&model.algorithms[1]).score_from_z(z2));
        }
    }
    if n_plus < 2 || n - n_plus < 2 {
        return Err(Error::DegenerateClasses(format!(
            "replicate drew {n_plus} actives of {n}"
        )));
    }

    let scores = columns
        .into_iter()
        .enumerate()
        .map(|(j, values)| ScoreColumn {
            name: format!("algo{}", j + 1),
            values,
        })
        .collect();
    ScoredDataset::new((0..n).map(|i| i.to_string()).collect(), activity, scores)
}

// Redraw loop with deterministic per-attempt substreams.
fn sample_replicate(model: &ModelSpec, master: u64, rep: u64) -> (ScoredDataset, u32) {
    let mut redraws = 0u32;
    loop {
        let seed = substream_seed(master, rep * 256 + redraws as u64);
        match sample_with_seed(model, seed) {
            Ok(ds) => return (ds, redraws),
            Err(_) if redraws < 200 => redraws += 1,
            Err(e) => panic!("replicate kept drawing degenerate classes: {e}"),
        }
    }
}

// ---------------------------------------------------------------------------
// Population curves
// ---------------------------------------------------------------------------

/// Population recall of an algorithm at testing fraction `r`: the mixture
/// threshold t_r solves P(S > t) = r, and recall is P(S > t | +).
pub fn true_recall(algo: &AlgorithmModel, pi_plus: f64, r: f64) -> f64 {
    if r >= 1.0 {
        return 1.0;
    }
    let survival =
        |t: f64| pi_plus * (1.0 - algo.pos.cdf(t)) + (1.0 - pi_plus) * (1.0 - algo.neg.cdf(t));
    let (lo_p, hi_p) = algo.pos.bounds();
    let (lo_n, hi_n) = algo.neg.bounds();
    let mut lo = lo_p.min(lo_n) - 1.0;
    let mut hi = hi_p.max(hi_n) + 1.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if survival(mid) > r {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    let t = 0.5 * (lo + hi);
    1.0 - algo.pos.cdf(t)
}

// ---------------------------------------------------------------------------
// Study results
// ---------------------------------------------------------------------------

/// Monte Carlo standard error of an estimated probability.
pub fn mc_se(p: f64, replicates: usize) -> f64 {
    (p * (1.0 - p) / replicates as f64).sqrt()
}

/// One estimate with its Monte Carlo uncertainty.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct StudyPoint {
    pub estimate: f64,
    pub mc_se: f64,
    /// Mean interval/band width where the study tracks one.
    pub mean_width: Option<f64>,
}

/// Estimates for one method variant across the grid.
#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    pub label: String,
    /// Per-grid-point estimates (power, type-I error, or pointwise
    /// coverage; mean band width per point for band studies).
    pub points: Vec<StudyPoint>,
    /// Whole-curve estimate for band studies (simultaneous coverage).
    pub scalar: Option<StudyPoint>,
}

/// Output of a Monte Carlo study.
#[derive(Debug, Clone, Serialize)]
pub struct StudyResult {
    pub study: String,
    pub grid_counts: Vec<usize>,
    pub rows: Vec<StudyRow>,
    pub replicates: usize,
    /// Degenerate replicates that were redrawn.
    pub redraws: usize,
    pub alpha: f64,
    pub seed: u64,
}

/// Band variant requested from a coverage study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct BandVariant {
    pub method: BandMethod,
    pub plus: bool,
}

impl BandVariant {
    pub fn label(&self) -> String {
        let mut s = match self.method {
            BandMethod::SupT => "supt".to_string(),
            BandMethod::Bonferroni => "bonferroni".to_string(),
        };
        if self.plus {
            s.push_str("+plus");
        }
        s
    }
}

/// What a coverage study evaluates.
#[derive(Debug, Clone)]
pub enum CoverageTarget {
    /// Pointwise confidence intervals for the recall difference of a
    /// two-algorithm model.
    PointwiseCi { methods: Vec<MethodSpec> },
    /// Simultaneous bands for a single algorithm's curve.
    BandSingle {
        variants: Vec<BandVariant>,
        draws: usize,
    },
    /// Simultaneous bands for the difference between two algorithms.
    BandDiff {
        variants: Vec<BandVariant>,
        draws: usize,
    },
}

// ---------------------------------------------------------------------------
// Power / type-I study
// ---------------------------------------------------------------------------

fn grid_fractions(grid_counts: &[usize], n: usize) -> Result<Vec<f64>> {
    let grid = FractionGrid::from_counts(grid_counts, n)?;
    Ok(grid.fractions().to_vec())
}

// Per-replicate comparison parts at each grid point, sharing the sorted
// views and lambda estimates across methods.
fn parts_for_replicate(
    ds: &ScoredDataset,
    rs: &[f64],
    counts: &[usize],
    need_lambda: bool,
) -> Result<Vec<ComparisonParts>> {
    let summary = crate::dataset::summarize(ds)?;
    let s1 = ds.scores("algo1")?;
    let s2 = ds.scores("algo2")?;
    let ranked1 = RankedAlgo::new(s1, ds.activity())?;
    let ranked2 = RankedAlgo::new(s2, ds.activity())?;
    let mut out = Vec::with_capacity(rs.len());
    for (&r, &k) in rs.iter().zip(counts) {
        let t1 = ranked1.threshold(r)?;
        let t2 = ranked2.threshold(r)?;
        let cells = crate::contingency::count_cells(s1, s2, ds.activity(), t1, t2, summary.n_plus);
        let (l1, l2, fallback) = if need_lambda {
            let l1 = lambda_at_threshold(&ranked1, t1);
            let l2 = lambda_at_threshold(&ranked2, t2);
            (l1.value, l2.value, l1.fallback || l2.fallback)
        } else {
            (0.0, 0.0, false)
        };
        out.push(ComparisonParts {
            counts: cells,
            lambda1: l1,
            lambda2: l2,
            lambda_fallback: fallback,
            r,
            n_tested: k,
            n: summary.n,
        });
    }
    Ok(out)
}

fn needs_lambda(methods: &[MethodSpec]) -> bool {
    use crate::pointwise::Method;
    methods
        .iter()
        .any(|m| matches!(m.method, Method::EmProc | Method::IndJz))
}

/// Rejection rate of each method at each grid point. Run against a null
/// model (see [`ModelSpec::with_shared_marginals`]) this estimates type-I
/// error; against an alternative it estimates power.
pub fn power_study(
    model: &ModelSpec,
    methods: &[MethodSpec],
    grid_counts: &[usize],
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<StudyResult> {
    model.validate()?;
    if model.algorithms.len() != 2 {
        return Err(Error::InvalidArgument(
            "power study needs a two-algorithm model".into(),
        ));
    }
    if replicates == 0 || methods.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one replicate and one method".into(),
        ));
    }
    let rs = grid_fractions(grid_counts, model.n)?;
    let need_lambda = needs_lambda(methods);

    // rejects[method][point] per replicate
    let per_rep: Vec<(Vec<Vec<bool>>, u32)> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let (ds, redraws) = sample_replicate(model, seed, rep);
            let parts = parts_for_replicate(&ds, &rs, grid_counts, need_lambda)
                .expect("simulated dataset is well formed");
            let rejects = methods
                .iter()
                .map(|&spec| {
                    parts
                        .iter()
                        .map(|p| match compare_from_parts(p, spec, alpha) {
                            Ok(res) => res.p_raw < alpha,
                            // zero SE with nonzero difference: an infinite
                            // statistic, counted as a rejection
                            Err(_) => true,
                        })
                        .collect()
                })
                .collect();
            (rejects, redraws)
        })
        .collect();

    let mut redraws = 0usize;
    let mut counts = vec![vec![0usize; rs.len()]; methods.len()];
    for (rejects, rd) in &per_rep {
        redraws += *rd as usize;
        for (mi, row) in rejects.iter().enumerate() {
            for (pi, &rej) in row.iter().enumerate() {
                counts[mi][pi] += rej as usize;
            }
        }
    }

    let rows = methods
        .iter()
        .zip(counts)
        .map(|(spec, row)| StudyRow {
            label: spec.label(),
            points: row
                .into_iter()
                .map(|c| {
                    let p = c as f64 / replicates as f64;
                    StudyPoint {
                        estimate: p,
                        mc_se: mc_se(p, replicates),
                        mean_width: None,
                    }
                })
                .collect(),
            scalar: None,
        })
        .collect();

    Ok(StudyResult {
        study: "power".into(),
        grid_counts: grid_counts.to_vec(),
        rows,
        replicates,
        redraws,
        alpha,
        seed,
    })
}

// ---------------------------------------------------------------------------
// Coverage studies
// ---------------------------------------------------------------------------

/// Coverage (and width) study for pointwise intervals or simultaneous
/// bands under a model or distributional case.
pub fn coverage_study(
    model: &ModelSpec,
    target: &CoverageTarget,
    grid_counts: &[usize],
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<StudyResult> {
    model.validate()?;
    if replicates == 0 {
        return Err(Error::InvalidArgument("need at least one replicate".into()));
    }
    if grid_counts.iter().any(|&k| k > model.n) {
        return Err(Error::InvalidArgument(
            "grid count exceeds the model sample size".into(),
        ));
    }
    match target {
        CoverageTarget::PointwiseCi { methods } => {
            pointwise_coverage(model, methods, grid_counts, replicates, alpha, seed)
        }
        CoverageTarget::BandSingle { variants, draws } => band_coverage(
            model,
            variants,
            *draws,
            false,
            grid_counts,
            replicates,
            alpha,
            seed,
        ),
        CoverageTarget::BandDiff { variants, draws } => band_coverage(
            model,
            variants,
            *draws,
            true,
            grid_counts,
            replicates,
            alpha,
            seed,
        ),
    }
}

fn pointwise_coverage(
    model: &ModelSpec,
    methods: &[MethodSpec],
    grid_counts: &[usize],
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<StudyResult> {
    if model.algorithms.len() != 2 {
        return Err(Error::InvalidArgument(
            "pointwise coverage needs a two-algorithm model".into(),
        ));
    }
    if methods.is_empty() {
        return Err(Error::InvalidArgument("need at least one method".into()));
    }
    let rs = grid_fractions(grid_counts, model.n)?;
    let truth: Vec<f64> = rs
        .iter()
        .map(|&r| {
            true_recall(&model.algorithms[0], model.pi_plus, r)
                - true_recall(&model.algorithms[1], model.pi_plus, r)
        })
        .collect();
    let need_lambda = needs_lambda(methods);

    type RepOutcome = (Vec<Vec<(bool, f64)>>, u32);
    let per_rep: Vec<RepOutcome> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let (ds, redraws) = sample_replicate(model, seed, rep);
            let parts = parts_for_replicate(&ds, &rs, grid_counts, need_lambda)
                .expect("simulated dataset is well formed");
            let outcomes = methods
                .iter()
                .map(|&spec| {
                    parts
                        .iter()
                        .zip(&truth)
                        .map(|(p, &tr)| match compare_from_parts(p, spec, alpha) {
                            Ok(res) => (res.ci.0 <= tr && tr <= res.ci.1, res.ci.1 - res.ci.0),
                            Err(_) => (false, 0.0),
                        })
                        .collect()
                })
                .collect();
            (outcomes, redraws)
        })
        .collect();

    let mut redraws = 0usize;
    let mut covered = vec![vec![0usize; rs.len()]; methods.len()];
    let mut widths = vec![vec![0.0f64; rs.len()]; methods.len()];
    for (outcomes, rd) in &per_rep {
        redraws += *rd as usize;
        for (mi, row) in outcomes.iter().enumerate() {
            for (pi, &(cov, w)) in row.iter().enumerate() {
                covered[mi][pi] += cov as usize;
                widths[mi][pi] += w;
            }
        }
    }

    let rows = methods
        .iter()
        .enumerate()
        .map(|(mi, spec)| StudyRow {
            label: spec.label(),
            points: (0..rs.len())
                .map(|pi| {
                    let p = covered[mi][pi] as f64 / replicates as f64;
                    StudyPoint {
                        estimate: p,
                        mc_se: mc_se(p, replicates),
                        mean_width: Some(widths[mi][pi] / replicates as f64),
                    }
                })
                .collect(),
            scalar: None,
        })
        .collect();

    Ok(StudyResult {
        study: "coverage-pointwise".into(),
        grid_counts: grid_counts.to_vec(),
        rows,
        replicates,
        redraws,
        alpha,
        seed,
    })
}

#[allow(clippy::too_many_arguments)]
fn band_coverage(
    model: &ModelSpec,
    variants: &[BandVariant],
    draws: usize,
    difference: bool,
    grid_counts: &[usize],
    replicates: usize,
    alpha: f64,
    seed: u64,
) -> Result<StudyResult> {
    if variants.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one band variant".into(),
        ));
    }
    if difference && model.algorithms.len() != 2 {
        return Err(Error::InvalidArgument(
            "difference bands need a two-algorithm model".into(),
        ));
    }
    let rs = grid_fractions(grid_counts, model.n)?;
    let truth: Vec<f64> = rs
        .iter()
        .map(|&r| {
            if difference {
                true_recall(&model.algorithms[0], model.pi_plus, r)
                    - true_recall(&model.algorithms[1], model.pi_plus, r)
            } else {
                true_recall(&model.algorithms[0], model.pi_plus, r)
            }
        })
        .collect();
    let grid = FractionGrid::from_counts(grid_counts, model.n)?;

    // per variant: (covered, per-point widths)
    type RepOutcome = (Vec<(bool, Vec<f64>)>, u32);
    let per_rep: Vec<RepOutcome> = (0..replicates as u64)
        .into_par_iter()
        .map(|rep| {
            let (ds, redraws) = sample_replicate(model, seed, rep);
            let outcomes = variants
                .iter()
                .map(|variant| {
                    let (inputs, kind) = if difference {
                        let parts = diff_parts(&ds, "algo1", "algo2", &grid)
                            .expect("simulated dataset is well formed");
                        (
                            diff_cov_from_parts(&parts, variant.plus, true),
                            BandKind::Difference,
                        )
                    } else {
                        let parts = single_parts(&ds, "algo1", &grid)
                            .expect("simulated dataset is well formed");
                        (
                            single_cov_from_parts(&parts, variant.plus, true),
                            BandKind::Single,
                        )
                    };
                    let band_seed = substream_seed(seed, (rep + 1) << 20);
                    let limits =
                        band_limits(&inputs, kind, variant.method, alpha, draws, band_seed)
                            .expect("valid band inputs");
                    let mut covered = true;
                    let mut widths = Vec::with_capacity(truth.len());
                    for ((&tr, &lo), &hi) in truth.iter().zip(&limits.lower).zip(&limits.upper) {
                        if !(lo <= tr && tr <= hi) {
                            covered = false;
                        }
                        widths.push(hi - lo);
                    }
                    (covered, widths)
                })
                .collect();
            (outcomes, redraws)
        })
        .collect();

    let k = rs.len();
    let mut redraws = 0usize;
    let mut covered = vec![0usize; variants.len()];
    let mut widths = vec![vec![0.0f64; k]; variants.len()];
    for (outcomes, rd) in &per_rep {
        redraws += *rd as usize;
        for (vi, (cov, ws)) in outcomes.iter().enumerate() {
            covered[vi] += *cov as usize;
            for (pi, w) in ws.iter().enumerate() {
                widths[vi][pi] += w;
            }
        }
    }

    let rows = variants
        .iter()
        .enumerate()
        .map(|(vi, variant)| {
            let p = covered[vi] as f64 / replicates as f64;
            let mean_widths: Vec<f64> = widths[vi].iter().map(|w| w / replicates as f64).collect();
            let overall_width = mean_widths.iter().sum::<f64>() / k as f64;
            StudyRow {
                label: variant.label(),
                points: mean_widths
                    .into_iter()
                    .map(|w| StudyPoint {
                        estimate: w,
                        mc_se: 0.0,
                        mean_width: Some(w),
                    })
                    .collect(),
                scalar: Some(StudyPoint {
                    estimate: p,
                    mc_se: mc_se(p, replicates),
                    mean_width: Some(overall_width),
                }),
            }
        })
        .collect();

    Ok(StudyResult {
        study: if difference {
            "coverage-band-diff".into()
        } else {
            "coverage-band-single".into()
        },
        grid_counts: grid_counts.to_vec(),
        rows,
        replicates,
        redraws,
        alpha,
        seed,
    })
}

/// The 25-point test-count grid used for band studies (powers of two up
/// to 8192, powers of three up to 6561, plus 105, 300, 1500, 15000),
/// truncated to counts of at most `max_count`.
pub fn band_study_grid(max_count: usize) -> Vec<usize> {
    let mut counts: Vec<usize> = (1..=13)
        .map(|k| 1usize << k)
        .chain((1..=8).map(|k| 3usize.pow(k)))
        .chain([105, 300, 1500, 15000])
        .filter(|&c| c <= max_count)
        .collect();
    counts.sort_unstable();
    counts.dedup();
    counts
}
