//! Pointwise comparison of two algorithms' recall at a fixed testing
//! fraction: variance estimators, hypothesis tests, confidence intervals,
//! and Benjamini-Hochberg adjustment.
//!
//! Four variance strategies are provided. EmProc accounts for the
//! correlation induced within an algorithm by estimating its threshold and
//! for the correlation between the two algorithms' scores. IndJZ keeps the
//! within-algorithm correction but treats the algorithms as independent.
//! CorrBinom treats the tested-active counts as correlated binomials,
//! ignoring threshold estimation. McNemar is the classic paired-proportion
//! test; its test statistic coincides with pooled CorrBinom and its
//! confidence interval is the Bonett-Price interval.

use serde::Serialize;

use crate::contingency::{lambda_at_threshold, paired_counts, LambdaEstimate, PairedCounts};
use crate::curves::{ranked_algo, tested_count_target};
use crate::dataset::{summarize, ScoredDataset};
use crate::error::{Error, Result};
use crate::stats::{normal_quantile, two_sided_p};

/// Variance strategy for comparing two recall estimates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    EmProc,
    McNemar,
    IndJz,
    CorrBinom,
}

impl Method {
    pub fn label(self) -> &'static str {
        match self {
            Method::EmProc => "emproc",
            Method::McNemar => "mcnemar",
            Method::IndJz => "indjz",
            Method::CorrBinom => "corrbinom",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "emproc" => Ok(Method::EmProc),
            "mcnemar" => Ok(Method::McNemar),
            "indjz" => Ok(Method::IndJz),
            "corrbinom" => Ok(Method::CorrBinom),
            other => Err(Error::InvalidArgument(format!("unknown method '{other}'"))),
        }
    }
}

/// A method with its pooling and plus-adjustment switches.
///
/// McNemar admits neither switch: it is already the pooled, non-plus
/// variant of CorrBinom for testing, and its interval is the Bonett-Price
/// interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct MethodSpec {
    pub method: Method,
    pub pooled: bool,
    pub plus: bool,
}

impl MethodSpec {
    pub fn new(method: Method, pooled: bool, plus: bool) -> Result<Self> {
        if method == Method::McNemar && (pooled || plus) {
            return Err(Error::InvalidArgument(
                "McNemar does not take pooled or plus flags".into(),
            ));
        }
        Ok(Self {
            method,
            pooled,
            plus,
        })
    }

    pub fn plain(method: Method) -> Self {
        Self {
            method,
            pooled: false,
            plus: false,
        }
    }

    pub fn label(&self) -> String {
        let mut s = self.method.label().to_string();
        if self.pooled {
            s.push_str("+pooled");
        }
        if self.plus {
            s.push_str("+plus");
        }
        s
    }
}

/// Degeneracies encountered while assembling a comparison.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct ComparisonFlags {
    /// Standard error was zero with a zero difference; p forced to 1.
    pub degenerate_se: bool,
    /// Negative assembled variance was floored by shrinking the lambdas.
    pub variance_floored: bool,
    /// The EmProc covariance ratio term was dropped because the binomial
    /// covariance was exactly zero.
    pub cov_ratio_dropped: bool,
    /// A kernel-regression fallback was used for a lambda estimate.
    pub lambda_fallback: bool,
}

/// Outcome of one pointwise comparison.
#[derive(Debug, Clone, Serialize)]
pub struct ComparisonResult {
    /// Snapped testing fraction.
    pub r: f64,
    /// Number of top-ranked ligands tested at `r`.
    pub n_tested: usize,
    /// Estimated recall difference used by the method (plus-adjusted when
    /// the plus flag is set; McNemar reports the raw difference).
    pub diff: f64,
    /// Standard error accompanying the confidence interval.
    pub se: f64,
    /// Test statistic. Equal to diff/se except for McNemar, which uses the
    /// null-enforced denominator.
    pub z: f64,
    /// Two-sided p-value.
    pub p_raw: f64,
    /// Benjamini-Hochberg adjusted p-value, when adjustment has been
    /// applied across a family of comparisons.
    pub p_adj: Option<f64>,
    /// Confidence interval at level 1 - alpha.
    pub ci: (f64, f64),
    pub method: MethodSpec,
    pub flags: ComparisonFlags,
}

/// Simple binomial variance of an estimated proportion with `n_plus`
/// effective trials: theta (1 - theta) / n_plus.
pub fn var_binomial(theta: f64, n_plus: f64) -> f64 {
    theta * (1.0 - theta) / n_plus
}

/// Covariance between the recall estimates of one algorithm at two
/// ordered fractions r_i <= r_j, accounting for threshold estimation.
/// With r_i = r_j this is the single-fraction variance.
#[allow(clippy::too_many_arguments)]
pub(crate) fn emproc_cov_single(
    theta_i: f64,
    theta_j: f64,
    lambda_i: f64,
    lambda_j: f64,
    r_i: f64,
    r_j: f64,
    pi_hat: f64,
    n_plus: f64,
) -> f64 {
    (theta_i * (1.0 - theta_j) * (1.0 - (lambda_i + lambda_j))
        + r_i * (1.0 - r_j) * lambda_i * lambda_j / pi_hat)
        / n_plus
}

/// Variance of one recall estimate accounting for threshold estimation.
/// Reduces to [`var_binomial`] exactly when `lambda` is zero.
pub fn var_jz(theta: f64, lambda: f64, r: f64, pi_hat: f64, n_plus: f64) -> f64 {
    emproc_cov_single(theta, theta, lambda, lambda, r, r, pi_hat, n_plus)
}

/// Covariance between two correlated binomial proportions sharing the
/// same `n_plus` trials.
pub fn cov_binomial(theta1: f64, theta2: f64, theta12: f64, n_plus: f64) -> f64 {
    (theta12 - theta1 * theta2) / n_plus
}

/// Cross-algorithm covariance of recall estimates, possibly at different
/// fractions (algorithm 1 at `r_i`, algorithm 2 at `r_j`). Returns the
/// covariance and whether the ratio term was dropped because the binomial
/// covariance was exactly zero (a removable singularity).
#[allow(clippy::too_many_arguments)]
pub(crate) fn emproc_cov_cross(
    theta12: f64,
    theta1: f64,
    theta2: f64,
    lambda1: f64,
    lambda2: f64,
    r_i: f64,
    r_j: f64,
    gamma12: f64,
    pi_hat: f64,
    n_plus: f64,
) -> (f64, bool) {
    let num = theta12 - theta1 * theta2;
    if num == 0.0 {
        return (0.0, true);
    }
    let cov = (num * (1.0 - (lambda1 + lambda2))
        + (gamma12 - r_i * r_j) * lambda1 * lambda2 / pi_hat)
        / n_plus;
    (cov, false)
}

/// Cross-algorithm covariance at a common testing fraction, from observed
/// contingency cells. Reduces to [`cov_binomial`] exactly when both
/// lambdas are zero.
pub fn cov_emproc(counts: &PairedCounts, lambdas: (f64, f64), r: f64, pi_hat: f64) -> (f64, bool) {
    emproc_cov_cross(
        counts.theta12(),
        counts.theta1(),
        counts.theta2(),
        lambdas.0,
        lambdas.1,
        r,
        r,
        counts.gamma12_hat,
        pi_hat,
        counts.n_plus as f64,
    )
}

/// Everything needed to assemble a comparison without re-touching the
/// dataset. Produced by [`comparison_parts`]; useful when several method
/// variants are evaluated on the same cells.
#[derive(Debug, Clone, Copy)]
pub struct ComparisonParts {
    pub counts: PairedCounts,
    pub lambda1: f64,
    pub lambda2: f64,
    pub lambda_fallback: bool,
    /// Snapped testing fraction.
    pub r: f64,
    pub n_tested: usize,
    /// Library size.
    pub n: usize,
}

/// Compute cells and lambda estimates for a pair of algorithms at `r`
/// (snapped to an achievable fraction).
pub fn comparison_parts(
    ds: &ScoredDataset,
    algo1: &str,
    algo2: &str,
    r: f64,
) -> Result<ComparisonParts> {
    let summary = summarize(ds)?;
    let k = tested_count_target(summary.n, r)?.max(1);
    let r = k as f64 / summary.n as f64;
    let counts = paired_counts(ds, algo1, algo2, r)?;
    let l1 = lambda_for(ds, algo1, r)?;
    let l2 = lambda_for(ds, algo2, r)?;
    Ok(ComparisonParts {
        counts,
        lambda1: l1.value,
        lambda2: l2.value,
        lambda_fallback: l1.fallback || l2.fallback,
        r,
        n_tested: k,
        n: summary.n,
    })
}

fn lambda_for(ds: &ScoredDataset, algorithm: &str, r: f64) -> Result<LambdaEstimate> {
    let ranked = ranked_algo(ds, algorithm)?;
    let t = ranked.threshold(r)?;
    Ok(lambda_at_threshold(&ranked, t))
}

/// Compare two algorithms' recall at testing fraction `r`.
pub fn compare(
    ds: &ScoredDataset,
    algo1: &str,
    algo2: &str,
    r: f64,
    spec: MethodSpec,
    alpha: f64,
) -> Result<ComparisonResult> {
    let parts = comparison_parts(ds, algo1, algo2, r)?;
    compare_from_parts(&parts, spec, alpha)
}

/// Assemble a comparison from precomputed cells and lambda estimates.
pub fn compare_from_parts(
    parts: &ComparisonParts,
    spec: MethodSpec,
    alpha: f64,
) -> Result<ComparisonResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha {alpha} outside (0, 1)"
        )));
    }
    let z_crit = normal_quantile(1.0 - alpha / 2.0);
    let c = parts.counts;
    let pi_hat = c.n_plus as f64 / parts.n as f64;
    let r = parts.r;
    let mut flags = ComparisonFlags {
        lambda_fallback: parts.lambda_fallback
            && matches!(spec.method, Method::EmProc | Method::IndJz),
        ..Default::default()
    };

    if spec.method == Method::McNemar {
        return mcnemar(parts, alpha, z_crit);
    }

    // Plus adjustment: one unit onto each discordant cell, so both
    // marginal counts gain one and the total gains two. Lambdas, gamma,
    // and the standalone prevalence stay untouched.
    let m = if spec.plus {
        c.n_plus as f64 + 2.0
    } else {
        c.n_plus as f64
    };
    let q1 = c.q1 as f64 + if spec.plus { 1.0 } else { 0.0 };
    let q2 = c.q2 as f64 + if spec.plus { 1.0 } else { 0.0 };
    let theta1 = q1 / m;
    let theta2 = q2 / m;
    let theta12 = c.q12 as f64 / m;
    let diff = theta1 - theta2;

    // Pooling replaces the marginal recalls inside variance formulas only.
    let (tv1, tv2) = if spec.pooled {
        let pooled = 0.5 * (theta1 + theta2);
        (pooled, pooled)
    } else {
        (theta1, theta2)
    };

    let variance = |l1: f64, l2: f64, flags: &mut ComparisonFlags| -> f64 {
        match spec.method {
            Method::EmProc => {
                let v1 = var_jz(tv1, l1, r, pi_hat, m);
                let v2 = var_jz(tv2, l2, r, pi_hat, m);
                let (cov, dropped) =
                    emproc_cov_cross(theta12, tv1, tv2, l1, l2, r, r, c.gamma12_hat, pi_hat, m);
                if dropped {
                    flags.cov_ratio_dropped = true;
                }
                v1 + v2 - 2.0 * cov
            }
            Method::IndJz => var_jz(tv1, l1, r, pi_hat, m) + var_jz(tv2, l2, r, pi_hat, m),
            Method::CorrBinom => {
                var_binomial(tv1, m) + var_binomial(tv2, m)
                    - 2.0 * cov_binomial(tv1, tv2, theta12, m)
            }
            Method::McNemar => unreachable!(),
        }
    };

    let mut l1 = parts.lambda1;
    let mut l2 = parts.lambda2;
    let mut var = variance(l1, l2, &mut flags);
    let mut rounds = 0;
    while var < 0.0 && rounds < 200 {
        // Negative estimated variance: shrink the lambda estimates toward
        // the binomial regime until the assembly is usable.
        l1 *= 0.5;
        l2 *= 0.5;
        var = variance(l1, l2, &mut flags);
        flags.variance_floored = true;
        rounds += 1;
    }
    if var < 0.0 {
        var = 0.0;
        flags.variance_floored = true;
    }
    let se = var.max(0.0).sqrt();

    let (z, p_raw) = if se == 0.0 {
        if diff == 0.0 {
            flags.degenerate_se = true;
            (0.0, 1.0)
        } else {
            return Err(Error::NumericalDegeneracy(format!(
                "zero standard error with nonzero difference {diff} at r = {r}"
            )));
        }
    } else {
        let z = diff / se;
        (z, two_sided_p(z))
    };

    Ok(ComparisonResult {
        r,
        n_tested: parts.n_tested,
        diff,
        se,
        z,
        p_raw,
        p_adj: None,
        ci: (diff - z_crit * se, diff + z_crit * se),
        method: spec,
        flags,
    })
}

// McNemar: null-enforced test statistic plus the Bonett-Price interval.
fn mcnemar(parts: &ComparisonParts, _alpha: f64, z_crit: f64) -> Result<ComparisonResult> {
    let c = parts.counts;
    let n_plus = c.n_plus as f64;
    let diff = c.theta1() - c.theta2();
    let discordant = (c.q1 + c.q2) as f64 - 2.0 * c.q12 as f64;
    let mut flags = ComparisonFlags::default();

    let (z, p_raw) = if discordant == 0.0 {
        flags.degenerate_se = true;
        (0.0, 1.0)
    } else {
        let z = (c.q1 as f64 - c.q2 as f64) / discordant.sqrt();
        (z, two_sided_p(z))
    };

    // Bonett-Price: add one to each discordant cell, then Wald.
    let m = n_plus + 2.0;
    let q_diff = c.q1 as f64 - c.q2 as f64;
    let center = q_diff / m;
    let se = (((discordant + 2.0) - q_diff * q_diff / m) / (m * m))
        .max(0.0)
        .sqrt();

    Ok(ComparisonResult {
        r: parts.r,
        n_tested: parts.n_tested,
        diff,
        se,
        z,
        p_raw,
        p_adj: None,
        ci: (center - z_crit * se, center + z_crit * se),
        method: MethodSpec::plain(Method::McNemar),
        flags,
    })
}

/// Benjamini-Hochberg step-up adjusted p-values, in input order.
///
/// All inputs must lie in [0, 1].
pub fn bh_adjust(p_values: &[f64]) -> Vec<f64> {
    let m = p_values.len();
    if m == 0 {
        return Vec::new();
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| p_values[a].partial_cmp(&p_values[b]).unwrap());
    let mut adjusted = vec![0.0; m];
    let mut running = 1.0_f64;
    for rank in (0..m).rev() {
        let i = order[rank];
        let value = (p_values[i] * m as f64 / (rank + 1) as f64).min(1.0);
        running = running.min(value);
        adjusted[i] = running;
    }
    adjusted
}

/// Fill `p_adj` across a family of comparisons with BH-adjusted values.
pub fn adjust_family(results: &mut [ComparisonResult]) {
    let raw: Vec<f64> = results.iter().map(|r| r.p_raw).collect();
    for (res, adj) in results.iter_mut().zip(bh_adjust(&raw)) {
        res.p_adj = Some(adj);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ScoreColumn;
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b}");
    }

    #[test]
    fn binomial_variance_values() {
        assert_eq!(var_binomial(0.5, 100.0), 0.0025);
        assert_eq!(var_binomial(0.0, 50.0), 0.0);
        assert_eq!(var_binomial(1.0, 50.0), 0.0);
        close(var_binomial(0.2, 300.0), 0.16 / 300.0, 1e-18);
    }

    #[test]
    fn var_jz_reduces_to_binomial_at_zero_lambda() {
        for &(theta, r, pi, np) in &[
            (0.3, 0.1, 0.05, 100.0),
            (0.999, 0.5, 0.2, 85.0),
            (0.0, 0.01, 0.02, 10.0),
            (1.0, 0.9, 0.5, 7.0),
        ] {
            let a = var_jz(theta, 0.0, r, pi, np);
            let b = var_binomial(theta, np);
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn var_jz_bracket_identity_case() {
        // lambda = 1, r = theta = pi = 0.5 collapses the bracket to one
        let v = var_jz(0.5, 1.0, 0.5, 0.5, 500.0);
        let b = var_binomial(0.5, 500.0);
        close(v, b, 1e-18);
    }

    #[test]
    fn cov_binomial_values() {
        assert_eq!(cov_binomial(0.6, 0.5, 0.3, 100.0), 0.0);
        let v = cov_binomial(0.3, 0.3, 0.3, 85.0);
        close(v, var_binomial(0.3, 85.0), 1e-18);
        close(cov_binomial(0.6, 0.5, 0.4, 100.0), 0.001, 1e-15);
    }

    #[test]
    fn cov_emproc_reduces_to_binomial_at_zero_lambda() {
        let counts = PairedCounts {
            q1: 30,
            q2: 25,
            q12: 20,
            n_plus: 80,
            gamma12_hat: 0.04,
        };
        let (cov, dropped) = cov_emproc(&counts, (0.0, 0.0), 0.1, 0.05);
        assert!(!dropped);
        let expected = cov_binomial(counts.theta1(), counts.theta2(), counts.theta12(), 80.0);
        assert_eq!(cov.to_bits(), expected.to_bits());
    }

    #[test]
    fn cov_emproc_identical_algorithms_match_var_jz() {
        // theta12 = theta, gamma = r: the covariance of an algorithm with
        // itself is its variance
        let theta = 0.4;
        let r = 0.1;
        let pi = 0.05;
        let np = 200.0;
        let lambda = 0.3;
        let counts = PairedCounts {
            q1: 80,
            q2: 80,
            q12: 80,
            n_plus: 200,
            gamma12_hat: r,
        };
        let (cov, _) = cov_emproc(&counts, (lambda, lambda), r, pi);
        let var = var_jz(theta, lambda, r, pi, np);
        close(cov, var, 1e-15);
    }

    #[test]
    fn cov_emproc_drops_ratio_on_exact_independence() {
        let counts = PairedCounts {
            q1: 40,
            q2: 40,
            q12: 20,
            n_plus: 80,
            gamma12_hat: 0.3,
        };
        // theta1 = theta2 = 0.5, theta12 = 0.25 = theta1 * theta2
        let (cov, dropped) = cov_emproc(&counts, (0.4, 0.2), 0.25, 0.1);
        assert!(dropped);
        assert_eq!(cov, 0.0);
    }

    #[test]
    fn cov_emproc_matches_scripted_formula() {
        // independent re-evaluation of the product form on a toy cell set
        let counts = PairedCounts {
            q1: 12,
            q2: 9,
            q12: 7,
            n_plus: 20,
            gamma12_hat: 0.08,
        };
        let (l1, l2) = (0.35, 0.15);
        let r = 0.1;
        let pi = 0.02;
        let (cov, dropped) = cov_emproc(&counts, (l1, l2), r, pi);
        assert!(!dropped);

        let t1 = 12.0 / 20.0;
        let t2 = 9.0 / 20.0;
        let t12 = 7.0 / 20.0;
        let cov_b = (t12 - t1 * t2) / 20.0;
        let braces = (1.0 - l1 - l2) + (0.08 - r * r) * l1 * l2 / (pi * (t12 - t1 * t2));
        close(cov, cov_b * braces, 1e-15);
    }

    fn two_algo_dataset(activity: Vec<bool>, s1: Vec<f64>, s2: Vec<f64>) -> ScoredDataset {
        ScoredDataset::new(
            (0..activity.len()).map(|i| i.to_string()).collect(),
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

    fn random_dataset(seed: u64, n: usize) -> ScoredDataset {
        let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
        let activity: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < 0.25).collect();
        if activity.iter().all(|&a| a) || activity.iter().all(|&a| !a) {
            return random_dataset(seed + 1000, n);
        }
        let s1: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s2: Vec<f64> = s1
            .iter()
            .map(|&v| 0.7 * v + 0.3 * rng.random::<f64>())
            .collect();
        two_algo_dataset(activity, s1, s2)
    }

    #[test]
    fn identical_algorithms_never_reject() {
        let activity: Vec<bool> = (0..60).map(|i| i % 6 == 0).collect();
        let s: Vec<f64> = (0..60).map(|i| ((i * 29) % 60) as f64).collect();
        let ds = two_algo_dataset(activity, s.clone(), s);
        for method in [
            Method::EmProc,
            Method::McNemar,
            Method::IndJz,
            Method::CorrBinom,
        ] {
            let res = compare(&ds, "a", "b", 0.2, MethodSpec::plain(method), 0.05).unwrap();
            assert_eq!(res.diff, 0.0, "{method:?}");
            assert_eq!(res.p_raw, 1.0, "{method:?}");
        }
    }

    #[test]
    fn mcnemar_statistic_equals_pooled_corrbinom() {
        for seed in 0..20 {
            let ds = random_dataset(seed, 120);
            for &r in &[0.05, 0.2, 0.5] {
                let mc =
                    compare(&ds, "a", "b", r, MethodSpec::plain(Method::McNemar), 0.05).unwrap();
                let cb = compare(
                    &ds,
                    "a",
                    "b",
                    r,
                    MethodSpec::new(Method::CorrBinom, true, false).unwrap(),
                    0.05,
                )
                .unwrap();
                assert!(
                    (mc.z - cb.z).abs() <= 1e-12,
                    "seed {seed} r {r}: {} vs {}",
                    mc.z,
                    cb.z
                );
            }
        }
    }

    #[test]
    fn mcnemar_interval_equals_plus_corrbinom() {
        for seed in 0..20 {
            let ds = random_dataset(seed + 100, 120);
            for &r in &[0.05, 0.2, 0.5] {
                let mc =
                    compare(&ds, "a", "b", r, MethodSpec::plain(Method::McNemar), 0.05).unwrap();
                let cb = compare(
                    &ds,
                    "a",
                    "b",
                    r,
                    MethodSpec::new(Method::CorrBinom, false, true).unwrap(),
                    0.05,
                )
                .unwrap();
                assert!((mc.ci.0 - cb.ci.0).abs() <= 1e-12);
                assert!((mc.ci.1 - cb.ci.1).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn comparisons_are_antisymmetric() {
        let ds = random_dataset(3, 150);
        for method in [
            Method::EmProc,
            Method::McNemar,
            Method::IndJz,
            Method::CorrBinom,
        ] {
            let ab = compare(&ds, "a", "b", 0.15, MethodSpec::plain(method), 0.05).unwrap();
            let ba = compare(&ds, "b", "a", 0.15, MethodSpec::plain(method), 0.05).unwrap();
            assert_eq!(ab.diff, -ba.diff);
            assert_eq!(ab.se.to_bits(), ba.se.to_bits(), "{method:?}");
            assert_eq!(ab.z, -ba.z);
            assert_eq!(ab.p_raw, ba.p_raw);
        }
    }

    #[test]
    fn forced_zero_lambda_matches_corrbinom() {
        let ds = random_dataset(11, 200);
        let mut parts = comparison_parts(&ds, "a", "b", 0.2).unwrap();
        parts.lambda1 = 0.0;
        parts.lambda2 = 0.0;
        parts.lambda_fallback = false;
        let em = compare_from_parts(&parts, MethodSpec::plain(Method::EmProc), 0.05).unwrap();
        let cb = compare_from_parts(&parts, MethodSpec::plain(Method::CorrBinom), 0.05).unwrap();
        assert_eq!(em.se.to_bits(), cb.se.to_bits());
        assert_eq!(em.z.to_bits(), cb.z.to_bits());
    }

    #[test]
    fn mcnemar_rejects_flags() {
        assert!(MethodSpec::new(Method::McNemar, true, false).is_err());
        assert!(MethodSpec::new(Method::McNemar, false, true).is_err());
        assert!(MethodSpec::new(Method::McNemar, false, false).is_ok());
    }

    #[test]
    fn bh_single_p_is_unchanged() {
        assert_eq!(bh_adjust(&[0.037]), vec![0.037]);
    }

    #[test]
    fn bh_equal_ps_are_fixed_points() {
        let adj = bh_adjust(&[0.2, 0.2, 0.2, 0.2]);
        for v in adj {
            close(v, 0.2, 1e-15);
        }
    }

    #[test]
    fn bh_matches_published_nine_test_family() {
        // nine raw p-values and their published step-up adjustments
        let raw = [
            1.000, 0.410, 0.409, 0.6200, 0.0407, 0.0281, 2.07e-2, 1.60e-8, 7.91e-5,
        ];
        let expected = [
            1.000, 0.527, 0.527, 0.697, 0.0733, 0.0632, 6.21e-2, 1.44e-7, 3.56e-4,
        ];
        let adj = bh_adjust(&raw);
        for (a, e) in adj.iter().zip(expected) {
            assert!(
                (a - e).abs() <= 0.0005 * (1.0 + e.abs().max(*a)) + 5e-9,
                "{a} vs {e}"
            );
        }
    }

    #[test]
    fn bh_is_monotone_in_input_order_statistics() {
        let raw = [0.9, 0.001, 0.5, 0.04, 0.04, 1.0, 0.3];
        let adj = bh_adjust(&raw);
        let mut pairs: Vec<(f64, f64)> = raw.iter().copied().zip(adj.iter().copied()).collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        for w in pairs.windows(2) {
            assert!(w[0].1 <= w[1].1 + 1e-15);
        }
        for (_, a) in pairs {
            assert!((0.0..=1.0).contains(&a));
        }
    }

    #[test]
    fn indjz_se_dominates_emproc_under_positive_covariance() {
        // positively correlated scores: subtracting a positive covariance
        // cannot enlarge the standard error
        use crate::simulate::{sample, ModelSpec};
        let model = ModelSpec::bibeta_study(0.9, 2_000, 0.05, 15);
        let ds = sample(&model).unwrap();
        for &r in &[0.025, 0.1, 0.25] {
            let parts = comparison_parts(&ds, "algo1", "algo2", r).unwrap();
            let (cov, _) = cov_emproc(
                &parts.counts,
                (parts.lambda1, parts.lambda2),
                parts.r,
                parts.counts.n_plus as f64 / parts.n as f64,
            );
            let em = compare_from_parts(&parts, MethodSpec::plain(Method::EmProc), 0.05).unwrap();
            let ind = compare_from_parts(&parts, MethodSpec::plain(Method::IndJz), 0.05).unwrap();
            if cov >= 0.0 && !em.flags.variance_floored && !ind.flags.variance_floored {
                assert!(
                    ind.se >= em.se,
                    "r = {r}: indjz {} < emproc {}",
                    ind.se,
                    em.se
                );
            }
        }
    }

    #[test]
    fn adjust_family_fills_p_adj() {
        let ds = random_dataset(5, 100);
        let mut results: Vec<ComparisonResult> = [0.05, 0.2, 0.5]
            .iter()
            .map(|&r| compare(&ds, "a", "b", r, MethodSpec::plain(Method::EmProc), 0.05).unwrap())
            .collect();
        adjust_family(&mut results);
        assert!(results.iter().all(|c| c.p_adj.is_some()));
    }
}
