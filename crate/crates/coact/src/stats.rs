//! The inferential toolkit: effect sizes, t and Mann-Whitney tests,
//! Bonferroni correction, MAD outlier screening, confidence intervals, and
//! power analysis.
//!
//! Everything is two-tailed. The two-sample t is Student's pooled-variance
//! test by default (Welch is available behind [`TVariant`]); the Mann-Whitney
//! test enumerates the exact permutation distribution for small samples and
//! falls back to the tie-corrected normal approximation with continuity
//! correction otherwise. Power calculations use the noncentral t distribution,
//! with a documented normal approximation as an alternative model.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("need at least {needed} observations, got {got}")]
    TooFewObservations { needed: usize, got: usize },
    #[error("effect size undefined: pooled standard deviation is zero")]
    ZeroVariance,
    #[error("degenerate test: no variance in the data")]
    DegenerateTest,
    #[error("invalid argument: {0}")]
    BadArgument(String),
}

/// Which test produced a [`TestResult`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestName {
    TTwoSample,
    TOneSample,
    MannWhitneyU,
}

/// Outcome of a two-tailed hypothesis test.
///
/// `statistic` is t for the t tests and U of the first sample for
/// Mann-Whitney. `effect_size_d` is Cohen's d (reported descriptively even
/// for the rank test; 0 when its pooled SD is undefined). `p_adjusted` is
/// filled in by multiple-comparison correction downstream, never by the test
/// itself. For one-sample tests `n_b` is 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test_name: TestName,
    pub statistic: f64,
    pub p_value: f64,
    pub p_adjusted: Option<f64>,
    pub effect_size_d: f64,
    pub n_a: usize,
    pub n_b: usize,
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() - 1) as f64
}

fn require(n: usize, needed: usize) -> Result<(), StatsError> {
    if n < needed {
        Err(StatsError::TooFewObservations { needed, got: n })
    } else {
        Ok(())
    }
}

fn std_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("standard normal")
}

fn t_dist(df: f64) -> StudentsT {
    StudentsT::new(0.0, 1.0, df).expect("valid degrees of freedom")
}

fn two_tailed_t_p(t: f64, df: f64) -> f64 {
    (2.0 * t_dist(df).cdf(-t.abs())).clamp(0.0, 1.0)
}

fn pooled_var(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    ((na - 1.0) * sample_var(a) + (nb - 1.0) * sample_var(b)) / (na + nb - 2.0)
}

/// Two-sample Cohen's d with the (n−1)-weighted pooled standard deviation.
/// Sign follows `mean(a) - mean(b)`.
///
/// ```
/// let d = coact::stats::cohens_d(&[2.0, 4.0, 6.0, 8.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
/// assert!((d - 0.3873).abs() < 1e-4);
/// ```
pub fn cohens_d(a: &[f64], b: &[f64]) -> Result<f64, StatsError> {
    require(a.len(), 2)?;
    require(b.len(), 2)?;
    let sp = pooled_var(a, b).sqrt();
    if sp == 0.0 {
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean(a) - mean(b)) / sp)
}

/// One-sample Cohen's d: `(mean(a) - reference) / sd(a)`.
pub fn cohens_d_one_sample(a: &[f64], reference: f64) -> Result<f64, StatsError> {
    require(a.len(), 2)?;
    let sd = sample_var(a).sqrt();
    if sd == 0.0 {
        if mean(a) == reference {
            return Ok(0.0);
        }
        return Err(StatsError::ZeroVariance);
    }
    Ok((mean(a) - reference) / sd)
}

/// Two-sample t variant. Student (pooled variance) is the default everywhere;
/// Welch drops the equal-variance assumption for robustness checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TVariant {
    Student,
    Welch,
}

/// Student's two-sample two-tailed t test (pooled variance).
///
/// ```
/// let r = coact::stats::t_test(&[5.0, 6.0, 7.0, 8.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
/// assert!((r.statistic - 4.3818).abs() < 1e-4);
/// assert!((r.p_value - 0.00466).abs() < 1e-4);
/// ```
pub fn t_test(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    t_test_variant(a, b, TVariant::Student)
}

/// Two-sample two-tailed t test with an explicit variant choice.
pub fn t_test_variant(a: &[f64], b: &[f64], variant: TVariant) -> Result<TestResult, StatsError> {
    require(a.len(), 2)?;
    require(b.len(), 2)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (va, vb) = (sample_var(a), sample_var(b));
    if va == 0.0 && vb == 0.0 {
        return Err(StatsError::DegenerateTest);
    }
    let diff = mean(a) - mean(b);
    let (t, df) = match variant {
        TVariant::Student => {
            let sp2 = pooled_var(a, b);
            (diff / (sp2 * (1.0 / na + 1.0 / nb)).sqrt(), na + nb - 2.0)
        }
        TVariant::Welch => {
            let se2 = va / na + vb / nb;
            let df = se2 * se2
                / ((va / na).powi(2) / (na - 1.0) + (vb / nb).powi(2) / (nb - 1.0));
            (diff / se2.sqrt(), df)
        }
    };
    Ok(TestResult {
        test_name: TestName::TTwoSample,
        statistic: t,
        p_value: two_tailed_t_p(t, df),
        p_adjusted: None,
        effect_size_d: diff / pooled_var(a, b).sqrt(),
        n_a: a.len(),
        n_b: b.len(),
    })
}

/// One-sample two-tailed t test of `mean(a)` against a fixed reference.
///
/// A constant sample equal to the reference is reported as no deviation
/// (t = 0, p = 1); a constant sample away from the reference is degenerate.
pub fn t_test_one_sample(a: &[f64], reference: f64) -> Result<TestResult, StatsError> {
    require(a.len(), 2)?;
    let n = a.len() as f64;
    let m = mean(a);
    let sd = sample_var(a).sqrt();
    if sd == 0.0 {
        if m == reference {
            return Ok(TestResult {
                test_name: TestName::TOneSample,
                statistic: 0.0,
                p_value: 1.0,
                p_adjusted: None,
                effect_size_d: 0.0,
                n_a: a.len(),
                n_b: 0,
            });
        }
        return Err(StatsError::DegenerateTest);
    }
    let t = (m - reference) / (sd / n.sqrt());
    Ok(TestResult {
        test_name: TestName::TOneSample,
        statistic: t,
        p_value: two_tailed_t_p(t, n - 1.0),
        p_adjusted: None,
        effect_size_d: (m - reference) / sd,
        n_a: a.len(),
        n_b: 0,
    })
}

/// Midranks (1-based, ties averaged) of `values`, plus the tie correction
/// term Σ(t³ − t) over tie groups.
fn midranks(values: &[f64]) -> (Vec<f64>, f64) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| values[i].partial_cmp(&values[j]).expect("finite values"));
    let mut ranks = vec![0.0; n];
    let mut tie_term = 0.0;
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        let avg = (i + j + 2) as f64 / 2.0;
        for k in i..=j {
            ranks[order[k]] = avg;
        }
        tie_term += t * t * t - t;
        i = j + 1;
    }
    (ranks, tie_term)
}

fn u_of_first(ranks: &[f64], n_a: usize) -> f64 {
    let r_a: f64 = ranks[..n_a].iter().sum();
    r_a - (n_a * (n_a + 1)) as f64 / 2.0
}

/// Visits every k-subset of `0..n` in lexicographic order.
fn for_each_combination<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k > n {
        return;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k as isize - 1;
        while i >= 0 && idx[i as usize] == n - k + i as usize {
            i -= 1;
        }
        if i < 0 {
            return;
        }
        let i = i as usize;
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Two-tailed Mann-Whitney U. Routes to exact enumeration when
/// `n_a · n_b <= 20` and to the tie-corrected normal approximation with
/// continuity correction otherwise.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    require(a.len(), 1)?;
    require(b.len(), 1)?;
    if a.len() * b.len() <= 20 {
        mann_whitney_u_exact(a, b)
    } else {
        mann_whitney_u_approx(a, b)
    }
}

/// Exact Mann-Whitney U: enumerates all group relabelings of the pooled
/// sample and counts those at least as far from the null mean n_a·n_b/2 as
/// the observed U. Handles ties through midranks, which stay fixed across
/// relabelings.
pub fn mann_whitney_u_exact(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    require(a.len(), 1)?;
    require(b.len(), 1)?;
    let (n_a, n_b) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, _) = midranks(&pooled);
    let u_a = u_of_first(&ranks, n_a);
    let mu = (n_a * n_b) as f64 / 2.0;
    let observed = (u_a - mu).abs();
    let offset = (n_a * (n_a + 1)) as f64 / 2.0;
    let mut extreme = 0u64;
    let mut total = 0u64;
    for_each_combination(n_a + n_b, n_a, |subset| {
        let u = subset.iter().map(|&i| ranks[i]).sum::<f64>() - offset;
        if (u - mu).abs() >= observed - 1e-9 {
            extreme += 1;
        }
        total += 1;
    });
    Ok(TestResult {
        test_name: TestName::MannWhitneyU,
        statistic: u_a,
        p_value: extreme as f64 / total as f64,
        p_adjusted: None,
        effect_size_d: descriptive_d(a, b),
        n_a,
        n_b,
    })
}

/// Mann-Whitney U under the tie-corrected normal approximation with
/// continuity correction.
pub fn mann_whitney_u_approx(a: &[f64], b: &[f64]) -> Result<TestResult, StatsError> {
    require(a.len(), 1)?;
    require(b.len(), 1)?;
    let (n_a, n_b) = (a.len(), b.len());
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, tie_term) = midranks(&pooled);
    let u_a = u_of_first(&ranks, n_a);
    let mu = (n_a * n_b) as f64 / 2.0;
    let n = (n_a + n_b) as f64;
    let sigma2 =
        (n_a * n_b) as f64 / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)));
    let p = if sigma2 <= 0.0 {
        1.0
    } else {
        let upper = u_a.max((n_a * n_b) as f64 - u_a);
        let z = (upper - mu - 0.5) / sigma2.sqrt();
        (2.0 * (1.0 - std_normal().cdf(z))).clamp(0.0, 1.0)
    };
    Ok(TestResult {
        test_name: TestName::MannWhitneyU,
        statistic: u_a,
        p_value: p,
        p_adjusted: None,
        effect_size_d: descriptive_d(a, b),
        n_a,
        n_b,
    })
}

/// Cohen's d as a descriptive companion for rank tests: 0 when undefined.
fn descriptive_d(a: &[f64], b: &[f64]) -> f64 {
    cohens_d(a, b).unwrap_or(0.0)
}

/// Bonferroni adjustment: `min(1, m·p)`. Expects `p` in [0, 1] and `m >= 1`.
pub fn bonferroni(p: f64, m: u32) -> f64 {
    debug_assert!((0.0..=1.0).contains(&p) && m >= 1);
    (m as f64 * p).min(1.0)
}

fn median_of(xs: &[f64]) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Flags values whose distance from the median exceeds `threshold` robust
/// standard deviations, with the robust SD taken as 1.4826 · MAD (the normal
/// consistency constant).
///
/// Degenerate rule: when the MAD is 0 (at least half the sample sits on the
/// median), any value off the median is flagged. Needs n ≥ 3 and a positive
/// threshold.
pub fn mad_outliers(values: &[f64], threshold: f64) -> Result<Vec<bool>, StatsError> {
    require(values.len(), 3)?;
    if !(threshold > 0.0) {
        return Err(StatsError::BadArgument(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let med = median_of(values);
    let deviations: Vec<f64> = values.iter().map(|x| (x - med).abs()).collect();
    let mad = median_of(&deviations);
    let flags = if mad == 0.0 {
        values.iter().map(|&x| x != med).collect()
    } else {
        let scale = 1.4826 * mad;
        deviations.iter().map(|&dev| dev / scale > threshold).collect()
    };
    Ok(flags)
}

/// Two-sided t-based confidence interval for the mean:
/// `mean ± t_{(1+level)/2, n−1} · sd/√n`.
pub fn confidence_interval(values: &[f64], level: f64) -> Result<(f64, f64), StatsError> {
    require(values.len(), 2)?;
    if !(0.0 < level && level < 1.0) {
        return Err(StatsError::BadArgument(format!(
            "confidence level must be in (0, 1), got {level}"
        )));
    }
    let n = values.len() as f64;
    let m = mean(values);
    let se = (sample_var(values) / n).sqrt();
    let q = t_dist(n - 1.0).inverse_cdf((1.0 + level) / 2.0);
    Ok((m - q * se, m + q * se))
}

/// CDF of the noncentral t distribution with `df` degrees of freedom and
/// noncentrality `delta`, by numerical integration.
///
/// Writing T = (Z + δ)/√(V/ν) with Z standard normal and V ~ χ²_ν,
/// conditioning on W = √V gives
/// P(T ≤ t) = ∫ Φ(t·w/√ν − δ) f_W(w) dw, with f_W the chi density. The chi
/// density is effectively supported on √ν ± 12 for every ν ≥ 1, so composite
/// Simpson on that window with 4000 panels carries the quadrature error well
/// below 1e−9.
pub fn noncentral_t_cdf(t: f64, df: f64, delta: f64) -> f64 {
    assert!(df >= 1.0, "degrees of freedom must be >= 1");
    let nu = df;
    let sqrt_nu = nu.sqrt();
    let ln_coeff = (1.0 - nu / 2.0) * std::f64::consts::LN_2 - ln_gamma(nu / 2.0);
    let norm = std_normal();
    let integrand = |w: f64| -> f64 {
        if w <= 0.0 {
            // chi density: 0 at the origin for ν > 1, √(2/π) for ν = 1
            return if nu == 1.0 && w == 0.0 {
                (ln_coeff).exp() * norm.cdf(-delta)
            } else {
                0.0
            };
        }
        let ln_pdf = ln_coeff + (nu - 1.0) * w.ln() - w * w / 2.0;
        ln_pdf.exp() * norm.cdf(t * w / sqrt_nu - delta)
    };
    let lo = (sqrt_nu - 12.0).max(0.0);
    let hi = sqrt_nu + 12.0;
    let panels = 4000usize; // even
    let h = (hi - lo) / panels as f64;
    let mut acc = integrand(lo) + integrand(hi);
    for k in 1..panels {
        let w = lo + k as f64 * h;
        acc += integrand(w) * if k % 2 == 1 { 4.0 } else { 2.0 };
    }
    (acc * h / 3.0).clamp(0.0, 1.0)
}

/// Study design for power analysis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Design {
    TwoSample,
    OneSample,
}

/// Power model: exact noncentral t (default) or the closed-form normal
/// approximation `n = 2(z_{1−α/2} + z_{power})²/d²` (per group, two-sample).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PowerModel {
    NoncentralT,
    NormalApprox,
}

/// Inputs for a two-tailed power analysis. `comparisons` is the Bonferroni
/// divisor applied to `alpha` before sizing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerRequest {
    pub d: f64,
    pub alpha: f64,
    pub power: f64,
    pub comparisons: u32,
    pub design: Design,
}

impl PowerRequest {
    pub fn validate(&self) -> Result<(), StatsError> {
        if !(self.d > 0.0) {
            return Err(StatsError::BadArgument(format!(
                "effect size must be positive, got {}",
                self.d
            )));
        }
        for (name, v) in [("alpha", self.alpha), ("power", self.power)] {
            if !(0.0 < v && v < 1.0) {
                return Err(StatsError::BadArgument(format!(
                    "{name} must be in (0, 1), got {v}"
                )));
            }
        }
        if self.comparisons < 1 {
            return Err(StatsError::BadArgument(
                "comparisons must be >= 1".to_string(),
            ));
        }
        Ok(())
    }

    fn alpha_adjusted(&self) -> f64 {
        self.alpha / self.comparisons as f64
    }
}

/// A sizing result: the smallest per-group n reaching the requested power.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SampleSize {
    pub per_group: usize,
    /// 2·per_group for two-sample designs, per_group for one-sample.
    pub total: usize,
    pub achieved_power: f64,
    pub alpha_adjusted: f64,
}

/// Achieved power of a two-tailed test at per-group size `n` under `model`.
pub fn achieved_power(req: &PowerRequest, n: usize, model: PowerModel) -> Result<f64, StatsError> {
    req.validate()?;
    if n < 2 {
        return Ok(0.0);
    }
    let nf = n as f64;
    let (df, delta) = match req.design {
        Design::TwoSample => (2.0 * nf - 2.0, req.d * (nf / 2.0).sqrt()),
        Design::OneSample => (nf - 1.0, req.d * nf.sqrt()),
    };
    let tail = 1.0 - req.alpha_adjusted() / 2.0;
    let power = match model {
        PowerModel::NoncentralT => {
            let t_crit = t_dist(df).inverse_cdf(tail);
            1.0 - noncentral_t_cdf(t_crit, df, delta) + noncentral_t_cdf(-t_crit, df, delta)
        }
        PowerModel::NormalApprox => {
            let z_crit = std_normal().inverse_cdf(tail);
            std_normal().cdf(delta - z_crit) + std_normal().cdf(-delta - z_crit)
        }
    };
    Ok(power.clamp(0.0, 1.0))
}

/// Smallest per-group n whose power reaches the request, under the
/// noncentral-t model.
pub fn sample_size(req: &PowerRequest) -> Result<SampleSize, StatsError> {
    sample_size_with(req, PowerModel::NoncentralT)
}

/// Smallest per-group n whose power reaches the request, under an explicit
/// power model. Power is monotone in n, so a doubling search brackets the
/// answer and a bisection pins it down.
pub fn sample_size_with(req: &PowerRequest, model: PowerModel) -> Result<SampleSize, StatsError> {
    req.validate()?;
    let mut hi = 2usize;
    while achieved_power(req, hi, model)? < req.power {
        hi *= 2;
    }
    let mut lo = hi / 2; // power(lo) < target (or lo < 2)
    while lo + 1 < hi {
        let mid = lo + (hi - lo) / 2;
        if achieved_power(req, mid, model)? >= req.power {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let per_group = hi;
    let total = match req.design {
        Design::TwoSample => 2 * per_group,
        Design::OneSample => per_group,
    };
    Ok(SampleSize {
        per_group,
        total,
        achieved_power: achieved_power(req, per_group, model)?,
        alpha_adjusted: req.alpha_adjusted(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn cohens_d_matches_hand_computation() {
        let d = cohens_d(&[2.0, 4.0, 6.0, 8.0], &[1.0, 3.0, 5.0, 7.0]).unwrap();
        assert!((d - 1.0 / (20.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!((d - 0.3873).abs() < 1e-4);
    }

    #[test]
    fn cohens_d_trivial_cases() {
        assert_eq!(cohens_d(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), 0.0);
        assert_eq!(cohens_d_one_sample(&[10.0, 12.0], 11.0).unwrap(), 0.0);
        assert!(matches!(
            cohens_d(&[5.0, 5.0], &[7.0, 7.0]),
            Err(StatsError::ZeroVariance)
        ));
    }

    #[test]
    fn t_test_reference_case() {
        // scipy.stats.ttest_ind([5,6,7,8], [1,2,3,4])
        let r = t_test(&[5.0, 6.0, 7.0, 8.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r.statistic - 4.381780460041329).abs() < 1e-12);
        assert!((r.p_value - 0.004659214943993936).abs() < 1e-9);
        assert_eq!((r.n_a, r.n_b), (4, 4));
    }

    #[test]
    fn t_test_identical_samples() {
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let r = t_test(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn t_test_degenerate() {
        assert!(matches!(
            t_test(&[2.0, 2.0], &[3.0, 3.0]),
            Err(StatsError::DegenerateTest)
        ));
    }

    #[test]
    fn one_sample_no_deviation() {
        let xs = [163.08; 5];
        let r = t_test_one_sample(&xs, 163.08).unwrap();
        assert_eq!((r.statistic, r.p_value), (0.0, 1.0));
        assert!(matches!(
            t_test_one_sample(&xs, 100.0),
            Err(StatsError::DegenerateTest)
        ));
    }

    #[test]
    fn one_sample_reference_case() {
        // scipy.stats.ttest_1samp([1,2,3,4,5], 2)
        let r = t_test_one_sample(&[1.0, 2.0, 3.0, 4.0, 5.0], 2.0).unwrap();
        assert!((r.statistic - 1.414213562373095).abs() < 1e-12);
        assert!((r.p_value - 0.23019964108049644).abs() < 1e-9);
    }

    #[test]
    fn welch_equals_student_for_balanced_equal_variance() {
        let a = [5.0, 6.0, 7.0, 8.0];
        let b = [1.0, 2.0, 3.0, 4.0];
        let s = t_test_variant(&a, &b, TVariant::Student).unwrap();
        let w = t_test_variant(&a, &b, TVariant::Welch).unwrap();
        assert!((s.statistic - w.statistic).abs() < 1e-12);
        assert!((s.p_value - w.p_value).abs() < 1e-9);
    }

    #[test]
    fn welch_reference_case() {
        // scipy.stats.ttest_ind([1,2,3,4,20], [2,3,4], equal_var=False)
        let r = t_test_variant(&[1.0, 2.0, 3.0, 4.0, 20.0], &[2.0, 3.0, 4.0], TVariant::Welch)
            .unwrap();
        assert!((r.statistic - 0.8374357893586237).abs() < 1e-12);
        assert!((r.p_value - 0.44725836371475425).abs() < 1e-9);
    }

    #[test]
    fn mwu_exact_separated_samples() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.1).abs() < 1e-12);
    }

    #[test]
    fn mwu_identical_multisets() {
        let xs = [2.0, 2.0, 3.0, 9.0];
        let r = mann_whitney_u(&xs, &xs).unwrap();
        assert_eq!(r.statistic, 8.0); // n²/2
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn mwu_approx_reference_cases() {
        // scipy.stats.mannwhitneyu(a, b, method='asymptotic'), two-sided
        let r = mann_whitney_u_approx(
            &[1.0, 2.0, 2.0, 5.0, 7.0, 9.0],
            &[2.0, 3.0, 4.0, 4.0, 8.0],
        )
        .unwrap();
        assert_eq!(r.statistic, 14.0);
        assert!((r.p_value - 0.9264259462419342).abs() < 1e-10);

        let r = mann_whitney_u_approx(
            &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0],
            &[2.5, 3.5, 10.0, 11.0, 12.0, 13.0],
        )
        .unwrap();
        assert_eq!(r.statistic, 9.0);
        assert!((r.p_value - 0.10041249398610284).abs() < 1e-10);
    }

    #[test]
    fn mwu_routes_on_product_of_sizes() {
        // 3 * 7 = 21 > 20 → approximate path despite small total n
        let a = [1.0, 2.0, 3.0];
        let b = [4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
        let routed = mann_whitney_u(&a, &b).unwrap();
        let approx = mann_whitney_u_approx(&a, &b).unwrap();
        assert_eq!(routed, approx);
    }

    #[test]
    fn bonferroni_cases() {
        assert!((bonferroni(0.01, 4) - 0.04).abs() < 1e-15);
        assert_eq!(bonferroni(0.4, 4), 1.0);
        assert_eq!(bonferroni(0.05, 1), 0.05);
    }

    #[test]
    fn mad_flags_the_gross_outlier() {
        let flags = mad_outliers(&[1.0, 2.0, 3.0, 4.0, 100.0], 3.0).unwrap();
        assert_eq!(flags, vec![false, false, false, false, true]);
        let none = mad_outliers(&[1.0, 2.0, 3.0, 4.0, 5.0], 3.0).unwrap();
        assert!(none.iter().all(|&f| !f));
        let constant = mad_outliers(&[5.0, 5.0, 5.0], 3.0).unwrap();
        assert!(constant.iter().all(|&f| !f));
    }

    #[test]
    fn mad_zero_spread_fallback() {
        let flags = mad_outliers(&[5.0, 5.0, 5.0, 9.0], 3.0).unwrap();
        assert_eq!(flags, vec![false, false, false, true]);
    }

    #[test]
    fn ci_reference_case() {
        let (lo, hi) = confidence_interval(&[1.0, 2.0, 3.0, 4.0, 5.0], 0.95).unwrap();
        assert!((lo - 1.0367568385224393).abs() < 1e-9);
        assert!((hi - 4.9632431614775605).abs() < 1e-9);
    }

    #[test]
    fn ci_degenerate_and_nested() {
        let (lo, hi) = confidence_interval(&[7.0, 7.0, 7.0], 0.95).unwrap();
        assert_eq!((lo, hi), (7.0, 7.0));
        let xs = [1.0, 2.0, 3.0, 4.0, 5.0];
        let narrow = confidence_interval(&xs, 0.95).unwrap();
        let wide = confidence_interval(&xs, 0.99).unwrap();
        assert!(wide.0 < narrow.0 && narrow.1 < wide.1);
    }

    #[test]
    fn noncentral_t_cdf_reference_values() {
        // scipy.stats.nct.cdf(t, df, delta)
        let cases = [
            (2.0, 10.0, 1.5, 0.659154072442),
            (-1.0, 5.0, 2.0, 0.002316375654),
            (0.0, 8.0, 0.5, 0.308537538726),
            (2.558, 68.0, 3.3466, 0.217819748682),
            (4.5, 30.0, 4.0, 0.654738497860),
            (1.2, 3.0, -1.0, 0.972870050464),
            (3.0, 100.0, 2.5, 0.685002359335),
            (0.5, 2.0, 3.0, 0.006486486882),
        ];
        for (t, df, delta, want) in cases {
            let got = noncentral_t_cdf(t, df, delta);
            assert!(
                (got - want).abs() < 1e-8,
                "cdf({t}, {df}, {delta}) = {got}, want {want}"
            );
        }
    }

    fn req(d: f64, comparisons: u32) -> PowerRequest {
        PowerRequest {
            d,
            alpha: 0.05,
            power: 0.8,
            comparisons,
            design: Design::TwoSample,
        }
    }

    #[test]
    fn sample_size_uncorrected() {
        let r = sample_size(&req(0.8, 1)).unwrap();
        assert_eq!(r.per_group, 26);
        assert_eq!(r.total, 52);
        let n = sample_size_with(&req(0.8, 1), PowerModel::NormalApprox).unwrap();
        assert_eq!(n.per_group, 25);
    }

    #[test]
    fn sample_size_corrected() {
        // four-way correction
        let r4 = sample_size(&req(0.8, 4)).unwrap();
        assert_eq!(r4.per_group, 37);
        assert_eq!(
            sample_size_with(&req(0.8, 4), PowerModel::NormalApprox)
                .unwrap()
                .per_group,
            35
        );
        // nine-way correction reproduces the published study totals
        let r9 = sample_size(&req(0.8, 9)).unwrap();
        assert_eq!((r9.per_group, r9.total), (43, 86));
        let r9b = sample_size(&req(0.65, 9)).unwrap();
        assert_eq!((r9b.per_group, r9b.total), (64, 128));
    }

    #[test]
    fn sample_size_round_trip() {
        let request = req(0.8, 1);
        let r = sample_size(&request).unwrap();
        assert!(r.achieved_power >= request.power);
        let below = achieved_power(&request, r.per_group - 1, PowerModel::NoncentralT).unwrap();
        assert!(below < request.power);
    }

    #[test]
    fn one_sample_design_sizing() {
        // scipy: smallest n with power >= 0.8 for one-sample d=0.5 at alpha 0.05 is 34
        let r = sample_size(&PowerRequest {
            d: 0.5,
            alpha: 0.05,
            power: 0.8,
            comparisons: 1,
            design: Design::OneSample,
        })
        .unwrap();
        assert_eq!(r.per_group, 34);
        assert_eq!(r.total, 34);
    }

    #[test]
    fn invalid_power_requests_rejected() {
        assert!(sample_size(&req(0.0, 1)).is_err());
        assert!(sample_size(&PowerRequest { alpha: 1.5, ..req(0.8, 1) }).is_err());
        assert!(sample_size(&PowerRequest { comparisons: 0, ..req(0.8, 1) }).is_err());
    }

    proptest! {
        #[test]
        fn t_test_antisymmetric(
            a in proptest::collection::vec(-50.0..50.0f64, 2..12),
            b in proptest::collection::vec(-50.0..50.0f64, 2..12),
        ) {
            if let (Ok(ab), Ok(ba)) = (t_test(&a, &b), t_test(&b, &a)) {
                prop_assert!((ab.statistic + ba.statistic).abs() < 1e-9);
                prop_assert!((ab.p_value - ba.p_value).abs() < 1e-9);
                prop_assert!((ab.effect_size_d + ba.effect_size_d).abs() < 1e-9);
            }
        }

        #[test]
        fn mwu_swap_symmetry(
            a in proptest::collection::vec(0..8i32, 1..5),
            b in proptest::collection::vec(0..8i32, 1..5),
        ) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney_u_exact(&a, &b).unwrap();
            let ba = mann_whitney_u_exact(&b, &a).unwrap();
            prop_assert!((ab.statistic + ba.statistic - (a.len()*b.len()) as f64).abs() < 1e-9);
            prop_assert!((ab.p_value - ba.p_value).abs() < 1e-12);
            prop_assert!(ab.p_value > 0.0 && ab.p_value <= 1.0);
        }

        #[test]
        fn mwu_approx_near_exact_for_small_n(
            // continuous draws: the ±0.05 agreement claim assumes tie-free data
            a in proptest::collection::vec(0.0..100.0f64, 3..7),
            b in proptest::collection::vec(0.0..100.0f64, 3..7),
        ) {
            let exact = mann_whitney_u_exact(&a, &b).unwrap();
            let approx = mann_whitney_u_approx(&a, &b).unwrap();
            prop_assert!((exact.p_value - approx.p_value).abs() <= 0.05 + 1e-12,
                "exact {} vs approx {}", exact.p_value, approx.p_value);
        }

        #[test]
        fn bonferroni_monotone(p in 0.0..1.0f64, q in 0.0..1.0f64, m in 1u32..30) {
            let (lo, hi) = if p <= q { (p, q) } else { (q, p) };
            prop_assert!(bonferroni(lo, m) <= bonferroni(hi, m));
            prop_assert!(bonferroni(lo, m) <= bonferroni(lo, m + 1));
            prop_assert_eq!(bonferroni(1.0, m), 1.0);
        }

        #[test]
        fn mad_affine_invariant(
            xs in proptest::collection::vec(-100.0..100.0f64, 3..20),
            a in prop_oneof![-5.0..-0.1f64, 0.1..5.0f64],
            b in -100.0..100.0f64,
        ) {
            let mapped: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            prop_assert_eq!(
                mad_outliers(&xs, 3.0).unwrap(),
                mad_outliers(&mapped, 3.0).unwrap()
            );
        }

        #[test]
        fn ci_widens_with_level(
            xs in proptest::collection::vec(-50.0..50.0f64, 2..15),
            level in 0.5..0.95f64,
        ) {
            let narrow = confidence_interval(&xs, level).unwrap();
            let wide = confidence_interval(&xs, level + 0.04).unwrap();
            prop_assert!(wide.0 <= narrow.0 + 1e-12 && narrow.1 <= wide.1 + 1e-12);
            let m = mean(&xs);
            prop_assert!(narrow.0 <= m && m <= narrow.1);
        }

        #[test]
        fn sample_size_monotone_in_power(d in 0.3..1.5f64) {
            let lo = sample_size(&PowerRequest { power: 0.7, ..req(d, 1) }).unwrap();
            let hi = sample_size(&PowerRequest { power: 0.9, ..req(d, 1) }).unwrap();
            prop_assert!(lo.per_group < hi.per_group);
        }
    }
}
