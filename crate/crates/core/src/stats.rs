//! Hypothesis tests with exact small-sample modes.
//!
//! The special functions (log-gamma, regularized incomplete beta and gamma)
//! are implemented here; quantiles are found by bisection.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("differences have zero variance")]
    DegenerateVariance,
}

/// Largest number of non-zero pairs for which the signed-rank test is exact.
pub const WILCOXON_EXACT_MAX: usize = 20;
/// Largest combined sample size for which the rank-sum test is exact.
pub const MANN_WHITNEY_EXACT_MAX: usize = 16;
/// Fewest non-zero pairs the signed-rank test accepts.
pub const WILCOXON_MIN_PAIRS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestKind {
    Binomial,
    ClopperPearson,
    Wilcoxon,
    MannWhitney,
    PairedT,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub test: TestKind,
    /// k for the binomial test, W+ for Wilcoxon, U for Mann–Whitney, t for
    /// the paired t-test.
    pub statistic: f64,
    /// Standard normal score where one is defined.
    pub z: Option<f64>,
    pub p_two_sided: f64,
    pub p_one_sided: Option<f64>,
    /// r = |Z|/√N for the rank tests, Cohen's d for the t-test.
    pub effect_size: Option<f64>,
    /// Observed proportion or mean difference.
    pub estimate: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub df: Option<f64>,
    pub n: usize,
    pub method: Method,
}

impl TestResult {
    fn new(test: TestKind, statistic: f64, p_two_sided: f64, n: usize, method: Method) -> Self {
        Self {
            test,
            statistic,
            z: None,
            p_two_sided,
            p_one_sided: None,
            effect_size: None,
            estimate: None,
            ci_low: None,
            ci_high: None,
            df: None,
            n,
            method,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("result serializes");
        s.push('\n');
        s
    }
}

// ---------------------------------------------------------------------------
// special functions

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0`.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut a = LANCZOS[0];
    let t = x + LANCZOS_G + 0.5;
    for (i, &c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + a.ln()
}

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

/// Continued fraction for the incomplete beta (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let (qab, qap, qam) = (a + b, a + 1.0, a - 1.0);
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..10_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h
}

/// Regularized incomplete beta `I_x(a, b)`.
pub fn incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let front = (a * x.ln() + b * (1.0 - x).ln() - ln_beta(a, b)).exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Inverts a non-decreasing function on `[lo, hi]` by bisection.
fn bisect(mut lo: f64, mut hi: f64, target: f64, f: impl Fn(f64) -> f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

/// Quantile of Beta(a, b).
pub fn beta_quantile(q: f64, a: f64, b: f64) -> f64 {
    bisect(0.0, 1.0, q, |x| incomplete_beta(x, a, b))
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn lower_regularized_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..10_000 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-17 {
                break;
            }
        }
        sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        1.0 - upper_gamma_cf(a, x)
    }
}

fn upper_gamma_cf(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..10_000 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Upper regularized gamma `Q(a, x) = 1 - P(a, x)`, accurate in the tail.
fn upper_regularized_gamma(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - lower_regularized_gamma(a, x)
    } else {
        upper_gamma_cf(a, x)
    }
}

pub fn erfc(x: f64) -> f64 {
    if x >= 0.0 {
        upper_regularized_gamma(0.5, x * x)
    } else {
        1.0 + lower_regularized_gamma(0.5, x * x)
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// CDF of Student's t with `df` degrees of freedom.
pub fn student_t_cdf(t: f64, df: f64) -> f64 {
    let tail = 0.5 * incomplete_beta(df / (df + t * t), 0.5 * df, 0.5);
    if t >= 0.0 {
        1.0 - tail
    } else {
        tail
    }
}

pub fn student_t_quantile(q: f64, df: f64) -> f64 {
    if q == 0.5 {
        return 0.0;
    }
    // widen until the root is bracketed
    let mut span = 1.0;
    while student_t_cdf(span, df) < q || student_t_cdf(-span, df) > q {
        span *= 2.0;
        if span > 1e12 {
            break;
        }
    }
    bisect(-span, span, q, |t| student_t_cdf(t, df))
}

// ---------------------------------------------------------------------------
// binomial

fn binomial_pmf(k: u64, n: u64, p: f64) -> f64 {
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    let (k, n) = (k as f64, n as f64);
    let ln_choose = ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0);
    (ln_choose + k * p.ln() + (n - k) * (1.0 - p).ln()).exp()
}

fn check_counts(k: u64, n: u64) -> Result<(), StatsError> {
    if n == 0 {
        return Err(StatsError::InvalidInput("n must be >= 1".into()));
    }
    if k > n {
        return Err(StatsError::InvalidInput(format!("k = {k} exceeds n = {n}")));
    }
    Ok(())
}

/// Exact Clopper–Pearson interval from Beta quantiles.
pub fn clopper_pearson_ci(k: u64, n: u64, confidence: f64) -> Result<(f64, f64), StatsError> {
    check_counts(k, n)?;
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(StatsError::InvalidInput(format!("confidence {confidence} not in (0, 1)")));
    }
    let alpha = 1.0 - confidence;
    let (kf, nf) = (k as f64, n as f64);
    let low = if k == 0 { 0.0 } else { beta_quantile(alpha / 2.0, kf, nf - kf + 1.0) };
    let high = if k == n { 1.0 } else { beta_quantile(1.0 - alpha / 2.0, kf + 1.0, nf - kf) };
    Ok((low, high))
}

/// Relative slack when collecting outcomes "no more likely" than the
/// observed one, so equal probabilities computed along different paths
/// still compare equal.
const MINLIKE_RELATIVE_SLACK: f64 = 1e-7;

/// Exact binomial test of `H0: p = p0`.
///
/// The two-sided p-value sums the probabilities of all outcomes no more
/// likely than the observed one. The one-sided p-value is the tail in the
/// direction of the observation. The 95% Clopper–Pearson interval is
/// attached.
pub fn exact_binomial_test(k: u64, n: u64, p0: f64) -> Result<TestResult, StatsError> {
    check_counts(k, n)?;
    if !(0.0..=1.0).contains(&p0) {
        return Err(StatsError::InvalidInput(format!("p0 = {p0} not in [0, 1]")));
    }
    let pmf: Vec<f64> = (0..=n).map(|i| binomial_pmf(i, n, p0)).collect();
    let observed = pmf[k as usize];
    let cutoff = observed * (1.0 + MINLIKE_RELATIVE_SLACK);
    let two = pmf.iter().filter(|&&p| p <= cutoff).sum::<f64>().min(1.0);
    let expected = n as f64 * p0;
    let one = if (k as f64) >= expected {
        pmf[k as usize..].iter().sum::<f64>()
    } else {
        pmf[..=k as usize].iter().sum::<f64>()
    }
    .min(1.0);
    let (lo, hi) = clopper_pearson_ci(k, n, 0.95)?;
    let mut r = TestResult::new(TestKind::Binomial, k as f64, two, n as usize, Method::Exact);
    r.p_one_sided = Some(one);
    r.estimate = Some(k as f64 / n as f64);
    r.ci_low = Some(lo);
    r.ci_high = Some(hi);
    Ok(r)
}

// ---------------------------------------------------------------------------
// rank tests

/// Average ranks (1-based) and the tie-group sizes.
pub fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            ranks[k] = avg;
        }
        if j > i {
            ties.push(j - i + 1);
        }
        i = j + 1;
    }
    (ranks, ties)
}

fn tie_sum(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

/// Tail probabilities `(P(X <= x), P(X >= x))` of an integer-valued null
/// distribution given as counts.
fn tails(counts: &[u64], x: usize) -> (f64, f64) {
    let total: u64 = counts.iter().sum();
    let lower: u64 = counts[..=x.min(counts.len() - 1)].iter().sum();
    let upper: u64 = counts[x.min(counts.len())..].iter().sum();
    (lower as f64 / total as f64, upper as f64 / total as f64)
}

/// Counts of subsets of `{1..n}` by element sum.
fn signed_rank_counts(n: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    let mut c = vec![0u64; max + 1];
    c[0] = 1;
    for r in 1..=n {
        for s in (r..=max).rev() {
            c[s] += c[s - r];
        }
    }
    c
}

/// Counts of `m`-subsets of `{1..n}` by element sum.
fn rank_sum_counts(n: usize, m: usize) -> Vec<u64> {
    let max = n * (n + 1) / 2;
    // table[j][s]: subsets of size j with sum s
    let mut table = vec![vec![0u64; max + 1]; m + 1];
    table[0][0] = 1;
    for r in 1..=n {
        for j in (1..=m.min(r)).rev() {
            for s in (r..=max).rev() {
                table[j][s] += table[j - 1][s - r];
            }
        }
    }
    table.swap_remove(m)
}

fn two_from_one(one: f64) -> f64 {
    (2.0 * one).min(1.0)
}

/// Wilcoxon signed-rank test on `b - a`.
///
/// Zero differences are dropped. The statistic is W+, the rank sum of the
/// positive differences. With at most [`WILCOXON_EXACT_MAX`] non-zero pairs
/// and no tied magnitudes the p-values come from the exact null
/// distribution; otherwise from the normal approximation with tie and
/// continuity corrections. `r = |Z|/√N` is reported either way.
pub fn wilcoxon_signed_rank(paired_a: &[f64], paired_b: &[f64]) -> Result<TestResult, StatsError> {
    if paired_a.len() != paired_b.len() {
        return Err(StatsError::InvalidInput(format!(
            "paired samples differ in length ({} vs {})",
            paired_a.len(),
            paired_b.len()
        )));
    }
    let diffs: Vec<f64> = paired_a
        .iter()
        .zip(paired_b)
        .map(|(a, b)| b - a)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite value".into()));
    }
    let n = diffs.len();
    if n < WILCOXON_MIN_PAIRS {
        return Err(StatsError::InsufficientData(format!(
            "{n} non-zero differences, need at least {WILCOXON_MIN_PAIRS}"
        )));
    }
    let mags: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&mags);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_sum(&ties) / 48.0;
    let diff = w_plus - mean;
    let z = if diff.abs() <= 0.5 || var <= 0.0 {
        0.0
    } else {
        (diff - 0.5 * diff.signum()) / var.sqrt()
    };

    let (one, method) = if n <= WILCOXON_EXACT_MAX && ties.is_empty() {
        // without ties W+ is an integer
        let (lo, hi) = tails(&signed_rank_counts(n), w_plus.round() as usize);
        (lo.min(hi), Method::Exact)
    } else {
        (normal_cdf(-z.abs()), Method::NormalApprox)
    };
    let mut r = TestResult::new(TestKind::Wilcoxon, w_plus, two_from_one(one), n, method);
    r.p_one_sided = Some(one.min(1.0));
    r.z = Some(z);
    r.effect_size = Some(z.abs() / nf.sqrt());
    Ok(r)
}

/// Mann–Whitney U test. The statistic is `U_a = R_a - n_a(n_a+1)/2`.
///
/// Exact when `n_a + n_b <=` [`MANN_WHITNEY_EXACT_MAX`] and there are no
/// ties, otherwise the tie-corrected normal approximation.
pub fn mann_whitney_u(group_a: &[f64], group_b: &[f64]) -> Result<TestResult, StatsError> {
    if group_a.is_empty() || group_b.is_empty() {
        return Err(StatsError::InsufficientData("both groups must be non-empty".into()));
    }
    let pooled: Vec<f64> = group_a.iter().chain(group_b).copied().collect();
    if pooled.iter().any(|v| !v.is_finite()) {
        return Err(StatsError::InvalidInput("non-finite value".into()));
    }
    let (na, nb) = (group_a.len(), group_b.len());
    let n = na + nb;
    let (ranks, ties) = average_ranks(&pooled);
    let r_a: f64 = ranks[..na].iter().sum();
    let (naf, nbf, nf) = (na as f64, nb as f64, n as f64);
    let u = r_a - naf * (naf + 1.0) / 2.0;

    let mean = naf * nbf / 2.0;
    let var = naf * nbf / 12.0 * ((nf + 1.0) - tie_sum(&ties) / (nf * (nf - 1.0)).max(1.0));
    let z = if var > 0.0 { (u - mean) / var.sqrt() } else { 0.0 };

    let (one, method) = if n <= MANN_WHITNEY_EXACT_MAX && ties.is_empty() {
        // distribution of the rank sum of group a; U = R_a - offset
        let counts = rank_sum_counts(n, na);
        let (lo, hi) = tails(&counts, r_a.round() as usize);
        (lo.min(hi), Method::Exact)
    } else {
        (normal_cdf(-z.abs()), Method::NormalApprox)
    };
    let mut r = TestResult::new(TestKind::MannWhitney, u, two_from_one(one), n, method);
    r.p_one_sided = Some(one.min(1.0));
    r.z = Some(z);
    r.effect_size = Some(z.abs() / nf.sqrt());
    Ok(r)
}

/// Paired t-test on `a - b` with a 95% interval for the mean difference.
pub fn paired_t_test(paired_a: &[f64], paired_b: &[f64]) -> Result<TestResult, StatsError> {
    if paired_a.len() != paired_b.len() {
        return Err(StatsError::InvalidInput(format!(
            "paired samples differ in length ({} vs {})",
            paired_a.len(),
            paired_b.len()
        )));
    }
    let n = paired_a.len();
    if n < 2 {
        return Err(StatsError::InsufficientData("need at least two pairs".into()));
    }
    let d: Vec<f64> = paired_a.iter().zip(paired_b).map(|(a, b)| a - b).collect();
    let nf = n as f64;
    let mean = d.iter().sum::<f64>() / nf;
    let var = d.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0);
    if !(var > 0.0) {
        return Err(StatsError::DegenerateVariance);
    }
    let sd = var.sqrt();
    let se = sd / nf.sqrt();
    let t = mean / se;
    let df = nf - 1.0;
    let two = incomplete_beta(df / (df + t * t), 0.5 * df, 0.5).min(1.0);
    let crit = student_t_quantile(0.975, df);
    let mut r = TestResult::new(TestKind::PairedT, t, two, n, Method::Exact);
    r.p_one_sided = Some(0.5 * two);
    r.effect_size = Some(mean / sd);
    r.estimate = Some(mean);
    r.ci_low = Some(mean - crit * se);
    r.ci_high = Some(mean + crit * se);
    r.df = Some(df);
    Ok(r)
}
