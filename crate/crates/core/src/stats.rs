//! Goodness-of-fit tests, summary statistics, and record extraction.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use statrs::function::gamma::gamma_ur;

use crate::{Error, Result};

/// Global significance level: a test passes when `p > ALPHA`.
pub const ALPHA: f64 = 0.001;

/// Outcome of one statistical check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test: String,
    pub statistic: f64,
    /// `None` for checks judged on the statistic alone (distances, bounds).
    pub p_value: Option<f64>,
    pub pass: bool,
    pub n: Vec<usize>,
    pub seed: Option<u64>,
    pub params: BTreeMap<String, Value>,
}

impl TestReport {
    /// A p-value test, passing when `p > alpha`.
    pub fn from_p_value(test: impl Into<String>, statistic: f64, p_value: f64, n: Vec<usize>, alpha: f64) -> Self {
        let p_value = p_value.clamp(0.0, 1.0);
        let mut params = BTreeMap::new();
        params.insert("alpha".to_string(), Value::from(alpha));
        Self { test: test.into(), statistic, p_value: Some(p_value), pass: p_value > alpha, n, seed: None, params }
    }

    /// A bound on a statistic, passing when `statistic <= bound`.
    pub fn from_bound(test: impl Into<String>, statistic: f64, bound: f64, n: Vec<usize>) -> Self {
        let mut params = BTreeMap::new();
        params.insert("bound".to_string(), Value::from(bound));
        Self { test: test.into(), statistic, p_value: None, pass: statistic <= bound, n, seed: None, params }
    }

    /// `|estimate - target| <= sigmas * se`, reported with the z-score as
    /// statistic.
    pub fn from_z(test: impl Into<String>, estimate: f64, target: f64, se: f64, sigmas: f64, n: Vec<usize>) -> Self {
        let z = if se > 0.0 { (estimate - target) / se } else if estimate == target { 0.0 } else { f64::INFINITY };
        let mut params = BTreeMap::new();
        params.insert("estimate".to_string(), Value::from(estimate));
        params.insert("target".to_string(), Value::from(target));
        params.insert("se".to_string(), Value::from(se));
        params.insert("sigmas".to_string(), Value::from(sigmas));
        Self { test: test.into(), statistic: z, p_value: None, pass: z.abs() <= sigmas, n, seed: None, params }
    }

    /// Exact comparison: passes when `mismatches == 0`.
    pub fn from_exact(test: impl Into<String>, mismatches: usize, checked: usize) -> Self {
        let mut params = BTreeMap::new();
        params.insert("checked".to_string(), Value::from(checked));
        Self {
            test: test.into(),
            statistic: mismatches as f64,
            p_value: None,
            pass: mismatches == 0,
            n: vec![checked],
            seed: None,
            params,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_param(mut self, key: &str, value: impl Into<Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }
}

/// Reference distributions for one-sample tests.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Reference {
    Exp1,
    Exponential { rate: f64 },
    /// `s + Exp(1)`.
    ShiftedExp1 { shift: f64 },
    Uniform01,
}

impl Reference {
    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            Reference::Exp1 => exp_cdf(x, 1.0),
            Reference::Exponential { rate } => exp_cdf(x, rate),
            Reference::ShiftedExp1 { shift } => exp_cdf(x - shift, 1.0),
            Reference::Uniform01 => x.clamp(0.0, 1.0),
        }
    }

    pub fn name(&self) -> String {
        match *self {
            Reference::Exp1 => "Exp(1)".into(),
            Reference::Exponential { rate } => format!("Exp({rate})"),
            Reference::ShiftedExp1 { shift } => format!("{shift}+Exp(1)"),
            Reference::Uniform01 => "U(0,1)".into(),
        }
    }
}

fn exp_cdf(x: f64, rate: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -(-rate * x).exp_m1()
    }
}

/// Survival function of the Kolmogorov distribution, `P(K > lambda)`,
/// from whichever of the two classical series converges fastest, each
/// truncated at 100 terms.
pub fn kolmogorov_survival(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        let y = (-std::f64::consts::PI.powi(2) / (8.0 * lambda * lambda)).exp();
        let mut series = 0.0;
        for j in 0..100 {
            let k = (2 * j + 1) as f64;
            let term = y.powf(k * k);
            series += term;
            if term < 1e-300 {
                break;
            }
        }
        (1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * series).clamp(0.0, 1.0)
    } else {
        let mut series = 0.0;
        for j in 1..=100 {
            let jf = j as f64;
            let term = (-2.0 * jf * jf * lambda * lambda).exp();
            series += if j % 2 == 1 { term } else { -term };
            if term < 1e-300 {
                break;
            }
        }
        (2.0 * series).clamp(0.0, 1.0)
    }
}

/// p-value for a KS distance at effective sample size `ne`, with Stephens'
/// small-sample correction.
pub fn ks_p_value(distance: f64, ne: f64) -> f64 {
    let root = ne.sqrt();
    kolmogorov_survival((root + 0.12 + 0.11 / root) * distance)
}

fn sorted(samples: &[f64]) -> Result<Vec<f64>> {
    if samples.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidInput("NaN sample".into()));
    }
    let mut v = samples.to_vec();
    v.sort_by(f64::total_cmp);
    Ok(v)
}

/// Sup distance between the empirical CDF of `samples` and `reference`.
pub fn ks_distance(samples: &[f64], reference: &Reference) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::InvalidInput("no samples".into()));
    }
    let xs = sorted(samples)?;
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = reference.cdf(x);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

/// One-sample Kolmogorov-Smirnov test.
pub fn ks_one_sample(samples: &[f64], reference: &Reference) -> Result<TestReport> {
    if samples.len() < 10 {
        return Err(Error::InvalidInput(format!("KS needs at least 10 samples, got {}", samples.len())));
    }
    let d = ks_distance(samples, reference)?;
    let p = ks_p_value(d, samples.len() as f64);
    Ok(TestReport::from_p_value(format!("ks vs {}", reference.name()), d, p, vec![samples.len()], ALPHA))
}

/// Two-sample Kolmogorov-Smirnov test.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<TestReport> {
    if x.len() < 10 || y.len() < 10 {
        return Err(Error::InvalidInput("two-sample KS needs at least 10 samples per side".into()));
    }
    let xs = sorted(x)?;
    let ys = sorted(y)?;
    let (n1, n2) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d = 0.0f64;
    while i < xs.len() && j < ys.len() {
        let v = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= v {
            i += 1;
        }
        while j < ys.len() && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n1 - j as f64 / n2).abs());
    }
    let p = ks_p_value(d, n1 * n2 / (n1 + n2));
    Ok(TestReport::from_p_value("ks two-sample", d, p, vec![xs.len(), ys.len()], ALPHA))
}

/// Pearson chi-square goodness of fit. Adjacent bins are merged left to
/// right until every merged bin expects at least 5 counts.
pub fn chi2_gof(counts: &[u64], probs: &[f64]) -> Result<TestReport> {
    if counts.len() != probs.len() {
        return Err(Error::DimensionMismatch { left: counts.len(), right: probs.len() });
    }
    let mass: f64 = probs.iter().sum();
    if (mass - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!("probabilities sum to {mass}")));
    }
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InvalidInput("no observations".into()));
    }
    let nf = total as f64;
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut obs, mut exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        obs += c as f64;
        exp += p * nf;
        if exp >= 5.0 {
            merged.push((obs, exp));
            obs = 0.0;
            exp = 0.0;
        }
    }
    if exp > 0.0 || obs > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += obs;
                last.1 += exp;
            }
            None => merged.push((obs, exp)),
        }
    }
    let statistic: f64 = merged.iter().map(|(o, e)| if *e > 0.0 { (o - e).powi(2) / e } else { 0.0 }).sum();
    let df = merged.len().saturating_sub(1);
    let p = chi2_survival(df, statistic);
    Ok(TestReport::from_p_value("chi2 goodness of fit", statistic, p, vec![total as usize], ALPHA)
        .with_param("bins", merged.len()))
}

/// Two-sample chi-square homogeneity test on binned counts. Adjacent bins
/// are merged until both samples expect at least 5 counts per bin.
pub fn chi2_two_sample(first: &[u64], second: &[u64]) -> Result<TestReport> {
    if first.len() != second.len() {
        return Err(Error::DimensionMismatch { left: first.len(), right: second.len() });
    }
    let (n1, n2): (u64, u64) = (first.iter().sum(), second.iter().sum());
    if n1 == 0 || n2 == 0 {
        return Err(Error::InvalidInput("both samples need observations".into()));
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    let needed = 5.0 * (f1 + f2) / f1.min(f2);
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let (mut a, mut b) = (0.0, 0.0);
    for (&x, &y) in first.iter().zip(second) {
        a += x as f64;
        b += y as f64;
        if a + b >= needed {
            merged.push((a, b));
            a = 0.0;
            b = 0.0;
        }
    }
    if a + b > 0.0 {
        match merged.last_mut() {
            Some(last) => {
                last.0 += a;
                last.1 += b;
            }
            None => merged.push((a, b)),
        }
    }
    let (s12, s21) = ((f2 / f1).sqrt(), (f1 / f2).sqrt());
    let statistic: f64 = merged.iter().map(|(a, b)| (s12 * a - s21 * b).powi(2) / (a + b)).sum();
    let df = merged.len().saturating_sub(1);
    let p = chi2_survival(df, statistic);
    Ok(TestReport::from_p_value("chi2 two-sample", statistic, p, vec![n1 as usize, n2 as usize], ALPHA)
        .with_param("bins", merged.len()))
}

/// Half the L1 distance between two pmfs; the shorter is padded with zeros.
pub fn tv_distance(p: &[f64], q: &[f64]) -> f64 {
    let len = p.len().max(q.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(p, i) - at(q, i)).abs()).sum::<f64>()
}

pub fn empirical_pmf(counts: &[u64]) -> Vec<f64> {
    let total: u64 = counts.iter().sum();
    counts.iter().map(|&c| c as f64 / total.max(1) as f64).collect()
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Pearson correlation.
pub fn correlation(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    sxy / (sxx * syy).sqrt()
}

/// Correlation with a delete-one-block jackknife standard error.
pub fn correlation_with_se(x: &[f64], y: &[f64], blocks: usize) -> (f64, f64) {
    let n = x.len();
    let blocks = blocks.clamp(2, n);
    let full = correlation(x, y);
    let size = n / blocks;
    let mut pseudo = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let (lo, hi) = (b * size, if b + 1 == blocks { n } else { (b + 1) * size });
        let xs: Vec<f64> = x[..lo].iter().chain(&x[hi..]).copied().collect();
        let ys: Vec<f64> = y[..lo].iter().chain(&y[hi..]).copied().collect();
        pseudo.push(correlation(&xs, &ys));
    }
    let mean = pseudo.iter().sum::<f64>() / blocks as f64;
    let g = blocks as f64;
    let var = (g - 1.0) / g * pseudo.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    (full, var.sqrt())
}

/// Record pairs read off a finite lineage-length prefix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Records {
    /// `(R_i, A_i)` in order.
    pub pairs: Vec<(u64, u64)>,
    /// Number of leading pairs certified unaffected by truncation.
    pub valid: usize,
}

impl Records {
    pub fn valid_pairs(&self) -> &[(u64, u64)] {
        &self.pairs[..self.valid]
    }
}

/// Default truncation factor for rank-blind data: pairs with
/// `A_i <= N / gamma` are trusted.
pub const DEFAULT_HORIZON_FACTOR: f64 = 100.0;

/// Record pairs from values `L_2..L_N` (`values[0]` belongs to individual 2).
///
/// `A_i` are the positions whose value beats every later value, in order;
/// `R_i` is the rank (1 = largest) of that value among all observed values.
/// Without rank ground truth the valid prefix is the heuristic
/// `A_i <= N / gamma`.
pub fn extract_records(values: &[f64], gamma: f64) -> Result<Records> {
    let pairs = record_pairs(values)?;
    let n = (values.len() + 1) as f64;
    let valid = pairs.iter().take_while(|(_, a)| (*a as f64) <= n / gamma).count();
    Ok(Records { pairs, valid })
}

/// Upper tail of chi-square with `df` degrees of freedom.
fn chi2_survival(df: usize, statistic: f64) -> f64 {
    if df == 0 || statistic <= 0.0 {
        1.0
    } else {
        gamma_ur(df as f64 / 2.0, statistic / 2.0)
    }
}

/// Record pairs with a certified horizon, given each observed individual's
/// global rank (`ranks[0]` for individual 2). Pair `i` is valid when the
/// observed global ranks cover `1..=R_{i+1}`.
pub fn extract_records_with_ranks(values: &[f64], ranks: &[u64]) -> Result<Records> {
    if values.len() != ranks.len() {
        return Err(Error::DimensionMismatch { left: values.len(), right: ranks.len() });
    }
    let pairs = record_pairs(values)?;
    let mut attained = vec![false; values.len() + 2];
    for &r in ranks {
        if (r as usize) < attained.len() {
            attained[r as usize] = true;
        }
    }
    let covered = attained.iter().skip(1).take_while(|&&b| b).count() as u64;
    let valid = pairs.windows(2).take_while(|w| w[1].0 <= covered).count();
    Ok(Records { pairs, valid })
}

fn record_pairs(values: &[f64]) -> Result<Vec<(u64, u64)>> {
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("NaN value".into()));
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[j].total_cmp(&values[i]));
    if order.windows(2).any(|w| values[w[0]] == values[w[1]]) {
        return Err(Error::InvalidInput("tied values".into()));
    }
    let mut rank = vec![0u64; values.len()];
    for (r, &i) in order.iter().enumerate() {
        rank[i] = r as u64 + 1;
    }
    let mut pairs = Vec::new();
    let mut best = f64::NEG_INFINITY;
    for i in (0..values.len()).rev() {
        if values[i] > best {
            best = values[i];
            pairs.push((rank[i], i as u64 + 2));
        }
    }
    pairs.reverse();
    Ok(pairs)
}
