//! The limiting chain `xi_i = (xi_{i-1} + X_i) e^{-eta_i}` and the `W_n` law.
//!
//! `W_n` has `P(W_n = k) ∝ k C(2n, n - k)` on `0..=n`. Conditioned on
//! `W_n >= k + 1` it is exactly the law of `R_{i+1}` from state `(k, n)`,
//! and `W_n^2 / n` tends to `Exp(1)`, which is where the `Exp(1)` marginal of
//! the limit chain comes from.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Float, One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::export::{fmt_f64, CsvTable};
use crate::numeric::{big_unsigned_ratio_to_f64, binomial_row, ln_binomial};
use crate::ra_chain::{ChainState, RaPath};
use crate::rng::exp1;
use crate::{Error, Result};

/// One step of the limit chain.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitState<F> {
    pub xi: F,
    pub eta: F,
    /// `xi_{i-1} + X_i`.
    pub z: F,
}

fn cast<F: Float>(v: f64) -> F {
    F::from(v).expect("f64 converts to every Float")
}

/// Draws `X ~ Exp(1)` then `eta ~ Exp(1)`.
pub fn step_limit<F: Float, R: RngCore + ?Sized>(xi_prev: F, rng: &mut R) -> LimitState<F> {
    let x = cast::<F>(exp1(rng));
    let eta = cast::<F>(exp1(rng));
    let z = xi_prev + x;
    LimitState { xi: z * (-eta).exp(), eta, z }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LimitStart {
    Fixed(f64),
    /// `xi_0 ~ Exp(1)`.
    Stationary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitPath<F> {
    pub xi0: F,
    pub states: Vec<LimitState<F>>,
}

impl<F: Float> LimitPath<F> {
    /// CSV `i,xi,eta,z` for `i = 1..`, with `xi_0` in a leading comment.
    pub fn to_csv(&self) -> CsvTable {
        let f = |v: F| fmt_f64(v.to_f64().unwrap_or(f64::NAN));
        let mut t = CsvTable::with_comment_and_header(&format!("xi0={}", f(self.xi0)), &["i", "xi", "eta", "z"]);
        for (i, s) in self.states.iter().enumerate() {
            t.row([(i + 1).to_string(), f(s.xi), f(s.eta), f(s.z)]);
        }
        t
    }
}

pub fn sample_limit_path<F: Float, R: RngCore + ?Sized>(start: LimitStart, steps: usize, rng: &mut R) -> Result<LimitPath<F>> {
    if steps == 0 {
        return Err(Error::InvalidArgument("steps must be >= 1".into()));
    }
    let xi0 = match start {
        LimitStart::Fixed(x) if x >= 0.0 && x.is_finite() => cast::<F>(x),
        LimitStart::Fixed(x) => return Err(Error::InvalidArgument(format!("xi_0 must be finite and >= 0, got {x}"))),
        LimitStart::Stationary => cast::<F>(exp1(rng)),
    };
    let mut states = Vec::with_capacity(steps);
    let mut xi = xi0;
    for _ in 0..steps {
        let s = step_limit(xi, rng);
        xi = s.xi;
        states.push(s);
    }
    Ok(LimitPath { xi0, states })
}

/// Largest `n` for which [`wn_pmf`] uses big-integer arithmetic.
pub const WN_EXACT_LIMIT: u64 = 10_000;

/// The law of `W_n`.
#[derive(Clone, Debug, PartialEq)]
pub struct WnLaw {
    pub n: u64,
    /// `pmf[k] = P(W_n = k)`, `k = 0..=n`.
    pub pmf: Vec<f64>,
    /// `1/c = sum_k k C(2n, n - k)` when computed exactly.
    pub normalizer: Option<BigUint>,
}

impl WnLaw {
    pub fn is_exact(&self) -> bool {
        self.normalizer.is_some()
    }

    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.pmf
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }
}

/// Exact for `n <= WN_EXACT_LIMIT`, log-gamma beyond.
pub fn wn_pmf(n: u64) -> Result<WnLaw> {
    if n == 0 {
        return Err(Error::InvalidArgument("n must be >= 1".into()));
    }
    if n <= WN_EXACT_LIMIT {
        Ok(wn_pmf_exact(n))
    } else {
        Ok(wn_pmf_log(n))
    }
}

pub fn wn_pmf_exact(n: u64) -> WnLaw {
    let weights = wn_weights(n);
    let total: BigUint = weights.iter().sum();
    let pmf = weights.iter().map(|w| big_unsigned_ratio_to_f64(w, &total)).collect();
    WnLaw { n, pmf, normalizer: Some(total) }
}

/// `ln P(W_n = k) = ln k + ln C(2n, n-k) - ln(n/2) - ln C(2n, n)`.
pub fn wn_pmf_log(n: u64) -> WnLaw {
    let nf = n as f64;
    let ln_norm = (nf / 2.0).ln() + ln_binomial(2.0 * nf, nf);
    let pmf = (0..=n)
        .map(|k| if k == 0 { 0.0 } else { ((k as f64).ln() + ln_binomial(2.0 * nf, nf - k as f64) - ln_norm).exp() })
        .collect();
    WnLaw { n, pmf, normalizer: None }
}

/// `k C(2n, n - k)` for `k = 0..=n`.
fn wn_weights(n: u64) -> Vec<BigUint> {
    let row = binomial_row(2 * n);
    (0..=n).map(|k| BigUint::from(k) * &row[(n - k) as usize]).collect()
}

/// Exact `P(W_n = k)` for all `k`.
pub fn wn_pmf_rational(n: u64) -> Vec<BigRational> {
    let weights = wn_weights(n);
    let total = BigInt::from(weights.iter().sum::<BigUint>());
    weights.into_iter().map(|w| BigRational::new(BigInt::from(w), total.clone())).collect()
}

/// Both sides of `sum_{k<=n} k C(2n, k) = n 2^{2n-1}`.
pub fn normalizer_identity(n: u64) -> (BigUint, BigUint) {
    let row = binomial_row(2 * n);
    let lhs: BigUint = (0..=n).map(|k| BigUint::from(k) * &row[k as usize]).sum();
    let rhs = BigUint::from(n) << (2 * n - 1) as usize;
    (lhs, rhs)
}

/// Exact `1/c` over its asymptotic form `sqrt(n)/(2 sqrt(pi)) 2^{2n}`.
pub fn normalizer_asymptotic_ratio(n: u64) -> f64 {
    normalizer_asymptotic_ratio_of(&wn_pmf_exact(n)).expect("exact law")
}

/// [`normalizer_asymptotic_ratio`] for a law already computed; `None` if
/// the law was not computed exactly.
pub fn normalizer_asymptotic_ratio_of(law: &WnLaw) -> Option<f64> {
    let n = law.n;
    let exact = law.normalizer.as_ref()?;
    let scaled = big_unsigned_ratio_to_f64(exact, &(BigUint::one() << (2 * n) as usize));
    Some(scaled / ((n as f64).sqrt() / (2.0 * std::f64::consts::PI.sqrt())))
}

/// One row of the local-limit comparison.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LocalLimitRow {
    pub s: f64,
    pub k: u64,
    pub exact: f64,
    pub approx: f64,
    pub rel_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LocalLimitReport {
    pub n: u64,
    pub rows: Vec<LocalLimitRow>,
    pub sup_rel_error: f64,
}

impl LocalLimitReport {
    /// CSV `s,exact_pmf,limit_approx,rel_error`.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::with_header(&["s", "exact_pmf", "limit_approx", "rel_error"]);
        for r in &self.rows {
            t.row([fmt_f64(r.s), fmt_f64(r.exact), fmt_f64(r.approx), fmt_f64(r.rel_error)]);
        }
        t
    }
}

/// `|P(W_n = floor(s sqrt n)) / (e^{-s^2} 2s / sqrt n) - 1|` over the grid.
/// Grid points with `floor(s sqrt n) = 0` are skipped.
pub fn wn_local_limit_error(n: u64, grid: &[f64]) -> Result<LocalLimitReport> {
    local_limit_error_of(&wn_pmf(n)?, grid)
}

pub fn local_limit_error_of(law: &WnLaw, grid: &[f64]) -> Result<LocalLimitReport> {
    let n = law.n;
    let root = (n as f64).sqrt();
    let mut rows = Vec::new();
    for &s in grid {
        if s.is_nan() || s <= 0.0 || !s.is_finite() {
            return Err(Error::InvalidArgument(format!("grid point {s} must be positive")));
        }
        let k = (s * root).floor();
        if k > n as f64 {
            return Err(Error::InvalidArgument(format!("floor(s sqrt n) = {k} exceeds n = {n}")));
        }
        let k = k as u64;
        if k == 0 {
            continue;
        }
        let exact = law.pmf[k as usize];
        let approx = (-s * s).exp() * 2.0 * s / root;
        rows.push(LocalLimitRow { s, k, exact, approx, rel_error: (exact / approx - 1.0).abs() });
    }
    let sup_rel_error = rows.iter().map(|r| r.rel_error).fold(0.0, f64::max);
    Ok(LocalLimitReport { n, rows, sup_rel_error })
}

/// Grid `s = lo, lo + step, ...` up to `hi` inclusive.
pub fn s_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let count = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=count).map(|i| lo + step * i as f64).collect()
}

/// Kolmogorov distance between the exact law of `W_n^2 / n` and `Exp(1)`.
pub fn wn_exp_ks_distance(n: u64) -> Result<f64> {
    Ok(exp_ks_distance_of(&wn_pmf(n)?))
}

pub fn exp_ks_distance_of(law: &WnLaw) -> f64 {
    let n = law.n;
    let mut below = 0.0;
    let mut d = 0.0f64;
    for (k, p) in law.pmf.iter().enumerate() {
        if *p == 0.0 && k == 0 {
            continue;
        }
        let v = (k * k) as f64 / n as f64;
        let g = -(-v).exp_m1();
        let at = below + p;
        d = d.max((below - g).abs()).max((at - g).abs());
        below = at;
    }
    d
}

/// `L(W_n | W_n >= k)` as exact probabilities for `j = k..=n`.
pub fn conditional_wn(n: u64, k: u64) -> Result<Vec<BigRational>> {
    if k > n {
        return Err(Error::EmptySupport(format!("W_{n} >= {k} is impossible")));
    }
    let weights = wn_weights(n);
    let kept = &weights[k as usize..];
    let total = BigInt::from(kept.iter().sum::<BigUint>());
    if total.is_zero() {
        return Err(Error::EmptySupport(format!("W_{n} >= {k} has no mass")));
    }
    Ok(kept.iter().map(|w| BigRational::new(BigInt::from(w.clone()), total.clone())).collect())
}

/// Floating version of [`conditional_wn`] from a precomputed law.
pub fn conditional_wn_f64(law: &WnLaw, k: u64) -> Result<Vec<f64>> {
    if k > law.n {
        return Err(Error::EmptySupport(format!("W_{} >= {k} is impossible", law.n)));
    }
    let kept = &law.pmf[k as usize..];
    let mass: f64 = kept.iter().sum();
    Ok(kept.iter().map(|p| p / mass).collect())
}

/// Rescaled chain observation at 0-based path index `i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Observation {
    pub i: usize,
    /// `R_i^2 / A_i`.
    pub xi: f64,
    /// `ln(A_i / A_{i-1})`.
    pub eta: f64,
}

/// `(R_i^2 / A_i, ln(A_i / A_{i-1}))` for path indices `i >= max(burn_in, 1)`.
pub fn rescaled_observables(path: &RaPath, burn_in: usize) -> Result<Vec<Observation>> {
    if path.len() <= burn_in + 1 {
        return Err(Error::InvalidArgument(format!("path of length {} too short for burn-in {burn_in}", path.len())));
    }
    let start = burn_in.max(1);
    Ok((start..path.len())
        .map(|i| {
            let (prev, cur) = (&path.states[i - 1], &path.states[i]);
            let r = cur.r();
            Observation { i, xi: r * r / cur.a(), eta: log_ratio(prev, cur) }
        })
        .collect())
}

/// `ln(A_cur / A_prev)` via `ln_1p` of the increment, exact in the integer
/// difference when both states are exact.
fn log_ratio(prev: &ChainState, cur: &ChainState) -> f64 {
    match (prev, cur) {
        (ChainState::Exact(p), ChainState::Exact(c)) => ((c.a - p.a) as f64 / p.a as f64).ln_1p(),
        _ => ((cur.a() - prev.a()) / prev.a()).ln_1p(),
    }
}

impl<F: Float> LimitState<F> {
    pub fn is_consistent(&self) -> bool {
        self.xi >= F::zero() && self.eta >= F::zero() && self.z >= F::zero()
    }
}
