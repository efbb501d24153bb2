//! The acceptance suite.
//!
//! Each criterion collects [`TestReport`]s and passes when all of them do.
//! Replicates run in parallel on per-chunk streams and are reduced in index
//! order, so reports are byte-identical for a given seed whatever the
//! thread count. Wall-clock times are kept out of the report.

use std::time::{Duration, Instant};

use num_rational::BigRational;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::aldous::StickField;
use crate::kingman::{build_pebls, reconstruct_from_pebls, simulate_kingman};
use crate::limit::{
    exp_ks_distance_of, local_limit_error_of, normalizer_asymptotic_ratio_of, normalizer_identity, rescaled_observables, s_grid,
    step_limit, wn_pmf_exact,
};
use crate::numeric::{compensated_sum, CompensatedSum};
use crate::ra_chain::{
    a_pmf, a_pmf_c, a_pmf_product, a_pmf_product_c, a_tail, a_tail_c, ln_r_pmf, ln_r_pmf_binomial, ln_r_tail, r_pmf,
    r_pmf_binomial, r_pmf_binomial_exact, r_pmf_table, r_tail, sample_a1, sample_a_next, sample_path, sample_r_next, step,
    urn_oracle_a, urn_oracle_r, ChainState, RaState, URN_A_MAX_C, URN_R_MAX_A,
};
use crate::rng::{exp1, stream, Stream};
use crate::stats::{
    chi2_gof, chi2_two_sample, correlation_with_se, empirical_pmf, ks_distance, ks_one_sample, ks_two_sample, mean_and_se,
    tv_distance, Reference, TestReport,
};
use crate::Result;

/// Draws per random stream when replicates are cheap.
const CHUNK: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Multiplies every Monte Carlo sample size; `1.0` is the full suite.
    pub scale: f64,
}

impl SuiteConfig {
    pub fn new(seed: u64) -> Self {
        Self { seed, scale: 1.0 }
    }

    fn size(&self, full: usize) -> usize {
        ((full as f64 * self.scale).ceil() as usize).max(1000.min(full))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionReport {
    pub id: u32,
    pub name: String,
    pub pass: bool,
    pub checks: Vec<TestReport>,
}

impl CriterionReport {
    pub fn to_json_compact(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    fn new(id: u32, name: &str, checks: Vec<TestReport>) -> Self {
        Self { id, name: name.to_string(), pass: checks.iter().all(|c| c.pass), checks }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub seed: u64,
    pub scale: f64,
    pub pass: bool,
    pub criteria: Vec<CriterionReport>,
}

impl SuiteReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

/// A criterion's runner and its time budget.
pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    pub budget: Duration,
    pub run: fn(&SuiteConfig) -> Result<CriterionReport>,
}

pub fn criteria() -> Vec<Criterion> {
    let min = |m: u64| Duration::from_secs(60 * m);
    vec![
        Criterion { id: 1, name: "first record arrival law", budget: min(2), run: first_record_law },
        Criterion { id: 2, name: "R transition exactness", budget: min(1), run: r_transition_exactness },
        Criterion { id: 3, name: "A transition exactness", budget: min(1), run: a_transition_exactness },
        Criterion { id: 4, name: "tail identities", budget: min(1), run: tail_identities },
        Criterion { id: 5, name: "sampler correctness", budget: min(2), run: sampler_correctness },
        Criterion { id: 6, name: "chain vs stick construction", budget: min(3), run: cross_route_agreement },
        Criterion { id: 7, name: "W_n law", budget: min(1), run: wn_suite },
        Criterion { id: 8, name: "limit chain stationarity", budget: min(2), run: limit_stationarity },
        Criterion { id: 9, name: "convergence to the limit chain", budget: min(3), run: convergence },
        Criterion { id: 10, name: "tightness diagnostic", budget: min(2), run: tightness },
        Criterion { id: 11, name: "construction equivalence", budget: min(2), run: construction_equivalence },
    ]
}

/// Runs criteria 1 to 11, returning the report and each criterion's
/// wall-clock time.
pub fn run_suite(config: &SuiteConfig) -> Result<(SuiteReport, Vec<Duration>)> {
    let mut reports = Vec::new();
    let mut times = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        reports.push((c.run)(config)?);
        times.push(start.elapsed());
    }
    let pass = reports.iter().all(|r| r.pass);
    Ok((SuiteReport { seed: config.seed, scale: config.scale, pass, criteria: reports }, times))
}

/// `total` draws of `draw`, in parallel over chunks with one stream each.
fn par_draws<T, F>(seed: u64, tag: &str, total: usize, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut Stream) -> T + Sync,
{
    let chunks = total.div_ceil(CHUNK);
    let parts: Vec<Vec<T>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = stream(seed, tag, c as u64);
            let len = CHUNK.min(total - c * CHUNK);
            (0..len).map(|_| draw(&mut rng)).collect()
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// `total` replicates, each with its own stream index.
fn par_replicates<T, F>(total: usize, job: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    (0..total as u64).into_par_iter().map(job).collect()
}

fn counts(values: impl IntoIterator<Item = usize>, bins: usize) -> Vec<u64> {
    let mut c = vec![0u64; bins];
    for v in values {
        c[v] += 1;
    }
    c
}

// --- 1 ---------------------------------------------------------------------

fn first_record_law(cfg: &SuiteConfig) -> Result<CriterionReport> {
    const CAP: u128 = 50;
    let n = cfg.size(1_000_000);
    // Bin i holds A_1 = i + 2 for i < 49; bin 49 holds A_1 > 50.
    let bin = |a: u128| if a > CAP { 49 } else { (a - 2) as usize };
    let chain = par_draws(cfg.seed, "c1-chain", n, |rng| bin(sample_a1(rng).a));
    let sticks = par_replicates(n, |i| {
        let mut field = StickField::new(cfg.seed ^ 0xa1d0, i);
        let out = field.identify_ra_bounded(1, CAP as u64).expect("identification");
        out.pairs.first().map_or(49, |p| bin(p.a))
    });
    let mut probs: Vec<f64> = (2..=CAP).map(|k| 2.0 / (k * (k + 1)) as f64).collect();
    probs.push(2.0 / (CAP + 1) as f64);
    let (cc, cs) = (counts(chain, 50), counts(sticks, 50));
    let tv = tv_distance(&empirical_pmf(&cc), &empirical_pmf(&cs));
    Ok(CriterionReport::new(1, "first record arrival law", vec![
        chi2_gof(&cc, &probs)?.with_seed(cfg.seed).with_param("source", "chain sampler"),
        chi2_gof(&cs, &probs)?.with_seed(cfg.seed).with_param("source", "stick identification"),
        TestReport::from_bound("tv chain vs sticks", tv, 0.005, vec![n, n]),
    ]))
}

// --- 2 ---------------------------------------------------------------------

/// States on a log grid up to `1e8`, with several `r` per `a`.
fn log_grid_states() -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for e in 4..=32 {
        let a = 10f64.powf(e as f64 / 4.0).round();
        for r in [1.0, a.sqrt().floor(), (4.0 * a).sqrt().floor(), (a / 2.0).floor()] {
            if r >= 1.0 && r < a {
                out.push((r, a));
            }
        }
    }
    out
}

/// Increments `x` at which to compare, within the support.
fn x_grid(r: f64, a: f64) -> Vec<f64> {
    let root = a.sqrt();
    let mut xs: Vec<f64> = [1.0, 2.0, 3.0, 0.25 * root, 0.5 * root, root, 2.0 * root, 4.0 * root, 8.0 * root, a - r]
        .iter()
        .map(|x| x.floor().max(1.0))
        .filter(|&x| x <= a - r)
        .collect();
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

// Below this a probability is no longer a normal double with full
// relative precision.
const LN_REPRESENTABLE: f64 = -700.0;

fn r_transition_exactness(_: &SuiteConfig) -> Result<CriterionReport> {
    let mut mismatches = 0;
    let mut checked = 0;
    for a in 2..=URN_R_MAX_A {
        for r in 1..a {
            let s = RaState::new(r, a)?;
            let oracle = urn_oracle_r(&s, URN_R_MAX_A)?;
            checked += 1;
            let closed: Vec<BigRational> = (1..=a - r).map(|x| r_pmf(&s, x)).collect();
            let binomial: Vec<BigRational> = (1..=a - r).map(|x| r_pmf_binomial_exact(&s, x)).collect();
            if oracle != closed || oracle != binomial {
                mismatches += 1;
            }
        }
    }
    let mut worst = 0.0f64;
    let mut points = 0;
    for (r, a) in log_grid_states() {
        for x in x_grid(r, a) {
            let p = ln_r_pmf(r, a, x);
            if p < LN_REPRESENTABLE {
                continue;
            }
            let b = ln_r_pmf_binomial(r, a, x);
            worst = worst.max((p - b).exp_m1().abs());
            points += 1;
        }
    }
    // Direct double-precision products on small states.
    for a in 2..=300u128 {
        for r in [1, a / 3, a - 1] {
            if r == 0 || r >= a {
                continue;
            }
            let s = RaState::new(r, a)?;
            for x in 1..=(a - r) {
                let p = r_pmf::<f64>(&s, x);
                if p > 1e-300 {
                    worst = worst.max((r_pmf_binomial::<f64>(&s, x) / p - 1.0).abs());
                    points += 1;
                }
            }
        }
    }
    Ok(CriterionReport::new(2, "R transition exactness", vec![
        TestReport::from_exact("urn oracle == closed forms, 1 <= r < a <= 12", mismatches, checked),
        TestReport::from_bound("product vs binomial form, max relative difference", worst, 1e-12, vec![points]),
    ]))
}

// --- 3 ---------------------------------------------------------------------

const Y_CUTOFF: u128 = 40;

fn a_transition_exactness(_: &SuiteConfig) -> Result<CriterionReport> {
    let mut mismatches = 0;
    let mut checked = 0;
    let mut compare = |s: &RaState, r_next: u128| -> Result<()> {
        let (pmf, rest) = urn_oracle_a(s, r_next, Y_CUTOFF, URN_A_MAX_C)?;
        let ok = pmf.iter().enumerate().all(|(i, p)| {
            let y = i as u128 + 1;
            *p == a_pmf::<BigRational>(s, r_next, y) && *p == a_pmf_product::<BigRational>(s, r_next, y)
        }) && rest == a_tail::<BigRational>(s, r_next, Y_CUTOFF + 1);
        checked += 1;
        if !ok {
            mismatches += 1;
        }
        Ok(())
    };
    // Every transition out of every state with a <= 30, then one state per
    // c = a + r_next up to the enumeration limit.
    for a in 2..=30u128 {
        for r in 1..a {
            for r_next in r + 1..=a {
                compare(&RaState::new(r, a)?, r_next)?;
            }
        }
    }
    for c in 4..=URN_A_MAX_C {
        let r_next = c / 2;
        compare(&RaState::new(r_next - 1, c - r_next)?, r_next)?;
    }
    let mut worst = 0.0f64;
    let mut points = 0;
    for e in 2..=32 {
        let c = 10f64.powf(e as f64 / 4.0).round() as u128;
        for y in [1u128, 2, 3, 10, 100, 1000] {
            let closed = a_pmf_c::<f64>(c, y);
            worst = worst.max((a_pmf_product_c::<f64>(c, y) / closed - 1.0).abs());
            points += 1;
        }
    }
    Ok(CriterionReport::new(3, "A transition exactness", vec![
        TestReport::from_exact("urn oracle == closed and product forms, a + r_next <= 1000", mismatches, checked)
            .with_param("y_cutoff", Y_CUTOFF as u64),
        TestReport::from_bound("closed vs product form, max relative difference", worst, 1e-12, vec![points]),
    ]))
}

// --- 4 ---------------------------------------------------------------------

fn tail_identities(_: &SuiteConfig) -> Result<CriterionReport> {
    // Exact arithmetic on small states.
    let mut mismatches = 0;
    let mut checked = 0;
    for a in 2..=URN_R_MAX_A {
        for r in 1..a {
            let s = RaState::new(r, a)?;
            let mut total = BigRational::from_integer(0.into());
            for x in 1..=a - r {
                let p: BigRational = r_pmf(&s, x);
                if r_tail::<BigRational>(&s, x) - r_tail::<BigRational>(&s, x + 1) != p {
                    mismatches += 1;
                }
                total += p;
                if total.clone() + r_tail::<BigRational>(&s, x + 1) != BigRational::from_integer(1.into()) {
                    mismatches += 1;
                }
                checked += 2;
            }
        }
    }
    // Double precision on the log grid. Probabilities compared absolutely.
    let mut worst_diff = 0.0f64;
    let mut worst_total = 0.0f64;
    let mut points = 0;
    for (r, a) in log_grid_states() {
        let xs = x_grid(r, a);
        for &x in &xs {
            let d = ln_r_tail(r, a, x).exp() - ln_r_tail(r, a, x + 1.0).exp();
            worst_diff = worst_diff.max((d - ln_r_pmf(r, a, x).exp()).abs());
            points += 1;
        }
        let x_max = *xs.iter().rfind(|&&x| x <= 8.0 * a.sqrt()).unwrap();
        let mut acc = CompensatedSum::new();
        let mut x = 1.0;
        while x <= x_max {
            acc.add(ln_r_pmf(r, a, x).exp());
            x += 1.0;
        }
        acc.add(ln_r_tail(r, a, x_max + 1.0).exp());
        worst_total = worst_total.max((acc.value() - 1.0).abs());
    }
    for e in 2..=32 {
        let c = 10f64.powf(e as f64 / 4.0).round() as u128;
        for y in [1u128, 2, 10, 100, 1000] {
            let d = a_tail_c::<f64>(c, y) - a_tail_c::<f64>(c, y + 1);
            worst_diff = worst_diff.max((d - a_pmf_c::<f64>(c, y)).abs());
            let total = compensated_sum((1..=y).map(|k| a_pmf_c::<f64>(c, k))) + a_tail_c::<f64>(c, y + 1);
            worst_total = worst_total.max((total - 1.0).abs());
            points += 1;
        }
    }
    Ok(CriterionReport::new(4, "tail identities", vec![
        TestReport::from_exact("exact tail differences and totals, a <= 12", mismatches, checked),
        TestReport::from_bound("tail difference vs pmf, max absolute error", worst_diff, 1e-12, vec![points]),
        TestReport::from_bound("sum of pmf plus residual tail, max |total - 1|", worst_total, 1e-12, vec![points]),
    ]))
}

// --- 5 ---------------------------------------------------------------------

fn sampler_correctness(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = cfg.size(1_000_000);
    let mut checks = Vec::new();
    for (r, a) in [(1u128, 3u128), (2, 7), (5, 40)] {
        let s = RaState::new(r, a)?;
        let draws = par_draws(cfg.seed, &format!("c5-r-{r}-{a}"), n, |rng| (sample_r_next(&s, rng) - r - 1) as usize);
        let c = counts(draws, (a - r) as usize);
        checks.push(chi2_gof(&c, &r_pmf_table(&s))?.with_seed(cfg.seed).with_param("state", format!("({r},{a})")));
    }
    const Y_BINS: u128 = 1000;
    for (r, a, r_next) in [(1u128, 2u128, 2u128), (1, 12, 8), (1, 60, 40)] {
        let s = RaState::new(r, a)?;
        let c = a + r_next;
        let draws = par_draws(cfg.seed, &format!("c5-a-{c}"), n, |rng| match sample_a_next(&s, r_next, rng) {
            ChainState::Exact(next) => ((next.a - a).min(Y_BINS + 1) - 1) as usize,
            ChainState::Continued { .. } => Y_BINS as usize,
        });
        let mut probs: Vec<f64> = (1..=Y_BINS).map(|y| a_pmf_c::<f64>(c, y)).collect();
        probs.push(a_tail_c::<f64>(c, Y_BINS + 1));
        checks.push(chi2_gof(&counts(draws, Y_BINS as usize + 1), &probs)?.with_seed(cfg.seed).with_param("c", c as u64));
    }
    Ok(CriterionReport::new(5, "sampler correctness", checks))
}

// --- 6 ---------------------------------------------------------------------

fn cross_route_agreement(cfg: &SuiteConfig) -> Result<CriterionReport> {
    const CAP: u128 = 50;
    let n = cfg.size(100_000);
    // Bins: (r, a) with 2 <= r < a <= CAP in (a, r) order, then overflow.
    let index = |r: u128, a: u128| ((a - 3) * (a - 2) / 2 + (r - 2)) as usize;
    let bins = index(CAP - 1, CAP) + 2;
    let overflow = bins - 1;
    let bin = |s: RaState| if s.a > CAP { overflow } else { index(s.r, s.a) };
    let chain = par_replicates(n, |i| {
        let mut rng = stream(cfg.seed, "c6-chain", i);
        let first = sample_a1(&mut rng);
        if first.a > CAP {
            return overflow;
        }
        match step(&ChainState::Exact(first), &mut rng) {
            ChainState::Exact(s) => bin(s),
            ChainState::Continued { .. } => overflow,
        }
    });
    let sticks = par_replicates(n, |i| {
        let mut field = StickField::new(cfg.seed ^ 0xc6, i);
        let out = field.identify_ra_bounded(2, CAP as u64).expect("identification");
        if out.truncated { overflow } else { bin(out.pairs[1]) }
    });
    let report = chi2_two_sample(&counts(chain, bins), &counts(sticks, bins))?;
    Ok(CriterionReport::new(6, "chain vs stick construction", vec![report.with_seed(cfg.seed).with_param("cap", CAP as u64)]))
}

// --- 7 ---------------------------------------------------------------------

fn wn_suite(_: &SuiteConfig) -> Result<CriterionReport> {
    let mismatches = (1..=200).filter(|&n| {
        let (lhs, rhs) = normalizer_identity(n);
        lhs != rhs
    });
    let identity = TestReport::from_exact("sum_k k C(2n,k) == n 2^(2n-1), n <= 200", mismatches.count(), 200);
    let law = wn_pmf_exact(10_000);
    let ratio = normalizer_asymptotic_ratio_of(&law).expect("exact law");
    let local = local_limit_error_of(&law, &s_grid(0.2, 2.0, 0.01))?;
    let ks = exp_ks_distance_of(&law);
    Ok(CriterionReport::new(7, "W_n law", vec![
        identity,
        TestReport::from_bound("|exact / asymptotic normalizer - 1| at n = 1e4", (ratio - 1.0).abs(), 0.01, vec![10_000]),
        TestReport::from_bound("local limit sup relative error, s in [0.2, 2], n = 1e4", local.sup_rel_error, 0.05, vec![10_000])
            .with_param("grid_points", local.rows.len()),
        TestReport::from_bound("exact KS distance W^2/n vs Exp(1), n = 1e4", ks, 0.02, vec![10_000]),
    ]))
}

// --- 8 ---------------------------------------------------------------------

fn limit_stationarity(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = cfg.size(1_000_000);
    let xi1 = par_draws(cfg.seed, "c8-stationary", n, |rng| {
        let xi0 = exp1(rng);
        step_limit(xi0, rng).xi
    });
    let mut checks = Vec::new();
    let mut factorial = 1.0;
    for k in 1..=4 {
        factorial *= k as f64;
        let scaled: Vec<f64> = xi1.iter().map(|x| x.powi(k) / factorial).collect();
        let (m, se) = mean_and_se(&scaled);
        checks.push(TestReport::from_z(format!("E[xi_1^{k}] / {k}!"), m, 1.0, se, 3.0, vec![n]).with_seed(cfg.seed));
    }
    checks.push(ks_one_sample(&xi1, &Reference::Exp1)?.with_seed(cfg.seed).with_param("variable", "xi_1"));
    for x in [0.0, 1.0, 5.0] {
        let next = par_draws(cfg.seed, &format!("c8-drift-{x}"), n, |rng| step_limit(x, rng).xi);
        let (m, se) = mean_and_se(&next);
        checks.push(TestReport::from_z(format!("E[xi_1 | xi_0 = {x}]"), m, (x + 1.0) / 2.0, se, 3.0, vec![n]).with_seed(cfg.seed));
    }
    Ok(CriterionReport::new(8, "limit chain stationarity", checks))
}

// --- 9 ---------------------------------------------------------------------

pub const CONVERGENCE_STEPS: usize = 30;
pub const CONVERGENCE_BURN_IN: usize = 25;

fn convergence(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = cfg.size(100_000);
    let observations = par_replicates(n, |i| {
        let mut rng = stream(cfg.seed, "c9-chain", i);
        let path = sample_path(ChainState::Exact(RaState { r: 1, a: 2 }), CONVERGENCE_STEPS, &mut rng);
        rescaled_observables(&path, CONVERGENCE_BURN_IN).expect("path long enough")
    });
    let mut checks = Vec::new();
    let width = observations[0].len();
    for j in 0..width {
        let i = observations[0][j].i;
        let xi: Vec<f64> = observations.iter().map(|o| o[j].xi).collect();
        let eta: Vec<f64> = observations.iter().map(|o| o[j].eta).collect();
        checks.push(TestReport::from_bound(format!("KS distance R^2/A vs Exp(1), path index {i}"), ks_distance(&xi, &Reference::Exp1)?, 0.02, vec![n]));
        checks.push(TestReport::from_bound(format!("KS distance ln(A_i/A_(i-1)) vs Exp(1), path index {i}"), ks_distance(&eta, &Reference::Exp1)?, 0.02, vec![n]));
    }
    let first: Vec<f64> = observations.iter().map(|o| o[0].xi).collect();
    let second: Vec<f64> = observations.iter().map(|o| o[1].xi).collect();
    let (rho_chain, se_chain) = correlation_with_se(&first, &second, 100);
    let limit_pairs = par_draws(cfg.seed, "c9-limit", n, |rng| {
        let xi0 = exp1(rng);
        (xi0, step_limit(xi0, rng).xi)
    });
    let (x0, x1): (Vec<f64>, Vec<f64>) = limit_pairs.into_iter().unzip();
    let (rho_limit, se_limit) = correlation_with_se(&x0, &x1, 100);
    let se = (se_chain * se_chain + se_limit * se_limit).sqrt();
    checks.push(
        TestReport::from_z("lag-1 correlation of R^2/A vs limit chain", rho_chain, rho_limit, se, 3.0, vec![n, n])
            .with_seed(cfg.seed)
            .with_param("limit_se", se_limit)
            .with_param("chain_se", se_chain),
    );
    Ok(CriterionReport::new(9, "convergence to the limit chain", checks))
}

// --- 10 --------------------------------------------------------------------

pub const TIGHTNESS_STEPS: usize = 30;

fn tightness(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = cfg.size(100_000);
    let ratios = par_replicates(n, |i| {
        let mut rng = stream(cfg.seed, "c10-chain", i);
        let init = ChainState::Exact(sample_a1(&mut rng));
        let path = sample_path(init, TIGHTNESS_STEPS - 1, &mut rng);
        path.states.iter().map(|s| s.r() / s.a().sqrt()).collect::<Vec<f64>>()
    });
    let checks = (0..TIGHTNESS_STEPS)
        .map(|i| {
            let column: Vec<f64> = ratios.iter().map(|r| r[i]).collect();
            let (m, se) = mean_and_se(&column);
            TestReport::from_bound(format!("E[R_{}/sqrt(A_{})]", i + 1, i + 1), m, 3.0, vec![n]).with_param("se", se)
        })
        .collect();
    Ok(CriterionReport::new(10, "tightness diagnostic", checks))
}

// --- 11 --------------------------------------------------------------------

fn construction_equivalence(cfg: &SuiteConfig) -> Result<CriterionReport> {
    let n = cfg.size(100_000);
    const SIZE: usize = 10;
    let direct = par_draws(cfg.seed, "c11-direct", n, |rng| simulate_kingman(SIZE, rng).and_then(|t| t.time_to_mrca()).expect("valid size"));
    let recursive = par_draws(cfg.seed, "c11-recursive", n, |rng| {
        build_pebls(SIZE, rng).and_then(|(_, t)| t.time_to_mrca()).expect("valid size")
    });
    let rebuilt = par_draws(cfg.seed, "c11-rebuilt", n, |rng| {
        let (pebls, _) = build_pebls(SIZE, rng).expect("valid size");
        reconstruct_from_pebls(&pebls, rng).and_then(|t| t.time_to_mrca()).expect("valid pebls")
    });
    let target = 2.0 * (1.0 - 1.0 / SIZE as f64);
    let mut checks = Vec::new();
    for (name, sample) in [("simulate", &direct), ("recursive", &recursive), ("rebuilt", &rebuilt)] {
        let (m, se) = mean_and_se(sample);
        checks.push(TestReport::from_z(format!("mean time to MRCA, {name}"), m, target, se, 3.0, vec![n]).with_seed(cfg.seed));
    }
    for (a, b, name) in [(&direct, &recursive, "simulate vs recursive"), (&direct, &rebuilt, "simulate vs rebuilt"), (&recursive, &rebuilt, "recursive vs rebuilt")] {
        checks.push(ks_two_sample(a, b)?.with_seed(cfg.seed).with_param("pair", name));
    }
    Ok(CriterionReport::new(11, "construction equivalence", checks))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_criteria_pass() {
        let cfg = SuiteConfig::new(1);
        for run in [r_transition_exactness, a_transition_exactness, tail_identities, wn_suite] {
            let report = run(&cfg).unwrap();
            assert!(report.pass, "{}", serde_json::to_string_pretty(&report).unwrap());
        }
    }

    #[test]
    fn reduced_suite_is_thread_count_invariant() {
        let cfg = SuiteConfig { seed: 5, scale: 0.01 };
        let run = |threads| {
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap().install(|| {
                let mut out = String::new();
                for c in [first_record_law, cross_route_agreement, convergence] {
                    out += &serde_json::to_string(&c(&cfg).unwrap()).unwrap();
                }
                out
            })
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn grid_helpers() {
        assert!(log_grid_states().iter().any(|&(_, a)| a == 1e8));
        assert_eq!(x_grid(1.0, 3.0), vec![1.0, 2.0]);
        assert_eq!(SuiteConfig { seed: 0, scale: 1e-9 }.size(1_000_000), 1000);
    }
}
