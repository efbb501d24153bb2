//! The `(R, A)` record chain: transition laws, exact samplers and the urn
//! oracles that reproduce the laws by enumeration.
//!
//! From state `(r, a)` the chain moves to `r' = r + x` with
//!
//! ```text
//! P(x) = (2r + 2x)/(a + r + x) * prod_{k=1}^{x-1} (a - r - k)/(a + r + k),   1 <= x <= a - r,
//! ```
//!
//! and then to `a' = a + y` with, for `c = a + r'`,
//!
//! ```text
//! P(y) = c / ((c + y - 1)(c + y)),   y >= 1.
//! ```

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::export::{fmt_f64, CsvTable};
use crate::numeric::{artanh_sum, binomial_big, ln_record_tail};
use crate::rng::{open_unit, open_unit_index, UNIT_SCALE};
use crate::{Error, Result, Scalar};

/// Largest `a` for which the R sampler walks the tail sequentially.
pub const SEQUENTIAL_LIMIT: u128 = 1_000_000;

/// One integer-exact state of the chain.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct RaState {
    pub r: u128,
    pub a: u128,
}

impl RaState {
    /// Any `a > r`. The transition formulas also make sense for `r = 0`,
    /// which the chain itself never visits.
    pub fn new(r: u128, a: u128) -> Result<Self> {
        if a <= r {
            return Err(Error::InvalidArgument(format!("need a > r, got r={r}, a={a}")));
        }
        Ok(Self { r, a })
    }

    /// True for states the chain can actually occupy.
    pub fn is_chain_state(&self) -> bool {
        self.r >= 1 && self.a >= 2 && self.a > self.r
    }

    /// Largest possible increment of `R`.
    pub fn r_support(&self) -> u128 {
        self.a - self.r
    }
}

/// A chain state, either exact or, once `A` outgrows `u128`, carried on in
/// double precision.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ChainState {
    Exact(RaState),
    Continued { r: f64, a: f64 },
}

impl ChainState {
    pub fn exact(r: u128, a: u128) -> Result<Self> {
        Ok(ChainState::Exact(RaState::new(r, a)?))
    }

    pub fn r(&self) -> f64 {
        match self {
            ChainState::Exact(s) => s.r as f64,
            ChainState::Continued { r, .. } => *r,
        }
    }

    pub fn a(&self) -> f64 {
        match self {
            ChainState::Exact(s) => s.a as f64,
            ChainState::Continued { a, .. } => *a,
        }
    }

    pub fn ln_a(&self) -> f64 {
        self.a().ln()
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ChainState::Exact(_))
    }

    pub fn as_exact(&self) -> Option<RaState> {
        match self {
            ChainState::Exact(s) => Some(*s),
            ChainState::Continued { .. } => None,
        }
    }

    pub fn fmt_r(&self) -> String {
        match self {
            ChainState::Exact(s) => s.r.to_string(),
            ChainState::Continued { r, .. } => fmt_f64(*r),
        }
    }

    pub fn fmt_a(&self) -> String {
        match self {
            ChainState::Exact(s) => s.a.to_string(),
            ChainState::Continued { a, .. } => fmt_f64(*a),
        }
    }
}

impl From<RaState> for ChainState {
    fn from(s: RaState) -> Self {
        ChainState::Exact(s)
    }
}

/// A finite path of the chain, initial state included.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaPath {
    pub states: Vec<ChainState>,
}

impl RaPath {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Index of the first state in floating continuation, if any.
    pub fn first_continued(&self) -> Option<usize> {
        self.states.iter().position(|s| !s.is_exact())
    }

    /// Checks `a - r >= 1` on exact states and strict increase of both
    /// coordinates.
    pub fn check(&self) -> Result<()> {
        for s in &self.states {
            if let ChainState::Exact(e) = s {
                if e.a <= e.r {
                    return Err(Error::InvalidState(format!("a - r < 1 at {e:?}")));
                }
            }
        }
        for w in self.states.windows(2) {
            let increasing = match (w[0], w[1]) {
                (ChainState::Exact(p), ChainState::Exact(q)) => p.r < q.r && p.a < q.a,
                (p, q) => p.r() <= q.r() && p.a() <= q.a(),
            };
            if !increasing {
                return Err(Error::InvalidState(format!("not increasing: {:?} -> {:?}", w[0], w[1])));
            }
        }
        Ok(())
    }

    /// CSV `i,R,A,lnA`, 1-based.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::with_header(&["i", "R", "A", "lnA"]);
        for (i, s) in self.states.iter().enumerate() {
            t.row([(i + 1).to_string(), s.fmt_r(), s.fmt_a(), fmt_f64(s.ln_a())]);
        }
        t
    }
}

// ---------------------------------------------------------------------------
// R law
// ---------------------------------------------------------------------------

/// `P(R' = r + x | r, a)` in product form.
pub fn r_pmf<T: Scalar>(state: &RaState, x: u128) -> T {
    let (r, a) = (state.r, state.a);
    if x < 1 || x > state.r_support() {
        return T::zero();
    }
    let mut prod = T::one();
    for k in 1..x {
        prod = prod * T::ratio(a - r - k, a + r + k);
    }
    T::ratio(2 * r + 2 * x, a + r + x) * prod
}

/// The same law through the binomial ratio
/// `(2r + 2x)/(a + r + 1) * C(2a, a - r - x) / C(2a, a - r - 1)`,
/// with the binomial ratio expanded as `prod_{k=1}^{x-1} (a - r - k)/(a + r + k + 1)`.
pub fn r_pmf_binomial<T: Scalar>(state: &RaState, x: u128) -> T {
    let (r, a) = (state.r, state.a);
    if x < 1 || x > state.r_support() {
        return T::zero();
    }
    let mut ratio = T::one();
    for k in 1..x {
        ratio = ratio * T::ratio(a - r - k, a + r + k + 1);
    }
    T::ratio(2 * r + 2 * x, a + r + 1) * ratio
}

/// Binomial form with the coefficients computed as big integers.
pub fn r_pmf_binomial_exact(state: &RaState, x: u128) -> BigRational {
    let (r, a) = (state.r as u64, state.a as u64);
    if x < 1 || x > state.r_support() {
        return BigRational::zero();
    }
    let x = x as u64;
    let num = BigInt::from(2 * r + 2 * x) * BigInt::from(binomial_big(2 * a, a - r - x));
    let den = BigInt::from(a + r + 1) * BigInt::from(binomial_big(2 * a, a - r - 1));
    BigRational::new(num, den)
}

/// `P(R' >= r + x | r, a) = prod_{j=r+1}^{r+x-1} (a - j)/(a + j)`.
pub fn r_tail<T: Scalar>(state: &RaState, x: u128) -> T {
    let (r, a) = (state.r, state.a);
    if x <= 1 {
        return T::one();
    }
    if x > state.r_support() {
        return T::zero();
    }
    let mut prod = T::one();
    for j in r + 1..r + x {
        prod = prod * T::ratio(a - j, a + j);
    }
    prod
}

/// `C(2a - 1, a - r - x) / C(2a - 1, a - r - 1)` with big-integer binomials.
pub fn r_tail_binomial_exact(state: &RaState, x: u128) -> BigRational {
    let (r, a) = (state.r as u64, state.a as u64);
    if x <= 1 {
        return BigRational::one();
    }
    if x > state.r_support() {
        return BigRational::zero();
    }
    let x = x as u64;
    BigRational::new(
        BigInt::from(binomial_big(2 * a - 1, a - r - x)),
        BigInt::from(binomial_big(2 * a - 1, a - r - 1)),
    )
}

/// `ln` of the product form, O(1) in `x`. Real arguments so that
/// continued states can use it.
pub fn ln_r_pmf(r: f64, a: f64, x: f64) -> f64 {
    if x < 1.0 || x > a - r {
        return f64::NEG_INFINITY;
    }
    (2.0 * r + 2.0 * x).ln() - (a + r + x).ln() + ln_record_tail(r, a, x)
}

/// `ln` of the binomial form. Each binomial-ratio factor is
/// `(a' - j)/(a' + j)` with `a' = a + 1/2` and `j = r + k + 1/2`, so its log
/// is `-2 artanh(j / a')`.
pub fn ln_r_pmf_binomial(r: f64, a: f64, x: f64) -> f64 {
    if x < 1.0 || x > a - r {
        return f64::NEG_INFINITY;
    }
    let ln_ratio = if x <= 1.0 { 0.0 } else { -2.0 * artanh_sum(r + 1.5, r + x - 0.5, a + 0.5) };
    (2.0 * r + 2.0 * x).ln() - (a + r + 1.0).ln() + ln_ratio
}

pub fn ln_r_tail(r: f64, a: f64, x: f64) -> f64 {
    ln_record_tail(r, a, x)
}

/// The whole R law in double precision, `pmf[x - 1] = P(x)`.
pub fn r_pmf_table(state: &RaState) -> Vec<f64> {
    let (r, a) = (state.r as f64, state.a as f64);
    let support = state.r_support() as usize;
    let mut out = Vec::with_capacity(support);
    let mut tail = 1.0;
    for x in 1..=support {
        let xf = x as f64;
        out.push(tail * ((2.0 * r + 2.0 * xf) / (a + r + xf)));
        tail *= (a - r - xf) / (a + r + xf);
    }
    out
}

// ---------------------------------------------------------------------------
// A law
// ---------------------------------------------------------------------------

/// `c / ((c + y - 1)(c + y))` with `c = a + r_next`.
pub fn a_pmf_c<T: Scalar>(c: u128, y: u128) -> T {
    if y < 1 {
        return T::zero();
    }
    T::from_count(c) / (T::from_count(c + y - 1) * T::from_count(c + y))
}

/// Product form `1/(c + y) * prod_{k=1}^{y-1} (c + k - 1)/(c + k)`.
pub fn a_pmf_product_c<T: Scalar>(c: u128, y: u128) -> T {
    if y < 1 {
        return T::zero();
    }
    let mut prod = T::one();
    for k in 1..y {
        prod = prod * T::ratio(c + k - 1, c + k);
    }
    prod / T::from_count(c + y)
}

/// `P(A' - a >= y) = c / (c + y - 1)`.
pub fn a_tail_c<T: Scalar>(c: u128, y: u128) -> T {
    if y <= 1 {
        return T::one();
    }
    T::ratio(c, c + y - 1)
}

/// `P(A' = a + y | a, R' = r_next)`; zero unless `r < r_next <= a`.
pub fn a_pmf<T: Scalar>(state: &RaState, r_next: u128, y: u128) -> T {
    if !valid_r_next(state, r_next) {
        return T::zero();
    }
    a_pmf_c(state.a + r_next, y)
}

pub fn a_pmf_product<T: Scalar>(state: &RaState, r_next: u128, y: u128) -> T {
    if !valid_r_next(state, r_next) {
        return T::zero();
    }
    a_pmf_product_c(state.a + r_next, y)
}

pub fn a_tail<T: Scalar>(state: &RaState, r_next: u128, y: u128) -> T {
    if !valid_r_next(state, r_next) {
        return T::zero();
    }
    a_tail_c(state.a + r_next, y)
}

fn valid_r_next(state: &RaState, r_next: u128) -> bool {
    state.r < r_next && r_next <= state.a
}

// ---------------------------------------------------------------------------
// Samplers
// ---------------------------------------------------------------------------

/// `A_1` from the open-unit index `k` (`u = k 2^-53`): `floor(2 / u)`.
pub fn a1_from_index(k: u64) -> u128 {
    (2 * u128::from(UNIT_SCALE)) / u128::from(k)
}

/// First state `(1, A_1)` with `P(A_1 = n) = 2/(n(n+1))`.
pub fn sample_a1<R: RngCore + ?Sized>(rng: &mut R) -> RaState {
    RaState { r: 1, a: a1_from_index(open_unit_index(rng)) }
}

/// Smallest `x` with `P(R' >= r + x + 1) <= u`, i.e. the inverse CDF of the
/// R increment at `u`.
pub fn r_increment_from_unit(state: &RaState, u: f64) -> u128 {
    let support = state.r_support();
    if state.a <= SEQUENTIAL_LIMIT {
        let (r, a) = (state.r as f64, state.a as f64);
        let mut tail = 1.0;
        for x in 1..support {
            let xf = x as f64;
            tail *= (a - r - xf) / (a + r + xf);
            if tail <= u {
                return x;
            }
        }
        return support;
    }
    let (r, a) = (state.r as f64, state.a as f64);
    let ln_u = u.ln();
    let done = |x: u128| x >= support || ln_record_tail(r, a, (x + 1) as f64) <= ln_u;
    let (mut lo, mut hi) = (0u128, 1u128);
    while !done(hi) {
        lo = hi;
        hi = (hi * 2).min(support);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if done(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}

/// `R_{i+1}` given an exact state.
pub fn sample_r_next<R: RngCore + ?Sized>(state: &RaState, rng: &mut R) -> u128 {
    state.r + r_increment_from_unit(state, open_unit(rng))
}

fn r_increment_continued(r: f64, a: f64, u: f64) -> f64 {
    let support = (a - r).floor().max(1.0);
    let ln_u = u.ln();
    let done = |x: f64| x >= support || ln_record_tail(r, a, x + 1.0) <= ln_u;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while !done(hi) {
        lo = hi;
        hi = (hi * 2.0).min(support);
    }
    loop {
        let mid = ((lo + hi) / 2.0).floor();
        if hi - lo <= 1.0 || mid <= lo || mid >= hi {
            return hi;
        }
        if done(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
}

/// `A` increment `1 + floor(c (2^53 - k) / k)` for open-unit index `k`,
/// or `None` if it does not fit in `u128`.
pub fn a_increment_from_index(c: u128, k: u64) -> Option<u128> {
    let num = c.checked_mul(u128::from(UNIT_SCALE - k))?;
    (num / u128::from(k)).checked_add(1)
}

/// `A_{i+1}` given the state and `R_{i+1}`, returned as the next chain state.
/// Switches to floating continuation if `A_{i+1}` overflows `u128`.
pub fn sample_a_next<R: RngCore + ?Sized>(state: &RaState, r_next: u128, rng: &mut R) -> ChainState {
    let k = open_unit_index(rng);
    let exact = state
        .a
        .checked_add(r_next)
        .and_then(|c| a_increment_from_index(c, k))
        .and_then(|y| state.a.checked_add(y));
    match exact {
        Some(a) => ChainState::Exact(RaState { r: r_next, a }),
        None => {
            let c = state.a as f64 + r_next as f64;
            let y = (c * ((UNIT_SCALE - k) as f64) / k as f64).floor() + 1.0;
            ChainState::Continued { r: r_next as f64, a: state.a as f64 + y }
        }
    }
}

/// One transition: `R` first, then `A`.
pub fn step<R: RngCore + ?Sized>(state: &ChainState, rng: &mut R) -> ChainState {
    match state {
        ChainState::Exact(s) => {
            let r_next = sample_r_next(s, rng);
            sample_a_next(s, r_next, rng)
        }
        ChainState::Continued { r, a } => {
            let r_next = r + r_increment_continued(*r, *a, open_unit(rng));
            let k = open_unit_index(rng);
            let c = a + r_next;
            let y = (c * ((UNIT_SCALE - k) as f64) / k as f64).floor() + 1.0;
            ChainState::Continued { r: r_next, a: a + y }
        }
    }
}

/// `steps` transitions from `init`; the path holds `steps + 1` states.
pub fn sample_path<R: RngCore + ?Sized>(init: ChainState, steps: usize, rng: &mut R) -> RaPath {
    let mut states = Vec::with_capacity(steps + 1);
    states.push(init);
    for _ in 0..steps {
        let next = step(states.last().unwrap(), rng);
        states.push(next);
    }
    RaPath { states }
}

// ---------------------------------------------------------------------------
// Urn oracles
// ---------------------------------------------------------------------------

/// Default size limit of [`urn_oracle_r`].
pub const URN_R_MAX_A: u128 = 12;

/// Default size limit of [`urn_oracle_a`] on `a + r_next`.
pub const URN_A_MAX_C: u128 = 1000;

/// The R law by running the stick-insertion urn.
///
/// Subintervals fall in three categories: `2r` flanking an earlier record
/// stick, `2` flanking the newest stick, and `a - r - 1` others. A new stick
/// lands uniformly. In categories 1 or 2 the process stops; in category 3 the
/// subinterval splits into two category-1 pieces. Returns `P(stop at stick x)`
/// for `x = 1..`.
pub fn urn_oracle_r(state: &RaState, max_a: u128) -> Result<Vec<BigRational>> {
    if state.a > max_a {
        return Err(Error::Unsupported(format!("urn enumeration limited to a <= {max_a}, got {}", state.a)));
    }
    let big = |v: u128| BigInt::from(v);
    let (mut near_old, near_new, mut other) = (big(2 * state.r), big(2), big(state.a - state.r - 1));
    let mut alive = BigRational::one();
    let mut pmf = Vec::new();
    while alive > BigRational::zero() {
        let total = near_old.clone() + near_new.clone() + other.clone();
        let stop = BigRational::new(near_old.clone() + near_new.clone(), total.clone());
        pmf.push(alive.clone() * stop);
        alive *= BigRational::new(other.clone(), total);
        if other.is_zero() {
            break;
        }
        near_old += 2;
        other -= 1;
    }
    Ok(pmf)
}

/// The A law by planting individuals: after the new stick there are `c + 1`
/// subintervals, one of them the target. Each miss splits a subinterval.
/// Returns `P(first hit at y)` for `y = 1..=y_cutoff` and the exact
/// probability of no hit by `y_cutoff`.
pub fn urn_oracle_a(state: &RaState, r_next: u128, y_cutoff: u128, max_c: u128) -> Result<(Vec<BigRational>, BigRational)> {
    if !valid_r_next(state, r_next) {
        return Err(Error::InvalidArgument(format!("need r < r_next <= a, got {state:?}, r_next={r_next}")));
    }
    let c = state.a + r_next;
    if c > max_c {
        return Err(Error::Unsupported(format!("urn enumeration limited to a + r_next <= {max_c}, got {c}")));
    }
    let mut gaps = BigInt::from(c + 1);
    let mut alive = BigRational::one();
    let mut pmf = Vec::with_capacity(y_cutoff as usize);
    for _ in 0..y_cutoff {
        pmf.push(alive.clone() / BigRational::from_integer(gaps.clone()));
        alive *= BigRational::new(gaps.clone() - 1, gaps.clone());
        gaps += 1;
    }
    Ok((pmf, alive))
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

/// CSV `x,prob` for the R law, headed by a comment naming the state.
pub fn r_pmf_csv(state: &RaState) -> CsvTable {
    let mut t = CsvTable::with_comment_and_header(&format!("r={},a={}", state.r, state.a), &["x", "prob"]);
    for (i, p) in r_pmf_table(state).into_iter().enumerate() {
        t.row([(i + 1).to_string(), fmt_f64(p)]);
    }
    t
}

/// CSV `y,prob` for the A law up to `y_max`, plus a `tail` row holding
/// `P(y > y_max)`.
pub fn a_pmf_csv(state: &RaState, r_next: u128, y_max: u128) -> Result<CsvTable> {
    if !valid_r_next(state, r_next) {
        return Err(Error::InvalidArgument(format!("need r < r_next <= a, got {state:?}, r_next={r_next}")));
    }
    let c = state.a + r_next;
    let mut t = CsvTable::with_comment_and_header(&format!("r={},a={},r_next={},c={c}", state.r, state.a, r_next), &["y", "prob"]);
    for y in 1..=y_max {
        t.row([y.to_string(), fmt_f64(a_pmf_c::<f64>(c, y))]);
    }
    t.row(["tail".to_string(), fmt_f64(a_tail_c::<f64>(c, y_max + 1))]);
    Ok(t)
}
