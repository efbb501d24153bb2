//! The stick construction of Kingman's coalescent and the identification
//! of lineage ranks and record pairs from it.
//!
//! Stick `j` stands at `U_j` with height `tau_j = sum_{k>j} zeta_k`,
//! `zeta_k ~ Exp(k(k-1)/2)`; individual `i` sits at `V_i`. Individuals `i`
//! and `j` share a block at time `t` iff `t` exceeds every stick between
//! them. Identification only needs the relative order of locations, so
//! heights are generated only when asked for.

use std::collections::{BTreeMap, HashSet};
use std::ops::Bound::{Excluded, Unbounded};

use rand::RngCore;
use rand_distr::{Distribution, Gamma};

use crate::export::{fmt_f64, CsvTable};
use crate::kingman::Partition;
use crate::ra_chain::RaState;
use crate::rng::{exp1, open_unit, stream, Stream};
use crate::{Error, Result};

/// Heights are materialized this many sticks at a time.
pub const HEIGHT_CHUNK: usize = 1024;

/// Stick locations, individual locations and (lazily) stick heights.
///
/// Locations come from two independent streams and heights from a third,
/// so a realization does not depend on the order in which it is queried.
#[derive(Clone, Debug)]
pub struct StickField {
    u_rng: Stream,
    v_rng: Stream,
    h_rng: Stream,
    u: Vec<f64>,
    v: Vec<f64>,
    taken: HashSet<u64>,
    /// `tau[j - 1] = tau_j`; the last entry also stands for the whole
    /// unmaterialized remainder below it.
    tau: Vec<f64>,
}

/// One-to-one matching of lineage ranks and individuals: `L_n = tau_k`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RankAssignment {
    /// `(rank, individual)` pairs ordered by individual.
    pub pairs: Vec<(u64, u64)>,
}

impl RankAssignment {
    /// Ranks of individuals `2..=n_max`.
    pub fn from_field(field: &mut StickField, n_max: u64) -> Result<Self> {
        let mut pairs = Vec::new();
        for n in 2..=n_max {
            pairs.push((field.identify_lineage_rank(n)?, n));
        }
        let out = Self { pairs };
        out.validate()?;
        Ok(out)
    }

    pub fn validate(&self) -> Result<()> {
        let ranks: HashSet<u64> = self.pairs.iter().map(|p| p.0).collect();
        let people: HashSet<u64> = self.pairs.iter().map(|p| p.1).collect();
        if ranks.len() != self.pairs.len() || people.len() != self.pairs.len() {
            return Err(Error::InvalidState("rank assignment is not one-to-one".into()));
        }
        Ok(())
    }

    pub fn rank_of(&self, individual: u64) -> Option<u64> {
        self.pairs.iter().find(|p| p.1 == individual).map(|p| p.0)
    }

    pub fn individual_of(&self, rank: u64) -> Option<u64> {
        self.pairs.iter().find(|p| p.0 == rank).map(|p| p.1)
    }
}

/// Record pairs found by planting, and whether the individual cap cut the
/// search short.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RaIdentification {
    pub pairs: Vec<RaState>,
    pub truncated: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Point {
    Stick,
    Individual,
}

// Positive doubles order like their bit patterns.
fn key(x: f64) -> u64 {
    x.to_bits()
}

fn between(x: f64, a: f64, b: f64) -> bool {
    (a < x && x < b) || (b < x && x < a)
}

impl StickField {
    /// Empty field; everything is drawn on demand.
    pub fn new(seed: u64, index: u64) -> Self {
        Self {
            u_rng: stream(seed, "aldous-u", index),
            v_rng: stream(seed, "aldous-v", index),
            h_rng: stream(seed, "aldous-h", index),
            u: Vec::new(),
            v: Vec::new(),
            taken: HashSet::new(),
            tau: Vec::new(),
        }
    }

    /// Field with `num_sticks` sticks (heights included) and
    /// `num_individuals` individuals materialized up front.
    pub fn sample<R: RngCore + ?Sized>(num_sticks: usize, num_individuals: usize, rng: &mut R) -> Result<Self> {
        if num_sticks == 0 || num_individuals == 0 {
            return Err(Error::InvalidArgument("need at least one stick and one individual".into()));
        }
        let mut field = Self::new(rng.next_u64(), 0);
        field.ensure_sticks(num_sticks);
        field.ensure_individuals(num_individuals);
        field.ensure_heights(num_sticks);
        Ok(field)
    }

    /// Hand-built field. `heights` is either empty or one strictly
    /// decreasing height per stick; later sticks are drawn below the last
    /// given height. Further locations come from streams keyed by `seed`.
    pub fn from_configuration(u: Vec<f64>, v: Vec<f64>, heights: Vec<f64>, seed: u64) -> Result<Self> {
        let mut field = Self::new(seed, 0);
        for &x in u.iter().chain(&v) {
            if !(x > 0.0 && x < 1.0) {
                return Err(Error::InvalidInput(format!("location {x} outside (0, 1)")));
            }
            if !field.taken.insert(key(x)) {
                return Err(Error::InvalidInput(format!("duplicate location {x}")));
            }
        }
        if !heights.is_empty() {
            if heights.len() != u.len() {
                return Err(Error::DimensionMismatch { left: heights.len(), right: u.len() });
            }
            if heights.iter().any(|h| !(*h > 0.0 && h.is_finite())) || heights.windows(2).any(|w| w[0] <= w[1]) {
                return Err(Error::InvalidInput("heights must be positive and strictly decreasing".into()));
            }
        }
        field.u = u;
        field.v = v;
        field.tau = heights;
        Ok(field)
    }

    fn fresh_location(rng: &mut Stream, taken: &mut HashSet<u64>) -> f64 {
        loop {
            let x = open_unit(rng);
            if taken.insert(key(x)) {
                return x;
            }
        }
    }

    fn ensure_sticks(&mut self, count: usize) {
        while self.u.len() < count {
            let x = Self::fresh_location(&mut self.u_rng, &mut self.taken);
            self.u.push(x);
        }
    }

    fn ensure_individuals(&mut self, count: usize) {
        while self.v.len() < count {
            let x = Self::fresh_location(&mut self.v_rng, &mut self.taken);
            self.v.push(x);
        }
    }

    /// Location of stick `j` (1-based).
    pub fn u(&mut self, j: usize) -> f64 {
        self.ensure_sticks(j);
        self.u[j - 1]
    }

    /// Location of individual `i` (1-based).
    pub fn v(&mut self, i: usize) -> f64 {
        self.ensure_individuals(i);
        self.v[i - 1]
    }

    pub fn stick_locations(&self) -> &[f64] {
        &self.u
    }

    pub fn individual_locations(&self) -> &[f64] {
        &self.v
    }

    /// `tau_1, ..., tau_count`.
    pub fn heights(&mut self, count: usize) -> &[f64] {
        self.ensure_heights(count);
        &self.tau[..count]
    }

    pub fn height(&mut self, j: usize) -> f64 {
        self.heights(j)[j - 1]
    }

    fn ensure_heights(&mut self, count: usize) {
        if self.tau.is_empty() {
            self.initial_heights(HEIGHT_CHUNK);
        }
        while self.tau.len() < count {
            self.extend_heights();
        }
    }

    /// `zeta_2..zeta_K` exactly, the remainder `sum_{k>K} zeta_k` from a
    /// moment-matched gamma.
    fn initial_heights(&mut self, k_max: usize) {
        let mut tau = vec![0.0; k_max];
        tau[k_max - 1] = tail_draw(k_max, &mut self.h_rng);
        for j in (1..k_max).rev() {
            tau[j - 1] = tau[j] + zeta(j + 1, &mut self.h_rng);
        }
        self.tau = tau;
    }

    /// Splits the current last height into `HEIGHT_CHUNK` more increments
    /// plus a new remainder, rescaled so the last height is unchanged.
    fn extend_heights(&mut self) {
        let k = self.tau.len();
        let k_new = k + HEIGHT_CHUNK;
        let zetas: Vec<f64> = (k + 1..=k_new).map(|i| zeta(i, &mut self.h_rng)).collect();
        let rest = tail_draw(k_new, &mut self.h_rng);
        let total = zetas.iter().sum::<f64>() + rest;
        let scale = self.tau[k - 1] / total;
        let mut fresh = vec![0.0; HEIGHT_CHUNK];
        fresh[HEIGHT_CHUNK - 1] = rest * scale;
        // fresh[i] = tau_{k+1+i}; tau_j = tau_{j+1} + zeta_{j+1}.
        for i in (0..HEIGHT_CHUNK - 1).rev() {
            fresh[i] = fresh[i + 1] + zetas[i + 1] * scale;
        }
        self.tau.extend(fresh);
    }

    /// Materializes heights until every unmaterialized stick is below `t`.
    fn heights_below(&mut self, t: f64) {
        self.ensure_heights(1);
        while *self.tau.last().unwrap() >= t {
            self.extend_heights();
        }
    }

    /// Partition of individuals `1..=n` at time `t`.
    pub fn partition_at(&mut self, t: f64, n: usize) -> Result<Partition> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be >= 1".into()));
        }
        if t.is_nan() || t < 0.0 {
            return Err(Error::InvalidArgument(format!("time {t} must be >= 0")));
        }
        if t == 0.0 {
            return Ok(Partition::singletons(n));
        }
        self.heights_below(t);
        let tall = self.tau.partition_point(|&h| h >= t);
        self.ensure_sticks(tall);
        self.ensure_individuals(n);
        let mut points: Vec<(f64, Option<usize>)> = self.v[..n].iter().enumerate().map(|(i, &x)| (x, Some(i + 1))).collect();
        points.extend(self.u[..tall].iter().map(|&x| (x, None)));
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut blocks: Vec<Vec<usize>> = vec![Vec::new()];
        for (_, who) in points {
            match who {
                Some(i) => blocks.last_mut().unwrap().push(i),
                None if !blocks.last().unwrap().is_empty() => blocks.push(Vec::new()),
                None => {}
            }
        }
        blocks.retain(|b| !b.is_empty());
        Partition::new(blocks)
    }

    // Smallest stick index with location in (lo, hi).
    fn first_stick_in(&mut self, lo: f64, hi: f64) -> usize {
        let mut j = 0;
        loop {
            if j == self.u.len() {
                self.ensure_sticks((2 * self.u.len()).max(64));
            }
            let x = self.u[j];
            j += 1;
            if lo < x && x < hi {
                return j;
            }
        }
    }

    /// The rank `k` with `L_n = tau_k`: the smallest `k` such that the first
    /// `k` sticks isolate `V_n` from `V_1..V_{n-1}`.
    pub fn identify_lineage_rank(&mut self, n: u64) -> Result<u64> {
        if n < 2 {
            return Err(Error::InvalidArgument("lineage ranks start at individual 2".into()));
        }
        let n = n as usize;
        self.ensure_individuals(n);
        let x = self.v[n - 1];
        let left = self.v[..n - 1].iter().copied().filter(|&y| y < x).fold(None, |m: Option<f64>, y| Some(m.map_or(y, |m| m.max(y))));
        let right = self.v[..n - 1].iter().copied().filter(|&y| y > x).fold(None, |m: Option<f64>, y| Some(m.map_or(y, |m| m.min(y))));
        let k_left = left.map_or(0, |l| self.first_stick_in(l, x));
        let k_right = right.map_or(0, |r| self.first_stick_in(x, r));
        Ok(k_left.max(k_right) as u64)
    }

    /// The individual `n` with `L_n = tau_k`, or `None` past `cap`.
    ///
    /// With `X_l < U_k < X_r` the nearest earlier sticks (or `0`, `1`), the
    /// first individual in `(X_l, X_r)` fixes one side of `U_k`; `n` is the
    /// first individual to land on the other side.
    pub fn match_rank_to_individual_bounded(&mut self, k: u64, cap: u64) -> Result<Option<u64>> {
        if k == 0 {
            return Err(Error::InvalidArgument("ranks start at 1".into()));
        }
        let k = k as usize;
        self.ensure_sticks(k);
        let uk = self.u[k - 1];
        let xl = self.u[..k - 1].iter().copied().filter(|&y| y < uk).fold(0.0, f64::max);
        let xr = self.u[..k - 1].iter().copied().filter(|&y| y > uk).fold(1.0, f64::min);
        let mut side: Option<bool> = None;
        let mut i = 0u64;
        while i < cap {
            i += 1;
            let y = self.v(i as usize);
            if !(xl < y && y < xr) {
                continue;
            }
            match side {
                None => side = Some(y < uk),
                Some(s) if s != (y < uk) => return Ok(Some(i)),
                Some(_) => {}
            }
        }
        Ok(None)
    }

    pub fn match_rank_to_individual(&mut self, k: u64) -> Result<u64> {
        Ok(self.match_rank_to_individual_bounded(k, u64::MAX)?.expect("unbounded search"))
    }

    /// First `max_pairs` record pairs by planting sticks and individuals in
    /// order.
    pub fn identify_ra(&mut self, max_pairs: usize) -> Result<Vec<RaState>> {
        Ok(self.identify_ra_bounded(max_pairs, u64::MAX)?.pairs)
    }

    /// As [`identify_ra`](Self::identify_ra), planting at most `cap`
    /// individuals.
    ///
    /// Stick 1 goes down first; individuals follow until one lands on the
    /// other side of it from individual 1, giving `(1, A_1)`. Then sticks
    /// are planted until one is not flanked by two individuals; its index is
    /// `R_{i+1}`. Its non-individual neighbour `X` is an earlier stick or an
    /// end of the interval. Individuals are planted until one lands between
    /// the new stick and `X`; its index is `A_{i+1}`.
    pub fn identify_ra_bounded(&mut self, max_pairs: usize, cap: u64) -> Result<RaIdentification> {
        let mut pairs = Vec::with_capacity(max_pairs);
        if max_pairs == 0 {
            return Ok(RaIdentification { pairs, truncated: false });
        }
        let truncated = |pairs: Vec<RaState>| Ok(RaIdentification { pairs, truncated: true });
        let mut planted: BTreeMap<u64, Point> = BTreeMap::new();
        let u1 = self.u(1);
        planted.insert(key(u1), Point::Stick);
        let v1 = self.v(1);
        planted.insert(key(v1), Point::Individual);
        let first_side = v1 < u1;
        let mut m = 1u64;
        loop {
            if m >= cap {
                return truncated(pairs);
            }
            m += 1;
            let y = self.v(m as usize);
            planted.insert(key(y), Point::Individual);
            if (y < u1) != first_side {
                break;
            }
        }
        pairs.push(RaState { r: 1, a: u128::from(m) });
        let mut n = 1usize;
        while pairs.len() < max_pairs {
            let (un, x) = loop {
                n += 1;
                let un = self.u(n);
                planted.insert(key(un), Point::Stick);
                let pred = planted.range(..key(un)).next_back().map(|(k, p)| (f64::from_bits(*k), *p));
                let succ = planted.range((Excluded(key(un)), Unbounded)).next().map(|(k, p)| (f64::from_bits(*k), *p));
                let flanked = |q: Option<(f64, Point)>| matches!(q, Some((_, Point::Individual)));
                if flanked(pred) && flanked(succ) {
                    continue;
                }
                let x = if !flanked(pred) { pred.map_or(0.0, |q| q.0) } else { succ.map_or(1.0, |q| q.0) };
                break (un, x);
            };
            loop {
                if m >= cap {
                    return truncated(pairs);
                }
                m += 1;
                let y = self.v(m as usize);
                planted.insert(key(y), Point::Individual);
                if between(y, un, x) {
                    break;
                }
            }
            pairs.push(RaState { r: n as u128, a: u128::from(m) });
        }
        Ok(RaIdentification { pairs, truncated: false })
    }

    /// Record pairs by walking ranks upward and matching each to its
    /// individual: rank `j` is the next record iff its individual arrives
    /// after the current `A_i`.
    pub fn identify_ra_shell(&mut self, max_pairs: usize, cap: u64) -> Result<RaIdentification> {
        let mut pairs: Vec<RaState> = Vec::with_capacity(max_pairs);
        let mut j = 1u64;
        let mut current_a = 0u64;
        while pairs.len() < max_pairs {
            match self.match_rank_to_individual_bounded(j, cap)? {
                None => return Ok(RaIdentification { pairs, truncated: true }),
                Some(n) if n > current_a => {
                    pairs.push(RaState { r: u128::from(j), a: u128::from(n) });
                    current_a = n;
                }
                Some(_) => {}
            }
            j += 1;
        }
        Ok(RaIdentification { pairs, truncated: false })
    }

    /// CSV `kind,index,location,height`; the height column is empty for
    /// individuals and for sticks whose height has not been drawn.
    pub fn to_csv(&self) -> CsvTable {
        let mut t = CsvTable::with_header(&["kind", "index", "location", "height"]);
        for (j, &x) in self.u.iter().enumerate() {
            let h = self.tau.get(j).map(|h| fmt_f64(*h)).unwrap_or_default();
            t.row(["U".to_string(), (j + 1).to_string(), fmt_f64(x), h]);
        }
        for (i, &x) in self.v.iter().enumerate() {
            t.row(["V".to_string(), (i + 1).to_string(), fmt_f64(x), String::new()]);
        }
        t
    }
}

/// CSV `i,R,A` for identified pairs.
pub fn pairs_csv(pairs: &[RaState]) -> CsvTable {
    let mut t = CsvTable::with_header(&["i", "R", "A"]);
    for (i, p) in pairs.iter().enumerate() {
        t.row([(i + 1).to_string(), p.r.to_string(), p.a.to_string()]);
    }
    t
}

fn zeta(k: usize, rng: &mut Stream) -> f64 {
    let kf = k as f64;
    exp1(rng) * 2.0 / (kf * (kf - 1.0))
}

/// Gamma draw matching the mean `2/K` and variance
/// `4 [psi1(K) + psi1(K+1) - 2/K]` of `sum_{k>K} zeta_k`.
fn tail_draw(k: usize, rng: &mut Stream) -> f64 {
    let (mean, var) = tail_moments(k);
    Gamma::new(mean * mean / var, var / mean).expect("positive moments").sample(rng)
}

fn tail_moments(k: usize) -> (f64, f64) {
    let kf = k as f64;
    (2.0 / kf, 4.0 * (trigamma(kf) + trigamma(kf + 1.0) - 2.0 / kf))
}

fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 20.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + 1.0 / x + x2 / 2.0 + x2 / x * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 / 30.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{extract_records_with_ranks, mean_and_se};
    use proptest::prelude::*;

    fn figure_field() -> StickField {
        // Sorted: V2 U4 V4 V6 U1 V5 U2 V1 U3 V3 V7; at t = 1 only U4 is short.
        StickField::from_configuration(
            vec![0.35, 0.55, 0.7, 0.15],
            vec![0.6, 0.1, 0.8, 0.2, 0.4, 0.3, 0.9],
            vec![3.0, 2.0, 1.5, 0.5],
            0,
        )
        .unwrap()
    }

    #[test]
    fn figure_partition() {
        let mut f = figure_field();
        let p = f.partition_at(1.0, 7).unwrap();
        let expected = Partition::new(vec![vec![2, 4, 6], vec![5], vec![1], vec![3, 7]]).unwrap();
        assert_eq!(p, expected);
        assert_eq!(f.partition_at(0.0, 7).unwrap(), Partition::singletons(7));
        assert_eq!(f.partition_at(3.5, 7).unwrap().len(), 1);
    }

    #[test]
    fn configuration_validation() {
        assert!(StickField::from_configuration(vec![0.5], vec![0.5], vec![], 0).is_err());
        assert!(StickField::from_configuration(vec![1.5], vec![0.5], vec![], 0).is_err());
        assert!(StickField::from_configuration(vec![0.2, 0.3], vec![0.5], vec![1.0, 2.0], 0).is_err());
        assert!(StickField::from_configuration(vec![0.2, 0.3], vec![0.5], vec![1.0], 0).is_err());
    }

    #[test]
    fn first_stick_between_first_two_individuals() {
        let mut f = StickField::from_configuration(vec![0.5], vec![0.3, 0.7], vec![], 0).unwrap();
        assert_eq!(f.identify_lineage_rank(2).unwrap(), 1);
        assert_eq!(f.match_rank_to_individual(1).unwrap(), 2);
        let ra = f.identify_ra(1).unwrap();
        assert_eq!(ra, vec![RaState { r: 1, a: 2 }]);
    }

    #[test]
    fn heights_have_the_right_means() {
        let reps = 100_000;
        let draws: Vec<(f64, f64)> = (0..reps)
            .map(|i| {
                let mut f = StickField::new(31, i);
                let h = f.heights(4);
                (h[0], h[3])
            })
            .collect();
        let (m1, se1) = mean_and_se(&draws.iter().map(|d| d.0).collect::<Vec<_>>());
        let (m4, se4) = mean_and_se(&draws.iter().map(|d| d.1).collect::<Vec<_>>());
        assert!((m1 - 2.0).abs() <= 3.0 * se1, "{m1} ± {se1}");
        assert!((m4 - 0.5).abs() <= 3.0 * se4, "{m4} ± {se4}");
    }

    #[test]
    fn height_extension_keeps_prefix_and_order() {
        let mut f = StickField::new(32, 0);
        let before: Vec<f64> = f.heights(HEIGHT_CHUNK).to_vec();
        let after: Vec<f64> = f.heights(3 * HEIGHT_CHUNK + 5).to_vec();
        assert_eq!(&after[..HEIGHT_CHUNK], &before[..]);
        assert!(after.windows(2).all(|w| w[0] > w[1] && w[1] > 0.0));
        // Tail mean 2/K sets the scale of deep sticks.
        let k = after.len();
        assert!(after[k - 1] > 0.2 / k as f64 && after[k - 1] < 20.0 / k as f64);
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - std::f64::consts::PI.powi(2) / 6.0).abs() < 1e-13);
        assert!((trigamma(0.5) - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
        let k = 1024.0;
        let direct: f64 = (1025..2_000_000).map(|i| { let i = i as f64; 4.0 / (i * (i - 1.0)).powi(2) }).sum();
        let (_, var) = tail_moments(k as usize);
        assert!((var / direct - 1.0).abs() < 1e-6);
    }

    #[test]
    fn ranks_match_separation_times() {
        for seed in 0..40 {
            let mut f = StickField::new(33, seed);
            for n in 2..=12u64 {
                let k = f.identify_lineage_rank(n).unwrap();
                // Oracle: smallest stick index j with individual n still a
                // singleton among 1..=n at time tau_j.
                let alone = |f: &mut StickField, j: usize| -> bool {
                    let t = f.height(j);
                    let p = f.partition_at(t, n as usize).unwrap();
                    p.blocks().iter().any(|b| b == &vec![n as usize])
                };
                let mut hi = 1usize;
                while !alone(&mut f, hi) {
                    hi *= 2;
                }
                let mut lo = 0usize;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if alone(&mut f, mid) {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                assert_eq!(k, hi as u64, "seed {seed} n {n}");
                assert_eq!(f.match_rank_to_individual(k).unwrap(), n);
            }
        }
    }

    #[test]
    fn rank_assignment_is_injective_and_orders_lengths() {
        for seed in 0..20 {
            let mut f = StickField::new(34, seed);
            let ranks = RankAssignment::from_field(&mut f, 40).unwrap();
            let max_rank = ranks.pairs.iter().map(|p| p.0).max().unwrap() as usize;
            let heights = f.heights(max_rank).to_vec();
            for a in &ranks.pairs {
                for b in &ranks.pairs {
                    let (la, lb) = (heights[a.0 as usize - 1], heights[b.0 as usize - 1]);
                    assert_eq!(a.0 < b.0, la > lb);
                }
            }
            assert_eq!(ranks.individual_of(ranks.pairs[0].0), Some(2));
            assert_eq!(ranks.rank_of(2), Some(ranks.pairs[0].0));
        }
    }

    #[test]
    fn planting_agrees_with_shell_and_with_extraction() {
        for seed in 0..200 {
            let mut f = StickField::new(35, seed);
            let planted = f.identify_ra_bounded(6, 400).unwrap();
            let shell = f.identify_ra_shell(6, 400).unwrap();
            let k = planted.pairs.len().min(shell.pairs.len());
            assert_eq!(planted.pairs[..k], shell.pairs[..k], "seed {seed}");
            let n_max = 120u64;
            let ranks = RankAssignment::from_field(&mut f, n_max).unwrap();
            let values: Vec<f64> = ranks.pairs.iter().map(|p| -(p.0 as f64)).collect();
            let true_ranks: Vec<u64> = ranks.pairs.iter().map(|p| p.0).collect();
            let rec = extract_records_with_ranks(&values, &true_ranks).unwrap();
            for (i, pair) in rec.valid_pairs().iter().enumerate() {
                if i < planted.pairs.len() {
                    assert_eq!(*pair, (planted.pairs[i].r as u64, planted.pairs[i].a as u64), "seed {seed}");
                }
            }
        }
    }

    #[test]
    fn identified_pairs_satisfy_chain_constraints() {
        for seed in 0..300 {
            let mut f = StickField::new(36, seed);
            let out = f.identify_ra_bounded(8, 2000).unwrap();
            if out.pairs.is_empty() {
                assert!(out.truncated);
                continue;
            }
            assert_eq!(out.pairs[0].r, 1);
            for p in &out.pairs {
                assert!(p.a - p.r >= 1);
            }
            for w in out.pairs.windows(2) {
                assert!(w[0].r < w[1].r && w[0].a < w[1].a);
            }
        }
    }

    #[test]
    fn neighbour_bound_and_screen() {
        // If every one of the first t sticks is flanked by two of the first s
        // individuals, their individuals are among the first s; if none of
        // the first m individuals is adjacent to U_k, its individual is > m.
        for seed in 0..100 {
            let mut f = StickField::new(37, seed);
            let (t, s) = (3usize, 60usize);
            let mut pts: Vec<(f64, bool)> = (1..=t).map(|j| (f.u(j), true)).collect();
            pts.extend((1..=s).map(|i| (f.v(i), false)));
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let flanked = pts.iter().enumerate().filter(|(_, p)| p.1).all(|(i, _)| i > 0 && i + 1 < pts.len() && !pts[i - 1].1 && !pts[i + 1].1);
            if flanked {
                for k in 1..=t as u64 {
                    assert!(f.match_rank_to_individual(k).unwrap() <= s as u64);
                }
            }
            let k = 5u64;
            let m = 3usize;
            let uk = f.u(k as usize);
            let xl = (1..k as usize).map(|j| f.u(j)).filter(|&y| y < uk).fold(0.0, f64::max);
            let xr = (1..k as usize).map(|j| f.u(j)).filter(|&y| y > uk).fold(1.0, f64::min);
            let adjacent = (1..=m).any(|i| between(f.v(i), xl, xr));
            if !adjacent {
                assert!(f.match_rank_to_individual(k).unwrap() > m as u64);
            }
        }
    }

    #[test]
    fn query_order_does_not_change_the_realization() {
        let mut a = StickField::new(38, 7);
        let mut b = StickField::new(38, 7);
        let _ = b.heights(5000);
        let _ = b.v(300);
        assert_eq!(a.identify_ra(4).unwrap(), b.identify_ra(4).unwrap());
        assert_eq!(a.heights(10), b.heights(10));
    }

    #[test]
    fn csv_exports() {
        let f = figure_field();
        let csv = f.to_csv();
        assert!(csv.as_str().starts_with("kind,index,location,height\nU,1,0.35,3.0\n"));
        assert!(csv.as_str().contains("V,7,0.9,\n"));
        assert_eq!(pairs_csv(&[RaState { r: 1, a: 3 }]).as_str(), "i,R,A\n1,1,3\n");
    }

    #[test]
    fn sample_materializes_requested_sizes() {
        let mut rng = stream(39, "sample", 0);
        let mut f = StickField::sample(10, 20, &mut rng).unwrap();
        assert_eq!(f.stick_locations().len(), 10);
        assert_eq!(f.individual_locations().len(), 20);
        assert!(f.heights(10).windows(2).all(|w| w[0] > w[1]));
        assert!(StickField::sample(0, 1, &mut rng).is_err());
    }

    proptest! {
        #[test]
        fn identification_depends_on_order_only(seed in any::<u64>()) {
            let mut base = StickField::new(seed, 0);
            let u: Vec<f64> = (1..=50).map(|j| base.u(j)).collect();
            let v: Vec<f64> = (1..=50).map(|i| base.v(i)).collect();
            let warp = |x: &f64| x * x * x;
            let mut warped = StickField::from_configuration(u.iter().map(warp).collect(), v.iter().map(warp).collect(), vec![], 1).unwrap();
            let mut plain = StickField::from_configuration(u, v, vec![], 1).unwrap();
            prop_assert_eq!(plain.identify_ra_bounded(10, 50).unwrap(), warped.identify_ra_bounded(10, 50).unwrap());
        }

        #[test]
        fn restriction_of_partitions(seed in any::<u64>(), t in 0.01f64..2.0, n in 2usize..30) {
            let mut f = StickField::new(seed, 1);
            let big = f.partition_at(t, n).unwrap();
            let small = f.partition_at(t, n - 1).unwrap();
            prop_assert_eq!(big.restrict(n - 1), small);
        }
    }
}
