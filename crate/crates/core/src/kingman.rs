//! Kingman's n-coalescent, its recursive (one-individual-at-a-time)
//! construction, and reconstruction from a provisional external branch
//! length sequence (PEBLS).
//!
//! Individuals are numbered from 1. A block is identified by its smallest
//! member; when two blocks merge the survivor keeps the smaller id, so the
//! ids recorded in an event list stay meaningful for the whole trajectory.

use rand::RngCore;

use crate::export::{fmt_f64, CsvTable};
use crate::rng;
use crate::{Error, Result};

/// A partition of `{1..n}` in canonical form: members sorted within each
/// block, blocks ordered by their smallest member.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn new(mut blocks: Vec<Vec<usize>>) -> Result<Self> {
        let n: usize = blocks.iter().map(Vec::len).sum();
        let mut seen = vec![false; n + 1];
        for block in &mut blocks {
            if block.is_empty() {
                return Err(Error::InvalidInput("partition has an empty block".into()));
            }
            block.sort_unstable();
            for &i in block.iter() {
                if i == 0 || i > n || seen[i] {
                    return Err(Error::InvalidInput(format!(
                        "blocks are not a partition of 1..={n} (offending member {i})"
                    )));
                }
                seen[i] = true;
            }
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        Ok(Self { blocks })
    }

    pub fn singletons(n: usize) -> Self {
        Self { blocks: (1..=n).map(|i| vec![i]).collect() }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn n(&self) -> usize {
        self.blocks.iter().map(Vec::len).sum()
    }

    /// True when every block of `self` lies inside a block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        let n = self.n();
        if coarser.n() != n {
            return false;
        }
        let mut label = vec![0usize; n + 1];
        for (b, block) in coarser.blocks.iter().enumerate() {
            for &i in block {
                label[i] = b;
            }
        }
        self.blocks.iter().all(|block| block.iter().all(|&i| label[i] == label[block[0]]))
    }

    /// Restriction to `{1..m}`.
    pub fn restrict(&self, m: usize) -> Partition {
        let blocks = self
            .blocks
            .iter()
            .map(|b| b.iter().copied().filter(|&i| i <= m).collect::<Vec<_>>())
            .filter(|b| !b.is_empty())
            .collect();
        Partition { blocks }
    }
}

/// Union-find whose root is always the smallest member.
#[derive(Clone, Debug)]
pub(crate) struct MinUnionFind {
    parent: Vec<usize>,
}

impl MinUnionFind {
    pub(crate) fn new(n: usize) -> Self {
        Self { parent: (0..=n).collect() }
    }

    pub(crate) fn find(&mut self, i: usize) -> usize {
        let mut root = i;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = i;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub(crate) fn union(&mut self, a: usize, b: usize) -> usize {
        let (ra, rb) = (self.find(a), self.find(b));
        let (lo, hi) = if ra < rb { (ra, rb) } else { (rb, ra) };
        self.parent[hi] = lo;
        lo
    }
}

/// One coalescence: at `time` the blocks with ids `block_a < block_b` merge
/// into block `block_a`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeEvent {
    pub time: f64,
    pub block_a: usize,
    pub block_b: usize,
}

/// A realised coalescent path on `{1..n}`, started from singletons at time 0.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    n: usize,
    events: Vec<MergeEvent>,
}

impl Trajectory {
    pub fn singletons(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        Ok(Self { n, events: Vec::new() })
    }

    /// Validates and wraps an event list. The list may stop before the MRCA.
    pub fn from_events(n: usize, events: Vec<MergeEvent>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be at least 1".into()));
        }
        if events.len() >= n {
            return Err(Error::InvalidInput(format!("{} events for {n} individuals", events.len())));
        }
        let mut live = vec![true; n + 1];
        let mut last = 0.0f64;
        for (k, ev) in events.iter().enumerate() {
            if !(ev.time.is_finite() && ev.time > last) {
                return Err(Error::InvalidInput(format!(
                    "event {k} at time {} does not follow {last}",
                    ev.time
                )));
            }
            let valid_ids = ev.block_a >= 1 && ev.block_a < ev.block_b && ev.block_b <= n;
            if !valid_ids || !live[ev.block_a] || !live[ev.block_b] {
                return Err(Error::InvalidInput(format!(
                    "event {k} merges ({}, {}) which are not two live blocks",
                    ev.block_a, ev.block_b
                )));
            }
            live[ev.block_b] = false;
            last = ev.time;
        }
        Ok(Self { n, events })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn events(&self) -> &[MergeEvent] {
        &self.events
    }

    pub fn is_complete(&self) -> bool {
        self.events.len() + 1 == self.n
    }

    /// `|Pi(t)|`; the partition is right-continuous, so an event at `t`
    /// counts.
    pub fn block_count_at(&self, t: f64) -> usize {
        self.n - self.events.iter().take_while(|e| e.time <= t).count()
    }

    pub fn partition_at(&self, t: f64) -> Partition {
        let mut uf = MinUnionFind::new(self.n);
        for e in self.events.iter().take_while(|e| e.time <= t) {
            uf.union(e.block_a, e.block_b);
        }
        let mut blocks: Vec<Vec<usize>> = Vec::new();
        let mut slot = vec![usize::MAX; self.n + 1];
        for i in 1..=self.n {
            let root = uf.find(i);
            if slot[root] == usize::MAX {
                slot[root] = blocks.len();
                blocks.push(Vec::new());
            }
            blocks[slot[root]].push(i);
        }
        Partition { blocks }
    }

    /// Ids of the blocks alive at time `t` (events strictly before `t`),
    /// ascending.
    fn live_blocks_before(&self, t: f64) -> Vec<usize> {
        let mut live = vec![true; self.n + 1];
        for e in self.events.iter().take_while(|e| e.time < t) {
            live[e.block_b] = false;
        }
        (1..=self.n).filter(|&i| live[i]).collect()
    }

    pub fn time_to_mrca(&self) -> Result<f64> {
        if !self.is_complete() {
            return Err(Error::InvalidState(format!(
                "trajectory has {} of {} events",
                self.events.len(),
                self.n - 1
            )));
        }
        Ok(self.events.last().map_or(0.0, |e| e.time))
    }

    /// The induced trajectory on `{1..m}`. With smallest-member ids an event
    /// is visible on `{1..m}` exactly when `block_b <= m`.
    pub fn restrict(&self, m: usize) -> Result<Trajectory> {
        if m == 0 || m > self.n {
            return Err(Error::InvalidArgument(format!("cannot restrict {} individuals to {m}", self.n)));
        }
        let events = self.events.iter().copied().filter(|e| e.block_b <= m).collect();
        Ok(Trajectory { n: m, events })
    }

    /// `int_0^t |Pi(s)| ds`.
    pub fn cumulative_hazard(&self, t: f64) -> f64 {
        let mut acc = 0.0;
        let mut start = 0.0;
        let mut count = self.n as f64;
        for e in &self.events {
            if e.time >= t {
                break;
            }
            acc += (e.time - start) * count;
            start = e.time;
            count -= 1.0;
        }
        acc + (t - start) * count
    }

    /// Solves `cumulative_hazard(t) = level` segment by segment. The block
    /// count is constant between events, so each segment is linear.
    pub fn invert_cumulative_hazard(&self, level: f64) -> Result<f64> {
        if !self.is_complete() {
            return Err(Error::InvalidState("hazard inversion needs a complete trajectory".into()));
        }
        let mut acc = 0.0;
        let mut start = 0.0;
        let mut count = self.n as f64;
        for e in &self.events {
            let segment = (e.time - start) * count;
            if acc + segment > level {
                return Ok(start + (level - acc) / count);
            }
            acc += segment;
            start = e.time;
            count -= 1.0;
        }
        Ok(start + (level - acc) / count)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::with_header(&["event_index", "time", "block_a", "block_b"]);
        for (k, e) in self.events.iter().enumerate() {
            table.row([
                (k + 1).to_string(),
                fmt_f64(e.time),
                e.block_a.to_string(),
                e.block_b.to_string(),
            ]);
        }
        table
    }
}

/// Lineage lengths `L_2..L_{n_max}` of the recursive construction
/// (`L_1 = inf`).
#[derive(Clone, Debug, PartialEq)]
pub struct PeblsSequence {
    lengths: Vec<f64>,
}

impl PeblsSequence {
    pub fn new(lengths: Vec<f64>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::InvalidArgument("need at least L_2".into()));
        }
        if let Some(bad) = lengths.iter().find(|l| !(l.is_finite() && **l > 0.0)) {
            return Err(Error::InvalidInput(format!("length {bad} is not positive and finite")));
        }
        let mut sorted = lengths.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("lengths must be pairwise distinct".into()));
        }
        Ok(Self { lengths })
    }

    pub fn n_max(&self) -> usize {
        self.lengths.len() + 1
    }

    /// `L_2, L_3, ...`
    pub fn lengths(&self) -> &[f64] {
        &self.lengths
    }

    /// `L_n`, infinite for `n = 1`.
    pub fn length(&self, n: usize) -> Option<f64> {
        match n {
            0 => None,
            1 => Some(f64::INFINITY),
            _ => self.lengths.get(n - 2).copied(),
        }
    }

    pub fn max_length(&self) -> f64 {
        self.lengths.iter().copied().fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> CsvTable {
        let mut table = CsvTable::with_header(&["individual", "length"]);
        for (i, l) in self.lengths.iter().enumerate() {
            table.row([(i + 2).to_string(), fmt_f64(*l)]);
        }
        table
    }
}

/// Kingman's n-coalescent: with `b` blocks, wait `Exp(b(b-1)/2)` and merge a
/// uniform pair.
pub fn simulate_kingman<R: RngCore + ?Sized>(n: usize, rng: &mut R) -> Result<Trajectory> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be at least 1".into()));
    }
    let mut live: Vec<usize> = (1..=n).collect();
    let mut events = Vec::with_capacity(n.saturating_sub(1));
    let mut t = 0.0;
    while live.len() > 1 {
        let b = live.len() as f64;
        t += rng::exp1(rng) / (b * (b - 1.0) / 2.0);
        let i = rng::index(rng, live.len());
        let mut j = rng::index(rng, live.len() - 1);
        if j >= i {
            j += 1;
        }
        let (x, y) = (live[i], live[j]);
        let (lo, hi) = if x < y { (x, y) } else { (y, x) };
        events.push(MergeEvent { time: t, block_a: lo, block_b: hi });
        let pos = if live[i] == hi { i } else { j };
        live.swap_remove(pos);
    }
    Ok(Trajectory { n, events })
}

/// Adds individual `n+1` to a complete trajectory of `Pi^n`.
///
/// Its connection time `L` has survival `exp(-int_0^t |Pi^n(s)| ds)`: an
/// `Exp(1)` level is drawn and the piecewise-linear cumulative hazard is
/// inverted. At `L` the newcomer joins a uniformly chosen block of
/// `Pi^n(L)`. A draw landing exactly on an existing event time is redrawn.
pub fn extend_recursive<R: RngCore + ?Sized>(traj: &Trajectory, rng: &mut R) -> Result<(f64, Trajectory)> {
    if !traj.is_complete() {
        return Err(Error::InvalidState("can only extend a complete trajectory".into()));
    }
    let length = loop {
        let level = rng::exp1(rng);
        let l = traj.invert_cumulative_hazard(level)?;
        if l > 0.0 && traj.events.iter().all(|e| e.time != l) {
            break l;
        }
    };
    let live = traj.live_blocks_before(length);
    let target = live[rng::index(rng, live.len())];
    let newcomer = traj.n + 1;
    let mut events = traj.events.clone();
    let pos = events.partition_point(|e| e.time < length);
    events.insert(pos, MergeEvent { time: length, block_a: target, block_b: newcomer });
    Ok((length, Trajectory { n: newcomer, events }))
}

/// Runs the recursive construction from `Pi^1` up to `n_max` individuals.
pub fn build_pebls<R: RngCore + ?Sized>(n_max: usize, rng: &mut R) -> Result<(PeblsSequence, Trajectory)> {
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let mut traj = Trajectory::singletons(1)?;
    let mut lengths = Vec::with_capacity(n_max - 1);
    for _ in 1..n_max {
        let (l, next) = extend_recursive(&traj, rng)?;
        lengths.push(l);
        traj = next;
    }
    Ok((PeblsSequence { lengths }, traj))
}

/// Rebuilds a coalescent from lineage lengths: for each `n >= 2`, pick `j`
/// uniformly from `{i < n : L_i >= L_n}` (with `L_1 = inf`) and merge
/// individual `n` with the cluster containing `j` at time `L_n`.
pub fn reconstruct_from_pebls<R: RngCore + ?Sized>(pebls: &PeblsSequence, rng: &mut R) -> Result<Trajectory> {
    let n_max = pebls.n_max();
    // (time, partner, individual)
    let mut joins = Vec::with_capacity(n_max - 1);
    let mut eligible = Vec::with_capacity(n_max);
    for n in 2..=n_max {
        let ln = pebls.lengths[n - 2];
        eligible.clear();
        eligible.push(1);
        eligible.extend((2..n).filter(|&i| pebls.lengths[i - 2] >= ln));
        let j = eligible[rng::index(rng, eligible.len())];
        joins.push((ln, j, n));
    }
    joins.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut uf = MinUnionFind::new(n_max);
    let mut events = Vec::with_capacity(joins.len());
    for (time, j, n) in joins {
        // Before L_n the cluster of n holds only later individuals, so its id is n.
        let partner = uf.find(j);
        debug_assert_eq!(uf.find(n), n);
        uf.union(partner, n);
        events.push(MergeEvent { time, block_a: partner, block_b: n });
    }
    Trajectory::from_events(n_max, events)
}

pub fn time_to_mrca(traj: &Trajectory) -> Result<f64> {
    traj.time_to_mrca()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn mean_and_se(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, (var / n).sqrt())
    }

    #[test]
    fn zero_individuals_rejected() {
        let mut rng = stream(1, "t", 0);
        assert!(matches!(simulate_kingman(0, &mut rng), Err(Error::InvalidArgument(_))));
        assert!(matches!(build_pebls(1, &mut rng), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn single_individual_is_trivial() {
        let mut rng = stream(1, "t", 0);
        let traj = simulate_kingman(1, &mut rng).unwrap();
        assert!(traj.events().is_empty());
        assert_eq!(traj.time_to_mrca().unwrap(), 0.0);
        assert_eq!(traj.partition_at(5.0), Partition::singletons(1));
    }

    #[test]
    fn trajectory_shape_invariants() {
        let mut rng = stream(2, "t", 0);
        for n in [2, 3, 10, 40] {
            let traj = simulate_kingman(n, &mut rng).unwrap();
            assert_eq!(traj.events().len(), n - 1);
            assert!(traj.events().windows(2).all(|w| w[0].time < w[1].time));
            assert_eq!(traj.partition_at(0.0), Partition::singletons(n));
            for (k, e) in traj.events().iter().enumerate() {
                assert_eq!(traj.block_count_at(e.time), n - k - 1);
                assert_eq!(traj.partition_at(e.time).len(), n - k - 1);
            }
            assert_eq!(traj.partition_at(f64::MAX).len(), 1);
            // Revalidates through the public constructor.
            Trajectory::from_events(n, traj.events().to_vec()).unwrap();
        }
    }

    #[test]
    fn partitions_refine_forward_in_time() {
        let mut rng = stream(3, "t", 0);
        let traj = simulate_kingman(25, &mut rng).unwrap();
        let grid: Vec<f64> = (0..60).map(|i| i as f64 * 0.05).collect();
        for w in grid.windows(2) {
            assert!(traj.partition_at(w[0]).refines(&traj.partition_at(w[1])));
        }
    }

    #[test]
    fn malformed_event_lists_rejected() {
        let bad_order = vec![
            MergeEvent { time: 1.0, block_a: 1, block_b: 2 },
            MergeEvent { time: 0.5, block_a: 1, block_b: 3 },
        ];
        assert!(Trajectory::from_events(3, bad_order).is_err());
        let dead_block = vec![
            MergeEvent { time: 1.0, block_a: 1, block_b: 2 },
            MergeEvent { time: 2.0, block_a: 2, block_b: 3 },
        ];
        assert!(Trajectory::from_events(3, dead_block).is_err());
        let incomplete = Trajectory::from_events(3, vec![MergeEvent { time: 1.0, block_a: 1, block_b: 3 }]).unwrap();
        assert!(matches!(incomplete.time_to_mrca(), Err(Error::InvalidState(_))));
        assert!(extend_recursive(&incomplete, &mut stream(0, "t", 0)).is_err());
    }

    #[test]
    fn two_individuals_merge_at_rate_one() {
        let times: Vec<f64> = (0..100_000u64)
            .map(|k| simulate_kingman(2, &mut stream(4, "n2", k)).unwrap().time_to_mrca().unwrap())
            .collect();
        let (mean, se) = mean_and_se(&times);
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn ten_individuals_mrca_mean() {
        let times: Vec<f64> = (0..100_000u64)
            .map(|k| simulate_kingman(10, &mut stream(5, "n10", k)).unwrap().time_to_mrca().unwrap())
            .collect();
        let (mean, se) = mean_and_se(&times);
        assert!((mean - 1.8).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn hazard_inversion_is_exact() {
        let mut rng = stream(6, "haz", 0);
        for n in [1, 2, 5, 30] {
            let traj = simulate_kingman(n, &mut rng).unwrap();
            for level in [1e-6, 0.01, 0.3, 1.0, 2.5, 10.0, 50.0] {
                let t = traj.invert_cumulative_hazard(level).unwrap();
                let h = traj.cumulative_hazard(t);
                assert!(((h - level) / level).abs() < 1e-12, "n={n} level={level} h={h}");
            }
        }
    }

    #[test]
    fn extension_adds_one_singleton_and_keeps_history() {
        let mut rng = stream(7, "ext", 0);
        let traj = simulate_kingman(6, &mut rng).unwrap();
        let (l, next) = extend_recursive(&traj, &mut rng).unwrap();
        assert_eq!(next.n(), 7);
        assert!(next.is_complete());
        assert_eq!(next.partition_at(0.0), Partition::singletons(7));
        assert_eq!(next.restrict(6).unwrap(), traj);
        let joined = next.events().iter().find(|e| e.block_b == 7).unwrap();
        assert_eq!(joined.time, l);
        assert!(next.time_to_mrca().unwrap() >= traj.time_to_mrca().unwrap());
    }

    #[test]
    fn pebls_first_length_is_exponential() {
        let draws: Vec<f64> = (0..50_000u64)
            .map(|k| build_pebls(2, &mut stream(8, "l2", k)).unwrap().0.lengths()[0])
            .collect();
        let report = crate::stats::ks_one_sample(&draws, &crate::stats::Reference::Exp1).unwrap();
        assert!(report.p_value.unwrap() > 0.001, "{report:?}");
    }

    #[test]
    fn pebls_lengths_valid_and_match_trajectory() {
        let mut rng = stream(9, "pebls", 0);
        let (pebls, traj) = build_pebls(30, &mut rng).unwrap();
        assert_eq!(pebls.n_max(), 30);
        PeblsSequence::new(pebls.lengths().to_vec()).unwrap();
        let mut times: Vec<f64> = traj.events().iter().map(|e| e.time).collect();
        let mut lengths = pebls.lengths().to_vec();
        times.sort_by(f64::total_cmp);
        lengths.sort_by(f64::total_cmp);
        assert_eq!(times, lengths);
        assert_eq!(pebls.max_length(), traj.time_to_mrca().unwrap());
    }

    #[test]
    fn pebls_max_approaches_two() {
        let maxima: Vec<f64> = (0..20_000u64)
            .map(|k| build_pebls(60, &mut stream(10, "max", k)).unwrap().0.max_length())
            .collect();
        let (mean, se) = mean_and_se(&maxima);
        // E[max] = 2(1 - 1/60) for the first 60 individuals.
        let expected = 2.0 * (1.0 - 1.0 / 60.0);
        assert!((mean - expected).abs() < 3.0 * se, "mean {mean} se {se}");
    }

    #[test]
    fn reconstruction_small_cases() {
        let mut rng = stream(11, "rec", 0);
        let pebls = PeblsSequence::new(vec![0.7]).unwrap();
        let traj = reconstruct_from_pebls(&pebls, &mut rng).unwrap();
        assert_eq!(traj.events(), &[MergeEvent { time: 0.7, block_a: 1, block_b: 2 }]);

        let pebls = PeblsSequence::new(vec![2.0, 0.5, 1.0, 0.2]).unwrap();
        let traj = reconstruct_from_pebls(&pebls, &mut rng).unwrap();
        let times: Vec<f64> = traj.events().iter().map(|e| e.time).collect();
        assert_eq!(times, vec![0.2, 0.5, 1.0, 2.0]);
        for (k, e) in traj.events().iter().enumerate() {
            assert_eq!(traj.block_count_at(e.time), 5 - k - 1);
        }
    }

    #[test]
    fn duplicate_lengths_rejected() {
        assert!(matches!(PeblsSequence::new(vec![1.0, 0.5, 1.0]), Err(Error::InvalidInput(_))));
        assert!(PeblsSequence::new(vec![1.0, -0.5]).is_err());
        assert!(PeblsSequence::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn csv_exports() {
        let traj = Trajectory::from_events(
            3,
            vec![
                MergeEvent { time: 0.25, block_a: 1, block_b: 3 },
                MergeEvent { time: 1.5, block_a: 1, block_b: 2 },
            ],
        )
        .unwrap();
        assert_eq!(
            traj.to_csv().as_str(),
            "event_index,time,block_a,block_b\n1,0.25,1,3\n2,1.5,1,2\n"
        );
        let pebls = PeblsSequence::new(vec![1.5, 0.25]).unwrap();
        assert_eq!(pebls.to_csv().as_str(), "individual,length\n2,1.5\n3,0.25\n");
    }

    #[test]
    fn partition_validation() {
        assert!(Partition::new(vec![vec![1, 2], vec![]]).is_err());
        assert!(Partition::new(vec![vec![1, 2], vec![2]]).is_err());
        let p = Partition::new(vec![vec![3, 2], vec![1]]).unwrap();
        assert_eq!(p.blocks(), &[vec![1], vec![2, 3]]);
        assert_eq!(p.restrict(2).blocks(), &[vec![1], vec![2]]);
    }
}
