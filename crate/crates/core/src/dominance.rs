//! Exact dominance on finite bid grids.
//!
//! For a bidder `i`, a candidate bid vector is scored against every opponent
//! profile on the grid. A score is the objective `Wel_i - lambda Rev_i` when
//! ROS holds and `-inf` when it does not, which encodes the three-case
//! comparison (a violation is worse than anything feasible, two violations
//! tie). `b'` dominates `b` iff its score row is componentwise `>=` with at
//! least one strict entry. All results are relative to the grid: opponents
//! only ever bid grid levels.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::agents::objective;
use crate::clearing::{self, ResponseView};
use crate::error::{Error, Result};
use crate::math;
use crate::types::{AuctionFormat, BidProfile, Matrix, MechanismConfig, ProblemInstance};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceMode {
    /// Any grid bid vector (product of per-auction levels) for the deviator.
    General,
    /// Deviator restricted to uniform bids `delta * v_i`. Opponents still
    /// range over the per-auction grid in both modes.
    Uniform,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceLimits {
    /// Opponent joint profiles per bidder.
    pub max_profiles: u128,
    /// Candidate bid vectors per bidder.
    pub max_candidates: u128,
    /// Candidates times profiles.
    pub max_table: u128,
    /// Joint profiles examined when filtering by ROS.
    pub max_joint: u128,
}

impl Default for DominanceLimits {
    fn default() -> Self {
        DominanceLimits { max_profiles: 1_000_000, max_candidates: 20_000, max_table: 50_000_000, max_joint: 1_000_000 }
    }
}

fn normalize(xs: &mut Vec<f64>) {
    xs.retain(|x| x.is_finite() && *x >= 0.0);
    xs.sort_by(f64::total_cmp);
    // -0.0 and 0.0 compare equal
    xs.dedup_by(|a, b| a == b);
}

/// Candidate bid levels per bidder and auction, plus uniform multipliers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BidGrid {
    levels: Vec<Vec<Vec<f64>>>,
    multipliers: Vec<Vec<f64>>,
}

/// Extra points to put on a grid before closing it.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct GridExtras {
    pub levels: Vec<(usize, usize, f64)>,
    pub multipliers: Vec<(usize, f64)>,
}

impl BidGrid {
    /// Sorts and deduplicates; rejects negative or non-finite entries.
    pub fn from_levels(levels: Vec<Vec<Vec<f64>>>, multipliers: Vec<Vec<f64>>) -> Result<Self> {
        if levels.len() != multipliers.len() {
            return Err(Error::invalid("grid", "levels and multipliers disagree on bidder count"));
        }
        let bad = |x: &f64| !(x.is_finite() && *x >= 0.0);
        if levels.iter().flatten().flatten().any(bad) || multipliers.iter().flatten().any(bad) {
            return Err(Error::invalid("grid", "levels must be finite and nonnegative"));
        }
        let mut g = BidGrid { levels, multipliers };
        g.normalize();
        Ok(g)
    }

    fn normalize(&mut self) {
        for row in &mut self.levels {
            for cell in row {
                normalize(cell);
            }
        }
        for m in &mut self.multipliers {
            normalize(m);
            m.retain(|&d| d > 0.0);
        }
    }

    /// `{0, r/2, r, (r+v)/2, v, 3v/2}` per bidder and auction; multipliers are
    /// the same points divided by the value.
    pub fn base(instance: &ProblemInstance, config: &MechanismConfig) -> Self {
        Self::base_with(instance, config, &GridExtras::default())
    }

    fn base_with(instance: &ProblemInstance, config: &MechanismConfig, extras: &GridExtras) -> Self {
        let (n, m) = (instance.num_bidders(), instance.num_auctions());
        let mut levels = vec![vec![Vec::new(); m]; n];
        let mut multipliers = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..m {
                let (v, r) = (instance.value(i, j), config.reserve(i, j));
                let pts = [0.0, r / 2.0, r, (r + v) / 2.0, v, 1.5 * v];
                levels[i][j].extend(pts);
                if v > 0.0 {
                    multipliers[i].extend(pts.iter().map(|p| p / v));
                }
            }
            multipliers[i].push(1.0);
        }
        for &(i, j, b) in &extras.levels {
            levels[i][j].push(b);
        }
        for &(i, d) in &extras.multipliers {
            multipliers[i].push(d);
        }
        let mut g = BidGrid { levels, multipliers };
        g.normalize();
        g
    }

    /// Base grid closed once under the opponent bids used to separate a
    /// deviator's bid levels: for deviator `i`, opponent `x` and auction `j`
    /// it adds `v_x + z_i`, `(v_x + b)/2 + z_i - z_x` and
    /// `(b + v_i)/2 + z_i - z_x` for each deviator level `b`, the midpoints
    /// of consecutive deviator levels shifted by `z_i - z_x`, `r_x` and `0`.
    /// Dominance checks add the same separating bids again per deviator,
    /// against that deviator's own closed levels.
    pub fn closure(instance: &ProblemInstance, config: &MechanismConfig) -> Self {
        Self::closure_with(instance, config, &GridExtras::default())
    }

    pub fn closure_with(instance: &ProblemInstance, config: &MechanismConfig, extras: &GridExtras) -> Self {
        let base = Self::base_with(instance, config, extras);
        let (n, m) = (instance.num_bidders(), instance.num_auctions());
        let mut out = base.clone();
        for i in 0..n {
            for x in 0..n {
                if x == i {
                    continue;
                }
                for j in 0..m {
                    let (vi, zi) = (instance.value(i, j), config.boost(i, j));
                    let (vx, zx, rx) = (instance.value(x, j), config.boost(x, j), config.reserve(x, j));
                    let adds = separating_bids(&base.levels[i][j], vi, zi, vx, zx, rx);
                    out.levels[x][j].extend(adds.iter().copied());
                }
            }
        }
        out.normalize();
        out
    }

    pub fn num_bidders(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self, bidder: usize, auction: usize) -> &[f64] {
        &self.levels[bidder][auction]
    }

    pub fn multipliers(&self, bidder: usize) -> &[f64] {
        &self.multipliers[bidder]
    }

    fn candidate_count(&self, bidder: usize, mode: DominanceMode) -> u128 {
        match mode {
            DominanceMode::General => self.levels[bidder].iter().map(|l| l.len() as u128).product(),
            DominanceMode::Uniform => self.multipliers[bidder].len() as u128,
        }
    }

    /// Candidate bid vectors for `bidder`: the product of its levels, or its
    /// uniform bids.
    pub fn candidates(
        &self,
        instance: &ProblemInstance,
        bidder: usize,
        mode: DominanceMode,
        limits: &DominanceLimits,
    ) -> Result<Vec<Vec<f64>>> {
        let count = self.candidate_count(bidder, mode);
        if count > limits.max_candidates {
            return Err(Error::CapExceeded { what: "candidate bid vectors", count, cap: limits.max_candidates });
        }
        Ok(match mode {
            // lexicographic, since every level list is sorted
            DominanceMode::General => product(&self.levels[bidder]),
            DominanceMode::Uniform => {
                let mut out: Vec<Vec<f64>> = self.multipliers[bidder]
                    .iter()
                    .map(|&d| (0..instance.num_auctions()).map(|j| d * instance.value(bidder, j)).collect())
                    .collect();
                out.dedup();
                out
            }
        })
    }

    /// Short description for reports.
    pub fn describe(&self, mode: DominanceMode) -> String {
        let counts: Vec<u128> = (0..self.num_bidders()).map(|i| self.candidate_count(i, mode)).collect();
        format!("{mode:?} grid, candidate vectors per bidder {counts:?}")
    }
}

fn separating_bids(dev_levels: &[f64], vi: f64, zi: f64, vx: f64, zx: f64, rx: f64) -> Vec<f64> {
    let mut out = vec![vx + zi, rx, 0.0];
    for &b in dev_levels {
        out.push((vx + b) / 2.0 + zi - zx);
        out.push((b + vi) / 2.0 + zi - zx);
    }
    for w in dev_levels.windows(2) {
        out.push((w[0] + w[1]) / 2.0 + zi - zx);
    }
    out.retain(|b| b.is_finite() && *b >= 0.0);
    out
}

/// Bids of the bidder under test, per auction, that opponents must be able
/// to separate.
fn deviator_bids(instance: &ProblemInstance, grid: &BidGrid, bidder: usize, mode: DominanceMode) -> Vec<Vec<f64>> {
    (0..instance.num_auctions())
        .map(|j| {
            let mut b = match mode {
                DominanceMode::General => grid.levels(bidder, j).to_vec(),
                DominanceMode::Uniform => {
                    grid.multipliers(bidder).iter().map(|d| d * instance.value(bidder, j)).collect()
                }
            };
            normalize(&mut b);
            b
        })
        .collect()
}

/// Opponent joint profiles for one bidder: mixed-radix over the other
/// bidders' bid vectors. Each opponent gets its own grid points plus the
/// separating bids for every deviator bid in `dev`, so the opponent grid
/// depends on whose dominance is being checked.
struct Opponents {
    bidder: usize,
    lists: Vec<(usize, Vec<Vec<f64>>)>,
    count: usize,
}

impl Opponents {
    #[allow(clippy::too_many_arguments)]
    fn new(
        instance: &ProblemInstance,
        config: &MechanismConfig,
        grid: &BidGrid,
        bidder: usize,
        dev: &[Vec<f64>],
        limits: &DominanceLimits,
    ) -> Result<Self> {
        let m = instance.num_auctions();
        let mut lists = Vec::new();
        let mut count: u128 = 1;
        for x in 0..instance.num_bidders() {
            if x == bidder {
                continue;
            }
            let seps: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    separating_bids(
                        &dev[j],
                        instance.value(bidder, j),
                        config.boost(bidder, j),
                        instance.value(x, j),
                        config.boost(x, j),
                        config.reserve(x, j),
                    )
                })
                .collect();
            // opponents bid freely per auction in both modes; only the
            // deviator's strategies are restricted to uniform bidding
            let levels: Vec<Vec<f64>> = (0..m)
                .map(|j| {
                    let mut l = grid.levels(x, j).to_vec();
                    l.extend(seps[j].iter().copied());
                    normalize(&mut l);
                    l
                })
                .collect();
            count = count.saturating_mul(levels.iter().map(|l| l.len() as u128).product());
            check_profiles(count, limits)?;
            let vectors = product(&levels);
            lists.push((x, vectors));
        }
        let count = lists.iter().map(|l| l.1.len()).product();
        Ok(Opponents { bidder, lists, count })
    }

    /// Full bid matrix for profile `k`, with `own` in the bidder's row.
    fn matrix(&self, instance: &ProblemInstance, mut k: usize, own: &[f64]) -> Matrix {
        let mut out = Matrix::zeros(instance.num_bidders(), instance.num_auctions());
        out.row_mut(self.bidder).copy_from_slice(own);
        for (x, list) in self.lists.iter().rev() {
            let idx = k % list.len();
            k /= list.len();
            out.row_mut(*x).copy_from_slice(&list[idx]);
        }
        out
    }
}

fn check_profiles(count: u128, limits: &DominanceLimits) -> Result<()> {
    if count > limits.max_profiles {
        return Err(Error::CapExceeded { what: "opponent profiles", count, cap: limits.max_profiles });
    }
    Ok(())
}

/// Cartesian product, first coordinate most significant.
fn product(levels: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut acc: Vec<Vec<f64>> = vec![Vec::new()];
    for lv in levels {
        let mut next = Vec::with_capacity(acc.len() * lv.len());
        for prefix in &acc {
            for &b in lv {
                let mut v = prefix.clone();
                v.push(b);
                next.push(v);
            }
        }
        acc = next;
    }
    acc
}

/// Absolute resolution of scores. Objectives that agree up to summation
/// order (`1.5 - 1.1` against `1.0 - 0.6`) must compare equal, and rounding
/// to a fixed lattice keeps the comparison transitive.
const SCORE_RESOLUTION: f64 = 1e-9;

/// ROS up to the score resolution.
fn ros_ok(wel: f64, rev: f64) -> bool {
    rev <= wel + SCORE_RESOLUTION
}

/// Score of a single evaluation: objective if ROS holds, else `-inf`.
#[inline]
fn score(lambda: f64, wel: f64, rev: f64) -> f64 {
    if ros_ok(wel, rev) {
        math::round(objective(lambda, wel, rev) / SCORE_RESOLUTION) * SCORE_RESOLUTION
    } else {
        f64::NEG_INFINITY
    }
}

/// The bidder's candidates: an explicit list, or the product of per-auction
/// levels (which lets per-auction results be shared across candidates).
enum Rows<'a> {
    Vectors(&'a [Vec<f64>]),
    Product(&'a [Vec<f64>]),
}

impl Rows<'_> {
    fn len(&self) -> usize {
        match self {
            Rows::Vectors(v) => v.len(),
            Rows::Product(l) => l.iter().map(Vec::len).product(),
        }
    }

    fn column(&self, view: &ResponseView, lambda: f64, out: &mut [f64]) {
        match self {
            Rows::Vectors(v) => {
                for (o, c) in out.iter_mut().zip(v.iter()) {
                    let (w, r) = view.evaluate(c);
                    *o = score(lambda, w, r);
                }
            }
            Rows::Product(levels) => {
                let per: Vec<Vec<Option<(f64, f64)>>> = levels
                    .iter()
                    .enumerate()
                    .map(|(j, l)| l.iter().map(|&b| view.auction_result(j, b).map(|s| (s.value, s.payment))).collect())
                    .collect();
                let mut digits = vec![0usize; levels.len()];
                for o in out.iter_mut() {
                    // same summation order as `ResponseView::evaluate`
                    let (mut w, mut r) = (0.0, 0.0);
                    for (j, &d) in digits.iter().enumerate() {
                        if let Some((v, p)) = per[j][d] {
                            w += v;
                            r += p;
                        }
                    }
                    *o = score(lambda, w, r);
                    for j in (0..digits.len()).rev() {
                        digits[j] += 1;
                        if digits[j] < levels[j].len() {
                            break;
                        }
                        digits[j] = 0;
                    }
                }
            }
        }
    }
}

/// Row-major score table `[candidate][profile]`.
struct Table {
    cols: usize,
    data: Vec<f64>,
}

impl Table {
    fn row(&self, c: usize) -> &[f64] {
        &self.data[c * self.cols..(c + 1) * self.cols]
    }
}

fn build_table(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    lambda: f64,
    rows: &Rows,
    opp: &Opponents,
) -> Result<Table> {
    let (nr, nc) = (rows.len(), opp.count);
    let zeros = vec![0.0; instance.num_auctions()];
    let column = |k: usize| -> Result<Vec<f64>> {
        let bids = BidProfile::new(opp.matrix(instance, k, &zeros))?;
        let view = ResponseView::new(instance, config, &bids, opp.bidder)?;
        let mut col = vec![0.0; nr];
        rows.column(&view, lambda, &mut col);
        Ok(col)
    };
    let mut data = vec![0.0; nr * nc];
    const CHUNK: usize = 2048;
    for lo in (0..nc).step_by(CHUNK) {
        let hi = (lo + CHUNK).min(nc);
        #[cfg(feature = "std")]
        let cols: Vec<Vec<f64>> = {
            use rayon::prelude::*;
            (lo..hi).into_par_iter().map(column).collect::<Result<_>>()?
        };
        #[cfg(not(feature = "std"))]
        let cols: Vec<Vec<f64>> = (lo..hi).map(column).collect::<Result<_>>()?;
        for (k, col) in cols.iter().enumerate() {
            for (c, s) in col.iter().enumerate() {
                data[c * nc + lo + k] = *s;
            }
        }
    }
    Ok(Table { cols: nc, data })
}

fn check_table_size(candidates: usize, profiles: usize, limits: &DominanceLimits) -> Result<()> {
    let size = candidates as u128 * profiles as u128;
    if size > limits.max_table {
        return Err(Error::CapExceeded { what: "evaluation table entries", count: size, cap: limits.max_table });
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Dominates,
    NotDominates,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WitnessKind {
    /// The alternative is strictly better here (and never worse).
    StrictlyBetter,
    /// The alternative is worse here.
    Worse,
    /// Never worse but never strictly better; no witness profile.
    NoStrictImprovement,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceVerdict {
    pub bidder: usize,
    pub base: Vec<f64>,
    pub alternative: Vec<f64>,
    pub verdict: Verdict,
    pub reason: WitnessKind,
    /// Full bid matrix of the witness profile; the bidder's row holds `base`.
    pub witness: Option<Matrix>,
}

/// Does `alternative` dominate `base` for `bidder`, over every opponent
/// profile on the grid?
#[allow(clippy::too_many_arguments)]
pub fn dominates(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    lambda: f64,
    bidder: usize,
    base: &[f64],
    alternative: &[f64],
    grid: &BidGrid,
    mode: DominanceMode,
    limits: &DominanceLimits,
) -> Result<DominanceVerdict> {
    let m = instance.num_auctions();
    if base.len() != m || alternative.len() != m || grid.num_bidders() != instance.num_bidders() {
        return Err(Error::DimensionMismatch {
            what: "bid vectors",
            rows: 1,
            cols: m,
            got_rows: 1,
            got_cols: if base.len() != m { base.len() } else { alternative.len() },
        });
    }
    config.check_against(instance)?;
    let mut dev = deviator_bids(instance, grid, bidder, mode);
    for (j, d) in dev.iter_mut().enumerate() {
        d.push(base[j]);
        d.push(alternative[j]);
        normalize(d);
    }
    let opp = Opponents::new(instance, config, grid, bidder, &dev, limits)?;
    let pair = [base.to_vec(), alternative.to_vec()];
    let table = build_table(instance, config, lambda, &Rows::Vectors(&pair), &opp)?;
    let (b, a) = (table.row(0), table.row(1));
    let verdict = |verdict, reason, k: Option<usize>| DominanceVerdict {
        bidder,
        base: base.to_vec(),
        alternative: alternative.to_vec(),
        verdict,
        reason,
        witness: k.map(|k| opp.matrix(instance, k, base)),
    };
    if let Some(k) = (0..opp.count).find(|&k| a[k] < b[k]) {
        return Ok(verdict(Verdict::NotDominates, WitnessKind::Worse, Some(k)));
    }
    match (0..opp.count).find(|&k| a[k] > b[k]) {
        Some(k) => Ok(verdict(Verdict::Dominates, WitnessKind::StrictlyBetter, Some(k))),
        None => Ok(verdict(Verdict::NotDominates, WitnessKind::NoStrictImprovement, None)),
    }
}

/// Re-evaluates one profile: `(feasible, objective)` for `bidder`.
pub fn evaluate_profile(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    lambda: f64,
    bidder: usize,
    bids: &Matrix,
) -> Result<(bool, f64)> {
    let out = clearing::clear(instance, config, &BidProfile::new(bids.clone())?)?;
    let w = clearing::welfare_i(instance, &out, bidder);
    let r = clearing::revenue_i(&out, bidder);
    Ok((ros_ok(w, r), objective(lambda, w, r)))
}

/// `(feasible count, sum of feasible scores)`; a dominating row is never
/// smaller in this order since float addition is monotone.
fn row_rank(row: &[f64]) -> (usize, f64) {
    let mut count = 0;
    let mut sum = 0.0;
    for &s in row {
        if s > f64::NEG_INFINITY {
            count += 1;
            sum += s;
        }
    }
    (count, sum)
}

fn row_dominates(a: &[f64], b: &[f64]) -> bool {
    let mut strict = false;
    for (x, y) in a.iter().zip(b) {
        if x < y {
            return false;
        }
        if x > y {
            strict = true;
        }
    }
    strict
}

fn row_hash(row: &[f64]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for x in row {
        h ^= x.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Indices of rows no other row dominates. Identical rows share a verdict
/// and are compared once.
fn pareto_maximal<'a>(count: usize, row: impl Fn(usize) -> &'a [f64]) -> Vec<usize> {
    let ranks: Vec<(usize, f64)> = (0..count).map(|k| row_rank(row(k))).collect();
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by(|&a, &b| ranks[b].0.cmp(&ranks[a].0).then(ranks[b].1.total_cmp(&ranks[a].1)));
    let mut seen: BTreeMap<u64, Vec<(usize, bool)>> = BTreeMap::new();
    let mut keep = Vec::new();
    for &c in &order {
        let h = row_hash(row(c));
        let known = seen.get(&h).and_then(|reps| reps.iter().find(|(r, _)| row(*r) == row(c)).map(|&(_, d)| d));
        let dominated = known.unwrap_or_else(|| {
            let (cc, cs) = ranks[c];
            let d = order
                .iter()
                .take_while(|&&d| ranks[d].0 > cc || (ranks[d].0 == cc && ranks[d].1 >= cs))
                .any(|&d| d != c && row_dominates(row(d), row(c)));
            seen.entry(h).or_default().push((c, d));
            d
        });
        if !dominated {
            keep.push(c);
        }
    }
    keep.sort_unstable();
    keep
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UndominatedSet {
    pub mode: DominanceMode,
    /// Undominated bid vectors per bidder.
    pub per_bidder: Vec<Vec<Vec<f64>>>,
    /// Joint profiles (index into `per_bidder[i]` for each bidder) in which
    /// every bidder pays at most its welfare.
    pub joint: Vec<Vec<usize>>,
    /// Candidate count per bidder before filtering.
    pub candidates: Vec<usize>,
    pub grid: String,
}

/// Undominated candidates per bidder and the ROS-feasible joint profiles
/// built from them.
pub fn undominated_set(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    lambda: &[f64],
    grid: &BidGrid,
    mode: DominanceMode,
    limits: &DominanceLimits,
) -> Result<UndominatedSet> {
    let n = instance.num_bidders();
    if lambda.len() != n || grid.num_bidders() != n {
        return Err(Error::invalid("undominated set", "lambda and grid must cover every bidder"));
    }
    config.check_against(instance)?;
    let mut per_bidder = Vec::with_capacity(n);
    let mut candidates = Vec::with_capacity(n);
    for i in 0..n {
        let cands = grid.candidates(instance, i, mode, limits)?;
        let dev = deviator_bids(instance, grid, i, mode);
        let opp = Opponents::new(instance, config, grid, i, &dev, limits)?;
        check_table_size(cands.len(), opp.count, limits)?;
        let levels: Vec<Vec<f64>> = (0..instance.num_auctions()).map(|j| grid.levels(i, j).to_vec()).collect();
        let rows = match mode {
            DominanceMode::General => Rows::Product(&levels),
            DominanceMode::Uniform => Rows::Vectors(&cands),
        };
        let table = build_table(instance, config, lambda[i], &rows, &opp)?;
        let keep = pareto_maximal(cands.len(), |k| table.row(k));
        candidates.push(cands.len());
        per_bidder.push(keep.into_iter().map(|k| cands[k].clone()).collect::<Vec<_>>());
    }

    let total: u128 = per_bidder.iter().map(|s| s.len() as u128).product();
    if total > limits.max_joint {
        return Err(Error::CapExceeded { what: "joint undominated profiles", count: total, cap: limits.max_joint });
    }
    let mut joint = Vec::new();
    let sizes: Vec<usize> = per_bidder.iter().map(Vec::len).collect();
    for mut k in 0..total as usize {
        let mut idx = vec![0; n];
        for i in (0..n).rev() {
            idx[i] = k % sizes[i];
            k /= sizes[i];
        }
        let bids = Matrix::from_fn(n, instance.num_auctions(), |i, j| per_bidder[i][idx[i]][j]);
        let out = clearing::clear(instance, config, &BidProfile::new(bids)?)?;
        let (w, r) = clearing::bidder_totals(instance, &out);
        if (0..n).all(|i| ros_ok(w[i], r[i])) {
            joint.push(idx);
        }
    }
    Ok(UndominatedSet { mode, per_bidder, joint, candidates, grid: grid.describe(mode) })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LemmaKind {
    /// VCG with reserves below value and a boost band of width at most 1:
    /// top-slot values are bid at least at value.
    Vcg,
    /// GSP, uniform value maximizers, same hypotheses and bound as `Vcg`.
    GspUniform,
    /// GSP with reserves and no boosts: every bid reaches the reserve.
    Gsp,
    /// First price with reserves and no boosts: every bid reaches the reserve.
    Fpa,
}

impl LemmaKind {
    pub const ALL: [LemmaKind; 4] = [LemmaKind::Vcg, LemmaKind::GspUniform, LemmaKind::Gsp, LemmaKind::Fpa];

    pub fn format(self) -> AuctionFormat {
        match self {
            LemmaKind::Vcg => AuctionFormat::Vcg,
            LemmaKind::GspUniform | LemmaKind::Gsp => AuctionFormat::Gsp,
            LemmaKind::Fpa => AuctionFormat::Fpa,
        }
    }

    pub fn mode(self) -> DominanceMode {
        match self {
            LemmaKind::GspUniform => DominanceMode::Uniform,
            _ => DominanceMode::General,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            LemmaKind::Vcg => "vcg",
            LemmaKind::GspUniform => "gsp-uniform",
            LemmaKind::Gsp => "gsp",
            LemmaKind::Fpa => "fpa",
        }
    }

    pub fn allows_boosts(self) -> bool {
        matches!(self, LemmaKind::Vcg | LemmaKind::GspUniform)
    }
}

/// Rejects configs outside the lemma's hypotheses.
pub fn check_hypotheses(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    lambda: &[f64],
    kind: LemmaKind,
) -> Result<()> {
    config.check_against(instance)?;
    if config.format() != kind.format() {
        return Err(Error::Hypothesis(format!(
            "lemma {} needs format {}, config has {}",
            kind.name(),
            kind.format(),
            config.format()
        )));
    }
    if kind == LemmaKind::GspUniform && lambda.iter().any(|&l| l != 0.0) {
        return Err(Error::Hypothesis("lemma gsp-uniform needs value maximizers (lambda = 0)".into()));
    }
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..instance.num_bidders() {
        for j in 0..instance.num_auctions() {
            let (v, r, z) = (instance.value(i, j), config.reserve(i, j), config.boost(i, j));
            let r_ok = if v > 0.0 { r < v } else { r == 0.0 };
            if !r_ok {
                return Err(Error::Hypothesis(format!("hypothesis r < v violated at bidder {i}, auction {j}")));
            }
            if !kind.allows_boosts() && z != 0.0 {
                return Err(Error::Hypothesis(format!("lemma {} assumes no boosts", kind.name())));
            }
            if v > 0.0 {
                lo = lo.min(z / v);
                hi = hi.max(z / v);
            } else if z != 0.0 {
                return Err(Error::Hypothesis(format!("boost on a zero value at bidder {i}, auction {j}")));
            }
        }
    }
    if hi > lo && !(hi - lo < 1.0) {
        return Err(Error::Hypothesis("no boost band [mu v, nu v) with nu - mu <= 1 contains the boosts".into()));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaViolation {
    pub bidder: usize,
    pub auction: usize,
    pub bids: Vec<f64>,
    pub bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub kind: LemmaKind,
    pub pass: bool,
    pub grid: String,
    pub undominated_per_bidder: Vec<usize>,
    pub joint_profiles: usize,
    /// Violations inside ROS-feasible joint profiles.
    pub violations: Vec<LemmaViolation>,
    /// Undominated vectors violating the bound, before the joint ROS filter.
    pub unfiltered_violations: usize,
}

fn bound_violation(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    kind: LemmaKind,
    bidder: usize,
    bids: &[f64],
) -> Option<LemmaViolation> {
    (0..instance.num_auctions()).find_map(|j| {
        let bound = match kind {
            LemmaKind::Vcg | LemmaKind::GspUniform => {
                if !instance.value_in_top_slots(bidder, j) {
                    return None;
                }
                instance.value(bidder, j)
            }
            LemmaKind::Gsp | LemmaKind::Fpa => config.reserve(bidder, j),
        };
        (bids[j] < bound).then(|| LemmaViolation { bidder, auction: j, bids: bids.to_vec(), bound })
    })
}

/// PASS iff no bid vector in a ROS-feasible joint undominated profile breaks
/// the lemma's lower bound.
pub fn verify_bid_lower_bounds(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    lambda: &[f64],
    set: &UndominatedSet,
    kind: LemmaKind,
) -> Result<LemmaReport> {
    check_hypotheses(instance, config, lambda, kind)?;
    if set.mode != kind.mode() {
        return Err(Error::Hypothesis(format!("lemma {} needs {:?} mode", kind.name(), kind.mode())));
    }
    let mut unfiltered = 0;
    let mut bad: Vec<Vec<Option<LemmaViolation>>> = Vec::new();
    for (i, vecs) in set.per_bidder.iter().enumerate() {
        let row: Vec<Option<LemmaViolation>> =
            vecs.iter().map(|b| bound_violation(instance, config, kind, i, b)).collect();
        unfiltered += row.iter().filter(|v| v.is_some()).count();
        bad.push(row);
    }
    let mut violations: Vec<LemmaViolation> = Vec::new();
    let mut seen = vec![Vec::new(); set.per_bidder.len()];
    for idx in &set.joint {
        for (i, &k) in idx.iter().enumerate() {
            if let Some(v) = &bad[i][k] {
                if !seen[i].contains(&k) {
                    seen[i].push(k);
                    violations.push(v.clone());
                }
            }
        }
    }
    Ok(LemmaReport {
        kind,
        pass: violations.is_empty(),
        grid: set.grid.clone(),
        undominated_per_bidder: set.per_bidder.iter().map(Vec::len).collect(),
        joint_profiles: set.joint.len(),
        violations,
        unfiltered_violations: unfiltered,
    })
}

/// Closure grid, undominated set and verification in one call.
pub fn check_lemma(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    lambda: &[f64],
    kind: LemmaKind,
    limits: &DominanceLimits,
) -> Result<LemmaReport> {
    check_hypotheses(instance, config, lambda, kind)?;
    let grid = BidGrid::closure(instance, config);
    let set = undominated_set(instance, config, lambda, &grid, kind.mode(), limits)?;
    verify_bid_lower_bounds(instance, config, lambda, &set, kind)
}
