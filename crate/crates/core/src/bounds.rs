//! Welfare and revenue guarantees for position auctions with reserves and
//! boosts.
//!
//! The general bound: if reserves satisfy `r >= beta v`, boosts lie in
//! `[mu v, nu v)`, top-slot values are bid at least `alpha v`, every winner
//! pays at least the VCG price and nobody spends more than their value, then
//!
//! ```text
//! Rev >= min((alpha + mu) beta / (beta + nu), beta) * Wel(OPT)
//! Wel >= (alpha + mu) / (1 + max(nu, alpha + mu - beta)) * Wel(OPT)
//! ```
//!
//! The six named mechanisms below instantiate it with `gamma`-approximate
//! signals.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::clearing::{self, RankedAuctionView};
use crate::error::{Error, Result};
use crate::rng;
use crate::types::{
    AuctionFormat, BidProfile, Matrix, MechanismConfig, Outcome, ProblemInstance, SignalConfig, SignalKind,
};

/// Relative slack on the payment comparisons (conditions 4 and 5).
const REL_TOL: f64 = 1e-12;
/// Absolute slack on achieved-vs-promised ratios.
pub const RATIO_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaParams {
    pub alpha: f64,
    pub beta: f64,
    pub mu: f64,
    pub nu: f64,
}

impl LemmaParams {
    pub fn new(alpha: f64, beta: f64, mu: f64, nu: f64) -> Result<Self> {
        let all = [alpha, beta, mu, nu];
        if all.iter().any(|x| !(x.is_finite() && *x >= 0.0)) || mu > nu {
            return Err(Error::invalid(
                "lemma parameters",
                format!("need finite nonnegative alpha, beta, mu <= nu; got {all:?}"),
            ));
        }
        Ok(LemmaParams { alpha, beta, mu, nu })
    }
}

/// `(rev_bound, wel_bound)`. The revenue bound is 0 when `beta + nu = 0`.
pub fn lemma1_bounds(p: &LemmaParams) -> (f64, f64) {
    let am = p.alpha + p.mu;
    let rev = if p.beta + p.nu == 0.0 {
        0.0
    } else {
        let a = am * p.beta / (p.beta + p.nu);
        if a < p.beta {
            a
        } else {
            p.beta
        }
    };
    let wel = am / (1.0 + f64::max(p.nu, am - p.beta));
    (rev, wel)
}

/// Named guarantees. Numbering follows the order: VCG reserve, VCG boost,
/// VCG reserve and boost, GSP reserve, GSP reserve and boost (uniform value
/// maximizers), FPA reserve. `FpaPlain` is first price with neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corollary {
    VcgReserve,
    VcgBoost,
    VcgReserveBoost,
    GspReserve,
    GspReserveBoost,
    FpaReserve,
    FpaPlain,
}

impl Corollary {
    pub const NUMBERED: [Corollary; 6] = [
        Corollary::VcgReserve,
        Corollary::VcgBoost,
        Corollary::VcgReserveBoost,
        Corollary::GspReserve,
        Corollary::GspReserveBoost,
        Corollary::FpaReserve,
    ];

    /// `1..=6`.
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1..=6 => Ok(Self::NUMBERED[usize::from(id - 1)]),
            _ => Err(Error::invalid("corollary", format!("id {id} outside 1..=6"))),
        }
    }

    pub fn id(self) -> Option<u8> {
        Self::NUMBERED.iter().position(|&c| c == self).map(|k| k as u8 + 1)
    }

    pub fn format(self) -> AuctionFormat {
        match self {
            Corollary::VcgReserve | Corollary::VcgBoost | Corollary::VcgReserveBoost => AuctionFormat::Vcg,
            Corollary::GspReserve | Corollary::GspReserveBoost => AuctionFormat::Gsp,
            Corollary::FpaReserve | Corollary::FpaPlain => AuctionFormat::Fpa,
        }
    }

    pub fn uses_reserve(self) -> bool {
        !matches!(self, Corollary::VcgBoost | Corollary::FpaPlain)
    }

    /// Boost band as multiples of the value, `[lo, hi)`.
    pub fn boost_band(self, gamma: f64) -> Option<(f64, f64)> {
        match self {
            Corollary::VcgBoost => {
                let nu = 1.0 / (1.0 - gamma);
                Some((gamma * nu, nu))
            }
            Corollary::VcgReserveBoost | Corollary::GspReserveBoost => Some((gamma, 1.0)),
            _ => None,
        }
    }

    /// Lemma parameters; `None` for the first-price theorem, which is not an
    /// instance of the general bound.
    pub fn params(self, gamma: f64) -> Option<LemmaParams> {
        let p = |alpha, beta, mu, nu| LemmaParams { alpha, beta, mu, nu };
        Some(match self {
            Corollary::VcgReserve => p(1.0, gamma, 0.0, 0.0),
            Corollary::VcgBoost => {
                let nu = 1.0 / (1.0 - gamma);
                p(1.0, 0.0, gamma * nu, nu)
            }
            Corollary::VcgReserveBoost | Corollary::GspReserveBoost => p(1.0, gamma, gamma, 1.0),
            Corollary::GspReserve | Corollary::FpaReserve => p(gamma, gamma, 0.0, 0.0),
            Corollary::FpaPlain => return None,
        })
    }

    /// Promised `(rev_ratio, wel_ratio)`.
    pub fn promised(self, gamma: f64) -> (f64, f64) {
        match self.params(gamma) {
            Some(p) => lemma1_bounds(&p),
            None => (1.0, 1.0),
        }
    }

    pub fn validate_gamma(self, gamma: f64) -> Result<()> {
        // the boost-only band scales with 1 / (1 - gamma)
        let ok = if self == Corollary::VcgBoost { (0.0..1.0).contains(&gamma) } else { (0.0..=1.0).contains(&gamma) };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("gamma", format!("{gamma} not allowed for {self:?}")))
        }
    }
}

/// One precondition of the general bound.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub condition: u8,
    pub holds: bool,
    /// First offending `(bidder, auction)` or bidder, when it fails.
    pub detail: Option<String>,
}

impl Diagnostic {
    fn pass(condition: u8) -> Self {
        Diagnostic { condition, holds: true, detail: None }
    }

    fn fail(condition: u8, detail: String) -> Self {
        Diagnostic { condition, holds: false, detail: Some(detail) }
    }
}

fn leq_rel(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * f64::max(libm::fabs(a), libm::fabs(b))
}

/// Extended VCG price at slot `k` of auction `j` for `bidder`.
pub fn vcg_floor(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    bids: &BidProfile,
    bidder: usize,
    auction: usize,
    slot: usize,
) -> f64 {
    let view = RankedAuctionView::build(config, bids, auction);
    clearing::slot_price(
        AuctionFormat::Vcg,
        instance.pos(auction),
        slot,
        f64::INFINITY,
        config.reserve(bidder, auction),
        config.boost(bidder, auction),
        |t| view.score(t),
    )
}

/// The five conditions, in order.
pub fn check_lemma1_preconditions(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    bids: &BidProfile,
    outcome: &Outcome,
    params: &LemmaParams,
) -> Result<[Diagnostic; 5]> {
    let (n, m) = (instance.num_bidders(), instance.num_auctions());
    config.check_against(instance)?;
    bids.check_against(instance)?;

    let mut c1 = Diagnostic::pass(1);
    'outer: for i in 0..n {
        for j in 0..m {
            let (v, r, z) = (instance.value(i, j), config.reserve(i, j), config.boost(i, j));
            let hi = params.nu * v;
            let boost_ok = if hi > 0.0 { params.mu * v <= z && z < hi } else { z == 0.0 };
            if !(r >= params.beta * v) || !boost_ok {
                c1 = Diagnostic::fail(1, format!("bidder {i} auction {j}: r = {r}, z = {z}, v = {v}"));
                break 'outer;
            }
        }
    }

    let reference = clearing::clear(instance, config, bids)?;
    let c2 = if (0..m).all(|j| reference.winners(j) == outcome.winners(j)) {
        Diagnostic::pass(2)
    } else {
        let j = (0..m).find(|&j| reference.winners(j) != outcome.winners(j)).unwrap_or(0);
        Diagnostic::fail(2, format!("auction {j} is not allocated by score with reserve gating"))
    };

    let mut c3 = Diagnostic::pass(3);
    'outer3: for i in 0..n {
        for j in 0..m {
            if instance.value_in_top_slots(i, j) && !(bids.bid(i, j) >= params.alpha * instance.value(i, j)) {
                c3 = Diagnostic::fail(
                    3,
                    format!(
                        "bidder {i} auction {j}: bid {} below alpha * value {}",
                        bids.bid(i, j),
                        instance.value(i, j)
                    ),
                );
                break 'outer3;
            }
        }
    }

    let mut c4 = Diagnostic::pass(4);
    'outer4: for j in 0..m {
        for (k, &i) in outcome.winners(j).iter().enumerate() {
            let floor = vcg_floor(instance, config, bids, i, j, k);
            if !leq_rel(floor, outcome.payment(i, j)) {
                c4 = Diagnostic::fail(
                    4,
                    format!("bidder {i} auction {j}: pays {} below VCG price {floor}", outcome.payment(i, j)),
                );
                break 'outer4;
            }
        }
    }

    let (wel, rev) = clearing::bidder_totals(instance, outcome);
    let c5 = match (0..n).find(|&i| !leq_rel(rev[i], wel[i])) {
        None => Diagnostic::pass(5),
        Some(i) => Diagnostic::fail(5, format!("bidder {i} pays {} for value {}", rev[i], wel[i])),
    };
    Ok([c1, c2, c3, c4, c5])
}

/// Per auction and slot depth, who holds the top `k` slots in the outcome
/// and in the welfare-optimal allocation.
#[derive(Clone, Debug, PartialEq)]
pub struct OverlapPartition {
    // [auction][k - 1] -> sorted bidder sets
    allocated: Vec<Vec<Vec<usize>>>,
    optimal: Vec<Vec<Vec<usize>>>,
}

impl OverlapPartition {
    pub fn build(instance: &ProblemInstance, outcome: &Outcome) -> Self {
        let mut allocated = Vec::new();
        let mut optimal = Vec::new();
        for j in 0..instance.num_auctions() {
            let mut by_value: Vec<usize> =
                (0..instance.num_bidders()).filter(|&i| instance.value(i, j) > 0.0).collect();
            by_value.sort_by(|&a, &b| clearing::rank_cmp(instance.value(a, j), a, instance.value(b, j), b));
            let s = instance.slots(j);
            let mut a_j = Vec::with_capacity(s);
            let mut o_j = Vec::with_capacity(s);
            for k in 1..=s {
                let mut a: Vec<usize> = outcome.winners(j).iter().take(k).copied().collect();
                let mut o: Vec<usize> = by_value.iter().take(k).copied().collect();
                a.sort_unstable();
                o.sort_unstable();
                a_j.push(a);
                o_j.push(o);
            }
            allocated.push(a_j);
            optimal.push(o_j);
        }
        OverlapPartition { allocated, optimal }
    }

    /// Winners of the top `k` slots (`k >= 1`).
    pub fn allocated(&self, auction: usize, k: usize) -> &[usize] {
        &self.allocated[auction][k - 1]
    }

    pub fn optimal(&self, auction: usize, k: usize) -> &[usize] {
        &self.optimal[auction][k - 1]
    }

    pub fn both(&self, auction: usize, k: usize) -> Vec<usize> {
        let o = self.optimal(auction, k);
        self.allocated(auction, k).iter().filter(|i| o.contains(i)).copied().collect()
    }

    pub fn only_allocated(&self, auction: usize, k: usize) -> Vec<usize> {
        let o = self.optimal(auction, k);
        self.allocated(auction, k).iter().filter(|i| !o.contains(i)).copied().collect()
    }

    pub fn only_optimal(&self, auction: usize, k: usize) -> Vec<usize> {
        let a = self.allocated(auction, k);
        self.optimal(auction, k).iter().filter(|i| !a.contains(i)).copied().collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub corollary: Corollary,
    pub gamma: f64,
    pub wel_ratio: f64,
    pub rev_ratio: f64,
    pub wel_bound: f64,
    pub rev_bound: f64,
    /// Conditions that could be evaluated; those needing bids are absent
    /// when no bids were supplied.
    pub preconditions: Vec<Diagnostic>,
    pub pass: bool,
}

/// Achieved `(wel, rev)` over `Wel(OPT)`; both 1 when `Wel(OPT) = 0`.
pub fn achieved_ratios(instance: &ProblemInstance, outcome: &Outcome) -> (f64, f64) {
    let opt = clearing::opt_welfare(instance);
    if opt == 0.0 {
        return (1.0, 1.0);
    }
    (clearing::welfare(instance, outcome) / opt, clearing::revenue(outcome) / opt)
}

/// Whether `x` lies in `[lo_factor v, hi_factor v)`, where an empty band
/// admits only the float just below its upper end (0 when `v = 0`).
fn in_band(x: f64, v: f64, lo_factor: f64, hi_factor: f64) -> bool {
    let hi = hi_factor * v;
    if hi <= 0.0 {
        return x == 0.0;
    }
    let lo = lo_factor * v;
    x < hi && (x >= lo || (lo >= hi.next_down() && x == hi.next_down()))
}

/// Rejects configs whose reserves or boosts fall outside the corollary's bands.
pub fn check_bands(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    corollary: Corollary,
    gamma: f64,
) -> Result<()> {
    corollary.validate_gamma(gamma)?;
    config.check_against(instance)?;
    if config.format() != corollary.format() {
        return Err(Error::BandViolation(format!(
            "{:?} needs format {}, config has {}",
            corollary,
            corollary.format(),
            config.format()
        )));
    }
    for i in 0..instance.num_bidders() {
        for j in 0..instance.num_auctions() {
            let v = instance.value(i, j);
            let r = config.reserve(i, j);
            let z = config.boost(i, j);
            let r_ok = if corollary.uses_reserve() { in_band(r, v, gamma, 1.0) } else { r == 0.0 };
            if !r_ok {
                return Err(Error::BandViolation(format!(
                    "reserve[{i}][{j}] = {r} outside the {gamma}-approx band for value {v}"
                )));
            }
            let z_ok = match corollary.boost_band(gamma) {
                Some((lo, hi)) => in_band(z, v, lo, hi),
                None => z == 0.0,
            };
            if !z_ok {
                return Err(Error::BandViolation(format!(
                    "boost[{i}][{j}] = {z} outside the {gamma}-approx band for value {v}"
                )));
            }
        }
    }
    Ok(())
}

fn report(
    instance: &ProblemInstance,
    outcome: &Outcome,
    corollary: Corollary,
    gamma: f64,
    preconditions: Vec<Diagnostic>,
) -> BoundReport {
    let (wel_ratio, rev_ratio) = achieved_ratios(instance, outcome);
    let (rev_bound, wel_bound) = corollary.promised(gamma);
    let pass = preconditions.iter().all(|d| d.holds)
        && wel_ratio >= wel_bound - RATIO_TOL
        && rev_ratio >= rev_bound - RATIO_TOL;
    BoundReport { corollary, gamma, wel_ratio, rev_ratio, wel_bound, rev_bound, preconditions, pass }
}

/// Compares achieved ratios with the corollary's promise. Only the
/// bid-free conditions (reserve and boost bands, ROS) are checked.
pub fn assert_corollary(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    outcome: &Outcome,
    corollary: Corollary,
    gamma: f64,
) -> Result<BoundReport> {
    check_bands(instance, config, corollary, gamma)?;
    let (wel, rev) = clearing::bidder_totals(instance, outcome);
    let c5 = match (0..instance.num_bidders()).find(|&i| !leq_rel(rev[i], wel[i])) {
        None => Diagnostic::pass(5),
        Some(i) => Diagnostic::fail(5, format!("bidder {i} pays {} for value {}", rev[i], wel[i])),
    };
    Ok(report(instance, outcome, corollary, gamma, vec![Diagnostic::pass(1), c5]))
}

/// As [`assert_corollary`], with all five conditions checked against `bids`.
pub fn assert_corollary_with_bids(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    bids: &BidProfile,
    corollary: Corollary,
    gamma: f64,
) -> Result<BoundReport> {
    check_bands(instance, config, corollary, gamma)?;
    let outcome = clearing::clear(instance, config, bids)?;
    let pre = match corollary.params(gamma) {
        Some(p) => check_lemma1_preconditions(instance, config, bids, &outcome, &p)?.to_vec(),
        None => Vec::new(),
    };
    Ok(report(instance, &outcome, corollary, gamma, pre))
}

/// Uniform draw in `[lo, hi)`; an empty band yields the float below `hi`.
fn draw_band<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= 0.0 {
        return 0.0;
    }
    if lo >= hi {
        return hi.next_down();
    }
    let u: f64 = rng.random();
    let x = lo + u * (hi - lo);
    if x >= hi {
        hi.next_down().max(lo)
    } else {
        x
    }
}

/// Reserves in `[gamma v, v)` or boosts in `[gamma nu v, nu v)`, uniform on
/// the band, drawn from `rng`.
pub fn sample_signals_with<R: Rng + ?Sized>(instance: &ProblemInstance, signal: &SignalConfig, rng: &mut R) -> Matrix {
    let (lo, hi) = match signal.kind() {
        SignalKind::Reserve => (signal.gamma(), 1.0),
        SignalKind::Boost { nu } => (signal.gamma() * nu, nu),
    };
    let mut out = Matrix::zeros(instance.num_bidders(), instance.num_auctions());
    for i in 0..instance.num_bidders() {
        for j in 0..instance.num_auctions() {
            let v = instance.value(i, j);
            out.set(i, j, draw_band(rng, lo * v, hi * v));
        }
    }
    out
}

/// [`sample_signals_with`] on the stream named after the signal kind.
pub fn sample_signals(instance: &ProblemInstance, signal: &SignalConfig, seed: u64) -> Matrix {
    let name = match signal.kind() {
        SignalKind::Reserve => "reserve",
        SignalKind::Boost { .. } => "boost",
    };
    let mut rng = rng::substream(seed, &["signals", name]);
    sample_signals_with(instance, signal, &mut rng)
}

/// A config drawn in the corollary's bands.
pub fn sample_corollary_config<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    corollary: Corollary,
    gamma: f64,
    rng: &mut R,
) -> Result<MechanismConfig> {
    corollary.validate_gamma(gamma)?;
    let (n, m) = (instance.num_bidders(), instance.num_auctions());
    let reserves = if corollary.uses_reserve() {
        sample_signals_with(instance, &SignalConfig::reserve(gamma)?, rng)
    } else {
        Matrix::zeros(n, m)
    };
    let boosts = match corollary.boost_band(gamma) {
        Some((_, hi)) => sample_signals_with(instance, &SignalConfig::boost(gamma, hi)?, rng),
        None => Matrix::zeros(n, m),
    };
    MechanismConfig::new(corollary.format(), reserves, boosts)
}

/// Bids meeting the corollary's bid lower bound and ROS.
///
/// Starts from random multipliers in `[floor, 1.5]` (`floor = 1`, or
/// `gamma` for the reserve-only GSP/FPA cases where bids are also raised to
/// the reserve), then repeatedly halves the excess over truthful for every
/// bidder that overspends. Falls back to truthful bids, which never overspend.
pub fn sample_lemma_bids<R: Rng + ?Sized>(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    corollary: Corollary,
    gamma: f64,
    rng: &mut R,
) -> Result<BidProfile> {
    let n = instance.num_bidders();
    let low = matches!(corollary, Corollary::GspReserve | Corollary::FpaReserve);
    let floor = if low { gamma } else { 1.0 };
    let build = |delta: &[f64]| -> Result<BidProfile> {
        BidProfile::new(instance.values().map(|i, j, v| {
            let b = delta[i] * v;
            if low && b < config.reserve(i, j) && delta[i] < 1.0 {
                // raise to the reserve but never above the value
                config.reserve(i, j).min(v)
            } else {
                b
            }
        }))
    };
    let mut delta: Vec<f64> = (0..n).map(|_| floor + rng.random::<f64>() * (1.5 - floor)).collect();
    if corollary == Corollary::FpaReserve {
        for d in &mut delta {
            *d = d.min(1.0);
        }
    }
    for round in 0..64 {
        let bids = build(&delta)?;
        let out = clearing::clear(instance, config, &bids)?;
        let (w, r) = clearing::bidder_totals(instance, &out);
        let bad: Vec<usize> = (0..n).filter(|&i| !(r[i] <= w[i])).collect();
        if bad.is_empty() {
            return Ok(bids);
        }
        for i in bad {
            delta[i] = if round < 40 && delta[i] > 1.0 { 1.0 + (delta[i] - 1.0) / 2.0 } else { 1.0 };
        }
    }
    build(&vec![1.0; n])
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TightKind {
    ReserveOnly,
    BoostOnly,
    ReserveAndBoost,
    RevenueSingle,
}

impl TightKind {
    pub const ALL: [TightKind; 4] =
        [TightKind::ReserveOnly, TightKind::BoostOnly, TightKind::ReserveAndBoost, TightKind::RevenueSingle];

    pub fn name(self) -> &'static str {
        match self {
            TightKind::ReserveOnly => "reserve_only",
            TightKind::BoostOnly => "boost_only",
            TightKind::ReserveAndBoost => "reserve_and_boost",
            TightKind::RevenueSingle => "revenue_single",
        }
    }

    /// The guarantee this instance shows to be tight.
    pub fn corollary(self) -> Corollary {
        match self {
            TightKind::ReserveOnly | TightKind::RevenueSingle => Corollary::VcgReserve,
            TightKind::BoostOnly => Corollary::VcgBoost,
            TightKind::ReserveAndBoost => Corollary::VcgReserveBoost,
        }
    }
}

/// A worst-case instance: signals at the edge of their bands and a uniform
/// bid profile for value maximizers that realizes the bad outcome.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TightInstance {
    pub kind: TightKind,
    pub gamma: f64,
    pub eps: f64,
    pub instance: ProblemInstance,
    pub config: MechanismConfig,
    pub multipliers: Vec<f64>,
    pub bids: BidProfile,
    /// Welfare ratio the bad outcome attains in the limit `eps -> 0`.
    pub expected_wel_ratio: f64,
    /// Revenue ratio the bad outcome attains in the limit `eps -> 0`.
    pub expected_rev_ratio: Option<f64>,
}

/// Builds the instance for `kind`. For the two-bidder kinds, bidder 2 values
/// the auctions at `(0, 1)` and bids truthfully; bidder 1 uses the largest
/// multiplier that keeps it within ROS whenever it wins auction 2, which is
/// the undominated way to win both auctions.
pub fn tight_instance(kind: TightKind, gamma: f64, eps: f64) -> Result<TightInstance> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(Error::invalid("gamma", format!("{gamma} outside (0, 1)")));
    }
    if !(eps > 0.0 && eps < 0.1) {
        return Err(Error::invalid("eps", format!("{eps} outside (0, 0.1)")));
    }
    let g = gamma;
    let two = |v1: [f64; 2]| -> Result<ProblemInstance> {
        ProblemInstance::new(Matrix::from_rows(vec![v1.to_vec(), vec![0.0, 1.0]])?, vec![vec![1.0], vec![1.0]])
    };
    let (instance, config, delta1, expected_wel, expected_rev) = match kind {
        TightKind::ReserveOnly => {
            let inst = two([1.0 / (1.0 - g), eps])?;
            let reserves = Matrix::from_rows(vec![vec![g / (1.0 - g), g * eps], vec![0.0, g]])?;
            let cfg = MechanismConfig::new(AuctionFormat::Vcg, reserves, Matrix::zeros(2, 2))?;
            (inst, cfg, (1.0 + eps) / eps, 1.0 / (2.0 - g), None)
        }
        TightKind::BoostOnly => {
            let nu = 1.0 / (1.0 - g);
            let mu = g * nu;
            let inst = two([1.0 - g + eps, g])?;
            // auction 2: bidder 1 at the top of its band, bidder 2 at the bottom
            let boosts = Matrix::from_rows(vec![vec![mu * (1.0 - g + eps), (nu * g).next_down()], vec![0.0, mu]])?;
            let cfg = MechanismConfig::new(AuctionFormat::Vcg, Matrix::zeros(2, 2), boosts)?;
            (inst, cfg, (1.0 + eps) / g, 1.0 / (2.0 - g), None)
        }
        TightKind::ReserveAndBoost => {
            let inst = two([1.0 + eps, g])?;
            let reserves = Matrix::from_rows(vec![vec![g * (1.0 + eps), g * g], vec![0.0, g]])?;
            let boosts = Matrix::from_rows(vec![vec![g * (1.0 + eps), g.next_down()], vec![0.0, g]])?;
            let cfg = MechanismConfig::new(AuctionFormat::Vcg, reserves, boosts)?;
            (inst, cfg, (1.0 + eps * (1.0 - g)) / g, (1.0 + g) / 2.0, Some(g))
        }
        TightKind::RevenueSingle => {
            let inst = ProblemInstance::new(Matrix::filled(1, 1, 1.0), vec![vec![1.0]])?;
            let cfg = MechanismConfig::new(AuctionFormat::Vcg, Matrix::filled(1, 1, g), Matrix::zeros(1, 1))?;
            let bids = BidProfile::new(Matrix::filled(1, 1, 1.0))?;
            return Ok(TightInstance {
                kind,
                gamma,
                eps,
                instance: inst,
                config: cfg,
                multipliers: vec![1.0],
                bids,
                expected_wel_ratio: 1.0,
                expected_rev_ratio: Some(g),
            });
        }
    };
    // step down until winning auction 2 stays within ROS
    let mut d = delta1;
    let bids = loop {
        let bids = BidProfile::new(instance.values().map(|i, _, v| if i == 0 { d * v } else { v }))?;
        let out = clearing::clear(&instance, &config, &bids)?;
        let (w, r) = clearing::bidder_totals(&instance, &out);
        let wins_both = out.slot_of(0, 0).is_some() && out.slot_of(0, 1).is_some();
        if wins_both && r[0] <= w[0] && r[1] <= w[1] {
            break bids;
        }
        if !wins_both {
            return Err(Error::invalid("tight instance", format!("{kind:?}: bidder 1 fails to win both auctions")));
        }
        d = d.next_down();
    };
    check_bands(&instance, &config, kind.corollary(), gamma)?;
    Ok(TightInstance {
        kind,
        gamma,
        eps,
        instance,
        config,
        multipliers: vec![d, 1.0],
        bids,
        expected_wel_ratio: expected_wel,
        expected_rev_ratio: expected_rev,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    #[test]
    fn corollary_constants() {
        for &g in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let one = 1.0 / (2.0 - g);
            let half = (1.0 + g) / 2.0;
            let expect = [(g, one), (0.0, one), (g, half), (g, g), (g, half), (g, g)];
            for (c, (r, w)) in Corollary::NUMBERED.iter().zip(expect) {
                let (pr, pw) = c.promised(g);
                assert!((pr - r).abs() <= 1e-12, "{c:?} rev at {g}");
                assert!((pw - w).abs() <= 1e-12, "{c:?} wel at {g}");
            }
        }
        assert_eq!(Corollary::FpaPlain.promised(0.3), (1.0, 1.0));
    }

    #[test]
    fn worked_parameterizations() {
        let (r, w) = lemma1_bounds(&LemmaParams::new(1.0, 0.5, 0.0, 0.0).unwrap());
        assert_eq!(r, 0.5);
        assert!((w - 2.0 / 3.0).abs() < 1e-15);
        let (r, w) = lemma1_bounds(&LemmaParams::new(1.0, 0.0, 1.0, 2.0).unwrap());
        assert_eq!(r, 0.0);
        assert!((w - 2.0 / 3.0).abs() < 1e-15);
        let (r, w) = lemma1_bounds(&LemmaParams::new(1.0, 0.5, 0.5, 1.0).unwrap());
        assert_eq!((r, w), (0.5, 0.75));
        let (r, w) = lemma1_bounds(&LemmaParams::new(0.5, 0.5, 0.0, 0.0).unwrap());
        assert_eq!((r, w), (0.5, 0.5));
        assert_eq!(lemma1_bounds(&LemmaParams::new(1.0, 0.0, 0.0, 0.0).unwrap()).0, 0.0);
        let (r, w) = Corollary::VcgReserve.promised(0.7);
        assert_eq!(r, 0.7);
        assert!((w - 1.0 / 1.3).abs() < 1e-12);
    }

    #[test]
    fn ordering_of_the_three_constants() {
        for k in 1..1000 {
            let g = k as f64 / 1000.0;
            assert!((1.0 + g) / 2.0 > 1.0 / (2.0 - g));
            assert!(1.0 / (2.0 - g) > g);
        }
    }

    #[test]
    fn corollary_ids_round_trip() {
        for id in 1..=6u8 {
            assert_eq!(Corollary::from_id(id).unwrap().id(), Some(id));
        }
        assert!(Corollary::from_id(0).is_err());
        assert!(Corollary::from_id(7).is_err());
    }

    fn random_instance(rng: &mut ChaCha20Rng, n: usize, m: usize) -> ProblemInstance {
        let values =
            Matrix::from_fn(n, m, |_, _| if rng.random::<f64>() < 0.2 { 0.0 } else { rng.random::<f64>() * 3.0 });
        let pos = (0..m)
            .map(|_| {
                let s = rng.random_range(1..=n.min(3));
                let mut p = vec![1.0];
                for _ in 1..s {
                    let last = *p.last().unwrap();
                    p.push(last * rng.random_range(0.4..0.95));
                }
                p
            })
            .collect();
        ProblemInstance::new(values, pos).unwrap()
    }

    #[test]
    fn truthful_vcg_with_reserves_meets_all_conditions() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for _ in 0..200 {
            let inst = random_instance(&mut rng, 4, 3);
            let g = rng.random_range(0.05..0.95);
            let cfg = MechanismConfig::new(AuctionFormat::Vcg, inst.values().map(|_, _, v| g * v), Matrix::zeros(4, 3))
                .unwrap();
            let bids = BidProfile::new(inst.values().clone()).unwrap();
            let out = clearing::clear(&inst, &cfg, &bids).unwrap();
            let d = check_lemma1_preconditions(&inst, &cfg, &bids, &out, &LemmaParams::new(1.0, g, 0.0, 0.0).unwrap())
                .unwrap();
            assert!(d.iter().all(|c| c.holds), "{d:?}");
        }
    }

    #[test]
    fn underbidding_a_top_value_breaks_condition_three() {
        let inst =
            ProblemInstance::new(Matrix::from_rows(vec![vec![2.0], vec![1.0]]).unwrap(), vec![vec![1.0]]).unwrap();
        let cfg = MechanismConfig::plain(AuctionFormat::Vcg, 2, 1);
        let bids = BidProfile::new(Matrix::from_rows(vec![vec![1.0], vec![1.0]]).unwrap()).unwrap();
        let out = clearing::clear(&inst, &cfg, &bids).unwrap();
        let d = check_lemma1_preconditions(&inst, &cfg, &bids, &out, &LemmaParams::new(1.0, 0.0, 0.0, 0.0).unwrap())
            .unwrap();
        assert!(!d[2].holds);
        assert!(d[2].detail.as_ref().unwrap().contains("bidder 0 auction 0"));
    }

    #[test]
    fn gsp_pays_at_least_the_vcg_floor() {
        let mut rng = ChaCha20Rng::seed_from_u64(12);
        for _ in 0..200 {
            let inst = random_instance(&mut rng, 4, 3);
            let cfg = sample_corollary_config(&inst, Corollary::GspReserveBoost, 0.4, &mut rng).unwrap();
            let bids = BidProfile::new(inst.values().map(|_, _, v| v * rng.random_range(0.5..1.5))).unwrap();
            let out = clearing::clear(&inst, &cfg, &bids).unwrap();
            let d =
                check_lemma1_preconditions(&inst, &cfg, &bids, &out, &LemmaParams::new(0.0, 0.0, 0.0, 0.0).unwrap())
                    .unwrap();
            assert!(d[3].holds, "{d:?}");
        }
    }

    #[test]
    fn optimal_outcome_passes_every_corollary() {
        let inst = ProblemInstance::new(
            Matrix::from_rows(vec![vec![3.0, 1.0], vec![1.0, 2.0]]).unwrap(),
            vec![vec![1.0], vec![1.0, 0.5]],
        )
        .unwrap();
        // OPT allocation with each winner paying its full value
        let payments = Matrix::from_rows(vec![vec![3.0, 0.5], vec![0.0, 2.0]]).unwrap();
        let out = Outcome::new(vec![vec![0], vec![1, 0]], payments).unwrap();
        for c in Corollary::NUMBERED {
            let g = 0.5;
            let mut rng = ChaCha20Rng::seed_from_u64(1);
            let cfg = sample_corollary_config(&inst, c, g, &mut rng).unwrap();
            let rep = assert_corollary(&inst, &cfg, &out, c, g).unwrap();
            assert!(rep.pass, "{rep:?}");
            assert_eq!(rep.wel_ratio, 1.0);
        }
    }

    #[test]
    fn out_of_band_config_is_rejected() {
        let inst = ProblemInstance::new(Matrix::filled(1, 1, 1.0), vec![vec![1.0]]).unwrap();
        let cfg = MechanismConfig::new(AuctionFormat::Vcg, Matrix::filled(1, 1, 1.0), Matrix::zeros(1, 1)).unwrap();
        let out = Outcome::empty(1, 1);
        assert!(matches!(
            assert_corollary(&inst, &cfg, &out, Corollary::VcgReserve, 0.5),
            Err(Error::BandViolation(_))
        ));
        let gsp = cfg.with_format(AuctionFormat::Gsp);
        assert!(matches!(
            assert_corollary(&inst, &gsp, &out, Corollary::VcgReserve, 0.5),
            Err(Error::BandViolation(_))
        ));
    }

    #[test]
    fn perfect_reserve_signal_sits_just_below_value() {
        let inst =
            ProblemInstance::new(Matrix::from_rows(vec![vec![2.0, 0.0]]).unwrap(), vec![vec![1.0], vec![1.0]]).unwrap();
        let r = sample_signals(&inst, &SignalConfig::reserve(1.0).unwrap(), 3);
        assert_eq!(r.get(0, 0), 2.0f64.next_down());
        assert_eq!(r.get(0, 1), 0.0);
    }

    #[test]
    fn overlap_partition_sizes() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for _ in 0..100 {
            let inst = random_instance(&mut rng, 4, 3);
            let bids = BidProfile::new(inst.values().map(|_, _, v| v * rng.random_range(0.5..1.5))).unwrap();
            let out = clearing::clear(&inst, &MechanismConfig::plain(AuctionFormat::Vcg, 4, 3), &bids).unwrap();
            let part = OverlapPartition::build(&inst, &out);
            for j in 0..3 {
                let positive = (0..4).filter(|&i| inst.value(i, j) > 0.0).count();
                for k in 1..=inst.slots(j) {
                    assert!(part.allocated(j, k).len() <= k);
                    assert_eq!(part.optimal(j, k).len(), k.min(positive));
                    let a = part.allocated(j, k).len();
                    let o = part.optimal(j, k).len();
                    if a == k && o == k {
                        assert_eq!(part.only_allocated(j, k).len(), part.only_optimal(j, k).len());
                    }
                    assert_eq!(part.both(j, k).len() + part.only_optimal(j, k).len(), o);
                }
            }
        }
    }

    #[test]
    fn tight_instances_hit_their_ratios() {
        for &g in &[0.3, 0.5, 0.7] {
            for kind in TightKind::ALL {
                let t = tight_instance(kind, g, 1e-3).unwrap();
                let out = clearing::clear(&t.instance, &t.config, &t.bids).unwrap();
                let (w, r) = achieved_ratios(&t.instance, &out);
                if kind == TightKind::RevenueSingle {
                    assert_eq!(r, g);
                } else {
                    assert!((w - t.expected_wel_ratio).abs() <= 2e-3, "{kind:?} {g}: {w}");
                    assert!(out.slot_of(0, 0).is_some() && out.slot_of(0, 1).is_some());
                }
            }
        }
        assert!(tight_instance(TightKind::ReserveOnly, 1.0, 1e-3).is_err());
    }

    #[test]
    fn lemma_bids_satisfy_all_conditions() {
        let mut rng = ChaCha20Rng::seed_from_u64(21);
        for c in Corollary::NUMBERED {
            for _ in 0..50 {
                let inst = random_instance(&mut rng, 4, 3);
                let g = rng.random_range(0.05..0.95);
                let cfg = sample_corollary_config(&inst, c, g, &mut rng).unwrap();
                let bids = sample_lemma_bids(&inst, &cfg, c, g, &mut rng).unwrap();
                let rep = assert_corollary_with_bids(&inst, &cfg, &bids, c, g).unwrap();
                let failed: Vec<_> = rep.preconditions.iter().filter(|d| !d.holds).collect();
                assert!(failed.is_empty(), "{c:?}: {failed:?}");
            }
        }
    }

    proptest! {
        #[test]
        fn sampled_signals_stay_in_band(seed in any::<u64>(), g in 0.0f64..=1.0, nu in 0.1f64..4.0) {
            let mut rng = ChaCha20Rng::seed_from_u64(seed);
            let inst = random_instance(&mut rng, 4, 3);
            let r = sample_signals(&inst, &SignalConfig::reserve(g).unwrap(), seed);
            let z = sample_signals(&inst, &SignalConfig::boost(g, nu).unwrap(), seed);
            for i in 0..4 {
                for j in 0..3 {
                    let v = inst.value(i, j);
                    prop_assert!(in_band(r.get(i, j), v, g, 1.0));
                    prop_assert!(in_band(z.get(i, j), v, g * nu, nu));
                    if v > 0.0 {
                        prop_assert!(r.get(i, j) < v);
                        prop_assert!(z.get(i, j) < nu * v);
                    }
                }
            }
        }

        #[test]
        fn bounds_are_monotone(a in 0.0f64..2.0, b in 0.0f64..1.0, mu in 0.0f64..2.0, extra in 0.0f64..2.0, d in 0.0f64..0.5) {
            let nu = mu + extra;
            let base = lemma1_bounds(&LemmaParams { alpha: a, beta: b, mu, nu });
            let more_beta = lemma1_bounds(&LemmaParams { alpha: a, beta: b + d, mu, nu });
            let more_mu = lemma1_bounds(&LemmaParams { alpha: a, beta: b, mu: (mu + d).min(nu), nu });
            let more_alpha = lemma1_bounds(&LemmaParams { alpha: a + d, beta: b, mu, nu });
            prop_assert!(more_beta.0 >= base.0 - 1e-15);
            prop_assert!(more_mu.0 >= base.0 - 1e-15);
            prop_assert!(more_alpha.1 >= base.1 - 1e-15);
            prop_assert!(more_mu.1 >= base.1 - 1e-15);
        }
    }
}
