//! Deterministic clearing of position auctions.
//!
//! Each auction is cleared independently. A bidder is eligible when its raw
//! bid reaches its reserve (`b >= r`), eligible bidders are ranked by score
//! `b + z` with ties going to the lower index, and the top `s_j` win slots
//! from the top down. Prices use the extended score sequence: the `k`-th
//! highest eligible score for every rank, and `0` past the last eligible
//! bidder. The VCG sum runs through the rank just below the last slot, so a
//! reserve binds even on the bottom slot.

use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::error::Result;
use crate::types::{AuctionFormat, BidProfile, Matrix, MechanismConfig, Outcome, ProblemInstance};

/// Eligible bidders of one auction in rank order, with their scores.
#[derive(Clone, Debug, PartialEq)]
pub struct RankedAuctionView {
    order: Vec<usize>,
    scores: Vec<f64>,
}

impl RankedAuctionView {
    pub fn build(config: &MechanismConfig, bids: &BidProfile, auction: usize) -> Self {
        let n = bids.matrix().rows();
        let mut entries: Vec<(usize, f64)> = (0..n)
            .filter(|&i| bids.bid(i, auction) >= config.reserve(i, auction))
            .map(|i| (i, bids.bid(i, auction) + config.boost(i, auction)))
            .collect();
        entries.sort_by(|a, b| rank_cmp(a.1, a.0, b.1, b.0));
        RankedAuctionView {
            order: entries.iter().map(|e| e.0).collect(),
            scores: entries.iter().map(|e| e.1).collect(),
        }
    }

    /// Eligible bidders, best first.
    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Extended score at zero-based rank `k`; `0` past the last eligible bidder.
    #[inline]
    pub fn score(&self, k: usize) -> f64 {
        self.scores.get(k).copied().unwrap_or(0.0)
    }

    pub fn num_eligible(&self) -> usize {
        self.order.len()
    }
}

/// Ranking order: higher score first, then lower index.
#[inline]
pub(crate) fn rank_cmp(score_a: f64, idx_a: usize, score_b: f64, idx_b: usize) -> Ordering {
    if score_a > score_b {
        Ordering::Less
    } else if score_a < score_b {
        Ordering::Greater
    } else {
        idx_a.cmp(&idx_b)
    }
}

/// `max(score - z, r)` floored at 0 and capped at the winner's bid.
#[inline]
fn price_term(score: f64, bid: f64, reserve: f64, boost: f64) -> f64 {
    let t = score - boost;
    let t = if t > reserve { t } else { reserve };
    let t = if t > 0.0 { t } else { 0.0 };
    if t < bid {
        t
    } else {
        bid
    }
}

/// Price for the winner of zero-based slot `k`. `score_at(t)` yields the
/// extended score sequence of the auction.
pub(crate) fn slot_price(
    format: AuctionFormat,
    pos: &[f64],
    k: usize,
    bid: f64,
    reserve: f64,
    boost: f64,
    score_at: impl Fn(usize) -> f64,
) -> f64 {
    let s = pos.len();
    let pos_at = |t: usize| if t < s { pos[t] } else { 0.0 };
    match format {
        AuctionFormat::Vcg => {
            let mut p = 0.0;
            for t in k + 1..=s {
                p += price_term(score_at(t), bid, reserve, boost) * (pos_at(t - 1) - pos_at(t));
            }
            p
        }
        AuctionFormat::Gsp => price_term(score_at(k + 1), bid, reserve, boost) * pos[k],
        AuctionFormat::Fpa => bid * pos[k],
    }
}

/// Winners and their payments for one auction.
#[derive(Clone, Debug, PartialEq)]
pub struct AuctionOutcome {
    /// Bidders by slot, best slot first.
    pub winners: Vec<usize>,
    /// Payment of `winners[k]`.
    pub payments: Vec<f64>,
}

pub fn clear_auction(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    bids: &BidProfile,
    auction: usize,
) -> AuctionOutcome {
    let view = RankedAuctionView::build(config, bids, auction);
    let pos = instance.pos(auction);
    let filled = pos.len().min(view.num_eligible());
    let winners: Vec<usize> = view.order[..filled].to_vec();
    let payments = winners
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            slot_price(
                config.format(),
                pos,
                k,
                bids.bid(i, auction),
                config.reserve(i, auction),
                config.boost(i, auction),
                |t| view.score(t),
            )
        })
        .collect();
    AuctionOutcome { winners, payments }
}

fn check(instance: &ProblemInstance, config: &MechanismConfig, bids: &BidProfile) -> Result<()> {
    config.check_against(instance)?;
    bids.check_against(instance)
}

fn assemble(n: usize, per_auction: Vec<AuctionOutcome>) -> Outcome {
    let mut payments = Matrix::zeros(n, per_auction.len());
    let mut winners = Vec::with_capacity(per_auction.len());
    for (j, a) in per_auction.into_iter().enumerate() {
        for (&i, &p) in a.winners.iter().zip(&a.payments) {
            payments.set(i, j, p);
        }
        winners.push(a.winners);
    }
    Outcome::from_parts_unchecked(winners, payments)
}

/// Clears every auction sequentially.
pub fn clear(instance: &ProblemInstance, config: &MechanismConfig, bids: &BidProfile) -> Result<Outcome> {
    check(instance, config, bids)?;
    let per_auction = (0..instance.num_auctions()).map(|j| clear_auction(instance, config, bids, j)).collect();
    Ok(assemble(instance.num_bidders(), per_auction))
}

/// Same result as [`clear`], computed in parallel across auctions when the
/// `std` feature is on.
pub fn clear_batch(instance: &ProblemInstance, config: &MechanismConfig, bids: &BidProfile) -> Result<Outcome> {
    check(instance, config, bids)?;
    #[cfg(feature = "std")]
    let per_auction = {
        use rayon::prelude::*;
        (0..instance.num_auctions()).into_par_iter().map(|j| clear_auction(instance, config, bids, j)).collect()
    };
    #[cfg(not(feature = "std"))]
    let per_auction = (0..instance.num_auctions()).map(|j| clear_auction(instance, config, bids, j)).collect();
    Ok(assemble(instance.num_bidders(), per_auction))
}

/// Optimal welfare: per auction, the `k`-th highest value times `pos_k`.
pub fn opt_welfare(instance: &ProblemInstance) -> f64 {
    let mut total = 0.0;
    let mut col = Vec::with_capacity(instance.num_bidders());
    for j in 0..instance.num_auctions() {
        col.clear();
        col.extend((0..instance.num_bidders()).map(|i| instance.value(i, j)));
        col.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
        for (k, &p) in instance.pos(j).iter().enumerate() {
            total += p * col[k];
        }
    }
    total
}

/// `Wel = sum x * v * pos`, summed by auction then slot.
pub fn welfare(instance: &ProblemInstance, outcome: &Outcome) -> f64 {
    let mut total = 0.0;
    for j in 0..outcome.num_auctions() {
        for (k, &i) in outcome.winners(j).iter().enumerate() {
            total += instance.value(i, j) * instance.pos_at(j, k);
        }
    }
    total
}

/// `Rev = sum p`, summed by auction then slot.
pub fn revenue(outcome: &Outcome) -> f64 {
    let mut total = 0.0;
    for j in 0..outcome.num_auctions() {
        for &i in outcome.winners(j) {
            total += outcome.payment(i, j);
        }
    }
    total
}

/// Per-bidder welfare and revenue, each summed over auctions in order.
pub fn bidder_totals(instance: &ProblemInstance, outcome: &Outcome) -> (Vec<f64>, Vec<f64>) {
    let n = instance.num_bidders();
    let mut wel = alloc::vec![0.0; n];
    let mut rev = alloc::vec![0.0; n];
    for j in 0..outcome.num_auctions() {
        for (k, &i) in outcome.winners(j).iter().enumerate() {
            wel[i] += instance.value(i, j) * instance.pos_at(j, k);
            rev[i] += outcome.payment(i, j);
        }
    }
    (wel, rev)
}

pub fn welfare_i(instance: &ProblemInstance, outcome: &Outcome, bidder: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..outcome.num_auctions() {
        if let Some(k) = outcome.slot_of(bidder, j) {
            total += instance.value(bidder, j) * instance.pos_at(j, k);
        }
    }
    total
}

pub fn revenue_i(outcome: &Outcome, bidder: usize) -> f64 {
    let mut total = 0.0;
    for j in 0..outcome.num_auctions() {
        if outcome.slot_of(bidder, j).is_some() {
            total += outcome.payment(bidder, j);
        }
    }
    total
}

/// One bidder's view of the market with every other bid held fixed.
///
/// `evaluate` reproduces exactly what [`clear`] would give that bidder for a
/// replacement bid vector, without re-sorting the opponents each time.
#[derive(Clone, Debug)]
pub struct ResponseView {
    bidder: usize,
    format: AuctionFormat,
    // per auction: eligible opponents as (index, score), best first
    opponents: Vec<Vec<(usize, f64)>>,
    reserves: Vec<f64>,
    boosts: Vec<f64>,
    values: Vec<f64>,
    pos: Vec<Vec<f64>>,
}

/// What one bidder gets in one auction.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SlotResult {
    pub slot: usize,
    pub payment: f64,
    pub value: f64,
}

impl ResponseView {
    /// `bids` supplies the opponents' bids; row `bidder` is ignored.
    pub fn new(instance: &ProblemInstance, config: &MechanismConfig, bids: &BidProfile, bidder: usize) -> Result<Self> {
        check(instance, config, bids)?;
        let n = instance.num_bidders();
        let m = instance.num_auctions();
        let mut opponents = Vec::with_capacity(m);
        for j in 0..m {
            let mut col: Vec<(usize, f64)> = (0..n)
                .filter(|&o| o != bidder && bids.bid(o, j) >= config.reserve(o, j))
                .map(|o| (o, bids.bid(o, j) + config.boost(o, j)))
                .collect();
            col.sort_by(|a, b| rank_cmp(a.1, a.0, b.1, b.0));
            opponents.push(col);
        }
        Ok(ResponseView {
            bidder,
            format: config.format(),
            opponents,
            reserves: (0..m).map(|j| config.reserve(bidder, j)).collect(),
            boosts: (0..m).map(|j| config.boost(bidder, j)).collect(),
            values: (0..m).map(|j| instance.value(bidder, j)).collect(),
            pos: (0..m).map(|j| instance.pos(j).to_vec()).collect(),
        })
    }

    pub fn bidder(&self) -> usize {
        self.bidder
    }

    pub fn num_auctions(&self) -> usize {
        self.pos.len()
    }

    /// Eligible opponent scores of auction `j`, best first.
    pub fn opponent_scores(&self, auction: usize) -> impl Iterator<Item = f64> + '_ {
        self.opponents[auction].iter().map(|e| e.1)
    }

    pub fn reserve(&self, auction: usize) -> f64 {
        self.reserves[auction]
    }

    pub fn boost(&self, auction: usize) -> f64 {
        self.boosts[auction]
    }

    pub fn value(&self, auction: usize) -> f64 {
        self.values[auction]
    }

    /// Outcome in one auction when the bidder bids `bid` there.
    pub fn auction_result(&self, auction: usize, bid: f64) -> Option<SlotResult> {
        if !(bid >= self.reserves[auction]) {
            return None;
        }
        let score = bid + self.boosts[auction];
        let opp = &self.opponents[auction];
        let me = self.bidder;
        let rank = opp.partition_point(|&(o, sc)| rank_cmp(sc, o, score, me) == Ordering::Less);
        let pos = &self.pos[auction];
        if rank >= pos.len() {
            return None;
        }
        // merged sequence: opponents ahead, the bidder, opponents behind
        let score_at = |t: usize| -> f64 {
            if t < rank {
                opp[t].1
            } else if t == rank {
                score
            } else {
                opp.get(t - 1).map_or(0.0, |e| e.1)
            }
        };
        let payment = slot_price(self.format, pos, rank, bid, self.reserves[auction], self.boosts[auction], score_at);
        Some(SlotResult { slot: rank, payment, value: self.values[auction] * pos[rank] })
    }

    /// Total `(wel_i, rev_i)` for a full bid vector, summed over auctions in order.
    pub fn evaluate(&self, bids: &[f64]) -> (f64, f64) {
        let mut wel = 0.0;
        let mut rev = 0.0;
        for (j, &b) in bids.iter().enumerate() {
            if let Some(r) = self.auction_result(j, b) {
                wel += r.value;
                rev += r.payment;
            }
        }
        (wel, rev)
    }

    /// Like [`evaluate`](Self::evaluate) for the uniform bid `delta * v`.
    pub fn evaluate_uniform(&self, delta: f64) -> (f64, f64) {
        let mut wel = 0.0;
        let mut rev = 0.0;
        for j in 0..self.values.len() {
            if let Some(r) = self.auction_result(j, delta * self.values[j]) {
                wel += r.value;
                rev += r.payment;
            }
        }
        (wel, rev)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn single(values: Vec<f64>, pos: Vec<f64>) -> ProblemInstance {
        let rows = values.into_iter().map(|v| vec![v]).collect();
        ProblemInstance::new(Matrix::from_rows(rows).unwrap(), vec![pos]).unwrap()
    }

    fn bids(rows: Vec<Vec<f64>>) -> BidProfile {
        BidProfile::new(Matrix::from_rows(rows).unwrap()).unwrap()
    }

    #[test]
    fn three_formats_on_a_two_slot_auction() {
        let inst = single(vec![5.0, 3.0, 2.0], vec![1.0, 0.4]);
        let b = bids(vec![vec![5.0], vec![3.0], vec![2.0]]);
        let gsp = clear(&inst, &MechanismConfig::plain(AuctionFormat::Gsp, 3, 1), &b).unwrap();
        assert_eq!(gsp.winners(0), &[0, 1]);
        assert_eq!(gsp.payment(0, 0), 3.0);
        assert_eq!(gsp.payment(1, 0), 2.0 * 0.4);
        assert_eq!(gsp.payment(2, 0), 0.0);
        let vcg = clear(&inst, &MechanismConfig::plain(AuctionFormat::Vcg, 3, 1), &b).unwrap();
        assert!((vcg.payment(0, 0) - 2.6).abs() < 1e-15);
        assert_eq!(vcg.payment(1, 0), 2.0 * 0.4);
        let fpa = clear(&inst, &MechanismConfig::plain(AuctionFormat::Fpa, 3, 1), &b).unwrap();
        assert_eq!(fpa.payment(0, 0), 5.0);
        assert_eq!(fpa.payment(1, 0), 3.0 * 0.4);

        assert!((welfare(&inst, &gsp) - 6.2).abs() < 1e-15);
        assert!((revenue(&gsp) - 3.8).abs() < 1e-15);
    }

    #[test]
    fn lone_winner_pays_reserve() {
        let inst = single(vec![5.0], vec![1.0]);
        let cfg =
            MechanismConfig::new(AuctionFormat::Vcg, Matrix::filled(1, 1, 2.0), Matrix::filled(1, 1, 1.0)).unwrap();
        let out = clear(&inst, &cfg, &bids(vec![vec![5.0]])).unwrap();
        assert_eq!(out.winners(0), &[0]);
        assert_eq!(out.payment(0, 0), 2.0);

        let out = clear(&inst, &cfg, &bids(vec![vec![1.9]])).unwrap();
        assert!(out.winners(0).is_empty());
        assert_eq!(out.payment(0, 0), 0.0);
    }

    #[test]
    fn bid_equal_to_reserve_is_eligible() {
        let inst = single(vec![1.0], vec![1.0]);
        let cfg = MechanismConfig::new(AuctionFormat::Gsp, Matrix::filled(1, 1, 0.5), Matrix::zeros(1, 1)).unwrap();
        let out = clear(&inst, &cfg, &bids(vec![vec![0.5]])).unwrap();
        assert_eq!(out.winners(0), &[0]);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let inst = single(vec![1.0, 1.0], vec![1.0]);
        let out =
            clear(&inst, &MechanismConfig::plain(AuctionFormat::Gsp, 2, 1), &bids(vec![vec![1.0], vec![1.0]])).unwrap();
        assert_eq!(out.winners(0), &[0]);
        assert_eq!(out.payment(0, 0), 1.0);
    }

    #[test]
    fn opt_welfare_examples() {
        let inst = ProblemInstance::new(
            Matrix::from_rows(vec![vec![3.0, 0.0], vec![1.0, 1.0]]).unwrap(),
            vec![vec![1.0], vec![1.0]],
        )
        .unwrap();
        assert_eq!(opt_welfare(&inst), 4.0);
        let inst = single(vec![5.0, 3.0, 2.0], vec![1.0, 0.4]);
        assert!((opt_welfare(&inst) - 6.2).abs() < 1e-15);
        let inst = single(vec![0.0, 0.0], vec![1.0]);
        assert_eq!(opt_welfare(&inst), 0.0);
    }

    #[test]
    fn empty_instance_clears_to_empty_outcome() {
        let inst = ProblemInstance::new(Matrix::zeros(2, 0), vec![]).unwrap();
        let cfg = MechanismConfig::plain(AuctionFormat::Vcg, 2, 0);
        let out = clear_batch(&inst, &cfg, &bids(vec![vec![], vec![]])).unwrap();
        assert_eq!(out.num_auctions(), 0);
        assert_eq!(welfare(&inst, &out), 0.0);
        assert_eq!(revenue(&out), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let inst = single(vec![1.0, 2.0], vec![1.0]);
        let cfg = MechanismConfig::plain(AuctionFormat::Vcg, 3, 1);
        assert!(clear(&inst, &cfg, &bids(vec![vec![1.0], vec![1.0]])).is_err());
    }

    prop_compose! {
        fn scenario()(n in 1usize..5, m in 1usize..4)
            (values in proptest::collection::vec(0.0f64..3.0, n * m),
             bidv in proptest::collection::vec(0.0f64..4.0, n * m),
             res in proptest::collection::vec(0.0f64..2.0, n * m),
             boo in proptest::collection::vec(0.0f64..1.5, n * m),
             use_res in any::<bool>(), use_boo in any::<bool>(),
             slots in proptest::collection::vec(1usize..=n, m),
             decay in proptest::collection::vec(0.3f64..1.0, 4 * m),
             n in Just(n), m in Just(m))
            -> (ProblemInstance, Matrix, Matrix, BidProfile)
        {
            let values = Matrix::from_fn(n, m, |i, j| values[i * m + j]);
            let pos = (0..m).map(|j| {
                let mut p = vec![1.0];
                for k in 1..slots[j] { let last = p[k - 1]; p.push(last * decay[4 * j + k]); }
                p
            }).collect();
            let inst = ProblemInstance::new(values, pos).unwrap();
            let r = Matrix::from_fn(n, m, |i, j| if use_res { res[i * m + j] } else { 0.0 });
            let z = Matrix::from_fn(n, m, |i, j| if use_boo { boo[i * m + j] } else { 0.0 });
            let b = BidProfile::new(Matrix::from_fn(n, m, |i, j| bidv[i * m + j])).unwrap();
            (inst, r, z, b)
        }
    }

    proptest! {
        #[test]
        fn payment_never_exceeds_bid_times_pos((inst, r, z, b) in scenario()) {
            for f in [AuctionFormat::Vcg, AuctionFormat::Gsp, AuctionFormat::Fpa] {
                let cfg = MechanismConfig::new(f, r.clone(), z.clone()).unwrap();
                let out = clear(&inst, &cfg, &b).unwrap();
                for j in 0..inst.num_auctions() {
                    for (k, &i) in out.winners(j).iter().enumerate() {
                        prop_assert!(out.payment(i, j) <= b.bid(i, j) * inst.pos_at(j, k));
                        prop_assert!(out.payment(i, j) >= 0.0);
                    }
                }
            }
        }

        #[test]
        fn payment_order_vcg_gsp_fpa((inst, _r, _z, b) in scenario()) {
            let (n, m) = (inst.num_bidders(), inst.num_auctions());
            let o: Vec<Outcome> = [AuctionFormat::Vcg, AuctionFormat::Gsp, AuctionFormat::Fpa]
                .iter()
                .map(|&f| clear(&inst, &MechanismConfig::plain(f, n, m), &b).unwrap())
                .collect();
            for j in 0..m {
                prop_assert_eq!(o[0].winners(j), o[1].winners(j));
                for &i in o[0].winners(j) {
                    prop_assert!(o[0].payment(i, j) <= o[1].payment(i, j) + 1e-12);
                    prop_assert!(o[1].payment(i, j) <= o[2].payment(i, j));
                }
            }
        }

        #[test]
        fn truthful_vcg_payment_within_contribution((inst, _r, _z, _b) in scenario()) {
            let (n, m) = (inst.num_bidders(), inst.num_auctions());
            let b = BidProfile::new(inst.values().clone()).unwrap();
            let out = clear(&inst, &MechanismConfig::plain(AuctionFormat::Vcg, n, m), &b).unwrap();
            for j in 0..m {
                for (k, &i) in out.winners(j).iter().enumerate() {
                    prop_assert!(out.payment(i, j) <= inst.value(i, j) * inst.pos_at(j, k) + 1e-12);
                }
            }
        }

        #[test]
        fn raising_a_bid_never_lowers_rank(
            (inst, r, z, b) in scenario(), who in 0usize..4, bump in 0.0f64..2.0
        ) {
            let who = who % inst.num_bidders();
            let cfg = MechanismConfig::new(AuctionFormat::Gsp, r, z).unwrap();
            let before = clear(&inst, &cfg, &b).unwrap();
            let raised = BidProfile::new(b.matrix().map(|i, _, x| if i == who { x + bump } else { x })).unwrap();
            let after = clear(&inst, &cfg, &raised).unwrap();
            for j in 0..inst.num_auctions() {
                if let Some(k) = before.slot_of(who, j) {
                    let k2 = after.slot_of(who, j);
                    prop_assert!(k2.is_some() && k2.unwrap() <= k);
                }
            }
        }

        #[test]
        fn batch_matches_sequential((inst, r, z, b) in scenario()) {
            for f in [AuctionFormat::Vcg, AuctionFormat::Gsp, AuctionFormat::Fpa] {
                let cfg = MechanismConfig::new(f, r.clone(), z.clone()).unwrap();
                prop_assert_eq!(clear(&inst, &cfg, &b).unwrap(), clear_batch(&inst, &cfg, &b).unwrap());
            }
        }

        #[test]
        fn per_bidder_totals_add_up((inst, r, z, b) in scenario()) {
            let cfg = MechanismConfig::new(AuctionFormat::Vcg, r, z).unwrap();
            let out = clear(&inst, &cfg, &b).unwrap();
            let (wel, rev) = bidder_totals(&inst, &out);
            let sw: f64 = wel.iter().sum();
            let sr: f64 = rev.iter().sum();
            prop_assert!((sw - welfare(&inst, &out)).abs() <= 1e-12 * (1.0 + sw));
            prop_assert!((sr - revenue(&out)).abs() <= 1e-12 * (1.0 + sr));
            for i in 0..inst.num_bidders() {
                prop_assert_eq!(wel[i], welfare_i(&inst, &out, i));
                prop_assert_eq!(rev[i], revenue_i(&out, i));
            }
        }

        #[test]
        fn response_view_agrees_with_clear(
            (inst, r, z, b) in scenario(), who in 0usize..4, alt in proptest::collection::vec(0.0f64..4.0, 3)
        ) {
            let who = who % inst.num_bidders();
            for f in [AuctionFormat::Vcg, AuctionFormat::Gsp, AuctionFormat::Fpa] {
                let cfg = MechanismConfig::new(f, r.clone(), z.clone()).unwrap();
                let view = ResponseView::new(&inst, &cfg, &b, who).unwrap();
                let mine: Vec<f64> = (0..inst.num_auctions()).map(|j| alt[j]).collect();
                let swapped = BidProfile::new(b.matrix().map(|i, j, x| if i == who { mine[j] } else { x })).unwrap();
                let out = clear(&inst, &cfg, &swapped).unwrap();
                let (w, p) = view.evaluate(&mine);
                prop_assert_eq!(w, welfare_i(&inst, &out, who));
                prop_assert_eq!(p, revenue_i(&out, who));
            }
        }

        #[test]
        fn uniform_scaling_keeps_winners(
            (inst, r, z, _b) in scenario(), c in 0.1f64..10.0
        ) {
            // powers of two keep the arithmetic exact
            let c = libm::exp2(libm::round(libm::log2(c)));
            let (n, m) = (inst.num_bidders(), inst.num_auctions());
            let cfg = MechanismConfig::new(AuctionFormat::Vcg, r.clone(), z.clone()).unwrap();
            let b = BidProfile::new(inst.values().clone()).unwrap();
            let scaled_inst = ProblemInstance::new(inst.values().map(|_, _, x| x * c),
                (0..m).map(|j| inst.pos(j).to_vec()).collect()).unwrap();
            let scaled_cfg = MechanismConfig::new(AuctionFormat::Vcg, r.map(|_, _, x| x * c), z.map(|_, _, x| x * c)).unwrap();
            let sb = BidProfile::new(scaled_inst.values().clone()).unwrap();
            let o1 = clear(&inst, &cfg, &b).unwrap();
            let o2 = clear(&scaled_inst, &scaled_cfg, &sb).unwrap();
            for j in 0..m {
                prop_assert_eq!(o1.winners(j), o2.winners(j));
                let v1 = RankedAuctionView::build(&cfg, &b, j);
                let v2 = RankedAuctionView::build(&scaled_cfg, &sb, j);
                for k in 0..=n {
                    prop_assert_eq!(v1.score(k) * c, v2.score(k));
                }
            }
        }
    }
}
