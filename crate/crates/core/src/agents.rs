//! Bidder behavior: objective and ROS constraint, uniform bidding, the
//! log-space multiplier dynamic and exact uniform best responses.
//!
//! Value maximizers (`lambda = 0`) move their multiplier toward the point
//! where spend equals value:
//!
//! ```text
//! log d' = log d + eta_t * log(Wel_i / Rev_i)
//! ```
//!
//! so `Wel_i = Rev_i` is stationary, underspending raises the multiplier and
//! overspending lowers it. Bidders that win nothing or pay nothing take the
//! fixed upward step `d * exp(eta_t * ln(max_multiplier))`. All updates in an
//! iteration are computed from the same cleared outcome.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::clearing::{self, ResponseView};
use crate::error::{Error, Result};
use crate::math;
use crate::types::{AgentState, AuctionFormat, BidProfile, MechanismConfig, ProblemInstance};

/// `Wel_i - lambda * Rev_i`.
#[inline]
pub fn objective(lambda: f64, wel_i: f64, rev_i: f64) -> f64 {
    wel_i - lambda * rev_i
}

/// Return-on-spend: total payment at most total value.
#[inline]
pub fn ros_satisfied(wel_i: f64, rev_i: f64) -> bool {
    wel_i >= rev_i
}

/// `b[i][j] = delta[i] * v[i][j]`.
pub fn uniform_bids(instance: &ProblemInstance, delta: &[f64]) -> Result<BidProfile> {
    if delta.len() != instance.num_bidders() {
        return Err(Error::invalid(
            "multipliers",
            alloc::format!("{} multipliers for {} bidders", delta.len(), instance.num_bidders()),
        ));
    }
    if let Some((i, d)) = delta.iter().enumerate().find(|(_, d)| !(d.is_finite() && **d > 0.0)) {
        return Err(Error::invalid("multipliers", alloc::format!("multiplier[{i}] = {d} is not a positive real")));
    }
    BidProfile::new(instance.values().map(|i, _, v| delta[i] * v))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LearningRate {
    /// `eta0 / (1 + t / tau)`.
    Decaying {
        eta0: f64,
        tau: f64,
    },
    Constant {
        eta: f64,
    },
}

impl LearningRate {
    pub fn at(&self, t: usize) -> f64 {
        match *self {
            LearningRate::Decaying { eta0, tau } => eta0 / (1.0 + t as f64 / tau),
            LearningRate::Constant { eta } => eta,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            LearningRate::Decaying { eta0, tau } => eta0 > 0.0 && eta0 < 1.0 && tau > 0.0 && tau.is_finite(),
            LearningRate::Constant { eta } => eta > 0.0 && eta < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid("learning rate", alloc::format!("{self:?} leaves (0, 1)")))
        }
    }
}

impl Default for LearningRate {
    fn default() -> Self {
        LearningRate::Decaying { eta0: 0.3, tau: 10.0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DynamicsConfig {
    pub pretrain_iters: usize,
    pub treatment_iters: usize,
    pub learning_rate: LearningRate,
    /// Stop once every multiplier moves less than this in log space.
    pub convergence_tol: f64,
    pub min_multiplier: f64,
    pub max_multiplier: f64,
    /// Geometric points in the best-response grid, before breakpoints.
    pub grid_points: usize,
}

impl Default for DynamicsConfig {
    fn default() -> Self {
        DynamicsConfig {
            pretrain_iters: 25,
            treatment_iters: 25,
            learning_rate: LearningRate::default(),
            convergence_tol: 1e-4,
            min_multiplier: 1e-3,
            max_multiplier: 1e3,
            grid_points: 200,
        }
    }
}

impl DynamicsConfig {
    pub fn validate(&self) -> Result<()> {
        self.learning_rate.validate()?;
        if !(self.min_multiplier > 0.0 && self.min_multiplier < self.max_multiplier && self.max_multiplier.is_finite())
        {
            return Err(Error::invalid(
                "dynamics config",
                alloc::format!(
                    "need 0 < min_multiplier < max_multiplier, got {} and {}",
                    self.min_multiplier,
                    self.max_multiplier
                ),
            ));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::invalid("dynamics config", "convergence_tol must be positive"));
        }
        Ok(())
    }

    fn clamp(&self, delta: f64) -> f64 {
        delta.clamp(self.min_multiplier, self.max_multiplier)
    }
}

/// One value-maximizer update, clamped to the configured range.
pub fn update_multiplier(delta: f64, wel_i: f64, rev_i: f64, eta: f64, dyn_cfg: &DynamicsConfig) -> f64 {
    let log_next = if wel_i > 0.0 && rev_i > 0.0 {
        math::ln(delta) + eta * math::ln(wel_i / rev_i)
    } else {
        math::ln(delta) + eta * math::ln(dyn_cfg.max_multiplier)
    };
    dyn_cfg.clamp(math::exp(log_next))
}

/// Market state at one iteration, evaluated before the update.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub multipliers: Vec<f64>,
    pub wel_i: Vec<f64>,
    pub rev_i: Vec<f64>,
    pub wel: f64,
    pub rev: f64,
    pub avg_multiplier: f64,
}

impl StepRecord {
    fn evaluate(instance: &ProblemInstance, config: &MechanismConfig, multipliers: &[f64]) -> Result<Self> {
        let bids = uniform_bids(instance, multipliers)?;
        let outcome = clearing::clear_batch(instance, config, &bids)?;
        let (wel_i, rev_i) = clearing::bidder_totals(instance, &outcome);
        for i in 0..wel_i.len() {
            if !wel_i[i].is_finite() {
                return Err(Error::NonFinite { what: "welfare", bidder: i });
            }
            if !rev_i[i].is_finite() {
                return Err(Error::NonFinite { what: "revenue", bidder: i });
            }
        }
        Ok(StepRecord {
            wel: clearing::welfare(instance, &outcome),
            rev: clearing::revenue(&outcome),
            avg_multiplier: multipliers.iter().sum::<f64>() / multipliers.len() as f64,
            multipliers: multipliers.to_vec(),
            wel_i,
            rev_i,
        })
    }
}

/// One synchronous step at iteration `t`. Returns the next state and the
/// record of the market at the current state.
pub fn step_multipliers(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    state: &AgentState,
    dyn_cfg: &DynamicsConfig,
    t: usize,
) -> Result<(AgentState, StepRecord)> {
    dyn_cfg.validate()?;
    if state.num_bidders() != instance.num_bidders() {
        return Err(Error::invalid("agent state", "bidder count differs from the instance"));
    }
    let record = StepRecord::evaluate(instance, config, state.multipliers())?;
    let eta = dyn_cfg.learning_rate.at(t);
    let mut next = Vec::with_capacity(state.num_bidders());
    let mut bids: Option<BidProfile> = None;
    for i in 0..state.num_bidders() {
        let delta = state.multiplier(i);
        let lambda = state.lambda(i);
        let d = if lambda == 0.0 {
            update_multiplier(delta, record.wel_i[i], record.rev_i[i], eta, dyn_cfg)
        } else if config.format() == AuctionFormat::Vcg {
            delta
        } else {
            if bids.is_none() {
                bids = Some(uniform_bids(instance, state.multipliers())?);
            }
            let view = ResponseView::new(instance, config, bids.as_ref().unwrap(), i)?;
            let grid = response_grid(&view, dyn_cfg);
            best_response_in_view(&view, lambda, &grid)?
        };
        next.push(d);
    }
    Ok((state.with_multipliers(next)?, record))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `records[t]` is the market at iteration `t`; the last entry is the
    /// state reached after the final update.
    pub records: Vec<StepRecord>,
    /// First iteration whose update moved every multiplier by less than the
    /// tolerance, if the run stopped early.
    pub converged_at: Option<usize>,
}

impl Trajectory {
    pub fn last(&self) -> &StepRecord {
        self.records.last().expect("trajectory always holds the initial state")
    }

    pub fn first(&self) -> &StepRecord {
        &self.records[0]
    }

    /// Number of updates performed.
    pub fn updates(&self) -> usize {
        self.records.len() - 1
    }
}

/// Runs up to `iterations` updates from `initial`, stopping early once the
/// largest log-multiplier move falls below the tolerance.
pub fn run_dynamics(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    initial: &AgentState,
    dyn_cfg: &DynamicsConfig,
    iterations: usize,
) -> Result<(AgentState, Trajectory)> {
    let mut state = initial.clone();
    let mut records = Vec::with_capacity(iterations + 1);
    let mut converged_at = None;
    for t in 0..iterations {
        let (next, record) = step_multipliers(instance, config, &state, dyn_cfg, t)?;
        records.push(record);
        let moved = state
            .multipliers()
            .iter()
            .zip(next.multipliers())
            .map(|(a, b)| libm::fabs(math::ln(*b) - math::ln(*a)))
            .fold(0.0, f64::max);
        state = next;
        if moved < dyn_cfg.convergence_tol {
            converged_at = Some(t);
            break;
        }
    }
    records.push(StepRecord::evaluate(instance, config, state.multipliers())?);
    Ok((state, Trajectory { records, converged_at }))
}

/// Candidate multipliers for bidder `view.bidder()`: a geometric grid over
/// the clamp range, the value 1, and every multiplier at which the bidder's
/// eligibility or rank changes in some auction together with the next float
/// above it.
pub fn response_grid(view: &ResponseView, dyn_cfg: &DynamicsConfig) -> Vec<f64> {
    let (lo, hi) = (dyn_cfg.min_multiplier, dyn_cfg.max_multiplier);
    let mut grid = Vec::new();
    let pts = dyn_cfg.grid_points.max(2);
    let span = math::ln(hi) - math::ln(lo);
    for k in 0..pts {
        grid.push(math::exp(math::ln(lo) + span * k as f64 / (pts - 1) as f64));
    }
    grid.push(1.0);
    for j in 0..view.num_auctions() {
        let v = view.value(j);
        if v <= 0.0 {
            continue;
        }
        let mut push = |d: f64| {
            if d.is_finite() && d > 0.0 {
                grid.push(d);
                grid.push(d.next_up());
            }
        };
        push(view.reserve(j) / v);
        let z = view.boost(j);
        for sc in view.opponent_scores(j) {
            push((sc - z) / v);
        }
    }
    grid.retain(|d| (lo..=hi).contains(d));
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    grid
}

fn best_response_in_view(view: &ResponseView, lambda: f64, grid: &[f64]) -> Result<f64> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    // (feasible, key, delta): feasible candidates by objective, infeasible by
    // least overspend; strict improvement needed, so ties keep the smaller delta
    let mut best: Option<(bool, f64, f64)> = None;
    let mut sorted = grid.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &d in &sorted {
        let (w, r) = view.evaluate_uniform(d);
        let feasible = ros_satisfied(w, r);
        let key = if feasible { objective(lambda, w, r) } else { w - r };
        let better = match best {
            None => true,
            Some((bf, bk, _)) => (feasible && !bf) || (feasible == bf && key > bk),
        };
        if better {
            best = Some((feasible, key, d));
        }
    }
    Ok(best.map(|b| b.2).unwrap_or(sorted[0]))
}

/// Best uniform multiplier for `bidder` on `grid`, with the other bids in
/// `others` held fixed (row `bidder` is ignored). Multipliers violating ROS
/// rank below every feasible one; ties go to the smaller multiplier.
pub fn best_response_uniform(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    bidder: usize,
    others: &BidProfile,
    lambda: f64,
    grid: &[f64],
) -> Result<f64> {
    let view = ResponseView::new(instance, config, others, bidder)?;
    best_response_in_view(&view, lambda, grid)
}

/// Per-bidder `(feasible, objective)` under a given profile.
pub fn bidder_objectives(
    instance: &ProblemInstance,
    config: &MechanismConfig,
    bids: &BidProfile,
    lambda: &[f64],
) -> Result<Vec<(bool, f64)>> {
    let out = clearing::clear(instance, config, bids)?;
    let (w, r) = clearing::bidder_totals(instance, &out);
    Ok((0..instance.num_bidders()).map(|i| (ros_satisfied(w[i], r[i]), objective(lambda[i], w[i], r[i]))).collect())
}
