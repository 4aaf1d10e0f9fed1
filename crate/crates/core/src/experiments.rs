//! Synthetic auto-bidding experiments: pretrain value maximizers under plain
//! VCG, apply noisy reserve and/or boost signals, let the multipliers respond
//! and measure how much of the gap to the optimal welfare is closed.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, RngCore};
use rand_distr::{Distribution, LogNormal, Normal};
use serde::{Deserialize, Serialize};

use crate::agents::{run_dynamics, DynamicsConfig, StepRecord, Trajectory};
use crate::clearing;
use crate::error::{Error, Result};
use crate::math;
use crate::rng::substream;
use crate::types::{AgentState, AuctionFormat, Matrix, MechanismConfig, ProblemInstance};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub n: usize,
    pub m: usize,
    /// Slots per auction are uniform on `min_slots..=max_slots`, capped at `n`.
    pub min_slots: usize,
    pub max_slots: usize,
    /// Log-sd of the per-bidder quality scalar.
    pub quality_sigma: f64,
    /// Log-sd of the per-auction value draw.
    pub value_sigma: f64,
    /// Probability that a bidder does not participate in an auction.
    pub zero_prob: f64,
    /// Each slot's normalizer is the previous one times `U(decay_lo, decay_hi)`.
    pub decay_lo: f64,
    pub decay_hi: f64,
    pub seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n: 20,
            m: 1000,
            min_slots: 1,
            max_slots: 4,
            quality_sigma: 0.5,
            value_sigma: 1.0,
            zero_prob: 0.3,
            decay_lo: 0.4,
            decay_hi: 0.9,
            seed: 0,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |detail: &str| Err(Error::invalid("generator spec", detail));
        if self.n == 0 {
            return bad("n must be positive");
        }
        if self.min_slots == 0 || self.min_slots > self.max_slots {
            return bad("need 1 <= min_slots <= max_slots");
        }
        if !(self.quality_sigma >= 0.0 && self.value_sigma >= 0.0)
            || !self.quality_sigma.is_finite()
            || !self.value_sigma.is_finite()
        {
            return bad("log-sds must be finite and nonnegative");
        }
        if !(0.0..1.0).contains(&self.zero_prob) {
            return bad("zero_prob must lie in [0, 1)");
        }
        if !(0.0 < self.decay_lo && self.decay_lo <= self.decay_hi && self.decay_hi <= 1.0) {
            return bad("need 0 < decay_lo <= decay_hi <= 1");
        }
        Ok(())
    }

    pub fn with_seed(self, seed: u64) -> Self {
        GeneratorSpec { seed, ..self }
    }
}

/// Random instance with asymmetric bidders: `v[i][j] = q_i * LN(0, value_sigma)`
/// with `q_i ~ LN(0, quality_sigma)`, zeroed with probability `zero_prob`.
pub fn generate_instance(spec: &GeneratorSpec) -> Result<ProblemInstance> {
    spec.validate()?;
    let mut rng = substream(spec.seed, &["generator"]);
    let quality =
        LogNormal::new(0.0, spec.quality_sigma).map_err(|e| Error::invalid("generator spec", e.to_string()))?;
    let value = LogNormal::new(0.0, spec.value_sigma).map_err(|e| Error::invalid("generator spec", e.to_string()))?;
    let q: Vec<f64> = (0..spec.n).map(|_| quality.sample(&mut rng)).collect();
    let mut values = Matrix::zeros(spec.n, spec.m);
    for j in 0..spec.m {
        for (i, qi) in q.iter().enumerate() {
            let draw = value.sample(&mut rng);
            if rng.random::<f64>() >= spec.zero_prob {
                values.set(i, j, qi * draw);
            }
        }
    }
    let max_slots = spec.max_slots.min(spec.n);
    let min_slots = spec.min_slots.min(max_slots);
    let pos = (0..spec.m)
        .map(|_| {
            let s = rng.random_range(min_slots..=max_slots);
            let mut p = vec![1.0];
            for _ in 1..s {
                let decay = if spec.decay_lo < spec.decay_hi {
                    rng.random_range(spec.decay_lo..spec.decay_hi)
                } else {
                    spec.decay_lo
                };
                p.push(p.last().unwrap() * decay);
            }
            p
        })
        .collect();
    ProblemInstance::new(values, pos)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TreatmentKind {
    Baseline,
    Reserve,
    Boost,
    BoostReserve,
}

impl TreatmentKind {
    pub fn name(self) -> &'static str {
        match self {
            TreatmentKind::Baseline => "baseline",
            TreatmentKind::Reserve => "reserve",
            TreatmentKind::Boost => "boost",
            TreatmentKind::BoostReserve => "boost_reserve",
        }
    }

    pub fn uses_reserve(self) -> bool {
        matches!(self, TreatmentKind::Reserve | TreatmentKind::BoostReserve)
    }

    pub fn uses_boost(self) -> bool {
        matches!(self, TreatmentKind::Boost | TreatmentKind::BoostReserve)
    }
}

fn default_sd() -> f64 {
    0.01
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TreatmentSpec {
    pub kind: TreatmentKind,
    /// Signal quality; ignored by the baseline.
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "default_sd")]
    pub signal_sd: f64,
    /// Use one signal draw for both the reserve and the boost.
    #[serde(default)]
    pub share_draw: bool,
}

impl TreatmentSpec {
    pub fn baseline() -> Self {
        TreatmentSpec { kind: TreatmentKind::Baseline, gamma: 0.0, signal_sd: default_sd(), share_draw: false }
    }

    pub fn new(kind: TreatmentKind, gamma: f64) -> Self {
        TreatmentSpec { kind, gamma, signal_sd: default_sd(), share_draw: false }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == TreatmentKind::Baseline {
            return Ok(());
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::invalid("treatment", format!("gamma must lie in (0, 1), got {}", self.gamma)));
        }
        if !(self.signal_sd > 0.0 && self.signal_sd.is_finite()) {
            return Err(Error::invalid("treatment", "signal_sd must be positive"));
        }
        Ok(())
    }

    /// `baseline`, `reserve_0.5`, ...
    pub fn label(&self) -> String {
        match self.kind {
            TreatmentKind::Baseline => "baseline".to_string(),
            k => format!("{}_{}", k.name(), self.gamma),
        }
    }

    pub fn signal_mean(&self) -> f64 {
        (1.0 + self.gamma) / 2.0
    }

    pub fn boost_scale(&self) -> f64 {
        1.0 / (1.0 - self.gamma)
    }

    /// Welfare ratio the matching corollary promises, if any.
    pub fn promised_welfare(&self) -> Option<f64> {
        let g = self.gamma;
        match self.kind {
            TreatmentKind::Baseline => None,
            TreatmentKind::Reserve | TreatmentKind::Boost => Some(1.0 / (2.0 - g)),
            TreatmentKind::BoostReserve => Some((1.0 + g) / 2.0),
        }
    }
}

/// Normal(mean, sd) conditioned on `[lo, hi)`, by rejection.
pub fn truncated_normal<R: Rng + ?Sized>(rng: &mut R, mean: f64, sd: f64, lo: f64, hi: f64) -> f64 {
    let normal = Normal::new(mean, sd).expect("sd checked by caller");
    loop {
        let x = normal.sample(rng);
        if x >= lo && x < hi {
            return x;
        }
    }
}

fn signal_matrix<R: Rng + ?Sized>(instance: &ProblemInstance, spec: &TreatmentSpec, rng: &mut R) -> Matrix {
    let (n, m) = (instance.num_bidders(), instance.num_auctions());
    Matrix::from_fn(n, m, |_, _| truncated_normal(rng, spec.signal_mean(), spec.signal_sd, spec.gamma, 1.0))
}

/// `(reserves, boosts)` for a treatment: `r = s v`, `z = s v / (1 - gamma)`
/// with `s` truncated Gaussian on `[gamma, 1)`.
pub fn sample_treatment_signals(
    instance: &ProblemInstance,
    spec: &TreatmentSpec,
    seed: u64,
) -> Result<(Matrix, Matrix)> {
    spec.validate()?;
    let (n, m) = (instance.num_bidders(), instance.num_auctions());
    let mut reserves = Matrix::zeros(n, m);
    let mut boosts = Matrix::zeros(n, m);
    if spec.kind == TreatmentKind::Baseline {
        return Ok((reserves, boosts));
    }
    let s_reserve = signal_matrix(instance, spec, &mut substream(seed, &["signal", "reserve"]));
    let s_boost = if spec.share_draw {
        s_reserve.clone()
    } else {
        signal_matrix(instance, spec, &mut substream(seed, &["signal", "boost"]))
    };
    if spec.kind.uses_reserve() {
        reserves = instance.values().map(|i, j, v| s_reserve.get(i, j) * v);
    }
    if spec.kind.uses_boost() {
        let scale = spec.boost_scale();
        boosts = instance.values().map(|i, j, v| s_boost.get(i, j) * v * scale);
    }
    Ok((reserves, boosts))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub generator: GeneratorSpec,
    pub treatments: Vec<TreatmentSpec>,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default = "default_runs")]
    pub runs: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_format")]
    pub format: AuctionFormat,
    /// Attempts per run before giving up on finding an instance with a
    /// positive welfare and revenue gap.
    #[serde(default = "default_reseeds")]
    pub max_reseeds: usize,
}

fn default_runs() -> usize {
    10
}

fn default_format() -> AuctionFormat {
    AuctionFormat::Vcg
}

fn default_reseeds() -> usize {
    20
}

impl ExperimentConfig {
    pub fn new(generator: GeneratorSpec, treatments: Vec<TreatmentSpec>, runs: usize, seed: u64) -> Self {
        ExperimentConfig {
            generator,
            treatments,
            dynamics: DynamicsConfig::default(),
            runs,
            seed,
            format: default_format(),
            max_reseeds: default_reseeds(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.generator.validate()?;
        self.dynamics.validate()?;
        for t in &self.treatments {
            t.validate()?;
        }
        if self.runs == 0 {
            return Err(Error::invalid("experiment", "runs must be positive"));
        }
        let mut labels: Vec<String> = self.treatments.iter().map(TreatmentSpec::label).collect();
        labels.sort();
        if labels.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::invalid("experiment", "duplicate treatment"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreatmentRun {
    pub treatment: TreatmentSpec,
    pub label: String,
    /// Final `(welfare, revenue)`.
    pub kappa_e: (f64, f64),
    pub welfare_lift: f64,
    pub revenue_lift: f64,
    /// Final welfare over optimal welfare.
    pub welfare_ratio: f64,
    /// Set when the first treatment iteration moves welfare in the direction
    /// the signal should not: reserves away from the baseline by more than 1%
    /// of the gap, boosts below it.
    pub initial_impact_flag: Option<String>,
    /// Bidders with positive spend and `Rev_i > 1.01 Wel_i` at the end.
    pub ros_violations: Vec<usize>,
    pub trajectory: Trajectory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub run: usize,
    pub instance_seed: u64,
    /// Instances rejected for a nonpositive gap before this one.
    pub reseeds: usize,
    pub opt_welfare: f64,
    /// `(welfare, revenue)` at the pretrain snapshot.
    pub kappa_init: (f64, f64),
    pub pretrain: Trajectory,
    pub treatments: Vec<TreatmentRun>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftStat {
    pub mean: f64,
    /// Half-width of the normal 95% interval.
    pub ci: f64,
}

impl LiftStat {
    pub fn from_samples(xs: &[f64]) -> Self {
        let r = xs.len() as f64;
        if xs.is_empty() {
            return LiftStat { mean: f64::NAN, ci: f64::NAN };
        }
        let mean = xs.iter().sum::<f64>() / r;
        if xs.len() < 2 {
            return LiftStat { mean, ci: 0.0 };
        }
        let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (r - 1.0);
        LiftStat { mean, ci: 1.96 * math::sqrt(var) / math::sqrt(r) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreatmentLift {
    pub treatment: TreatmentSpec,
    pub label: String,
    pub welfare: LiftStat,
    pub revenue: LiftStat,
    pub per_run_welfare: Vec<f64>,
    pub per_run_revenue: Vec<f64>,
    pub min_welfare_ratio: f64,
    pub flagged_runs: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftReport {
    pub runs: usize,
    pub reseeds: usize,
    pub treatments: Vec<TreatmentLift>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOutput {
    pub report: LiftReport,
    pub runs: Vec<RunRecord>,
}

fn lift(kappa_e: f64, kappa_init: f64, opt: f64) -> f64 {
    (kappa_e - kappa_init) / (opt - kappa_init)
}

fn run_treatment(
    instance: &ProblemInstance,
    snapshot: &AgentState,
    kappa_init: (f64, f64),
    opt: f64,
    spec: &TreatmentSpec,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<TreatmentRun> {
    let (reserves, boosts) = sample_treatment_signals(instance, spec, seed)?;
    let mech = MechanismConfig::new(cfg.format, reserves, boosts)?;
    let (_, trajectory) = run_dynamics(instance, &mech, snapshot, &cfg.dynamics, cfg.dynamics.treatment_iters)?;
    let last: &StepRecord = trajectory.last();
    let (w0, gap) = (trajectory.first().wel, opt - kappa_init.0);
    let initial_impact_flag = match spec.kind {
        TreatmentKind::Reserve if libm::fabs(w0 - kappa_init.0) > 0.01 * gap => {
            Some(format!("initial welfare {w0} moved from baseline {} by more than 1% of the gap", kappa_init.0))
        }
        TreatmentKind::Boost if w0 < kappa_init.0 - 1e-9 * kappa_init.0.max(1.0) => {
            Some(format!("initial welfare {w0} below baseline {}", kappa_init.0))
        }
        _ => None,
    };
    let ros_violations = (0..instance.num_bidders())
        .filter(|&i| snapshot.lambda(i) == 0.0 && last.rev_i[i] > 0.0 && last.rev_i[i] > 1.01 * last.wel_i[i])
        .collect();
    let (welfare_lift, revenue_lift) = if spec.kind == TreatmentKind::Baseline {
        (0.0, 0.0)
    } else {
        (lift(last.wel, kappa_init.0, opt), lift(last.rev, kappa_init.1, opt))
    };
    Ok(TreatmentRun {
        treatment: *spec,
        label: spec.label(),
        kappa_e: if spec.kind == TreatmentKind::Baseline { kappa_init } else { (last.wel, last.rev) },
        welfare_lift,
        revenue_lift,
        welfare_ratio: last.wel / opt,
        initial_impact_flag,
        ros_violations,
        trajectory,
    })
}

fn run_one(cfg: &ExperimentConfig, run: usize) -> Result<RunRecord> {
    let run_tag = format!("{run}");
    let n = cfg.generator.n;
    let baseline = MechanismConfig::plain(cfg.format, n, cfg.generator.m);
    for attempt in 0..=cfg.max_reseeds {
        let attempt_tag = format!("{attempt}");
        let instance_seed = substream(cfg.seed, &["run", &run_tag, "attempt", &attempt_tag, "instance"]).next_u64();
        let instance = generate_instance(&cfg.generator.with_seed(instance_seed))?;
        let start = AgentState::uniform(n, 0.0)?;
        let (snapshot, pretrain) =
            run_dynamics(&instance, &baseline, &start, &cfg.dynamics, cfg.dynamics.pretrain_iters)?;
        let kappa_init = (pretrain.last().wel, pretrain.last().rev);
        let opt = clearing::opt_welfare(&instance);
        if !(opt > kappa_init.0 && opt > kappa_init.1) {
            continue;
        }
        let treatments = cfg
            .treatments
            .iter()
            .map(|spec| {
                let label = spec.label();
                let seed =
                    substream(cfg.seed, &["run", &run_tag, "attempt", &attempt_tag, "treatment", &label]).next_u64();
                run_treatment(&instance, &snapshot, kappa_init, opt, spec, cfg, seed)
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok(RunRecord {
            run,
            instance_seed,
            reseeds: attempt,
            opt_welfare: opt,
            kappa_init,
            pretrain,
            treatments,
        });
    }
    Err(Error::invalid(
        "experiment",
        format!("run {run}: no instance with a positive optimality gap after {} attempts", cfg.max_reseeds + 1),
    ))
}

/// Aggregates per-run records into mean lifts with 95% intervals.
pub fn summarize(cfg: &ExperimentConfig, runs: &[RunRecord]) -> LiftReport {
    let treatments = cfg
        .treatments
        .iter()
        .enumerate()
        .map(|(k, spec)| {
            let rows: Vec<&TreatmentRun> = runs.iter().map(|r| &r.treatments[k]).collect();
            let per_run_welfare: Vec<f64> = rows.iter().map(|t| t.welfare_lift).collect();
            let per_run_revenue: Vec<f64> = rows.iter().map(|t| t.revenue_lift).collect();
            TreatmentLift {
                treatment: *spec,
                label: spec.label(),
                welfare: LiftStat::from_samples(&per_run_welfare),
                revenue: LiftStat::from_samples(&per_run_revenue),
                per_run_welfare,
                per_run_revenue,
                min_welfare_ratio: rows.iter().map(|t| t.welfare_ratio).fold(f64::INFINITY, f64::min),
                flagged_runs: rows.iter().filter(|t| t.initial_impact_flag.is_some()).count(),
            }
        })
        .collect();
    LiftReport { runs: runs.len(), reseeds: runs.iter().map(|r| r.reseeds).sum(), treatments }
}

/// Runs every `(run, treatment)` pair. Runs are independent and, with the
/// `std` feature, executed in parallel; results do not depend on scheduling.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    cfg.validate()?;
    #[cfg(feature = "std")]
    let runs: Vec<RunRecord> = {
        use rayon::prelude::*;
        (0..cfg.runs).into_par_iter().map(|r| run_one(cfg, r)).collect::<Result<_>>()?
    };
    #[cfg(not(feature = "std"))]
    let runs: Vec<RunRecord> = (0..cfg.runs).map(|r| run_one(cfg, r)).collect::<Result<_>>()?;
    Ok(ExperimentOutput { report: summarize(cfg, &runs), runs })
}

/// One row of a per-iteration trend, averaged over runs. Trajectories that
/// stopped early are held at their final value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrendRow {
    pub treatment: String,
    pub iteration: usize,
    pub welfare: f64,
    pub welfare_ratio: f64,
    pub revenue: f64,
    pub avg_multiplier: f64,
}

/// Treatment-phase trends: iteration 0 is the first market under the
/// treatment, before any response.
pub fn trends(output: &ExperimentOutput) -> Vec<TrendRow> {
    let mut rows = Vec::new();
    let Some(first) = output.runs.first() else { return rows };
    for (k, t) in first.treatments.iter().enumerate() {
        let len = output.runs.iter().map(|r| r.treatments[k].trajectory.records.len()).max().unwrap_or(0);
        let runs = output.runs.len() as f64;
        for it in 0..len {
            let mut row = TrendRow {
                treatment: t.label.clone(),
                iteration: it,
                welfare: 0.0,
                welfare_ratio: 0.0,
                revenue: 0.0,
                avg_multiplier: 0.0,
            };
            for r in &output.runs {
                let recs = &r.treatments[k].trajectory.records;
                let rec = &recs[it.min(recs.len() - 1)];
                row.welfare += rec.wel / runs;
                row.welfare_ratio += rec.wel / r.opt_welfare / runs;
                row.revenue += rec.rev / runs;
                row.avg_multiplier += rec.avg_multiplier / runs;
            }
            rows.push(row);
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::validate_instance;
    use proptest::prelude::*;

    fn small(seed: u64) -> GeneratorSpec {
        GeneratorSpec { n: 6, m: 40, seed, ..GeneratorSpec::default() }
    }

    #[test]
    fn generator_is_deterministic_and_valid() {
        let spec = GeneratorSpec { seed: 11, ..GeneratorSpec::default() };
        let a = generate_instance(&spec).unwrap();
        let b = generate_instance(&spec).unwrap();
        assert_eq!(a, b);
        assert!(validate_instance(&a.to_data()).is_ok());
        assert!((0..a.num_auctions()).all(|j| (1..=4).contains(&a.slots(j))));
        let c = generate_instance(&spec.with_seed(12)).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn boost_signal_lies_in_the_scaled_band() {
        let inst = generate_instance(&small(3)).unwrap();
        let spec = TreatmentSpec::new(TreatmentKind::Boost, 0.5);
        let (r, z) = sample_treatment_signals(&inst, &spec, 9).unwrap();
        assert!(r.as_slice().iter().all(|&x| x == 0.0));
        for i in 0..inst.num_bidders() {
            for j in 0..inst.num_auctions() {
                let v = inst.value(i, j);
                assert!(z.get(i, j) >= v && (z.get(i, j) < 2.0 * v || v == 0.0));
            }
        }
    }

    #[test]
    fn shared_draw_ties_boost_to_reserve() {
        let inst = generate_instance(&small(4)).unwrap();
        let spec = TreatmentSpec { share_draw: true, ..TreatmentSpec::new(TreatmentKind::BoostReserve, 0.3) };
        let (r, z) = sample_treatment_signals(&inst, &spec, 1).unwrap();
        for (a, b) in r.as_slice().iter().zip(z.as_slice()) {
            assert!(libm::fabs(a / 0.7 - b) <= 1e-12 * b.max(1.0));
        }
    }

    #[test]
    fn boost_gamma_must_be_below_one() {
        let inst = generate_instance(&small(1)).unwrap();
        assert!(sample_treatment_signals(&inst, &TreatmentSpec::new(TreatmentKind::Boost, 1.0), 0).is_err());
    }

    #[test]
    fn ci_matches_the_normal_formula() {
        let s = LiftStat::from_samples(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.ci - 1.96 * sd / 2.0).abs() < 1e-12);
    }

    #[test]
    fn small_experiment_has_zero_baseline_lift_and_is_deterministic() {
        let cfg = ExperimentConfig::new(
            small(0),
            vec![TreatmentSpec::baseline(), TreatmentSpec::new(TreatmentKind::Reserve, 0.5)],
            3,
            42,
        );
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert!(a.report.treatments[0].per_run_welfare.iter().all(|&x| x == 0.0));
        assert_eq!(a.runs.len(), 3);
        let rows = trends(&a);
        assert_eq!(rows[0].iteration, 0);
    }

    proptest! {
        #[test]
        fn reserve_signals_stay_in_band(seed in 0u64..1000, g in 0.05f64..0.95) {
            let inst = generate_instance(&GeneratorSpec { n: 4, m: 25, seed, ..GeneratorSpec::default() }).unwrap();
            let (r, _) = sample_treatment_signals(&inst, &TreatmentSpec::new(TreatmentKind::Reserve, g), seed).unwrap();
            for i in 0..4 {
                for j in 0..25 {
                    let v = inst.value(i, j);
                    prop_assert!(r.get(i, j) >= g * v);
                    prop_assert!(r.get(i, j) < v || v == 0.0);
                }
            }
        }
    }
}
