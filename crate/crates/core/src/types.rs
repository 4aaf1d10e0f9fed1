//! Canonical domain types and validation.
//!
//! Every type here is an immutable value object once constructed. The JSON
//! field names produced by the serde impls are part of the file contract:
//! an instance is `{n, m, slots, values, pos}`, a mechanism config is
//! `{format, reserves, boosts}` and an outcome is `{allocation, payments}`
//! with `allocation` a list of `(bidder, auction, slot)` triples. All indices
//! are zero-based.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use serde::de::Error as _;
use serde::ser::SerializeSeq;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Dense row-major `rows x cols` matrix of reals, indexed `(bidder, auction)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    /// Builds from nested rows; fails on ragged input.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n * m);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != m {
                return Err(Error::invalid("matrix", format!("row {i} has {} entries, expected {m}", row.len())));
            }
            data.extend(row);
        }
        Ok(Matrix { rows: n, cols: m, data })
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn map(&self, mut f: impl FnMut(usize, usize, f64) -> f64) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| f(i, j, self.get(i, j)))
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub(crate) fn expect_shape(&self, what: &'static str, rows: usize, cols: usize) -> Result<()> {
        if self.rows != rows || self.cols != cols {
            return Err(Error::DimensionMismatch { what, rows, cols, got_rows: self.rows, got_cols: self.cols });
        }
        Ok(())
    }

    /// First entry that is negative or not finite, if any.
    pub(crate) fn first_invalid_entry(&self) -> Option<(usize, usize, f64)> {
        (0..self.rows)
            .flat_map(|i| (0..self.cols).map(move |j| (i, j)))
            .map(|(i, j)| (i, j, self.get(i, j)))
            .find(|&(_, _, x)| !(x.is_finite() && x >= 0.0))
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> core::result::Result<S::Ok, S::Error> {
        let mut seq = serializer.serialize_seq(Some(self.rows))?;
        for i in 0..self.rows {
            seq.serialize_element(self.row(i))?;
        }
        seq.end()
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> core::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(deserializer)?;
        Matrix::from_rows(rows).map_err(D::Error::custom)
    }
}

/// One reason an instance is malformed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NoBidders,
    SlotListLength { expected: usize, got: usize },
    PosListLength { expected: usize, got: usize },
    ValuesShape { rows: usize, cols: usize },
    NoSlots { auction: usize },
    MoreSlotsThanBidders { auction: usize, slots: usize, bidders: usize },
    PosLength { auction: usize, slots: usize, got: usize },
    NonPositivePos { auction: usize, slot: usize, value: f64 },
    PosNotNonincreasing { auction: usize, slot: usize },
    InvalidValue { bidder: usize, auction: usize, value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NoBidders => write!(f, "instance has no bidders"),
            Violation::SlotListLength { expected, got } => {
                write!(f, "slots has {got} entries, expected m = {expected}")
            }
            Violation::PosListLength { expected, got } => {
                write!(f, "pos has {got} rows, expected m = {expected}")
            }
            Violation::ValuesShape { rows, cols } => {
                write!(f, "values is {rows}x{cols}, expected n x m")
            }
            Violation::NoSlots { auction } => write!(f, "auction {auction} has no slots"),
            Violation::MoreSlotsThanBidders { auction, slots, bidders } => {
                write!(f, "more slots than bidders in auction {auction} ({slots} > {bidders})")
            }
            Violation::PosLength { auction, slots, got } => {
                write!(f, "auction {auction} has {slots} slots but {got} pos entries")
            }
            Violation::NonPositivePos { auction, slot, value } => {
                write!(f, "pos[{auction}][{slot}] = {value} is not positive")
            }
            Violation::PosNotNonincreasing { auction, slot } => {
                write!(f, "pos not nonincreasing in auction {auction} at slot {slot}")
            }
            Violation::InvalidValue { bidder, auction, value } => {
                write!(f, "value[{bidder}][{auction}] = {value} is negative or not finite")
            }
        }
    }
}

/// Raw instance exactly as it appears on disk; may be invalid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceData {
    pub n: usize,
    pub m: usize,
    pub slots: Vec<usize>,
    pub values: Matrix,
    pub pos: Vec<Vec<f64>>,
}

/// Returns every violated instance invariant, or `Ok` when there are none.
pub fn validate_instance(data: &InstanceData) -> core::result::Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let (n, m) = (data.n, data.m);
    if n == 0 {
        out.push(Violation::NoBidders);
    }
    if data.slots.len() != m {
        out.push(Violation::SlotListLength { expected: m, got: data.slots.len() });
    }
    if data.pos.len() != m {
        out.push(Violation::PosListLength { expected: m, got: data.pos.len() });
    }
    if data.values.rows() != n || (data.values.cols() != m && n > 0) {
        out.push(Violation::ValuesShape { rows: data.values.rows(), cols: data.values.cols() });
    }
    for (auction, (&slots, pos)) in data.slots.iter().zip(&data.pos).enumerate() {
        if slots == 0 {
            out.push(Violation::NoSlots { auction });
        }
        if slots > n {
            out.push(Violation::MoreSlotsThanBidders { auction, slots, bidders: n });
        }
        if pos.len() != slots {
            out.push(Violation::PosLength { auction, slots, got: pos.len() });
        }
        for (slot, &value) in pos.iter().enumerate() {
            if !(value.is_finite() && value > 0.0) {
                out.push(Violation::NonPositivePos { auction, slot, value });
            }
        }
        for slot in 1..pos.len() {
            if pos[slot] > pos[slot - 1] {
                out.push(Violation::PosNotNonincreasing { auction, slot });
            }
        }
    }
    if let Some((bidder, auction, value)) = data.values.first_invalid_entry() {
        out.push(Violation::InvalidValue { bidder, auction, value });
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

/// Validated problem instance: bidders, auctions, slots, base values and
/// position normalizers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "InstanceData", into = "InstanceData")]
pub struct ProblemInstance {
    slots: Vec<usize>,
    values: Matrix,
    pos: Vec<Vec<f64>>,
}

impl ProblemInstance {
    /// `values` is `n x m`; `pos[j]` lists the `s_j` slot normalizers of auction `j`.
    pub fn new(values: Matrix, pos: Vec<Vec<f64>>) -> Result<Self> {
        let data =
            InstanceData { n: values.rows(), m: pos.len(), slots: pos.iter().map(Vec::len).collect(), values, pos };
        Self::try_from(data)
    }

    #[inline]
    pub fn num_bidders(&self) -> usize {
        self.values.rows()
    }

    #[inline]
    pub fn num_auctions(&self) -> usize {
        self.slots.len()
    }

    #[inline]
    pub fn slots(&self, auction: usize) -> usize {
        self.slots[auction]
    }

    #[inline]
    pub fn value(&self, bidder: usize, auction: usize) -> f64 {
        self.values.get(bidder, auction)
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    /// Normalizers of auction `j`, length `s_j`.
    #[inline]
    pub fn pos(&self, auction: usize) -> &[f64] {
        &self.pos[auction]
    }

    /// Normalizer of slot `k` (zero-based); `0` for `k >= s_j`.
    #[inline]
    pub fn pos_at(&self, auction: usize, slot: usize) -> f64 {
        self.pos[auction].get(slot).copied().unwrap_or(0.0)
    }

    pub fn to_data(&self) -> InstanceData {
        self.clone().into()
    }

    /// Whether bidder `i`'s value ranks within the top `s_j` of auction `j`,
    /// ranking by value with ties broken by lower index.
    pub fn value_in_top_slots(&self, bidder: usize, auction: usize) -> bool {
        let v = self.value(bidder, auction);
        let ahead = (0..self.num_bidders())
            .filter(|&o| {
                let w = self.value(o, auction);
                w > v || (w == v && o < bidder)
            })
            .count();
        ahead < self.slots(auction)
    }
}

impl TryFrom<InstanceData> for ProblemInstance {
    type Error = Error;

    fn try_from(data: InstanceData) -> Result<Self> {
        validate_instance(&data).map_err(Error::InvalidInstance)?;
        Ok(ProblemInstance { slots: data.slots, values: data.values, pos: data.pos })
    }
}

impl From<ProblemInstance> for InstanceData {
    fn from(inst: ProblemInstance) -> Self {
        InstanceData {
            n: inst.values.rows(),
            m: inst.slots.len(),
            slots: inst.slots,
            values: inst.values,
            pos: inst.pos,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AuctionFormat {
    Vcg,
    Gsp,
    Fpa,
}

impl AuctionFormat {
    pub fn name(self) -> &'static str {
        match self {
            AuctionFormat::Vcg => "vcg",
            AuctionFormat::Gsp => "gsp",
            AuctionFormat::Fpa => "fpa",
        }
    }
}

impl fmt::Display for AuctionFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Auction format with per-bidder-per-auction reserves and boosts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MechanismConfigData")]
pub struct MechanismConfig {
    format: AuctionFormat,
    reserves: Matrix,
    boosts: Matrix,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MechanismConfigData {
    format: AuctionFormat,
    reserves: Matrix,
    boosts: Matrix,
}

impl TryFrom<MechanismConfigData> for MechanismConfig {
    type Error = Error;

    fn try_from(d: MechanismConfigData) -> Result<Self> {
        MechanismConfig::new(d.format, d.reserves, d.boosts)
    }
}

impl MechanismConfig {
    pub fn new(format: AuctionFormat, reserves: Matrix, boosts: Matrix) -> Result<Self> {
        if reserves.shape() != boosts.shape() {
            let (rows, cols) = reserves.shape();
            boosts.expect_shape("boosts", rows, cols)?;
        }
        if let Some((i, j, x)) = reserves.first_invalid_entry() {
            return Err(Error::invalid("reserves", format!("reserve[{i}][{j}] = {x} is negative or not finite")));
        }
        if let Some((i, j, x)) = boosts.first_invalid_entry() {
            return Err(Error::invalid("boosts", format!("boost[{i}][{j}] = {x} is negative or not finite")));
        }
        Ok(MechanismConfig { format, reserves, boosts })
    }

    /// No reserves, no boosts.
    pub fn plain(format: AuctionFormat, n: usize, m: usize) -> Self {
        MechanismConfig { format, reserves: Matrix::zeros(n, m), boosts: Matrix::zeros(n, m) }
    }

    #[inline]
    pub fn format(&self) -> AuctionFormat {
        self.format
    }

    #[inline]
    pub fn reserve(&self, bidder: usize, auction: usize) -> f64 {
        self.reserves.get(bidder, auction)
    }

    #[inline]
    pub fn boost(&self, bidder: usize, auction: usize) -> f64 {
        self.boosts.get(bidder, auction)
    }

    pub fn reserves(&self) -> &Matrix {
        &self.reserves
    }

    pub fn boosts(&self) -> &Matrix {
        &self.boosts
    }

    pub fn with_format(&self, format: AuctionFormat) -> Self {
        MechanismConfig { format, ..self.clone() }
    }

    pub fn with_reserves(&self, reserves: Matrix) -> Result<Self> {
        MechanismConfig::new(self.format, reserves, self.boosts.clone())
    }

    pub fn with_boosts(&self, boosts: Matrix) -> Result<Self> {
        MechanismConfig::new(self.format, self.reserves.clone(), boosts)
    }

    pub fn has_reserves(&self) -> bool {
        self.reserves.as_slice().iter().any(|&r| r > 0.0)
    }

    pub fn has_boosts(&self) -> bool {
        self.boosts.as_slice().iter().any(|&z| z > 0.0)
    }

    pub(crate) fn check_against(&self, instance: &ProblemInstance) -> Result<()> {
        let (n, m) = (instance.num_bidders(), instance.num_auctions());
        self.reserves.expect_shape("reserves", n, m)?;
        self.boosts.expect_shape("boosts", n, m)
    }
}

/// Config as written in a file: reserves and boosts may be omitted and
/// default to zero once the instance dimensions are known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfigSpec {
    pub format: AuctionFormat,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reserves: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub boosts: Option<Matrix>,
}

impl MechanismConfigSpec {
    pub fn resolve(self, instance: &ProblemInstance) -> Result<MechanismConfig> {
        let (n, m) = (instance.num_bidders(), instance.num_auctions());
        let reserves = self.reserves.unwrap_or_else(|| Matrix::zeros(n, m));
        let boosts = self.boosts.unwrap_or_else(|| Matrix::zeros(n, m));
        let config = MechanismConfig::new(self.format, reserves, boosts)?;
        config.check_against(instance)?;
        Ok(config)
    }
}

impl From<MechanismConfig> for MechanismConfigSpec {
    fn from(c: MechanismConfig) -> Self {
        MechanismConfigSpec { format: c.format, reserves: Some(c.reserves), boosts: Some(c.boosts) }
    }
}

/// Bids `b[i][j]`, finite and nonnegative.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct BidProfile {
    bids: Matrix,
}

impl BidProfile {
    pub fn new(bids: Matrix) -> Result<Self> {
        if let Some((i, j, x)) = bids.first_invalid_entry() {
            return Err(Error::invalid("bids", format!("bid[{i}][{j}] = {x} is negative or not finite")));
        }
        Ok(BidProfile { bids })
    }

    #[inline]
    pub fn bid(&self, bidder: usize, auction: usize) -> f64 {
        self.bids.get(bidder, auction)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.bids
    }

    pub fn into_matrix(self) -> Matrix {
        self.bids
    }

    pub(crate) fn check_against(&self, instance: &ProblemInstance) -> Result<()> {
        self.bids.expect_shape("bids", instance.num_bidders(), instance.num_auctions())
    }
}

impl TryFrom<Matrix> for BidProfile {
    type Error = Error;
    fn try_from(m: Matrix) -> Result<Self> {
        BidProfile::new(m)
    }
}

impl From<BidProfile> for Matrix {
    fn from(b: BidProfile) -> Matrix {
        b.bids
    }
}

/// Allocation and payments. `winners(j)[k]` is the bidder holding slot `k`
/// of auction `j`; slots are filled from the top without gaps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OutcomeData", into = "OutcomeData")]
pub struct Outcome {
    winners: Vec<Vec<usize>>,
    payments: Matrix,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeData {
    pub allocation: Vec<(usize, usize, usize)>,
    pub payments: Matrix,
}

impl Outcome {
    /// Checks the allocation invariants and that only winners pay.
    pub fn new(winners: Vec<Vec<usize>>, payments: Matrix) -> Result<Self> {
        if winners.len() != payments.cols() && payments.rows() > 0 {
            return Err(Error::invalid(
                "outcome",
                format!("{} auctions in allocation, {} in payments", winners.len(), payments.cols()),
            ));
        }
        let n = payments.rows();
        for (j, ws) in winners.iter().enumerate() {
            for (k, &i) in ws.iter().enumerate() {
                if i >= n {
                    return Err(Error::invalid("outcome", format!("bidder {i} out of range")));
                }
                if ws[..k].contains(&i) {
                    return Err(Error::invalid("outcome", format!("bidder {i} holds two slots in auction {j}")));
                }
            }
        }
        if let Some((i, j, x)) = payments.first_invalid_entry() {
            return Err(Error::invalid("outcome", format!("payment[{i}][{j}] = {x} is negative or not finite")));
        }
        for i in 0..n {
            for (j, ws) in winners.iter().enumerate() {
                if payments.get(i, j) != 0.0 && !ws.contains(&i) {
                    return Err(Error::invalid("outcome", format!("bidder {i} pays in auction {j} without winning")));
                }
            }
        }
        Ok(Outcome { winners, payments })
    }

    pub(crate) fn from_parts_unchecked(winners: Vec<Vec<usize>>, payments: Matrix) -> Self {
        Outcome { winners, payments }
    }

    pub fn num_bidders(&self) -> usize {
        self.payments.rows()
    }

    pub fn num_auctions(&self) -> usize {
        self.winners.len()
    }

    /// Bidders in slot order for auction `j`.
    #[inline]
    pub fn winners(&self, auction: usize) -> &[usize] {
        &self.winners[auction]
    }

    #[inline]
    pub fn payment(&self, bidder: usize, auction: usize) -> f64 {
        self.payments.get(bidder, auction)
    }

    pub fn payments(&self) -> &Matrix {
        &self.payments
    }

    /// Slot won by `bidder` in `auction`, if any.
    pub fn slot_of(&self, bidder: usize, auction: usize) -> Option<usize> {
        self.winners[auction].iter().position(|&w| w == bidder)
    }

    /// `x[i][j][k]` as a boolean.
    pub fn allocated(&self, bidder: usize, auction: usize, slot: usize) -> bool {
        self.winners[auction].get(slot) == Some(&bidder)
    }

    /// Empty allocation with zero payments.
    pub fn empty(n: usize, m: usize) -> Self {
        Outcome { winners: vec![Vec::new(); m], payments: Matrix::zeros(n, m) }
    }
}

impl TryFrom<OutcomeData> for Outcome {
    type Error = Error;

    fn try_from(d: OutcomeData) -> Result<Self> {
        let m = d.payments.cols();
        let mut slots: Vec<Vec<Option<usize>>> = vec![Vec::new(); m];
        for &(bidder, auction, slot) in &d.allocation {
            if auction >= m {
                return Err(Error::invalid("outcome", format!("auction {auction} out of range")));
            }
            let col = &mut slots[auction];
            if col.len() <= slot {
                col.resize(slot + 1, None);
            }
            if col[slot].replace(bidder).is_some() {
                return Err(Error::invalid("outcome", format!("slot {slot} of auction {auction} allocated twice")));
            }
        }
        let mut winners = Vec::with_capacity(m);
        for (auction, col) in slots.into_iter().enumerate() {
            let filled: Option<Vec<usize>> = col.into_iter().collect();
            match filled {
                Some(ws) => winners.push(ws),
                None => {
                    return Err(Error::invalid(
                        "outcome",
                        format!("auction {auction} leaves a gap above an allocated slot"),
                    ))
                }
            }
        }
        Outcome::new(winners, d.payments)
    }
}

impl From<Outcome> for OutcomeData {
    fn from(o: Outcome) -> Self {
        let mut allocation = Vec::new();
        for (j, ws) in o.winners.iter().enumerate() {
            for (k, &i) in ws.iter().enumerate() {
                allocation.push((i, j, k));
            }
        }
        OutcomeData { allocation, payments: o.payments }
    }
}

/// Per-bidder behavior weight `lambda` (0 = value maximizer, 1 = utility
/// maximizer) and uniform bid multiplier `delta`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AgentStateData", into = "AgentStateData")]
pub struct AgentState {
    lambda: Vec<f64>,
    multipliers: Vec<f64>,
}

#[derive(Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AgentStateData {
    lambda: Vec<f64>,
    delta: Vec<f64>,
}

impl AgentState {
    pub fn new(lambda: Vec<f64>, multipliers: Vec<f64>) -> Result<Self> {
        if lambda.len() != multipliers.len() {
            return Err(Error::invalid(
                "agent state",
                format!("{} lambdas but {} multipliers", lambda.len(), multipliers.len()),
            ));
        }
        if let Some((i, l)) = lambda.iter().enumerate().find(|(_, l)| !(0.0..=1.0).contains(*l)) {
            return Err(Error::invalid("agent state", format!("lambda[{i}] = {l} outside [0, 1]")));
        }
        if let Some((i, d)) = multipliers.iter().enumerate().find(|(_, d)| !(d.is_finite() && **d > 0.0)) {
            return Err(Error::invalid("agent state", format!("multiplier[{i}] = {d} is not a positive real")));
        }
        Ok(AgentState { lambda, multipliers })
    }

    /// All bidders share `lambda` and start at multiplier 1.
    pub fn uniform(n: usize, lambda: f64) -> Result<Self> {
        AgentState::new(vec![lambda; n], vec![1.0; n])
    }

    pub fn num_bidders(&self) -> usize {
        self.lambda.len()
    }

    #[inline]
    pub fn lambda(&self, bidder: usize) -> f64 {
        self.lambda[bidder]
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambda
    }

    #[inline]
    pub fn multiplier(&self, bidder: usize) -> f64 {
        self.multipliers[bidder]
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn with_multipliers(&self, multipliers: Vec<f64>) -> Result<Self> {
        AgentState::new(self.lambda.clone(), multipliers)
    }
}

impl TryFrom<AgentStateData> for AgentState {
    type Error = Error;
    fn try_from(d: AgentStateData) -> Result<Self> {
        AgentState::new(d.lambda, d.delta)
    }
}

impl From<AgentState> for AgentStateData {
    fn from(s: AgentState) -> Self {
        AgentStateData { lambda: s.lambda, delta: s.multipliers }
    }
}

/// How a noisy value signal is turned into a reserve or a boost.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SignalKind {
    Reserve,
    /// Boost band `[gamma * nu * v, nu * v)`.
    Boost {
        nu: f64,
    },
}

/// A `gamma`-approximate signal: reserves in `[gamma v, v)`, boosts in
/// `[gamma nu v, nu v)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalConfigData", into = "SignalConfigData")]
pub struct SignalConfig {
    gamma: f64,
    kind: SignalKind,
}

#[derive(Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalConfigData {
    gamma: f64,
    #[serde(flatten)]
    kind: SignalKind,
}

impl SignalConfig {
    pub fn new(gamma: f64, kind: SignalKind) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::invalid("signal config", format!("gamma = {gamma} outside [0, 1]")));
        }
        if let SignalKind::Boost { nu } = kind {
            if !(nu.is_finite() && nu > 0.0) {
                return Err(Error::invalid("signal config", format!("boost scale nu = {nu} must be positive")));
            }
        }
        Ok(SignalConfig { gamma, kind })
    }

    pub fn reserve(gamma: f64) -> Result<Self> {
        SignalConfig::new(gamma, SignalKind::Reserve)
    }

    pub fn boost(gamma: f64, nu: f64) -> Result<Self> {
        SignalConfig::new(gamma, SignalKind::Boost { nu })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn kind(&self) -> SignalKind {
        self.kind
    }

    /// Lower boost factor `mu = gamma * nu`; `None` for reserves.
    pub fn mu(&self) -> Option<f64> {
        match self.kind {
            SignalKind::Boost { nu } => Some(self.gamma * nu),
            SignalKind::Reserve => None,
        }
    }
}

impl TryFrom<SignalConfigData> for SignalConfig {
    type Error = Error;
    fn try_from(d: SignalConfigData) -> Result<Self> {
        SignalConfig::new(d.gamma, d.kind)
    }
}

impl From<SignalConfig> for SignalConfigData {
    fn from(s: SignalConfig) -> Self {
        SignalConfigData { gamma: s.gamma, kind: s.kind }
    }
}

/// Human-readable list, used by front ends.
pub fn describe_violations(vs: &[Violation]) -> String {
    let mut s = String::new();
    for v in vs {
        if !s.is_empty() {
            s.push_str("; ");
        }
        s.push_str(&format!("{v}"));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn data(slots: Vec<usize>, values: Vec<Vec<f64>>, pos: Vec<Vec<f64>>) -> InstanceData {
        InstanceData { n: values.len(), m: slots.len(), slots, values: Matrix::from_rows(values).unwrap(), pos }
    }

    #[test]
    fn accepts_well_formed_instance() {
        let d = data(vec![2], vec![vec![1.0], vec![2.0], vec![0.0]], vec![vec![1.0, 0.5]]);
        assert!(validate_instance(&d).is_ok());
    }

    #[test]
    fn rejects_increasing_pos() {
        let d = data(vec![2], vec![vec![1.0], vec![2.0], vec![0.0]], vec![vec![0.5, 1.0]]);
        let errs = validate_instance(&d).unwrap_err();
        assert_eq!(errs, vec![Violation::PosNotNonincreasing { auction: 0, slot: 1 }]);
        assert!(format!("{}", errs[0]).contains("pos not nonincreasing"));
    }

    #[test]
    fn rejects_more_slots_than_bidders() {
        let d = data(vec![4], vec![vec![1.0], vec![2.0]], vec![vec![1.0, 0.8, 0.6, 0.4]]);
        let errs = validate_instance(&d).unwrap_err();
        assert!(errs.iter().any(|e| matches!(e, Violation::MoreSlotsThanBidders { slots: 4, bidders: 2, .. })));
        assert!(format!("{}", errs[0]).contains("more slots than bidders"));
    }

    #[test]
    fn itemizes_every_violation() {
        let d = data(vec![1, 1], vec![vec![-1.0, f64::NAN]], vec![vec![0.0], vec![1.0, 2.0]]);
        let errs = validate_instance(&d).unwrap_err();
        assert!(errs.contains(&Violation::NonPositivePos { auction: 0, slot: 0, value: 0.0 }));
        assert!(errs.contains(&Violation::PosLength { auction: 1, slots: 1, got: 2 }));
        assert!(errs.iter().any(|e| matches!(e, Violation::InvalidValue { .. })));
    }

    #[test]
    fn ragged_matrix_is_rejected() {
        assert!(Matrix::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    #[test]
    fn pos_sentinel_is_zero() {
        let inst =
            ProblemInstance::new(Matrix::from_rows(vec![vec![1.0], vec![2.0]]).unwrap(), vec![vec![1.0]]).unwrap();
        assert_eq!(inst.pos_at(0, 0), 1.0);
        assert_eq!(inst.pos_at(0, 1), 0.0);
    }

    #[test]
    fn top_slot_ranking_breaks_ties_by_index() {
        let inst =
            ProblemInstance::new(Matrix::from_rows(vec![vec![1.0], vec![1.0], vec![0.5]]).unwrap(), vec![vec![1.0]])
                .unwrap();
        assert!(inst.value_in_top_slots(0, 0));
        assert!(!inst.value_in_top_slots(1, 0));
        assert!(!inst.value_in_top_slots(2, 0));
    }

    #[test]
    fn agent_state_rejects_bad_entries() {
        assert!(AgentState::new(vec![0.0], vec![0.0]).is_err());
        assert!(AgentState::new(vec![1.5], vec![1.0]).is_err());
        assert!(AgentState::new(vec![0.0, 1.0], vec![1.0]).is_err());
        assert!(AgentState::new(vec![0.0, 1.0], vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn outcome_rejects_payment_without_win() {
        let mut p = Matrix::zeros(2, 1);
        p.set(1, 0, 1.0);
        assert!(Outcome::new(vec![vec![0]], p).is_err());
    }

    #[test]
    fn signal_config_validates() {
        assert!(SignalConfig::reserve(1.2).is_err());
        assert!(SignalConfig::boost(0.5, 0.0).is_err());
        let s = SignalConfig::boost(0.5, 2.0).unwrap();
        assert_eq!(s.mu(), Some(1.0));
    }
}
