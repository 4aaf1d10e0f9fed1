//! Position auctions (VCG, GSP, first price) with lazy reserves and additive
//! boosts, auto-bidding dynamics for value- and utility-maximizing bidders,
//! grid-exact dominance checks, and welfare/revenue approximation bounds.
//!
//! The crate is `no_std` + `alloc` when built without the default `std`
//! feature. The `std` feature only adds data-parallel clearing and
//! experiment runs; every result is bit-identical with or without it.

#![cfg_attr(not(feature = "std"), no_std)]
// `!(x >= y)` is used on purpose so NaN inputs fail the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

extern crate alloc;

pub mod agents;
pub mod bounds;
pub mod clearing;
pub mod dominance;
mod error;
pub mod experiments;
mod math;
pub mod rng;
pub mod types;

pub use error::{Error, Result};
pub use types::{
    AgentState, AuctionFormat, BidProfile, InstanceData, Matrix, MechanismConfig, MechanismConfigSpec, Outcome,
    ProblemInstance, SignalConfig, SignalKind, Violation,
};
