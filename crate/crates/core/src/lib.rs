//! Market regime analysis toolkit.
//!
//! The crate covers a complete daily-returns workflow:
//!
//! - [`ingest`]: closing-price CSVs, log returns and the five quintile states `R1..R5`.
//! - [`bds`]: the Brock–Dechert–Scheinkman iid test.
//! - [`emd`]: empirical mode decomposition (plain and masking), amplitude envelopes and
//!   direct-quadrature instantaneous amplitude, phase and frequency.
//! - [`regimes`]: normalized instantaneous energy, Normal/High/Extreme labeling, regime
//!   years and the threshold-sensitivity grid.
//! - [`hhsa`]: second-layer decomposition of IMF envelopes, the time-integrated 2-D
//!   holo-Hilbert spectrum and per-regime profiles.
//! - [`vlmc`]: variable-length Markov chains as likelihood-ratio pruned context trees.
//! - [`metrics`]: unconditional, order-1 and order-k context-tree metrics and cross-tree
//!   context aggregation.
//! - [`pipeline`]: the config-driven batch runner behind the `regimekit` binary.

// negated comparisons below are NaN-rejecting validity checks
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bds;
pub mod emd;
pub mod hhsa;
pub mod ingest;
pub mod metrics;
pub mod pipeline;
pub mod regimes;
pub mod stats;
pub mod vlmc;

pub use ingest::{PriceSeries, QuintileCutoffs, ReturnSeries, State, StateSequence};
