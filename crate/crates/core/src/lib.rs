//! Latency lab for wireless federated split learning.
//!
//! The crate simulates a cell of users that fine-tune a model split between
//! clients and a main server, with client-side adapter updates aggregated by a
//! fed server. It provides:
//!
//! - [`scenario`]: reproducible system instances (placement, channel gains,
//!   compute and radio budgets) driven by a TOML config.
//! - [`rate`]: Shannon-rate arithmetic for FDMA uplinks, including the inverse
//!   problem (minimum bandwidth meeting a rate demand).
//! - [`delay`]: iteration counts and per-user round latency.
//! - [`optimizer`]: the structured latency minimizer plus the EB / FE / BA
//!   reference strategies and a brute-force oracle.
//! - [`train`]: a desk-scale split-training engine with closed-form
//!   convergence certificates.
//! - [`sweep`]: the experiment harness (power sweeps, improvement statistics,
//!   CSV / JSONL export).

pub mod delay;
pub mod error;
pub mod optimizer;
pub mod parallel;
pub mod rate;
pub mod scenario;
pub mod sweep;
pub mod train;

pub use error::{Error, Result};
