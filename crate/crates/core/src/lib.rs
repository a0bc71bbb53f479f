//! Distribution-oblivious, risk-aware best-arm identification.
//!
//! Losses may be heavy-tailed. Arms are ranked by `ξ₁·E[X] + ξ₂·CVaR_α(X)`
//! using a drop-truncated mean and a clamp-truncated CVaR whose truncation
//! levels grow with the sample count, so no moment or support bound is
//! needed. See [`bandit::run_gsr`] for the elimination engine and
//! [`experiments`] for the Monte-Carlo harness.

pub mod bandit;
pub mod bounds;
pub mod cli;
pub mod config;
pub mod distributions;
pub mod experiments;
pub mod quadrature;
pub mod risk;
pub mod rng;

pub use bandit::{BanditInstance, PhaseSchedule, RunTrace};
pub use distributions::ArmDistribution;
pub use risk::{ConfidenceLevel, RiskObjective, TruncationSchedule};
pub use rng::Seed;
