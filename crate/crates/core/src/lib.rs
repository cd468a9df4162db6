//! Rate models for heralded entanglement generation between two
//! multi-qubit quantum-network nodes.
//!
//! Three protocols are covered: multiplexed Barrett-Kok (mBK), multiplexed
//! extreme-photon-loss with distillation (mEPL), and the midpoint-source
//! scheme (MPS). Each has a closed-form model in [`analytic`] and an
//! event-driven Monte Carlo model in [`protocols`], run by the engine in
//! [`simkernel`]. [`experiments`] builds the rate-vs-distance,
//! local-success-vs-distance and rate-vs-qubit-count tables.

pub mod analytic;
pub mod config;
pub mod error;
pub mod experiments;
pub mod netparams;
pub mod protocols;
pub mod simkernel;

pub use analytic::ProtocolRate;

pub use error::{Error, Result};
pub use netparams::{LinkGeometry, NetworkParams};
pub use protocols::{simulate, Cutoff, Protocol, ProtocolConfig, ProtocolStats, Resolution, SimOptions, SimResult};
pub use simkernel::{McSettings, RateEstimate, StopRule};
