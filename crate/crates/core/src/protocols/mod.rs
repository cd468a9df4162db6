//! Protocol state machines driven by the simulation kernel, plus the
//! per-protocol configuration they share with the analytic models.
//!
//! Per-attempt success probabilities are the unique constants consistent
//! with the closed-form rates: `eta^2 / 2` per mBK attempt, `eta` per mEPL
//! raw attempt, and `eta / 2` per MPS local BSM given a source emission.

mod config;
mod lanes;
mod mbk;
mod mepl;
mod mps;
mod node;

use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use crate::analytic;
use crate::error::Result;
use crate::netparams::{LinkGeometry, NetworkParams};
use crate::simkernel::{self, McSettings, RateEstimate, Replicated, RunOptions, RunSummary};

pub use config::{Cutoff, Protocol, ProtocolConfig};
pub use lanes::{HeraldOutcome, LaneBank, LaneEvent};
pub use mbk::MbkMachine;
pub use mepl::{MeplMachine, DISTILLATION_YIELD};
pub use mps::{MpsEvent, MpsMachine};
pub use node::{MemorySlot, NodeState, SlotStatus};

/// How finely attempt series are resolved into events.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Resolution {
    /// Only successful heralds become events; for MPS, only joint successes.
    #[default]
    Skip,
    /// Every herald is an event, and for MPS every round with a local
    /// success; needed for complete traces.
    EveryAttempt,
}

/// Counters accumulated by the protocol machines.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProtocolStats {
    /// Heralded attempts (mBK, mEPL) or elapsed source rounds (MPS).
    pub attempts: u64,
    /// Successful attempts: raw states for mEPL, delivered pairs for mBK.
    pub raw_successes: u64,
    /// mEPL: attempts heralded while a raw state was stored.
    pub attempts_while_stored: u64,
    pub distillations: u64,
    pub distillation_successes: u64,
    /// mEPL: stored states dropped by the cutoff policy.
    pub discards: u64,
    /// MPS: round index reached.
    pub rounds: u64,
    /// MPS: successful local BSMs at node a and node b.
    pub local_successes: [u64; 2],
    pub joint_successes: u64,
}

impl AddAssign for ProtocolStats {
    fn add_assign(&mut self, o: Self) {
        self.attempts += o.attempts;
        self.raw_successes += o.raw_successes;
        self.attempts_while_stored += o.attempts_while_stored;
        self.distillations += o.distillations;
        self.distillation_successes += o.distillation_successes;
        self.discards += o.discards;
        self.rounds += o.rounds;
        self.local_successes[0] += o.local_successes[0];
        self.local_successes[1] += o.local_successes[1];
        self.joint_successes += o.joint_successes;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimOptions {
    pub resolution: Resolution,
    pub trace: bool,
    pub horizon: Option<f64>,
}

impl SimOptions {
    fn run_options(&self) -> RunOptions {
        RunOptions {
            trace: self.trace,
            horizon: self.horizon.unwrap_or(f64::INFINITY),
        }
    }
}

/// Result of a replicated simulation of one protocol at one distance.
#[derive(Debug, Clone)]
pub struct SimResult {
    pub estimate: RateEstimate,
    /// Counters summed over replications.
    pub stats: ProtocolStats,
    pub runs: Vec<(RunSummary, ProtocolStats)>,
    pub n_effective: u64,
}

impl SimResult {
    fn from_replicated(r: Replicated<ProtocolStats>, n_effective: u64) -> Self {
        let mut stats = ProtocolStats::default();
        for run in &r.runs {
            stats += run.stats;
        }
        Self {
            estimate: r.estimate,
            stats,
            runs: r.runs.into_iter().map(|x| (x.summary, x.stats)).collect(),
            n_effective,
        }
    }

    pub fn sim_time(&self) -> f64 {
        self.estimate.sim_time
    }

    /// mEPL: attempts spent while a raw state was stored, per delivered pair.
    pub fn stored_attempts_per_success(&self) -> Option<f64> {
        (self.estimate.successes > 0)
            .then(|| self.stats.attempts_while_stored as f64 / self.estimate.successes as f64)
    }

    /// Attempts per raw success.
    pub fn attempts_per_raw_success(&self) -> Option<f64> {
        (self.stats.raw_successes > 0).then(|| self.stats.attempts as f64 / self.stats.raw_successes as f64)
    }
}

/// Monte Carlo estimate of the entanglement rate of `cfg` at `geom`.
pub fn simulate(
    params: &NetworkParams,
    geom: LinkGeometry,
    cfg: &ProtocolConfig,
    settings: McSettings,
    opts: SimOptions,
) -> Result<SimResult> {
    simulate_with_eta(params, geom, cfg, params.eta(geom), settings, opts)
}

/// Simulates with an explicit per-attempt transmission efficiency instead of
/// the one implied by the distance; for forced-limit checks such as `eta = 1`.
pub fn simulate_with_eta(
    params: &NetworkParams,
    geom: LinkGeometry,
    cfg: &ProtocolConfig,
    eta: f64,
    settings: McSettings,
    opts: SimOptions,
) -> Result<SimResult> {
    params.validate()?;
    cfg.validate()?;
    if !(eta.is_finite() && (0.0..=1.0).contains(&eta)) {
        return Err(crate::error::Error::InvalidParameter {
            name: "eta",
            reason: format!("{eta} is not in [0, 1]"),
        });
    }
    let t_c = params.t_c(geom);
    let n_eff = analytic::effective_qubits(params, geom, cfg);
    let ro = opts.run_options();
    let res = opts.resolution;
    let replicated = match cfg.protocol {
        Protocol::Mbk => simkernel::replicate(
            |_| Ok(MbkMachine::new(n_eff as usize, cfg.n_qubits, eta, t_c, params.t_eg, res)),
            settings,
            ro,
        )?,
        Protocol::Mepl => simkernel::replicate(
            |_| {
                Ok(MeplMachine::new(
                    n_eff as usize,
                    cfg.n_qubits,
                    eta,
                    t_c,
                    params.t_eg,
                    cfg.cutoff,
                    cfg.distill_delay,
                    res,
                ))
            },
            settings,
            ro,
        )?,
        Protocol::Mps => simkernel::replicate(|_| Ok(MpsMachine::new(cfg.p_em, eta, params.t_eg, t_c, res)), settings, ro)?,
    };
    Ok(SimResult::from_replicated(replicated, n_eff))
}
