use crate::simkernel::{Context, Event, Machine};

use super::lanes::{HeraldOutcome, LaneBank, LaneEvent};
use super::{ProtocolStats, Resolution};

/// Multiplexed Barrett-Kok: each attempt succeeds when both photons are
/// detected at the midpoint and the BSM succeeds, `p = eta^2 / 2`.
pub struct MbkMachine {
    bank: LaneBank,
    successes: u64,
    now: f64,
}

impl MbkMachine {
    pub fn new(n_lanes: usize, n_qubits: u32, eta: f64, t_c: f64, t_eg: f64, resolution: Resolution) -> Self {
        Self::with_probability(n_lanes, n_qubits, eta * eta / 2.0, t_c, t_eg, resolution)
    }

    /// Same machine with the per-attempt success probability given directly.
    pub fn with_probability(
        n_lanes: usize,
        n_qubits: u32,
        p: f64,
        t_c: f64,
        t_eg: f64,
        resolution: Resolution,
    ) -> Self {
        Self {
            bank: LaneBank::new(n_lanes, n_qubits, t_c, t_eg, p, resolution),
            successes: 0,
            now: 0.0,
        }
    }

    pub fn bank(&self) -> &LaneBank {
        &self.bank
    }
}

impl Machine for MbkMachine {
    type Kind = LaneEvent;
    type Stats = ProtocolStats;

    fn start(&mut self, ctx: &mut Context<LaneEvent>) {
        for lane in 0..self.bank.n_lanes() {
            self.bank.start_series(lane, 0.0, ctx);
        }
    }

    fn handle(&mut self, event: Event<LaneEvent>, ctx: &mut Context<LaneEvent>) {
        self.now = event.time;
        if let LaneEvent::Herald { lane, series, k } = event.kind {
            if self.bank.on_herald(lane, series, k, ctx) == HeraldOutcome::Success {
                self.successes += 1;
                ctx.success();
                ctx.trace("a", "success", || format!("lane={lane}"));
                self.bank.start_series(lane, event.time, ctx);
            }
        }
    }

    fn stats(&self) -> ProtocolStats {
        ProtocolStats {
            attempts: self.bank.attempts_through(self.now),
            raw_successes: self.successes,
            ..Default::default()
        }
    }
}
