use crate::simkernel::{Context, Event, Machine};

use super::lanes::{HeraldOutcome, LaneBank, LaneEvent};
use super::{Cutoff, ProtocolStats, Resolution};

/// Probability that distilling two raw single-click states yields a pair.
pub const DISTILLATION_YIELD: f64 = 1.0 / 8.0;

#[derive(Debug, Clone, Copy)]
struct Stored {
    lane: usize,
    since: f64,
    token: u64,
}

/// Multiplexed extreme-photon-loss protocol.
///
/// Every attempt heralds a raw single-click state with probability `eta`.
/// The first raw state pins its qubit; the next one, on any other qubit,
/// triggers distillation of the pair. Qubits not pinned keep attempting
/// throughout, so the first stage runs on all lanes and the second on all
/// but one.
pub struct MeplMachine {
    bank: LaneBank,
    t_c: f64,
    cutoff: Cutoff,
    distill_delay: bool,
    stored: Option<Stored>,
    next_token: u64,
    stats: ProtocolStats,
    now: f64,
}

impl MeplMachine {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_lanes: usize,
        n_qubits: u32,
        eta: f64,
        t_c: f64,
        t_eg: f64,
        cutoff: Cutoff,
        distill_delay: bool,
        resolution: Resolution,
    ) -> Self {
        Self {
            bank: LaneBank::new(n_lanes, n_qubits, t_c, t_eg, eta, resolution),
            t_c,
            cutoff,
            distill_delay,
            stored: None,
            next_token: 0,
            stats: ProtocolStats::default(),
            now: 0.0,
        }
    }

    pub fn bank(&self) -> &LaneBank {
        &self.bank
    }

    fn token(&mut self) -> u64 {
        self.next_token += 1;
        self.next_token
    }

    /// (Re)arms the discard deadline for the stored raw state from the
    /// attempts already spent on it.
    fn arm_cutoff(&mut self, ctx: &mut Context<LaneEvent>) {
        let (Some(st), Cutoff::Attempts(limit)) = (self.stored, self.cutoff) else {
            return;
        };
        let spent = self.bank.total_heralds_in(st.since, ctx.now(), None);
        let token = self.token();
        self.stored = Some(Stored { token, ..st });
        if spent >= limit {
            ctx.schedule_in(0.0, LaneEvent::Cutoff { token });
        } else if let Some(at) = self.bank.nth_future_herald(limit - spent, ctx.now()) {
            ctx.schedule_at(at, LaneEvent::Cutoff { token });
        }
    }

    fn on_raw_success(&mut self, lane: usize, attempts_of_lane: u64, ctx: &mut Context<LaneEvent>) {
        self.stats.raw_successes += 1;
        let now = ctx.now();
        match self.stored.take() {
            None => {
                self.bank.hold(lane, ctx);
                self.stored = Some(Stored {
                    lane,
                    since: now,
                    token: 0,
                });
                ctx.trace("a", "store", || format!("lane={lane}"));
                self.arm_cutoff(ctx);
            }
            Some(st) => {
                let exposed = attempts_of_lane + self.bank.total_heralds_in(st.since, now, None);
                self.stats.attempts_while_stored += exposed;
                self.bank.set_attempts_since_stored(st.lane, exposed);
                self.bank.hold(lane, ctx);
                self.stats.distillations += 1;
                let success = ctx.rng().bernoulli(DISTILLATION_YIELD);
                let lanes = [st.lane, lane];
                ctx.trace("a", "distill", || format!("lanes={}+{} exposed={exposed} success={success}", lanes[0], lanes[1]));
                if self.distill_delay {
                    ctx.schedule_in(self.t_c, LaneEvent::DistillDone { lanes, success });
                } else {
                    self.finish_distillation(lanes, success, ctx);
                }
            }
        }
    }

    fn finish_distillation(&mut self, lanes: [usize; 2], success: bool, ctx: &mut Context<LaneEvent>) {
        if success {
            self.stats.distillation_successes += 1;
            ctx.success();
            ctx.trace("a", "success", || format!("lanes={}+{}", lanes[0], lanes[1]));
        }
        let now = ctx.now();
        for lane in lanes {
            self.bank.release(lane, ctx);
            self.bank.start_series(lane, now, ctx);
        }
        if self.stored.is_some() {
            self.arm_cutoff(ctx);
        }
    }

    fn on_cutoff(&mut self, token: u64, ctx: &mut Context<LaneEvent>) {
        let Some(st) = self.stored else { return };
        // a success heralded at the deadline is handled by its own event
        if st.token != token || self.bank.success_at(ctx.now()) {
            return;
        }
        let exposed = self.bank.total_heralds_in(st.since, ctx.now(), None);
        self.stats.attempts_while_stored += exposed;
        self.stats.discards += 1;
        self.bank.set_attempts_since_stored(st.lane, exposed);
        ctx.trace("a", "discard", || format!("lane={} exposed={exposed}", st.lane));
        self.stored = None;
        self.bank.release(st.lane, ctx);
        let now = ctx.now();
        self.bank.start_series(st.lane, now, ctx);
    }
}

impl Machine for MeplMachine {
    type Kind = LaneEvent;
    type Stats = ProtocolStats;

    fn start(&mut self, ctx: &mut Context<LaneEvent>) {
        for lane in 0..self.bank.n_lanes() {
            self.bank.start_series(lane, 0.0, ctx);
        }
    }

    fn handle(&mut self, event: Event<LaneEvent>, ctx: &mut Context<LaneEvent>) {
        self.now = event.time;
        match event.kind {
            LaneEvent::Herald { lane, series, k } => {
                let own = match self.stored {
                    Some(st) => self.bank.heralds_in(lane, st.since, event.time),
                    None => 0,
                };
                if self.bank.on_herald(lane, series, k, ctx) == HeraldOutcome::Success {
                    self.on_raw_success(lane, own, ctx);
                }
            }
            LaneEvent::Cutoff { token } => self.on_cutoff(token, ctx),
            LaneEvent::DistillDone { lanes, success } => self.finish_distillation(lanes, success, ctx),
        }
    }

    fn stats(&self) -> ProtocolStats {
        ProtocolStats {
            attempts: self.bank.attempts_through(self.now),
            ..self.stats
        }
    }
}
