use crate::simkernel::{Context, Event, Machine};

use super::{ProtocolStats, Resolution};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MpsEvent {
    /// A round in which at least one node's local BSM succeeded, or under
    /// [`Resolution::Skip`] the next round in which both did; `gap` is the
    /// number of rounds passed over since the previous one.
    Round { index: u64, gap: u64 },
    /// The remote node's report of a joint success arrives.
    Confirm { round: u64 },
    /// The remote failure notice arrives; the local state is dropped.
    Notice { round: u64, node: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum RoundOutcome {
    OnlyA,
    OnlyB,
    Both,
}

/// Midpoint-source protocol with one qubit per node, run in the low-n
/// regime: a round every `t_eg`, the source emits with probability `p_em`,
/// and each node's local BSM then succeeds independently with probability
/// `eta / 2`. A round where both succeed is delivered one communication
/// time later, when each node learns of the other's success.
///
/// With [`Resolution::EveryAttempt`] every round with a local success is an
/// event. With [`Resolution::Skip`] only joint successes are, and the
/// one-sided successes of the rounds in between are tallied binomially.
pub struct MpsMachine {
    t_eg: f64,
    t_c: f64,
    resolution: Resolution,
    p_any: f64,
    p_both_given_any: f64,
    p_joint: f64,
    /// P(exactly one side succeeds | not both), per round.
    p_one_sided: f64,
    next_round: u64,
    stats: ProtocolStats,
}

impl MpsMachine {
    pub fn new(p_em: f64, eta: f64, t_eg: f64, t_c: f64, resolution: Resolution) -> Self {
        let q = eta / 2.0;
        // P(at least one of two independent q-events), written to stay
        // accurate for tiny q
        let any_given_emission = q * (2.0 - q);
        let p_joint = p_em * q * q;
        Self {
            t_eg,
            t_c,
            resolution,
            p_any: p_em * any_given_emission,
            p_both_given_any: if any_given_emission > 0.0 { q * q / any_given_emission } else { 0.0 },
            p_joint,
            p_one_sided: p_em * 2.0 * q * (1.0 - q) / (1.0 - p_joint),
            next_round: 0,
            stats: ProtocolStats::default(),
        }
    }

    fn schedule_next(&mut self, ctx: &mut Context<MpsEvent>) {
        let p = match self.resolution {
            Resolution::Skip => self.p_joint,
            Resolution::EveryAttempt => self.p_any,
        };
        if let Some(k) = ctx.rng().trials_until_success(p) {
            let index = self.next_round + k - 1;
            self.next_round = index + 1;
            ctx.schedule_at(index as f64 * self.t_eg, MpsEvent::Round { index, gap: k - 1 });
        }
    }

    fn draw_outcome(&self, ctx: &mut Context<MpsEvent>) -> RoundOutcome {
        let u = ctx.rng().uniform();
        let p_both = self.p_both_given_any;
        if u < p_both {
            RoundOutcome::Both
        } else if u < p_both + (1.0 - p_both) / 2.0 {
            RoundOutcome::OnlyA
        } else {
            RoundOutcome::OnlyB
        }
    }
}

impl Machine for MpsMachine {
    type Kind = MpsEvent;
    type Stats = ProtocolStats;

    fn start(&mut self, ctx: &mut Context<MpsEvent>) {
        self.schedule_next(ctx);
    }

    fn handle(&mut self, event: Event<MpsEvent>, ctx: &mut Context<MpsEvent>) {
        match event.kind {
            MpsEvent::Round { index, gap } => {
                self.stats.rounds = index + 1;
                let outcome = match self.resolution {
                    Resolution::Skip => {
                        let one_sided = ctx.rng().binomial(gap, self.p_one_sided);
                        let a = ctx.rng().binomial(one_sided, 0.5);
                        self.stats.local_successes[0] += a;
                        self.stats.local_successes[1] += one_sided - a;
                        RoundOutcome::Both
                    }
                    Resolution::EveryAttempt => self.draw_outcome(ctx),
                };
                ctx.trace("mid", "round", || format!("round={index} outcome={outcome:?}"));
                match outcome {
                    RoundOutcome::Both => {
                        self.stats.local_successes[0] += 1;
                        self.stats.local_successes[1] += 1;
                        ctx.schedule_in(self.t_c, MpsEvent::Confirm { round: index });
                    }
                    RoundOutcome::OnlyA | RoundOutcome::OnlyB => {
                        let node = usize::from(outcome == RoundOutcome::OnlyB);
                        self.stats.local_successes[node] += 1;
                        // notices only matter for the trace; skip the event otherwise
                        if ctx.tracing() {
                            ctx.schedule_in(self.t_c, MpsEvent::Notice { round: index, node });
                        }
                    }
                }
                self.schedule_next(ctx);
            }
            MpsEvent::Confirm { round } => {
                self.stats.joint_successes += 1;
                ctx.success();
                ctx.trace("a", "success", || format!("round={round}"));
            }
            MpsEvent::Notice { round, node } => {
                ctx.trace(["a", "b"][node], "discard", || format!("round={round}"));
            }
        }
    }

    fn stats(&self) -> ProtocolStats {
        ProtocolStats {
            attempts: self.stats.rounds,
            ..self.stats
        }
    }
}
