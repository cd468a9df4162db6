//! Attempt lanes shared by the mBK and mEPL machines.
//!
//! Each in-use qubit runs a series of back-to-back attempts: the optical
//! interface emits a photon for it, the state sits in that qubit until the
//! herald arrives one communication time later, and on failure the qubit
//! is re-used at once. The optical interface is a shared emitter, busy
//! `t_eg` per photon, so lanes keep distinct emission phases modulo `t_c`.
//! The swap into a memory is taken to run while the photon is in flight;
//! its duration bounds how many qubits are usable (see
//! [`analytic::n_max_mbk`](crate::analytic::n_max_mbk)) rather than adding
//! emitter dead time.
//!
//! Since every attempt of a lane is an independent Bernoulli trial with
//! the same probability, a series is drawn up front as a geometric number
//! of trials. [`Resolution::Skip`] then schedules only the successful
//! herald; [`Resolution::EveryAttempt`] schedules every herald. Both consume
//! the random stream identically, so they yield identical success times.

use crate::simkernel::Context;

use super::node::{NodeState, SlotStatus};
use super::Resolution;

const PHASE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LaneEvent {
    Herald { lane: usize, series: u64, k: u64 },
    Cutoff { token: u64 },
    DistillDone { lanes: [usize; 2], success: bool },
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Series {
    id: u64,
    first_emission: f64,
    /// Trials up to and including the success; `None` if it never succeeds.
    trials: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum LaneState {
    Idle,
    Attempting(Series),
    Holding,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeraldOutcome {
    Stale,
    Failure,
    Success,
}

pub struct LaneBank {
    t_c: f64,
    t_eg: f64,
    p: f64,
    resolution: Resolution,
    lanes: Vec<LaneState>,
    nodes: [NodeState; 2],
    next_series: u64,
    completed_attempts: u64,
}

const NODE_NAMES: [&str; 2] = ["a", "b"];

impl LaneBank {
    pub fn new(n_lanes: usize, n_qubits: u32, t_c: f64, t_eg: f64, p: f64, resolution: Resolution) -> Self {
        debug_assert!(n_lanes <= n_qubits as usize);
        Self {
            t_c,
            t_eg,
            p,
            resolution,
            lanes: vec![LaneState::Idle; n_lanes],
            nodes: [NodeState::new(n_qubits), NodeState::new(n_qubits)],
            next_series: 0,
            completed_attempts: 0,
        }
    }

    pub fn n_lanes(&self) -> usize {
        self.lanes.len()
    }

    pub fn nodes(&self) -> &[NodeState; 2] {
        &self.nodes
    }

    fn herald_time(&self, first_emission: f64, k: u64) -> f64 {
        first_emission + k as f64 * self.t_c
    }

    fn set_slot(&mut self, lane: usize, status: SlotStatus, ctx: &mut Context<LaneEvent>) {
        for (node, name) in self.nodes.iter_mut().zip(NODE_NAMES) {
            let slot = node.qubit_mut(lane);
            if status == SlotStatus::HoldingRawState && slot.status != SlotStatus::HoldingRawState {
                slot.attempts_since_stored = 0;
            }
            slot.status = status;
            let (occ, free) = (node.occupied_memories(), node.free_memories());
            ctx.trace(name, "memory", || {
                format!("qubit={lane} status={status} occupied={occ} free={free}")
            });
        }
    }

    /// Emission time for a lane (re)starting at `now`: the earliest instant
    /// that keeps the shared emitter `t_eg` away from every other lane's phase.
    fn pick_emission(&self, lane: usize, now: f64) -> f64 {
        let phases: Vec<f64> = self
            .lanes
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != lane)
            .filter_map(|(_, s)| match s {
                LaneState::Attempting(series) => Some(series.first_emission.rem_euclid(self.t_c)),
                _ => None,
            })
            .collect();
        let clear = |t: f64| {
            let ph = t.rem_euclid(self.t_c);
            phases.iter().all(|&q| {
                let d = (ph - q).abs();
                d.min(self.t_c - d) >= self.t_eg * (1.0 - PHASE_TOL)
            })
        };
        if clear(now) {
            return now;
        }
        let mut candidates: Vec<f64> = phases
            .iter()
            .map(|&q| now + (q + self.t_eg - now).rem_euclid(self.t_c))
            .collect();
        candidates.sort_by(f64::total_cmp);
        candidates.into_iter().find(|&t| clear(t)).unwrap_or(now)
    }

    /// Starts a new attempt series on `lane` at or just after `now`.
    pub fn start_series(&mut self, lane: usize, now: f64, ctx: &mut Context<LaneEvent>) {
        let emit = self.pick_emission(lane, now);
        let trials = ctx.rng().trials_until_success(self.p);
        let id = self.next_series;
        self.next_series += 1;
        self.lanes[lane] = LaneState::Attempting(Series {
            id,
            first_emission: emit,
            trials,
        });
        for node in &mut self.nodes {
            node.comm_busy_until = node.comm_busy_until.max(emit + self.t_eg);
            node.qubit_mut(lane).attempt_id = id;
        }
        self.set_slot(lane, SlotStatus::PendingHerald, ctx);
        ctx.trace("a", "attempt-start", || format!("lane={lane} series={id} k=1 emitted_at={emit}"));
        let k = match (self.resolution, trials) {
            (Resolution::Skip, Some(n)) => n,
            (Resolution::Skip, None) => return,
            (Resolution::EveryAttempt, _) => 1,
        };
        let at = self.herald_time(emit, k);
        ctx.schedule_at(at, LaneEvent::Herald { lane, series: id, k });
    }

    /// Resolves a herald. On success the lane goes idle and its qubit keeps
    /// its status until the caller restarts, holds or releases it.
    pub fn on_herald(&mut self, lane: usize, series: u64, k: u64, ctx: &mut Context<LaneEvent>) -> HeraldOutcome {
        let s = match self.lanes[lane] {
            LaneState::Attempting(s) if s.id == series => s,
            _ => return HeraldOutcome::Stale,
        };
        let emitted = self.herald_time(s.first_emission, k - 1);
        if Some(k) == s.trials {
            self.completed_attempts += k;
            self.lanes[lane] = LaneState::Idle;
            ctx.trace("a", "herald", || {
                format!("lane={lane} series={series} k={k} outcome=success emitted_at={emitted}")
            });
            return HeraldOutcome::Success;
        }
        ctx.trace("a", "herald", || {
            format!("lane={lane} series={series} k={k} outcome=failure emitted_at={emitted}")
        });
        self.set_slot(lane, SlotStatus::Free, ctx);
        let next_emit = ctx.now();
        for node in &mut self.nodes {
            node.comm_busy_until = node.comm_busy_until.max(next_emit + self.t_eg);
        }
        self.set_slot(lane, SlotStatus::PendingHerald, ctx);
        ctx.trace("a", "attempt-start", || {
            format!("lane={lane} series={series} k={} emitted_at={next_emit}", k + 1)
        });
        let at = self.herald_time(s.first_emission, k + 1);
        ctx.schedule_at(at, LaneEvent::Herald { lane, series, k: k + 1 });
        HeraldOutcome::Failure
    }

    pub fn hold(&mut self, lane: usize, ctx: &mut Context<LaneEvent>) {
        self.lanes[lane] = LaneState::Holding;
        self.set_slot(lane, SlotStatus::HoldingRawState, ctx);
    }

    pub fn release(&mut self, lane: usize, ctx: &mut Context<LaneEvent>) {
        self.lanes[lane] = LaneState::Idle;
        self.set_slot(lane, SlotStatus::Free, ctx);
    }

    pub fn set_attempts_since_stored(&mut self, lane: usize, n: u64) {
        for node in &mut self.nodes {
            node.qubit_mut(lane).attempts_since_stored = n;
        }
    }

    /// Heralds of `lane`'s current series falling in `(lo, hi]`.
    pub fn heralds_in(&self, lane: usize, lo: f64, hi: f64) -> u64 {
        let LaneState::Attempting(s) = self.lanes[lane] else {
            return 0;
        };
        let last = s.trials.unwrap_or(u64::MAX);
        let h = |k: u64| self.herald_time(s.first_emission, k);
        let guess = |t: f64| (((t - s.first_emission) / self.t_c).floor().max(0.0) as u64).max(1);

        let mut k_lo = guess(lo);
        while k_lo > 1 && h(k_lo - 1) > lo {
            k_lo -= 1;
        }
        while h(k_lo) <= lo {
            k_lo += 1;
        }
        let mut k_hi = guess(hi).saturating_add(1);
        while k_hi >= 1 && h(k_hi) > hi {
            k_hi -= 1;
        }
        while h(k_hi + 1) <= hi {
            k_hi += 1;
        }
        let k_hi = k_hi.min(last);
        if k_hi >= k_lo {
            k_hi - k_lo + 1
        } else {
            0
        }
    }

    /// Heralds of all attempting lanes in `(lo, hi]`, optionally skipping one lane.
    pub fn total_heralds_in(&self, lo: f64, hi: f64, skip: Option<usize>) -> u64 {
        (0..self.lanes.len())
            .filter(|&l| Some(l) != skip)
            .map(|l| self.heralds_in(l, lo, hi))
            .sum()
    }

    /// Time of the `r`-th herald (r >= 1) strictly after `after` among the
    /// attempting lanes, assuming none of them stops in between.
    pub fn nth_future_herald(&self, r: u64, after: f64) -> Option<f64> {
        debug_assert!(r >= 1);
        let mut next: Vec<(f64, f64, u64)> = self
            .lanes
            .iter()
            .filter_map(|s| match s {
                LaneState::Attempting(s) => {
                    let mut k = (((after - s.first_emission) / self.t_c).floor().max(0.0) as u64).max(1);
                    while k > 1 && self.herald_time(s.first_emission, k - 1) > after {
                        k -= 1;
                    }
                    while self.herald_time(s.first_emission, k) <= after {
                        k += 1;
                    }
                    Some((self.herald_time(s.first_emission, k), s.first_emission, k))
                }
                _ => None,
            })
            .collect();
        if next.is_empty() {
            return None;
        }
        next.sort_by(|a, b| a.0.total_cmp(&b.0));
        let m = next.len() as u64;
        let (_, first, k) = next[((r - 1) % m) as usize];
        Some(self.herald_time(first, k + (r - 1) / m))
    }

    /// True if some lane's series ends in a success heralded exactly at `t`.
    pub fn success_at(&self, t: f64) -> bool {
        self.lanes.iter().any(|s| match s {
            LaneState::Attempting(s) => s.trials.is_some_and(|n| self.herald_time(s.first_emission, n) == t),
            _ => false,
        })
    }

    pub fn attempting(&self, lane: usize) -> bool {
        matches!(self.lanes[lane], LaneState::Attempting(_))
    }

    /// Attempts heralded up to and including `now`.
    pub fn attempts_through(&self, now: f64) -> u64 {
        self.completed_attempts + self.total_heralds_in(f64::NEG_INFINITY, now, None)
    }
}
