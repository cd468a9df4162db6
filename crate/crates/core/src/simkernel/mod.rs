//! Protocol-agnostic discrete-event engine: clock and event queue, seeded
//! random streams, the single-run loop and the replication harness.
//!
//! A run is single-threaded and deterministic for a given `(seed, stream)`.
//! Replications are independent and run on the rayon pool; results come
//! back in replication order regardless of scheduling.

mod queue;
mod stream;

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use queue::{Event, EventQueue};
pub use stream::RandomStream;

/// When a single run ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum StopRule {
    /// Run until this much simulated time has elapsed, seconds.
    Duration(f64),
    /// Run until this many successes have been recorded.
    Successes(u64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunOptions {
    pub trace: bool,
    /// Simulated time after which a success-count run is declared stuck.
    pub horizon: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            trace: false,
            horizon: f64::INFINITY,
        }
    }
}

/// One line of the optional debug trace, printed as `time,node,event_kind,detail`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub time: f64,
    pub node: &'static str,
    pub event_kind: &'static str,
    pub detail: String,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{},{}", self.time, self.node, self.event_kind, self.detail)
    }
}

pub const TRACE_HEADER: &str = "time,node,event_kind,detail";

/// Handle a machine uses to interact with the engine while processing an event.
pub struct Context<K> {
    queue: EventQueue<K>,
    rng: RandomStream,
    successes: u64,
    digest: u64,
    trace: Option<Vec<TraceRecord>>,
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv_mix(mut h: u64, word: u64) -> u64 {
    for b in word.to_le_bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(FNV_PRIME);
    }
    h
}

impl<K> Context<K> {
    fn new(rng: RandomStream, trace: bool) -> Self {
        Self {
            queue: EventQueue::new(),
            rng,
            successes: 0,
            digest: FNV_OFFSET,
            trace: trace.then(Vec::new),
        }
    }

    pub fn now(&self) -> f64 {
        self.queue.now()
    }

    pub fn schedule_at(&mut self, time: f64, kind: K) -> u64 {
        self.queue.push(time, kind)
    }

    pub fn schedule_in(&mut self, delay: f64, kind: K) -> u64 {
        let t = self.queue.now() + delay;
        self.queue.push(t, kind)
    }

    pub fn rng(&mut self) -> &mut RandomStream {
        &mut self.rng
    }

    /// Records one delivered entangled pair at the current time.
    pub fn success(&mut self) {
        self.successes += 1;
        self.digest = fnv_mix(self.digest, self.queue.now().to_bits());
    }

    pub fn successes(&self) -> u64 {
        self.successes
    }

    pub fn tracing(&self) -> bool {
        self.trace.is_some()
    }

    /// Appends a trace record; `detail` is only evaluated when tracing is on.
    pub fn trace(&mut self, node: &'static str, event_kind: &'static str, detail: impl FnOnce() -> String) {
        if let Some(t) = self.trace.as_mut() {
            t.push(TraceRecord {
                time: self.queue.now(),
                node,
                event_kind,
                detail: detail(),
            });
        }
    }
}

/// A protocol state machine driven by the engine.
pub trait Machine {
    type Kind;
    type Stats: Clone + Default + Send;

    /// Schedules the initial events.
    fn start(&mut self, ctx: &mut Context<Self::Kind>);

    fn handle(&mut self, event: Event<Self::Kind>, ctx: &mut Context<Self::Kind>);

    fn stats(&self) -> Self::Stats;
}

/// Outcome of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub successes: u64,
    pub sim_time: f64,
    pub events: u64,
    /// Hash of all success timestamps, for cheap determinism checks.
    pub digest: u64,
    pub trace: Option<Vec<TraceRecord>>,
}

impl RunSummary {
    pub fn rate(&self) -> f64 {
        if self.sim_time > 0.0 {
            self.successes as f64 / self.sim_time
        } else {
            0.0
        }
    }
}

/// Drains the machine's events until `stop` is met.
pub fn run<M: Machine>(machine: &mut M, stop: StopRule, stream: RandomStream, opts: RunOptions) -> Result<RunSummary> {
    if let StopRule::Duration(t) = stop {
        if !(t.is_finite() && t > 0.0) {
            return Err(Error::invalid("duration", format!("{t} s must be finite and > 0")));
        }
    }
    if stop == StopRule::Successes(0) {
        return Err(Error::invalid("successes", "target must be at least 1"));
    }

    let mut ctx = Context::new(stream, opts.trace);
    machine.start(&mut ctx);
    let mut events = 0u64;

    let sim_time = match stop {
        StopRule::Duration(end) => {
            while ctx.queue.peek_time().is_some_and(|t| t <= end) {
                let ev = ctx.queue.pop().expect("peeked");
                events += 1;
                machine.handle(ev, &mut ctx);
            }
            ctx.queue.advance_to(end);
            end
        }
        StopRule::Successes(target) => {
            while ctx.successes < target {
                let next = ctx.queue.peek_time();
                match next {
                    Some(t) if t <= opts.horizon => {
                        let ev = ctx.queue.pop().expect("peeked");
                        events += 1;
                        machine.handle(ev, &mut ctx);
                    }
                    _ => {
                        return Err(Error::Livelock {
                            time: ctx.now(),
                            successes: ctx.successes,
                            target,
                        })
                    }
                }
            }
            ctx.now()
        }
    };

    Ok(RunSummary {
        successes: ctx.successes,
        sim_time,
        events,
        digest: ctx.digest,
        trace: ctx.trace,
    })
}

/// Aggregate rate over independent replications.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub successes: u64,
    pub sim_time: f64,
    /// Total successes over total simulated time, Hz.
    pub rate: f64,
    /// Sample standard deviation of per-replication rates over sqrt(R);
    /// absent for a single replication.
    pub stderr: Option<f64>,
    pub replications: usize,
    pub seed: u64,
}

impl RateEstimate {
    pub fn from_runs(runs: &[RunSummary], seed: u64) -> Self {
        let successes = runs.iter().map(|r| r.successes).sum();
        let sim_time: f64 = runs.iter().map(|r| r.sim_time).sum();
        let rate = if sim_time > 0.0 { successes as f64 / sim_time } else { 0.0 };
        let n = runs.len();
        let stderr = (n >= 2).then(|| {
            let rates: Vec<f64> = runs.iter().map(RunSummary::rate).collect();
            let mean = rates.iter().sum::<f64>() / n as f64;
            let var = rates.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        });
        Self {
            successes,
            sim_time,
            rate,
            stderr,
            replications: n,
            seed,
        }
    }

    /// `|rate - reference|` in units of the standard error.
    pub fn z_score(&self, reference: f64) -> Option<f64> {
        self.stderr.map(|s| {
            let diff = (self.rate - reference).abs();
            if s > 0.0 {
                diff / s
            } else if diff == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        })
    }
}

#[derive(Debug, Clone)]
pub struct Replication<S> {
    pub summary: RunSummary,
    pub stats: S,
}

#[derive(Debug, Clone)]
pub struct Replicated<S> {
    pub estimate: RateEstimate,
    pub runs: Vec<Replication<S>>,
}

/// Replication settings shared by the simulation entry points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub replications: usize,
    pub stop: StopRule,
    pub base_seed: u64,
}

impl Default for McSettings {
    fn default() -> Self {
        Self {
            replications: 20,
            stop: StopRule::Successes(2_000),
            base_seed: 1,
        }
    }
}

/// Runs `settings.replications` independent copies of the machine built by
/// `build`; replication `i` draws from stream `i` of `base_seed`.
pub fn replicate<M, F>(build: F, settings: McSettings, opts: RunOptions) -> Result<Replicated<M::Stats>>
where
    M: Machine,
    F: Fn(usize) -> Result<M> + Sync,
{
    if settings.replications == 0 {
        return Err(Error::invalid("replications", "must be at least 1"));
    }
    let runs = (0..settings.replications)
        .into_par_iter()
        .map(|i| {
            let attach = |e: Error| Error::Replication {
                index: i,
                source: Box::new(e),
            };
            let mut machine = build(i).map_err(attach)?;
            let stream = RandomStream::new(settings.base_seed, i as u64);
            let summary = run(&mut machine, settings.stop, stream, opts).map_err(attach)?;
            Ok(Replication {
                summary,
                stats: machine.stats(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let summaries: Vec<RunSummary> = runs.iter().map(|r| r.summary.clone()).collect();
    Ok(Replicated {
        estimate: RateEstimate::from_runs(&summaries, settings.base_seed),
        runs,
    })
}

/// Toy machine: one Bernoulli(`p`) attempt every `period`, each resolved at
/// the end of its period. Useful as a known-answer check of the engine.
#[derive(Debug, Clone)]
pub struct BernoulliMachine {
    pub p: f64,
    pub period: f64,
    attempts: u64,
}

impl BernoulliMachine {
    pub fn new(p: f64, period: f64) -> Self {
        Self { p, period, attempts: 0 }
    }
}

impl Machine for BernoulliMachine {
    type Kind = ();
    type Stats = u64;

    fn start(&mut self, ctx: &mut Context<()>) {
        ctx.schedule_in(self.period, ());
    }

    fn handle(&mut self, _event: Event<()>, ctx: &mut Context<()>) {
        self.attempts += 1;
        let p = self.p;
        if ctx.rng().bernoulli(p) {
            ctx.success();
            ctx.trace("a", "success", String::new);
        }
        ctx.schedule_in(self.period, ());
    }

    fn stats(&self) -> u64 {
        self.attempts
    }
}
