use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// A timestamped simulation event. Events at equal times are delivered in
/// the order they were scheduled.
#[derive(Debug, Clone, PartialEq)]
pub struct Event<K> {
    pub time: f64,
    pub seq: u64,
    pub kind: K,
}

struct Entry<K>(Event<K>);

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K> Eq for Entry<K> {}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Entry<K> {
    // BinaryHeap is a max-heap; reverse so the earliest (time, seq) is on top.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .time
            .total_cmp(&self.0.time)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Min-ordered event queue that also owns the simulated clock.
pub struct EventQueue<K> {
    heap: BinaryHeap<Entry<K>>,
    next_seq: u64,
    now: f64,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        Self {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: 0.0,
        }
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Schedules `kind` at absolute time `time`.
    ///
    /// # Panics
    ///
    /// If `time` is not finite or lies before the current clock.
    pub fn push(&mut self, time: f64, kind: K) -> u64 {
        assert!(
            time.is_finite() && time >= self.now,
            "event scheduled at {time} with clock at {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { time, seq, kind }));
        seq
    }

    pub fn peek_time(&self) -> Option<f64> {
        self.heap.peek().map(|e| e.0.time)
    }

    /// Removes the earliest event and advances the clock to its time.
    pub fn pop(&mut self) -> Option<Event<K>> {
        let Entry(ev) = self.heap.pop()?;
        debug_assert!(ev.time >= self.now, "clock moved backwards");
        self.now = ev.time;
        Some(ev)
    }

    /// Moves the clock forward without delivering anything.
    pub(crate) fn advance_to(&mut self, time: f64) {
        debug_assert!(time >= self.now);
        self.now = time;
    }
}
