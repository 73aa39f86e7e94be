//! Event queue and run loop.
//!
//! Events are ordered by `(fire_at, id)`. Ids are handed out from a
//! monotonically increasing counter, so simultaneous events fire in the
//! order they were scheduled.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::time::{SimDuration, SimTime};
use super::SimError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct EventId(u64);

impl EventId {
    pub fn raw(self) -> u64 {
        self.0
    }
}

/// A scheduled action. The target entity and the kind of action are
/// carried by the model-defined payload.
#[derive(Debug)]
pub struct SimEvent<E> {
    pub id: EventId,
    pub fire_at: SimTime,
    pub payload: E,
}

impl<E> PartialEq for SimEvent<E> {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

impl<E> Eq for SimEvent<E> {}

impl<E> PartialOrd for SimEvent<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<E> Ord for SimEvent<E> {
    // BinaryHeap is a max-heap; invert so the earliest (then lowest id) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .fire_at
            .cmp(&self.fire_at)
            .then_with(|| other.id.cmp(&self.id))
    }
}

/// Growable bitset indexed by event id.
#[derive(Debug, Default)]
struct IdBits(Vec<u64>);

impl IdBits {
    fn get(&self, id: u64) -> bool {
        let (w, b) = ((id / 64) as usize, id % 64);
        self.0.get(w).is_some_and(|word| word & (1 << b) != 0)
    }

    fn set(&mut self, id: u64) {
        let (w, b) = ((id / 64) as usize, id % 64);
        if w >= self.0.len() {
            self.0.resize(w + 1, 0);
        }
        self.0[w] |= 1 << b;
    }
}

/// The clock plus the pending-event set. Handlers receive a mutable
/// reference to schedule follow-up events.
#[derive(Debug)]
pub struct Scheduler<E> {
    now: SimTime,
    heap: BinaryHeap<SimEvent<E>>,
    next_id: u64,
    fired: IdBits,
    cancelled: IdBits,
    n_cancelled_pending: usize,
    n_scheduled: u64,
    n_cancelled: u64,
}

impl<E> Default for Scheduler<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Scheduler<E> {
    pub fn new() -> Self {
        Scheduler {
            now: SimTime::ZERO,
            heap: BinaryHeap::new(),
            next_id: 0,
            fired: IdBits::default(),
            cancelled: IdBits::default(),
            n_cancelled_pending: 0,
            n_scheduled: 0,
            n_cancelled: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn schedule(&mut self, fire_at: SimTime, payload: E) -> Result<EventId, SimError> {
        if fire_at < self.now {
            return Err(SimError::PastTimestamp {
                now: self.now,
                requested: fire_at,
            });
        }
        let id = EventId(self.next_id);
        self.next_id += 1;
        self.n_scheduled += 1;
        self.heap.push(SimEvent {
            id,
            fire_at,
            payload,
        });
        Ok(id)
    }

    /// Schedules `delay` after the current clock; can never be in the past.
    pub fn schedule_in(&mut self, delay: SimDuration, payload: E) -> EventId {
        self.schedule(self.now + delay, payload)
            .expect("relative schedule is never in the past")
    }

    /// Cancels a pending event. Returns false if it already fired, was
    /// already cancelled, or was never issued.
    pub fn cancel(&mut self, id: EventId) -> bool {
        if id.0 >= self.next_id || self.fired.get(id.0) || self.cancelled.get(id.0) {
            return false;
        }
        self.cancelled.set(id.0);
        self.n_cancelled_pending += 1;
        self.n_cancelled += 1;
        true
    }

    /// Number of events still waiting to fire (cancelled ones excluded).
    pub fn pending(&self) -> usize {
        self.heap.len() - self.n_cancelled_pending
    }

    pub fn scheduled_total(&self) -> u64 {
        self.n_scheduled
    }

    pub fn cancelled_total(&self) -> u64 {
        self.n_cancelled
    }

    /// Iterates over live pending payloads in no particular order.
    pub fn pending_payloads(&self) -> impl Iterator<Item = &E> {
        self.heap
            .iter()
            .filter(|e| !self.cancelled.get(e.id.0))
            .map(|e| &e.payload)
    }

    fn peek_live_time(&mut self) -> Option<SimTime> {
        while let Some(top) = self.heap.peek() {
            if self.cancelled.get(top.id.0) {
                self.heap.pop();
                self.n_cancelled_pending -= 1;
            } else {
                return Some(top.fire_at);
            }
        }
        None
    }

    fn pop_live(&mut self) -> Option<SimEvent<E>> {
        self.peek_live_time()?;
        let ev = self.heap.pop()?;
        self.fired.set(ev.id.0);
        self.now = ev.fire_at;
        Some(ev)
    }
}

/// Something that reacts to events.
pub trait Handler<E> {
    type Error: std::error::Error;

    fn handle(&mut self, sched: &mut Scheduler<E>, event: SimEvent<E>) -> Result<(), Self::Error>;
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RunStats {
    pub events_processed: u64,
    pub final_clock: SimTime,
}

/// A handler error tagged with the simulated time it occurred at.
#[derive(Debug, thiserror::Error)]
#[error("run aborted at {at}: {source}")]
pub struct RunAbort<Err: std::error::Error + 'static> {
    pub at: SimTime,
    #[source]
    pub source: Err,
}

#[derive(Debug)]
pub struct Engine<E> {
    pub sched: Scheduler<E>,
    processed: u64,
}

impl<E> Default for Engine<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> Engine<E> {
    pub fn new() -> Self {
        Engine {
            sched: Scheduler::new(),
            processed: 0,
        }
    }

    pub fn now(&self) -> SimTime {
        self.sched.now()
    }

    pub fn schedule(&mut self, fire_at: SimTime, payload: E) -> Result<EventId, SimError> {
        self.sched.schedule(fire_at, payload)
    }

    pub fn cancel(&mut self, id: EventId) -> bool {
        self.sched.cancel(id)
    }

    /// Processes every event with `fire_at <= t_end` in order. The clock
    /// ends at the last processed event; an empty queue stops early.
    pub fn run_until<H: Handler<E>>(
        &mut self,
        t_end: SimTime,
        handler: &mut H,
    ) -> Result<RunStats, RunAbort<H::Error>>
    where
        H::Error: 'static,
    {
        let mut processed = 0;
        while let Some(t) = self.sched.peek_live_time() {
            if t > t_end {
                break;
            }
            let ev = self.sched.pop_live().expect("peeked event exists");
            processed += 1;
            let at = ev.fire_at;
            handler
                .handle(&mut self.sched, ev)
                .map_err(|source| RunAbort { at, source })?;
        }
        self.processed += processed;
        Ok(RunStats {
            events_processed: processed,
            final_clock: self.sched.now(),
        })
    }

    pub fn events_processed(&self) -> u64 {
        self.processed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[derive(Default)]
    struct Recorder {
        seen: Vec<(u64, u32)>,
        spawn_at_zero: bool,
    }

    #[derive(Debug, thiserror::Error)]
    #[error("never")]
    struct Never;

    impl Handler<u32> for Recorder {
        type Error = Never;
        fn handle(&mut self, sched: &mut Scheduler<u32>, ev: SimEvent<u32>) -> Result<(), Never> {
            self.seen.push((ev.fire_at.as_nanos(), ev.payload));
            if self.spawn_at_zero && ev.payload == 0 {
                sched.schedule_in(SimDuration::ZERO, 99);
            }
            Ok(())
        }
    }

    #[test]
    fn schedule_at_clock_is_accepted_and_fires_first() {
        let mut eng = Engine::new();
        eng.schedule(SimTime::from_nanos(5), 1).unwrap();
        eng.schedule(SimTime::ZERO, 0).unwrap();
        let mut rec = Recorder::default();
        eng.run_until(SimTime::from_nanos(10), &mut rec).unwrap();
        assert_eq!(rec.seen, vec![(0, 0), (5, 1)]);
    }

    #[test]
    fn ties_fire_in_insertion_order() {
        let mut eng = Engine::new();
        for p in [7, 3, 9, 1] {
            eng.schedule(SimTime::from_nanos(100), p).unwrap();
        }
        let mut rec = Recorder::default();
        eng.run_until(SimTime::from_nanos(100), &mut rec).unwrap();
        let order: Vec<u32> = rec.seen.iter().map(|s| s.1).collect();
        assert_eq!(order, vec![7, 3, 9, 1]);
    }

    #[test]
    fn zero_delay_spawn_runs_after_existing_ties() {
        let mut eng = Engine::new();
        eng.schedule(SimTime::ZERO, 0).unwrap();
        eng.schedule(SimTime::ZERO, 1).unwrap();
        let mut rec = Recorder {
            spawn_at_zero: true,
            ..Default::default()
        };
        eng.run_until(SimTime::ZERO, &mut rec).unwrap();
        let order: Vec<u32> = rec.seen.iter().map(|s| s.1).collect();
        assert_eq!(order, vec![0, 1, 99]);
    }

    #[test]
    fn past_timestamp_rejected() {
        let mut eng: Engine<u32> = Engine::new();
        eng.schedule(SimTime::from_nanos(10), 0).unwrap();
        eng.run_until(SimTime::from_nanos(10), &mut Recorder::default())
            .unwrap();
        let err = eng.schedule(SimTime::from_nanos(9), 1).unwrap_err();
        assert!(matches!(err, SimError::PastTimestamp { .. }));
    }

    #[test]
    fn empty_queue_terminates_at_clock_zero() {
        let mut eng: Engine<u32> = Engine::new();
        let stats = eng
            .run_until(
                SimTime::from_nanos(20_000_000_000),
                &mut Recorder::default(),
            )
            .unwrap();
        assert_eq!(stats.events_processed, 0);
        assert_eq!(stats.final_clock, SimTime::ZERO);
    }

    #[test]
    fn t_end_is_inclusive() {
        let mut eng = Engine::new();
        for us in 1..=3u64 {
            eng.schedule(SimTime::from_nanos(us * 1000), us as u32)
                .unwrap();
        }
        let stats = eng
            .run_until(SimTime::from_nanos(2000), &mut Recorder::default())
            .unwrap();
        assert_eq!(stats.events_processed, 2);
        assert_eq!(stats.final_clock, SimTime::from_nanos(2000));
        assert_eq!(eng.sched.pending(), 1);
    }

    #[test]
    fn cancelled_events_never_fire() {
        let mut eng = Engine::new();
        let a = eng.schedule(SimTime::from_nanos(1), 1).unwrap();
        eng.schedule(SimTime::from_nanos(2), 2).unwrap();
        assert!(eng.cancel(a));
        assert!(!eng.cancel(a));
        assert_eq!(eng.sched.pending(), 1);
        let mut rec = Recorder::default();
        eng.run_until(SimTime::from_nanos(5), &mut rec).unwrap();
        assert_eq!(rec.seen, vec![(2, 2)]);
        // already fired
        assert!(!eng.cancel(EventId(1)));
    }

    #[test]
    fn accounting_identity_holds() {
        let mut eng = Engine::new();
        let mut ids = Vec::new();
        for i in 0..50u64 {
            ids.push(
                eng.schedule(SimTime::from_nanos(i * 7 % 23), i as u32)
                    .unwrap(),
            );
        }
        for id in ids.iter().step_by(5) {
            eng.cancel(*id);
        }
        let stats = eng
            .run_until(SimTime::from_nanos(11), &mut Recorder::default())
            .unwrap();
        let total = eng.sched.scheduled_total();
        assert_eq!(
            total,
            stats.events_processed + eng.sched.cancelled_total() + eng.sched.pending() as u64
        );
    }

    proptest! {
        #[test]
        fn fires_in_time_then_insertion_order(times in prop::collection::vec(0u64..50, 1..200)) {
            let mut eng = Engine::new();
            for (i, t) in times.iter().enumerate() {
                eng.schedule(SimTime::from_nanos(*t), i as u32).unwrap();
            }
            let mut rec = Recorder::default();
            eng.run_until(SimTime::from_nanos(100), &mut rec).unwrap();
            let mut want: Vec<(u64, u32)> =
                times.iter().enumerate().map(|(i, t)| (*t, i as u32)).collect();
            want.sort();
            prop_assert_eq!(rec.seen, want);
        }
    }
}
