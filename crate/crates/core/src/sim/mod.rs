//! Deterministic discrete-event engine: clock, event queue, random streams.

mod engine;
mod rng;
mod time;

pub use engine::{Engine, EventId, Handler, RunAbort, RunStats, Scheduler, SimEvent};
pub use rng::RngStream;
pub use time::{SimDuration, SimTime};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum SimError {
    #[error("event scheduled at {requested} but clock is already {now}")]
    PastTimestamp { now: SimTime, requested: SimTime },
    #[error("invalid sampling range: min {min} > max {max}")]
    InvalidRange { min: SimDuration, max: SimDuration },
}
