//! Best-effort background load between two hosts.

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::net::{transmission_time, NodeId, MAX_FRAME_BYTES};
use crate::sim::{SimDuration, SimTime};

/// Truncated-normal inter-arrival distribution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InterArrival {
    pub mean: SimDuration,
    pub stddev: SimDuration,
    pub min: SimDuration,
    pub max: SimDuration,
}

/// Smallest gap between two cross-traffic frames in target-load mode.
pub const MIN_INTER_ARRIVAL: SimDuration = SimDuration::from_nanos(2_000);

impl InterArrival {
    /// Distribution whose mean yields `load_bps` of frame bits on a link of
    /// `rate_bps`. Bounds sit symmetrically around the mean so truncation
    /// does not shift it; stddev is a sixth of the range. `None` means no
    /// traffic.
    pub fn for_load(
        frame_bytes: u32,
        rate_bps: u64,
        load_bps: u64,
    ) -> Result<Option<InterArrival>, ScenarioError> {
        if load_bps == 0 {
            return Ok(None);
        }
        let tx = transmission_time(frame_bytes, rate_bps)?.as_nanos() as f64;
        let mean_ns = (tx * rate_bps as f64 / load_bps as f64).round() as u64;
        let mean = SimDuration::from_nanos(mean_ns.max(1));
        if mean <= MIN_INTER_ARRIVAL {
            return Ok(Some(InterArrival {
                mean,
                stddev: SimDuration::ZERO,
                min: mean,
                max: mean,
            }));
        }
        let min = MIN_INTER_ARRIVAL;
        let max = SimDuration::from_nanos(2 * mean.as_nanos() - min.as_nanos());
        Ok(Some(InterArrival {
            mean,
            stddev: SimDuration::from_nanos((max - min).as_nanos() / 6),
            min,
            max,
        }))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CtMode {
    Explicit(InterArrival),
    /// Offered load in frame bits per second.
    TargetLoad(u64),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossTrafficProfile {
    pub name: String,
    pub source: NodeId,
    pub sink: NodeId,
    pub frame_bytes: u32,
    pub mode: CtMode,
    pub start: SimTime,
    pub stop: Option<SimTime>,
}

impl CrossTrafficProfile {
    pub fn new(name: impl Into<String>, source: NodeId, sink: NodeId, mode: CtMode) -> Self {
        CrossTrafficProfile {
            name: name.into(),
            source,
            sink,
            frame_bytes: MAX_FRAME_BYTES,
            mode,
            start: SimTime::ZERO,
            stop: None,
        }
    }

    /// The sampling distribution on a link of `rate_bps`, `None` if idle.
    pub fn inter_arrival(&self, rate_bps: u64) -> Result<Option<InterArrival>, ScenarioError> {
        match self.mode {
            CtMode::Explicit(d) => Ok(Some(d)),
            CtMode::TargetLoad(load) => InterArrival::for_load(self.frame_bytes, rate_bps, load),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::GIGABIT;

    #[test]
    fn load_950_reproduces_the_2_to_23_us_profile() {
        let d = InterArrival::for_load(1542, GIGABIT, 950_000_000)
            .unwrap()
            .unwrap();
        assert_eq!(d.mean.as_nanos(), 12_985);
        assert_eq!(d.min.as_nanos(), 2_000);
        assert_eq!(d.max.as_nanos(), 23_970);
        assert_eq!(d.stddev.as_nanos(), 3_661);
    }

    #[test]
    fn zero_load_is_idle() {
        assert_eq!(InterArrival::for_load(1542, GIGABIT, 0).unwrap(), None);
    }

    #[test]
    fn overload_degenerates_to_constant_spacing() {
        let d = InterArrival::for_load(1542, GIGABIT, 10 * GIGABIT)
            .unwrap()
            .unwrap();
        assert_eq!(d.min, d.max);
        assert_eq!(d.stddev, SimDuration::ZERO);
    }
}
