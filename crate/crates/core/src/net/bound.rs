//! Analytic worst-case latency for a reserved class-A stream.
//!
//! Per hop: the stream's own serialization, propagation, and on contended
//! hops one maximal lower-priority frame that may already be on the wire
//! (non-preemptive). Each switch adds its hardware delay; talker and
//! listener add their processing time.

use super::frame::{gap_time, transmission_time};
use super::NetError;
use crate::sim::SimDuration;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundHop {
    pub rate_bps: u64,
    pub propagation: SimDuration,
    /// Largest lower-priority frame that can block this hop, if any.
    pub interference_bytes: Option<u32>,
    /// Hardware delay of the switch at the far end, if the hop ends at one.
    pub switch_delay: Option<SimDuration>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundInputs {
    pub frame_bytes: u32,
    pub hops: Vec<BoundHop>,
    pub talker_processing: SimDuration,
    pub listener_processing: SimDuration,
    /// Include the blocking frame's gap in its occupancy.
    pub ifg_in_occupancy: bool,
}

pub fn avb_latency_bound(inputs: &BoundInputs) -> Result<SimDuration, NetError> {
    let mut total = inputs.talker_processing + inputs.listener_processing;
    for hop in &inputs.hops {
        total += transmission_time(inputs.frame_bytes, hop.rate_bps)?;
        total += hop.propagation;
        if let Some(b) = hop.interference_bytes {
            total += transmission_time(b, hop.rate_bps)?;
            total += gap_time(hop.rate_bps, inputs.ifg_in_occupancy);
        }
        if let Some(d) = hop.switch_delay {
            total += d;
        }
    }
    Ok(total)
}
