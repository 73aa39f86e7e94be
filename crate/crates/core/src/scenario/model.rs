use serde::{Deserialize, Serialize};

use crate::net::{GIGABIT, MIN_FRAME_BYTES};
use crate::sim::SimDuration;

/// Physical and protocol knobs shared by every node in a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub link_rate_bps: u64,
    pub propagation: SimDuration,
    pub switch_delay: SimDuration,
    /// Host stack time between receiving a frame and acting on it, and
    /// between an application send and the frame reaching the NIC.
    pub processing_delay: SimDuration,
    /// Count interframe gap and preamble in port occupancy.
    pub ifg_in_occupancy: bool,
    /// Share of each link's rate available to class-A reservations.
    pub cbs_budget: f64,
    pub negotiation_timeout: SimDuration,
    pub tcp_retry_interval: SimDuration,
    pub tcp_retries: u32,
    pub control_frame_bytes: u32,
    /// Maximum endpoints per node, `None` for no limit.
    pub endpoint_cap: Option<u32>,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            link_rate_bps: GIGABIT,
            propagation: SimDuration::ZERO,
            switch_delay: SimDuration::from_micros(8),
            processing_delay: SimDuration::from_nanos(20),
            ifg_in_occupancy: true,
            cbs_budget: 0.75,
            negotiation_timeout: SimDuration::from_millis(100),
            tcp_retry_interval: SimDuration::from_millis(200),
            tcp_retries: 3,
            control_frame_bytes: MIN_FRAME_BYTES,
            endpoint_cap: None,
        }
    }
}
