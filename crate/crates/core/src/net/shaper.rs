//! Credit-based shaper for the class-A queue of an egress port.
//!
//! Credit is kept exactly as `bits * 1e9` in an `i128`, so that slopes in
//! bit/s multiplied by durations in ns stay integral.

use crate::sim::{SimDuration, SimTime};

const SCALE: i128 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CbsState {
    credit: i128,
    idle_slope: u64,
    rate_bps: u64,
    last_update: SimTime,
    transmitting: bool,
}

impl CbsState {
    pub fn new(idle_slope: u64, rate_bps: u64, now: SimTime) -> Self {
        CbsState {
            credit: 0,
            idle_slope,
            rate_bps,
            last_update: now,
            transmitting: false,
        }
    }

    pub fn idle_slope(&self) -> u64 {
        self.idle_slope
    }

    /// Always negative: `idle_slope - rate`.
    pub fn send_slope(&self) -> i128 {
        i128::from(self.idle_slope) - i128::from(self.rate_bps)
    }

    pub fn credit_bits(&self) -> f64 {
        self.credit as f64 / SCALE as f64
    }

    /// Credit in `bits * 1e9`.
    pub fn credit_scaled(&self) -> i128 {
        self.credit
    }

    pub fn last_update(&self) -> SimTime {
        self.last_update
    }

    pub fn is_transmitting(&self) -> bool {
        self.transmitting
    }

    pub fn can_send(&self) -> bool {
        self.credit >= 0
    }

    pub fn add_idle_slope(&mut self, now: SimTime, backlogged: bool, extra: u64) {
        self.advance(now, backlogged);
        self.idle_slope = (self.idle_slope + extra).min(self.rate_bps);
    }

    /// Integrates credit from the last update to `now`. `backlogged` is the
    /// class-A queue state over that whole interval.
    pub fn advance(&mut self, now: SimTime, backlogged: bool) {
        let dt = i128::from(now.saturating_since(self.last_update).as_nanos());
        self.last_update = self.last_update.max(now);
        if self.transmitting {
            self.credit += self.send_slope() * dt;
        } else if backlogged {
            self.credit += i128::from(self.idle_slope) * dt;
        } else if self.credit < 0 {
            self.credit = (self.credit + i128::from(self.idle_slope) * dt).min(0);
        } else {
            self.credit = 0;
        }
    }

    pub fn start_transmission(&mut self, now: SimTime, backlogged: bool) {
        self.advance(now, backlogged);
        self.transmitting = true;
    }

    pub fn end_transmission(&mut self, now: SimTime, backlogged_after: bool) {
        self.advance(now, true);
        self.transmitting = false;
        if !backlogged_after && self.credit > 0 {
            self.credit = 0;
        }
    }

    /// Waiting time until credit climbs back to zero, assuming the queue
    /// stays backlogged and nothing transmits.
    pub fn time_to_non_negative(&self) -> SimDuration {
        if self.credit >= 0 || self.idle_slope == 0 {
            return SimDuration::ZERO;
        }
        let deficit = -self.credit;
        let slope = i128::from(self.idle_slope);
        SimDuration::from_nanos(((deficit + slope - 1) / slope) as u64)
    }
}
