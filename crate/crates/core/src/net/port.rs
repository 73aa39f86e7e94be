use std::collections::VecDeque;

use super::frame::{gap_time, transmission_time, Frame, Priority};
use super::shaper::CbsState;
use super::NetError;
use crate::sim::{SimDuration, SimTime};

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct PortStats {
    pub tx_frames: u64,
    pub tx_class_a_frames: u64,
    /// Frame bits only, gap excluded.
    pub tx_bits: u64,
    /// Time the port was occupied, gap included when enabled.
    pub busy_ns: u64,
    pub high_water: usize,
}

/// Result of starting a transmission: the frame's last bit leaves at
/// `tx_end`, and the port may start the next frame at `free_at`.
#[derive(Debug)]
pub struct TxStart<B> {
    pub frame: Frame<B>,
    pub tx_end: SimTime,
    pub free_at: SimTime,
}

/// One egress port with strict-priority class-A and best-effort queues.
#[derive(Debug)]
pub struct EgressPort<B> {
    rate_bps: u64,
    ifg: bool,
    class_a: VecDeque<Frame<B>>,
    best_effort: VecDeque<Frame<B>>,
    shaper: Option<CbsState>,
    busy_until: SimTime,
    in_flight: Option<Priority>,
    pub stats: PortStats,
}

impl<B> EgressPort<B> {
    pub fn new(rate_bps: u64, ifg: bool) -> Result<Self, NetError> {
        if rate_bps == 0 {
            return Err(NetError::InvalidRate);
        }
        Ok(EgressPort {
            rate_bps,
            ifg,
            class_a: VecDeque::new(),
            best_effort: VecDeque::new(),
            shaper: None,
            busy_until: SimTime::ZERO,
            in_flight: None,
            stats: PortStats::default(),
        })
    }

    pub fn rate_bps(&self) -> u64 {
        self.rate_bps
    }

    pub fn shaper(&self) -> Option<&CbsState> {
        self.shaper.as_ref()
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }

    pub fn queued(&self) -> usize {
        self.class_a.len() + self.best_effort.len()
    }

    pub fn queued_frames(&self) -> impl Iterator<Item = &Frame<B>> {
        self.class_a.iter().chain(self.best_effort.iter())
    }

    pub fn class_a_len(&self) -> usize {
        self.class_a.len()
    }

    pub fn best_effort_len(&self) -> usize {
        self.best_effort.len()
    }

    pub fn is_transmitting(&self) -> bool {
        self.in_flight.is_some()
    }

    pub fn is_idle(&self, now: SimTime) -> bool {
        self.in_flight.is_none() && now >= self.busy_until
    }

    /// Adds reserved class-A bandwidth, creating the shaper on first use.
    pub fn add_reservation(&mut self, now: SimTime, idle_slope: u64) {
        let backlogged = !self.class_a.is_empty();
        match &mut self.shaper {
            Some(s) => s.add_idle_slope(now, backlogged, idle_slope),
            None => {
                self.shaper = Some(CbsState::new(
                    idle_slope.min(self.rate_bps),
                    self.rate_bps,
                    now,
                ))
            }
        }
    }

    pub fn enqueue(&mut self, frame: Frame<B>, now: SimTime) {
        match frame.priority {
            Priority::RtsClassA => {
                if let Some(s) = &mut self.shaper {
                    s.advance(now, !self.class_a.is_empty());
                }
                self.class_a.push_back(frame);
            }
            Priority::BestEffort => self.best_effort.push_back(frame),
        }
        self.stats.high_water = self.stats.high_water.max(self.queued());
    }

    /// Picks and dequeues the next frame for an idle port: class A when its
    /// credit is non-negative, otherwise best effort, otherwise nothing.
    pub fn select_next_frame(&mut self, now: SimTime) -> Option<Frame<B>> {
        debug_assert!(self.is_idle(now), "selection on a busy port");
        let a_ready = match &mut self.shaper {
            Some(s) => {
                s.advance(now, !self.class_a.is_empty());
                s.can_send()
            }
            None => true,
        };
        if a_ready && !self.class_a.is_empty() {
            return self.class_a.pop_front();
        }
        self.best_effort.pop_front()
    }

    /// Starts serializing a frame returned by [`select_next_frame`].
    ///
    /// [`select_next_frame`]: EgressPort::select_next_frame
    pub fn start_transmission(&mut self, frame: Frame<B>, now: SimTime) -> TxStart<B> {
        let tx = transmission_time(frame.size_bytes, self.rate_bps)
            .expect("frame sizes are validated on construction");
        let gap = gap_time(self.rate_bps, self.ifg);
        if frame.priority == Priority::RtsClassA {
            if let Some(s) = &mut self.shaper {
                s.start_transmission(now, true);
            }
            self.stats.tx_class_a_frames += 1;
        }
        self.in_flight = Some(frame.priority);
        let tx_end = now + tx;
        let free_at = tx_end + gap;
        self.busy_until = free_at;
        self.stats.tx_frames += 1;
        self.stats.tx_bits += u64::from(frame.size_bytes) * 8;
        self.stats.busy_ns += (tx + gap).as_nanos();
        TxStart {
            frame,
            tx_end,
            free_at,
        }
    }

    /// Called when the last bit of the in-flight frame has left.
    pub fn finish_transmission(&mut self, now: SimTime) {
        if self.in_flight.take() == Some(Priority::RtsClassA) {
            if let Some(s) = &mut self.shaper {
                s.end_transmission(now, !self.class_a.is_empty());
            }
        }
    }

    /// When the port is idle but only holds class-A frames with negative
    /// credit, the instant at which credit reaches zero.
    pub fn credit_wakeup(&mut self, now: SimTime) -> Option<SimTime> {
        if !self.is_idle(now) || self.class_a.is_empty() || !self.best_effort.is_empty() {
            return None;
        }
        let s = self.shaper.as_mut()?;
        s.advance(now, true);
        if s.can_send() {
            None
        } else {
            Some(now + s.time_to_non_negative())
        }
    }

    /// True when a frame could be transmitted right now.
    pub fn has_eligible(&mut self, now: SimTime) -> bool {
        if !self.best_effort.is_empty() {
            return true;
        }
        if self.class_a.is_empty() {
            return false;
        }
        match &mut self.shaper {
            Some(s) => {
                s.advance(now, true);
                s.can_send()
            }
            None => true,
        }
    }

    pub fn gap(&self) -> SimDuration {
        gap_time(self.rate_bps, self.ifg)
    }
}
