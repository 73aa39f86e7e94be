//! Stream reservation reduced to advertise / ready with per-port admission.

use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::net::{NodeId, PortId, StreamId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ReservationStatus {
    Advertised,
    Ready,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Reservation {
    pub stream_id: StreamId,
    pub talker: NodeId,
    pub listener: NodeId,
    pub path: Vec<PortId>,
    pub idle_slope: u64,
    pub status: ReservationStatus,
}

/// Tracks admitted class-A bandwidth per egress port.
#[derive(Clone, Debug)]
pub struct AdmissionControl {
    budget_fraction: f64,
    used: HashMap<PortId, u64>,
    streams: HashMap<PortId, BTreeSet<StreamId>>,
}

impl AdmissionControl {
    pub fn new(budget_fraction: f64) -> Self {
        AdmissionControl {
            budget_fraction,
            used: HashMap::new(),
            streams: HashMap::new(),
        }
    }

    pub fn budget(&self, rate_bps: u64) -> u64 {
        (rate_bps as f64 * self.budget_fraction).floor() as u64
    }

    pub fn used(&self, port: PortId) -> u64 {
        self.used.get(&port).copied().unwrap_or(0)
    }

    pub fn remaining(&self, port: PortId, rate_bps: u64) -> u64 {
        self.budget(rate_bps).saturating_sub(self.used(port))
    }

    pub fn carries(&self, port: PortId, stream: StreamId) -> bool {
        self.streams.get(&port).is_some_and(|s| s.contains(&stream))
    }

    /// Admits `stream` on every hop of `path` (pairs of port and link rate),
    /// all or nothing. Hops already carrying the stream are not charged
    /// again. Returns the hops that were newly charged.
    pub fn admit(
        &mut self,
        stream: StreamId,
        path: &[(PortId, u64)],
        idle_slope: u64,
    ) -> Result<Vec<PortId>, ProtocolError> {
        let mut fresh: Vec<(PortId, u64)> = Vec::with_capacity(path.len());
        for &(p, rate) in path {
            if !self.carries(p, stream) && !fresh.iter().any(|(q, _)| *q == p) {
                fresh.push((p, rate));
            }
        }
        for &(port, rate) in &fresh {
            let remaining = self.remaining(port, rate);
            if remaining < idle_slope {
                return Err(ProtocolError::AdmissionRefused {
                    port,
                    requested: idle_slope,
                    remaining,
                });
            }
        }
        for &(port, _) in &fresh {
            *self.used.entry(port).or_default() += idle_slope;
            self.streams.entry(port).or_default().insert(stream);
        }
        Ok(fresh.into_iter().map(|(p, _)| p).collect())
    }
}
