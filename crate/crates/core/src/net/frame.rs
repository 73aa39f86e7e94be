use serde::{Deserialize, Serialize};

use super::NetError;
use crate::sim::{SimDuration, SimTime};

pub const MIN_FRAME_BYTES: u32 = 64;
pub const MAX_FRAME_BYTES: u32 = 1542;
/// Preamble, start delimiter and interframe gap, in bytes.
pub const IFG_PREAMBLE_BYTES: u32 = 20;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NodeId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct PortId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct StreamId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FrameId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Priority {
    RtsClassA,
    BestEffort,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Destination {
    Unicast(NodeId),
    /// Layer-2 multicast along a reserved stream's forwarding tree.
    Stream(StreamId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PayloadKind {
    Data,
    Negotiation,
    TransportControl,
    ReservationControl,
    CrossTraffic,
}

impl PayloadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PayloadKind::Data => "data",
            PayloadKind::Negotiation => "negotiation",
            PayloadKind::TransportControl => "transport_control",
            PayloadKind::ReservationControl => "reservation_control",
            PayloadKind::CrossTraffic => "cross_traffic",
        }
    }
}

/// A frame on the wire. `B` is the model-specific body; the network never
/// looks inside it. Multicast copies keep the same `id`.
#[derive(Clone, Debug, PartialEq)]
pub struct Frame<B> {
    pub id: FrameId,
    pub src: NodeId,
    pub dst: Destination,
    pub priority: Priority,
    pub size_bytes: u32,
    pub created_at: SimTime,
    pub stream_id: Option<StreamId>,
    pub kind: PayloadKind,
    pub body: B,
}

impl<B> Frame<B> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: FrameId,
        src: NodeId,
        dst: Destination,
        priority: Priority,
        size_bytes: u32,
        created_at: SimTime,
        kind: PayloadKind,
        body: B,
    ) -> Result<Self, NetError> {
        check_frame_size(size_bytes)?;
        let stream_id = match dst {
            Destination::Stream(s) => Some(s),
            Destination::Unicast(_) => None,
        };
        Ok(Frame {
            id,
            src,
            dst,
            priority,
            size_bytes,
            created_at,
            stream_id,
            kind,
            body,
        })
    }
}

pub fn check_frame_size(size_bytes: u32) -> Result<(), NetError> {
    if (MIN_FRAME_BYTES..=MAX_FRAME_BYTES).contains(&size_bytes) {
        Ok(())
    } else {
        Err(NetError::InvalidFrameSize(size_bytes))
    }
}

fn bits_to_duration(bits: u64, rate_bps: u64) -> SimDuration {
    let num = u128::from(bits) * 1_000_000_000;
    let rate = u128::from(rate_bps);
    SimDuration::from_nanos(num.div_ceil(rate) as u64)
}

/// Serialization time of a frame, interframe gap excluded. Rounds up to
/// whole nanoseconds.
pub fn transmission_time(size_bytes: u32, rate_bps: u64) -> Result<SimDuration, NetError> {
    check_frame_size(size_bytes)?;
    if rate_bps == 0 {
        return Err(NetError::InvalidRate);
    }
    Ok(bits_to_duration(u64::from(size_bytes) * 8, rate_bps))
}

/// Time the port stays busy for one frame: serialization plus, when
/// enabled, the preamble and interframe gap.
pub fn occupancy_time(size_bytes: u32, rate_bps: u64, ifg: bool) -> Result<SimDuration, NetError> {
    check_frame_size(size_bytes)?;
    if rate_bps == 0 {
        return Err(NetError::InvalidRate);
    }
    let extra = if ifg { IFG_PREAMBLE_BYTES } else { 0 };
    Ok(bits_to_duration(
        u64::from(size_bytes + extra) * 8,
        rate_bps,
    ))
}

/// Gap that follows a frame on the wire, zero when gap accounting is off.
pub fn gap_time(rate_bps: u64, ifg: bool) -> SimDuration {
    if ifg {
        bits_to_duration(u64::from(IFG_PREAMBLE_BYTES) * 8, rate_bps)
    } else {
        SimDuration::ZERO
    }
}
