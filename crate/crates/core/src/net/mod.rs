//! Switched-Ethernet model: frames, full-duplex links, store-and-forward
//! switches, strict-priority egress queues with a credit-based shaper for
//! reserved class-A traffic.

mod bound;
mod frame;
mod graph;
mod port;
mod shaper;

pub use bound::{avb_latency_bound, BoundHop, BoundInputs};
pub use frame::{
    check_frame_size, gap_time, occupancy_time, transmission_time, Destination, Frame, FrameId,
    NodeId, PayloadKind, PortId, Priority, StreamId, IFG_PREAMBLE_BYTES, MAX_FRAME_BYTES,
    MIN_FRAME_BYTES,
};
pub use graph::{LinkSpec, Network, NodeInfo, NodeKind, PortInfo, SwitchModel, GIGABIT};
pub use port::{EgressPort, PortStats, TxStart};
pub use shaper::CbsState;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum NetError {
    #[error("frame size {0} B outside [64, 1542]")]
    InvalidFrameSize(u32),
    #[error("link rate must be positive")]
    InvalidRate,
    #[error("invalid link between {0:?} and {1:?}")]
    BadLink(NodeId, NodeId),
    #[error("no route from {at:?} to {dst:?}")]
    NoRoute { at: NodeId, dst: NodeId },
}
