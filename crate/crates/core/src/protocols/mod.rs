//! Per-class connection establishment: connectionless UDP-like endpoints,
//! a TCP-like three-way handshake, and AVB-like stream reservation.

mod class;
mod endpoint;
mod reservation;
mod tcp;

pub use class::{ClassRequirements, QosClass};
pub use endpoint::{
    ConnectionDetails, EndpointDescriptor, EndpointId, EndpointRole, EndpointState, EndpointTable,
};
pub use reservation::{AdmissionControl, Reservation, ReservationStatus};
pub use tcp::{HandshakeStep, TcpHandshake, TimeoutAction};

use crate::net::PortId;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProtocolError {
    #[error("QoS class {0} cannot be negotiated")]
    UnsupportedClass(QosClass),
    #[error("unknown QoS class '{0}'")]
    UnknownClass(String),
    #[error("admission refused on {port:?}: requested {requested} bit/s, {remaining} bit/s left")]
    AdmissionRefused {
        port: PortId,
        requested: u64,
        remaining: u64,
    },
    #[error("handshake timed out")]
    HandshakeTimeout,
    #[error("endpoint cannot move from {from:?} to {to:?}")]
    IllegalEndpointTransition {
        from: EndpointState,
        to: EndpointState,
    },
    #[error("RTS endpoint needs a stream")]
    MissingStream,
}
