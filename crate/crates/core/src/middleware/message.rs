use serde::{Deserialize, Serialize};

use super::{QosRequest, ServiceId};
use crate::protocols::{ConnectionDetails, QosClass};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct NegotiationId(pub u64);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum QosnpKind {
    QosRequest,
    QosResponse,
    EstablishRequest,
    ConnectionDetails,
}

impl QosnpKind {
    /// The order a successful negotiation exchanges its messages in.
    pub const SEQUENCE: [QosnpKind; 4] = [
        QosnpKind::QosRequest,
        QosnpKind::QosResponse,
        QosnpKind::EstablishRequest,
        QosnpKind::ConnectionDetails,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QosnpKind::QosRequest => "QOS_REQUEST",
            QosnpKind::QosResponse => "QOS_RESPONSE",
            QosnpKind::EstablishRequest => "ESTABLISH_REQUEST",
            QosnpKind::ConnectionDetails => "CONNECTION_DETAILS",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureReason {
    AdmissionRefused,
    EndpointLimit,
    UnsupportedClass,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QosnpBody {
    QosRequest(QosRequest),
    QosResponse {
        accept: bool,
        /// On rejection, the classes the provider could have served.
        counter_offers: Vec<QosClass>,
    },
    EstablishRequest {
        class: QosClass,
    },
    ConnectionDetails(Result<ConnectionDetails, FailureReason>),
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QosnpMessage {
    pub negotiation: NegotiationId,
    pub service: ServiceId,
    pub body: QosnpBody,
}

impl QosnpMessage {
    pub fn kind(&self) -> QosnpKind {
        match self.body {
            QosnpBody::QosRequest(_) => QosnpKind::QosRequest,
            QosnpBody::QosResponse { .. } => QosnpKind::QosResponse,
            QosnpBody::EstablishRequest { .. } => QosnpKind::EstablishRequest,
            QosnpBody::ConnectionDetails(_) => QosnpKind::ConnectionDetails,
        }
    }
}
