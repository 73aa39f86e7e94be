//! Service-oriented middleware: service registry, connectors, negotiation
//! brokers and their message format.

mod broker;
mod connector;
mod message;
mod service;

pub use broker::{
    transition, Broker, BrokerAction, BrokerInput, BrokerState, ConsumerState, ProviderState, Step,
};
pub use connector::{AppId, Connector, ConnectorId};
pub use message::{FailureReason, NegotiationId, QosnpBody, QosnpKind, QosnpMessage};
pub use service::{
    default_idle_slope, ClassOffer, QosRequest, ServiceAddress, ServiceDescriptor, ServiceId,
    ServiceRegistry,
};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MiddlewareError {
    #[error("service {0:?} already registered")]
    DuplicateService(ServiceId),
    #[error("service {0:?} offers no class")]
    NoOffers(ServiceId),
    #[error("service {0:?} not in the registry")]
    UnknownService(ServiceId),
    #[error("message does not apply to negotiation {0:?} in its current state")]
    StaleNegotiation(NegotiationId),
}
