use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::connector::{Connector, ConnectorId};
use super::MiddlewareError;
use crate::net::{NodeId, IFG_PREAMBLE_BYTES};
use crate::protocols::QosClass;
use crate::sim::SimDuration;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ServiceId(pub u32);

/// One class a provider can serve, with the traffic it will generate.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassOffer {
    pub class: QosClass,
    pub frame_bytes: u32,
    pub cycle_time: SimDuration,
    /// Reserved bandwidth for RTS, in bit/s.
    pub idle_slope: u64,
}

impl ClassOffer {
    /// Reservation sized for one frame (gap included) per cycle.
    pub fn new(class: QosClass, frame_bytes: u32, cycle_time: SimDuration) -> Self {
        ClassOffer {
            class,
            frame_bytes,
            cycle_time,
            idle_slope: default_idle_slope(frame_bytes, cycle_time),
        }
    }
}

pub fn default_idle_slope(frame_bytes: u32, cycle_time: SimDuration) -> u64 {
    let bits = u128::from(frame_bytes + IFG_PREAMBLE_BYTES) * 8 * 1_000_000_000;
    let cycle = u128::from(cycle_time.as_nanos().max(1));
    bits.div_ceil(cycle) as u64
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceDescriptor {
    pub service_id: ServiceId,
    pub name: String,
    pub provider_node: NodeId,
    pub offers: Vec<ClassOffer>,
    /// Publication period of the providing application.
    pub cycle_time: SimDuration,
    /// First publication instant offset from zero.
    pub publish_offset: SimDuration,
    /// Latency budget for delivered data, if the service has one.
    pub deadline: Option<SimDuration>,
}

impl ServiceDescriptor {
    pub fn offer(&self, class: QosClass) -> Option<&ClassOffer> {
        self.offers.iter().find(|o| o.class == class)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QosRequest {
    pub service_id: ServiceId,
    pub required_class: QosClass,
    /// Longest acceptable publication period, if the consumer cares.
    pub max_cycle_time: Option<SimDuration>,
    pub consumer_node: NodeId,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ServiceAddress {
    pub node: NodeId,
    pub logical_port: u16,
}

const FIRST_LOGICAL_PORT: u16 = 30_500;

/// The static local service registry (one snapshot shared by every node)
/// together with each node's service manager state.
#[derive(Debug, Default)]
pub struct ServiceRegistry {
    services: BTreeMap<ServiceId, (ServiceDescriptor, ServiceAddress)>,
    next_logical: HashMap<NodeId, u16>,
    connectors: Vec<Connector>,
    provider_connector: HashMap<ServiceId, ConnectorId>,
    consumer_connector: HashMap<(NodeId, ServiceId, QosClass), ConnectorId>,
    publishes_without_endpoint: u64,
}

impl ServiceRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    /// Registers a provided service on `node` and hands back its connector.
    /// No network traffic is involved.
    pub fn register_service(
        &mut self,
        node: NodeId,
        mut descriptor: ServiceDescriptor,
    ) -> Result<ConnectorId, MiddlewareError> {
        if self.services.contains_key(&descriptor.service_id) {
            return Err(MiddlewareError::DuplicateService(descriptor.service_id));
        }
        if descriptor.offers.is_empty() {
            return Err(MiddlewareError::NoOffers(descriptor.service_id));
        }
        descriptor.provider_node = node;
        let port = self.next_logical.entry(node).or_insert(FIRST_LOGICAL_PORT);
        let addr = ServiceAddress {
            node,
            logical_port: *port,
        };
        *port += 1;
        let id = descriptor.service_id;
        self.services.insert(id, (descriptor, addr));
        let cid = ConnectorId(self.connectors.len() as u32);
        self.connectors.push(Connector::new(cid, id, node));
        self.provider_connector.insert(id, cid);
        Ok(cid)
    }

    /// Pure lookup in the static registry.
    pub fn discover(&self, service: ServiceId) -> Result<ServiceAddress, MiddlewareError> {
        self.services
            .get(&service)
            .map(|(_, a)| *a)
            .ok_or(MiddlewareError::UnknownService(service))
    }

    pub fn descriptor(&self, service: ServiceId) -> Option<&ServiceDescriptor> {
        self.services.get(&service).map(|(d, _)| d)
    }

    pub fn services(&self) -> impl Iterator<Item = &ServiceDescriptor> {
        self.services.values().map(|(d, _)| d)
    }

    pub fn provider_connector(&self, service: ServiceId) -> Option<ConnectorId> {
        self.provider_connector.get(&service).copied()
    }

    /// The connector subscribing applications on `node` use for `service`
    /// received over `class`.
    pub fn consumer_connector(
        &mut self,
        node: NodeId,
        service: ServiceId,
        class: QosClass,
    ) -> ConnectorId {
        if let Some(c) = self.consumer_connector.get(&(node, service, class)) {
            return *c;
        }
        let cid = ConnectorId(self.connectors.len() as u32);
        self.connectors.push(Connector::new(cid, service, node));
        self.consumer_connector.insert((node, service, class), cid);
        cid
    }

    pub fn find_consumer_connector(
        &self,
        node: NodeId,
        service: ServiceId,
        class: QosClass,
    ) -> Option<ConnectorId> {
        self.consumer_connector
            .get(&(node, service, class))
            .copied()
    }

    pub fn connector(&self, id: ConnectorId) -> &Connector {
        &self.connectors[id.0 as usize]
    }

    pub fn connector_mut(&mut self, id: ConnectorId) -> &mut Connector {
        &mut self.connectors[id.0 as usize]
    }

    pub fn note_empty_publish(&mut self) {
        self.publishes_without_endpoint += 1;
    }

    pub fn empty_publishes(&self) -> u64 {
        self.publishes_without_endpoint
    }
}
