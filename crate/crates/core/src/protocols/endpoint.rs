use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::{ProtocolError, QosClass};
use crate::middleware::ServiceId;
use crate::net::{NodeId, StreamId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct EndpointId(pub u32);

/// What a consumer needs to reach the provider's endpoint.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ConnectionDetails {
    Transport {
        port: u16,
    },
    Stream {
        stream_id: StreamId,
        idle_slope: u64,
    },
}

impl ConnectionDetails {
    pub fn matches(&self, class: QosClass) -> bool {
        matches!(
            (self, class),
            (
                ConnectionDetails::Transport { .. },
                QosClass::IpsTcp | QosClass::IpsUdp
            ) | (ConnectionDetails::Stream { .. }, QosClass::Rts)
        )
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum EndpointState {
    Creating,
    Ready,
    Connected,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EndpointRole {
    Provider,
    Consumer,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndpointDescriptor {
    pub endpoint_id: EndpointId,
    pub qos_class: QosClass,
    pub node: NodeId,
    pub role: EndpointRole,
    pub service: ServiceId,
    pub details: ConnectionDetails,
    state: EndpointState,
    /// Provider side: consumer nodes this endpoint delivers to.
    pub peers: Vec<NodeId>,
}

impl EndpointDescriptor {
    pub fn state(&self) -> EndpointState {
        self.state
    }

    /// Moves one step forward; staying in place is a no-op.
    pub fn advance(&mut self, to: EndpointState) -> Result<(), ProtocolError> {
        use EndpointState::*;
        match (self.state, to) {
            (a, b) if a == b => Ok(()),
            (Creating, Ready) | (Ready, Connected) => {
                self.state = to;
                Ok(())
            }
            (from, to) => Err(ProtocolError::IllegalEndpointTransition { from, to }),
        }
    }

    pub fn add_peer(&mut self, peer: NodeId) -> bool {
        if self.peers.contains(&peer) {
            false
        } else {
            self.peers.push(peer);
            true
        }
    }
}

type EndpointKey = (NodeId, ServiceId, QosClass);

/// All endpoints in a run, with the at-most-one-per-key reuse rule for
/// both roles.
#[derive(Debug, Default)]
pub struct EndpointTable {
    endpoints: BTreeMap<EndpointId, EndpointDescriptor>,
    providers: HashMap<EndpointKey, EndpointId>,
    consumers: HashMap<EndpointKey, EndpointId>,
    next_port: HashMap<NodeId, u16>,
}

const FIRST_TRANSPORT_PORT: u16 = 40_000;

impl EndpointTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, id: EndpointId) -> Option<&EndpointDescriptor> {
        self.endpoints.get(&id)
    }

    pub fn get_mut(&mut self, id: EndpointId) -> Option<&mut EndpointDescriptor> {
        self.endpoints.get_mut(&id)
    }

    pub fn iter(&self) -> impl Iterator<Item = &EndpointDescriptor> {
        self.endpoints.values()
    }

    pub fn count(&self, role: EndpointRole) -> usize {
        self.endpoints.values().filter(|e| e.role == role).count()
    }

    pub fn find(
        &self,
        role: EndpointRole,
        node: NodeId,
        service: ServiceId,
        class: QosClass,
    ) -> Option<EndpointId> {
        let idx = match role {
            EndpointRole::Provider => &self.providers,
            EndpointRole::Consumer => &self.consumers,
        };
        idx.get(&(node, service, class)).copied()
    }

    fn allocate_port(&mut self, node: NodeId) -> u16 {
        let p = self.next_port.entry(node).or_insert(FIRST_TRANSPORT_PORT);
        let port = *p;
        *p += 1;
        port
    }

    /// Returns the endpoint for the key, creating it if it does not exist.
    /// For IPS classes the transport port is allocated here; RTS callers
    /// pass the stream in `stream`.
    pub fn open(
        &mut self,
        role: EndpointRole,
        node: NodeId,
        service: ServiceId,
        class: QosClass,
        stream: Option<(StreamId, u64)>,
    ) -> Result<(EndpointId, bool), ProtocolError> {
        class.ensure_connectable()?;
        if let Some(id) = self.find(role, node, service, class) {
            return Ok((id, false));
        }
        let details = match (class, stream) {
            (QosClass::Rts, Some((stream_id, idle_slope))) => ConnectionDetails::Stream {
                stream_id,
                idle_slope,
            },
            (QosClass::Rts, None) => return Err(ProtocolError::MissingStream),
            _ => ConnectionDetails::Transport {
                port: self.allocate_port(node),
            },
        };
        let id = EndpointId(self.endpoints.len() as u32);
        self.endpoints.insert(
            id,
            EndpointDescriptor {
                endpoint_id: id,
                qos_class: class,
                node,
                role,
                service,
                details,
                state: EndpointState::Creating,
                peers: Vec::new(),
            },
        );
        match role {
            EndpointRole::Provider => self.providers.insert((node, service, class), id),
            EndpointRole::Consumer => self.consumers.insert((node, service, class), id),
        };
        Ok((id, true))
    }
}
