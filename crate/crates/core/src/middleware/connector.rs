use serde::{Deserialize, Serialize};

use super::ServiceId;
use crate::net::NodeId;
use crate::protocols::EndpointId;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConnectorId(pub u32);

/// Application handle; one per subscription or providing application.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct AppId(pub u32);

/// Binds applications to the endpoints carrying one service on one node.
/// Publishing fans out to every attached endpoint; received data fans out
/// to every attached application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Connector {
    pub id: ConnectorId,
    pub service: ServiceId,
    pub node: NodeId,
    apps: Vec<AppId>,
    endpoints: Vec<EndpointId>,
}

impl Connector {
    pub fn new(id: ConnectorId, service: ServiceId, node: NodeId) -> Self {
        Connector {
            id,
            service,
            node,
            apps: Vec::new(),
            endpoints: Vec::new(),
        }
    }

    pub fn apps(&self) -> &[AppId] {
        &self.apps
    }

    pub fn endpoints(&self) -> &[EndpointId] {
        &self.endpoints
    }

    pub fn attach_app(&mut self, app: AppId) -> bool {
        if self.apps.contains(&app) {
            return false;
        }
        self.apps.push(app);
        true
    }

    pub fn attach_endpoint(&mut self, ep: EndpointId) -> bool {
        if self.endpoints.contains(&ep) {
            return false;
        }
        self.endpoints.push(ep);
        true
    }
}
