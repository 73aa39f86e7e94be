use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};

use super::frame::{Destination, NodeId, PortId, StreamId};
use super::NetError;
use crate::sim::SimDuration;

pub const GIGABIT: u64 = 1_000_000_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeKind {
    Host,
    Switch,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinkSpec {
    pub a: NodeId,
    pub b: NodeId,
    pub rate_bps: u64,
    pub propagation: SimDuration,
}

#[derive(Clone, Debug)]
pub struct NodeInfo {
    pub name: String,
    pub kind: NodeKind,
    pub ports: Vec<PortId>,
}

#[derive(Clone, Debug)]
pub struct PortInfo {
    pub node: NodeId,
    pub peer: PortId,
    pub rate_bps: u64,
    pub propagation: SimDuration,
}

/// Static wiring plus shortest-path unicast routes. Hosts never forward.
#[derive(Clone, Debug)]
pub struct Network {
    nodes: Vec<NodeInfo>,
    ports: Vec<PortInfo>,
    /// `next_hop[at][dst]`: egress port at `at` toward host or switch `dst`.
    next_hop: Vec<Vec<Option<PortId>>>,
}

impl Network {
    pub fn new(nodes: Vec<(String, NodeKind)>, links: &[LinkSpec]) -> Result<Self, NetError> {
        let mut infos: Vec<NodeInfo> = nodes
            .into_iter()
            .map(|(name, kind)| NodeInfo {
                name,
                kind,
                ports: Vec::new(),
            })
            .collect();
        let mut ports = Vec::with_capacity(links.len() * 2);
        for l in links {
            let n = infos.len() as u32;
            if l.a.0 >= n || l.b.0 >= n || l.a == l.b {
                return Err(NetError::BadLink(l.a, l.b));
            }
            if l.rate_bps == 0 {
                return Err(NetError::InvalidRate);
            }
            let pa = PortId(ports.len() as u32);
            let pb = PortId(ports.len() as u32 + 1);
            ports.push(PortInfo {
                node: l.a,
                peer: pb,
                rate_bps: l.rate_bps,
                propagation: l.propagation,
            });
            ports.push(PortInfo {
                node: l.b,
                peer: pa,
                rate_bps: l.rate_bps,
                propagation: l.propagation,
            });
            infos[l.a.0 as usize].ports.push(pa);
            infos[l.b.0 as usize].ports.push(pb);
        }
        let mut net = Network {
            nodes: infos,
            ports,
            next_hop: Vec::new(),
        };
        net.compute_routes();
        Ok(net)
    }

    fn compute_routes(&mut self) {
        let n = self.nodes.len();
        let mut table = vec![vec![None; n]; n];
        for dst in 0..n {
            let mut dist = vec![usize::MAX; n];
            dist[dst] = 0;
            let mut q = VecDeque::from([dst]);
            while let Some(u) = q.pop_front() {
                // only the destination itself and switches relay
                if u != dst && self.nodes[u].kind == NodeKind::Host {
                    continue;
                }
                for p in &self.nodes[u].ports {
                    let v = self.ports[self.ports[p.0 as usize].peer.0 as usize].node.0 as usize;
                    if dist[v] == usize::MAX {
                        dist[v] = dist[u] + 1;
                        q.push_back(v);
                    }
                }
            }
            for (u, row) in table.iter_mut().enumerate() {
                if u == dst || dist[u] == usize::MAX {
                    continue;
                }
                let best = self.nodes[u]
                    .ports
                    .iter()
                    .filter(|p| {
                        let v = self.peer_node(**p).0 as usize;
                        dist[v] != usize::MAX
                            && dist[v] + 1 == dist[u]
                            && (v == dst || self.nodes[v].kind == NodeKind::Switch)
                    })
                    .min();
                row[dst] = best.copied();
            }
        }
        self.next_hop = table;
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn port_count(&self) -> usize {
        self.ports.len()
    }

    pub fn node(&self, id: NodeId) -> &NodeInfo {
        &self.nodes[id.0 as usize]
    }

    pub fn nodes(&self) -> impl Iterator<Item = (NodeId, &NodeInfo)> {
        self.nodes
            .iter()
            .enumerate()
            .map(|(i, n)| (NodeId(i as u32), n))
    }

    pub fn port(&self, id: PortId) -> &PortInfo {
        &self.ports[id.0 as usize]
    }

    pub fn ports(&self) -> impl Iterator<Item = (PortId, &PortInfo)> {
        self.ports
            .iter()
            .enumerate()
            .map(|(i, p)| (PortId(i as u32), p))
    }

    pub fn peer_node(&self, port: PortId) -> NodeId {
        self.ports[self.ports[port.0 as usize].peer.0 as usize].node
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| NodeId(i as u32))
    }

    pub fn route(&self, at: NodeId, dst: NodeId) -> Result<PortId, NetError> {
        self.next_hop
            .get(at.0 as usize)
            .and_then(|row| row.get(dst.0 as usize).copied().flatten())
            .ok_or(NetError::NoRoute { at, dst })
    }

    /// Egress ports traversed from `src` to `dst`, in order.
    pub fn path(&self, src: NodeId, dst: NodeId) -> Result<Vec<PortId>, NetError> {
        let mut hops = Vec::new();
        let mut at = src;
        while at != dst {
            let p = self.route(at, dst)?;
            hops.push(p);
            at = self.peer_node(p);
            if hops.len() > self.nodes.len() {
                return Err(NetError::NoRoute { at: src, dst });
            }
        }
        Ok(hops)
    }

    /// Every host can reach every other host.
    pub fn check_connectivity(&self) -> Result<(), NetError> {
        let hosts: Vec<NodeId> = self
            .nodes()
            .filter(|(_, n)| n.kind == NodeKind::Host)
            .map(|(id, _)| id)
            .collect();
        for &a in &hosts {
            for &b in &hosts {
                if a != b {
                    self.route(a, b)?;
                }
            }
        }
        Ok(())
    }
}

/// Store-and-forward switch: fixed hardware delay, unicast routes from the
/// [`Network`], and a per-stream multicast port set installed by
/// reservations.
#[derive(Clone, Debug, Default)]
pub struct SwitchModel {
    pub hardware_delay: SimDuration,
    stream_ports: BTreeMap<StreamId, BTreeSet<PortId>>,
}

impl SwitchModel {
    pub fn new(hardware_delay: SimDuration) -> Self {
        SwitchModel {
            hardware_delay,
            stream_ports: BTreeMap::new(),
        }
    }

    pub fn add_stream_port(&mut self, stream: StreamId, port: PortId) -> bool {
        self.stream_ports.entry(stream).or_default().insert(port)
    }

    pub fn stream_ports(&self, stream: StreamId) -> impl Iterator<Item = PortId> + '_ {
        self.stream_ports
            .get(&stream)
            .into_iter()
            .flatten()
            .copied()
    }

    /// Egress ports for a frame received on `ingress`. Multicast never
    /// reflects a frame back out of its ingress port; an empty result for a
    /// stream means no listener is registered downstream.
    pub fn forward(
        &self,
        net: &Network,
        at: NodeId,
        dst: Destination,
        ingress: PortId,
    ) -> Result<Vec<PortId>, NetError> {
        match dst {
            Destination::Unicast(d) => Ok(vec![net.route(at, d)?]),
            Destination::Stream(s) => Ok(self.stream_ports(s).filter(|p| *p != ingress).collect()),
        }
    }
}
