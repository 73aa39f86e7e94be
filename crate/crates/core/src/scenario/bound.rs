//! Worst-case latency of a reserved stream in a described topology.
//!
//! Streams are numbered after the service that talks them. A hop is
//! contended when cross traffic or another service's best-effort data
//! can occupy the same egress port.

use std::collections::HashSet;

use super::model::ModelParams;
use super::topology::TopologyDescription;
use super::ScenarioError;
use crate::net::{
    avb_latency_bound, BoundHop, BoundInputs, Network, NodeKind, PortId, Priority, StreamId,
    MAX_FRAME_BYTES,
};
use crate::protocols::QosClass;
use crate::sim::SimDuration;

fn contended_ports(
    topo: &TopologyDescription,
    net: &Network,
    stream: StreamId,
) -> Result<HashSet<PortId>, ScenarioError> {
    let mut ports = HashSet::new();
    for ct in &topo.cross_traffic {
        ports.extend(net.path(ct.source, ct.sink)?);
    }
    for sub in &topo.subscriptions {
        let svc = sub.request.service_id;
        if svc.0 == stream.0 || sub.request.required_class.data_priority() != Priority::BestEffort {
            continue;
        }
        if let Some(s) = topo.service(svc) {
            ports.extend(net.path(s.provider_node, sub.request.consumer_node)?);
        }
    }
    Ok(ports)
}

pub fn compute_avb_latency_bound(
    topo: &TopologyDescription,
    stream: StreamId,
    model: &ModelParams,
) -> Result<SimDuration, ScenarioError> {
    let svc = topo
        .services
        .iter()
        .find(|s| s.service_id.0 == stream.0)
        .ok_or(ScenarioError::UnknownStream(stream))?;
    let offer = svc
        .offer(QosClass::Rts)
        .ok_or(ScenarioError::UnknownStream(stream))?;
    let listeners: Vec<_> = topo
        .subscriptions
        .iter()
        .filter(|s| {
            s.request.service_id == svc.service_id && s.request.required_class == QosClass::Rts
        })
        .map(|s| s.request.consumer_node)
        .collect();
    if listeners.is_empty() {
        return Err(ScenarioError::UnknownStream(stream));
    }
    let net = topo.network()?;
    let contended = contended_ports(topo, &net, stream)?;
    let mut worst = SimDuration::ZERO;
    for listener in listeners {
        let hops = net
            .path(svc.provider_node, listener)?
            .into_iter()
            .map(|p| {
                let info = net.port(p);
                let far = net.peer_node(p);
                BoundHop {
                    rate_bps: info.rate_bps,
                    propagation: info.propagation,
                    interference_bytes: contended.contains(&p).then_some(MAX_FRAME_BYTES),
                    switch_delay: (net.node(far).kind == NodeKind::Switch)
                        .then_some(model.switch_delay),
                }
            })
            .collect();
        let bound = avb_latency_bound(&BoundInputs {
            frame_bytes: offer.frame_bytes,
            hops,
            talker_processing: model.processing_delay,
            listener_processing: model.processing_delay,
            ifg_in_occupancy: model.ifg_in_occupancy,
        })?;
        worst = worst.max(bound);
    }
    Ok(worst)
}
