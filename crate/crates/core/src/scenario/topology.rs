use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::matrix::CommMatrix;
use super::traffic::{CrossTrafficProfile, CtMode};
use super::ScenarioError;
use crate::middleware::{ClassOffer, QosRequest, ServiceDescriptor, ServiceId};
use crate::net::{LinkSpec, Network, NodeId, NodeKind, GIGABIT, MIN_FRAME_BYTES};
use crate::protocols::QosClass;
use crate::sim::{RngStream, SimDuration, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NodeRole {
    PublisherHost,
    SubscriberHost,
    CtSource,
    CtSink,
    Gateway,
    Switch,
}

impl NodeRole {
    pub fn kind(self) -> NodeKind {
        match self {
            NodeRole::Switch => NodeKind::Switch,
            _ => NodeKind::Host,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeSpec {
    pub name: String,
    pub role: NodeRole,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscriptionSpec {
    pub name: String,
    pub request: QosRequest,
    pub start_at: SimTime,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopologyDescription {
    pub nodes: Vec<NodeSpec>,
    pub links: Vec<LinkSpec>,
    pub services: Vec<ServiceDescriptor>,
    pub subscriptions: Vec<SubscriptionSpec>,
    pub cross_traffic: Vec<CrossTrafficProfile>,
}

impl TopologyDescription {
    pub fn add_node(&mut self, name: impl Into<String>, role: NodeRole) -> NodeId {
        self.nodes.push(NodeSpec {
            name: name.into(),
            role,
        });
        NodeId(self.nodes.len() as u32 - 1)
    }

    pub fn add_link(&mut self, a: NodeId, b: NodeId) {
        self.links.push(LinkSpec {
            a,
            b,
            rate_bps: GIGABIT,
            propagation: SimDuration::ZERO,
        });
    }

    pub fn find(&self, name: &str) -> Option<NodeId> {
        self.nodes
            .iter()
            .position(|n| n.name == name)
            .map(|i| NodeId(i as u32))
    }

    pub fn node_name(&self, id: NodeId) -> &str {
        &self.nodes[id.0 as usize].name
    }

    pub fn service(&self, id: ServiceId) -> Option<&ServiceDescriptor> {
        self.services.iter().find(|s| s.service_id == id)
    }

    pub fn service_by_name(&self, name: &str) -> Option<&ServiceDescriptor> {
        self.services.iter().find(|s| s.name == name)
    }

    pub fn next_service_id(&self) -> ServiceId {
        ServiceId(
            self.services
                .iter()
                .map(|s| s.service_id.0 + 1)
                .max()
                .unwrap_or(0),
        )
    }

    pub fn set_link_params(&mut self, rate_bps: u64, propagation: SimDuration) {
        for l in &mut self.links {
            l.rate_bps = rate_bps;
            l.propagation = propagation;
        }
    }

    pub fn network(&self) -> Result<Network, ScenarioError> {
        let nodes = self
            .nodes
            .iter()
            .map(|n| (n.name.clone(), n.role.kind()))
            .collect();
        Ok(Network::new(nodes, &self.links)?)
    }

    /// Checks references and connectivity; returns the built network.
    pub fn validate(&self) -> Result<Network, ScenarioError> {
        let net = self.network()?;
        net.check_connectivity()?;
        let is_host = |n: NodeId| {
            self.nodes
                .get(n.0 as usize)
                .is_some_and(|s| s.role.kind() == NodeKind::Host)
        };
        let mut seen = BTreeMap::new();
        for s in &self.services {
            if !is_host(s.provider_node) {
                return Err(ScenarioError::UnknownNode(format!("{:?}", s.provider_node)));
            }
            if seen.insert(s.service_id, ()).is_some() {
                return Err(ScenarioError::DuplicateService(s.name.clone()));
            }
        }
        for sub in &self.subscriptions {
            if !is_host(sub.request.consumer_node) {
                return Err(ScenarioError::UnknownNode(sub.name.clone()));
            }
        }
        for ct in &self.cross_traffic {
            if !is_host(ct.source) || !is_host(ct.sink) || ct.source == ct.sink {
                return Err(ScenarioError::UnknownNode(ct.name.clone()));
            }
        }
        Ok(net)
    }
}

/// Service and subscription defaults for the simple network.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SimpleOptions {
    /// Class every generated subscription requests.
    pub class: QosClass,
    pub cycle_time: SimDuration,
    pub rts_frame_bytes: u32,
    pub tcp_frame_bytes: u32,
    pub udp_frame_bytes: u32,
    /// Generate one subscription per (subscriber app, service).
    pub auto_subscribe: bool,
    pub start_at: SimTime,
}

impl Default for SimpleOptions {
    fn default() -> Self {
        SimpleOptions {
            class: QosClass::IpsUdp,
            cycle_time: SimDuration::from_micros(250),
            rts_frame_bytes: 69,
            tcp_frame_bytes: MIN_FRAME_BYTES,
            udp_frame_bytes: MIN_FRAME_BYTES,
            auto_subscribe: true,
            start_at: SimTime::ZERO,
        }
    }
}

fn count(what: &'static str, v: i64) -> Result<u32, ScenarioError> {
    u32::try_from(v).map_err(|_| ScenarioError::InvalidCount { what, value: v })
}

/// Publisher host and cross-traffic source on one switch; subscriber hosts
/// and cross-traffic sink on the other. The inter-switch link is the only
/// one the cross traffic shares with the measured flows.
pub fn build_simple_network(
    n_publishers: i64,
    n_subscriber_nodes: i64,
    subs_per_node: i64,
    ct: Option<CtMode>,
    opts: &SimpleOptions,
) -> Result<TopologyDescription, ScenarioError> {
    let n_pub = count("publishers", n_publishers)?;
    let n_sub = count("subscriber_nodes", n_subscriber_nodes)?;
    let per_node = count("subs_per_node", subs_per_node)?;
    let mut t = TopologyDescription::default();
    let sw_a = t.add_node("sw_a", NodeRole::Switch);
    let sw_b = t.add_node("sw_b", NodeRole::Switch);
    t.add_link(sw_a, sw_b);
    let publisher = (n_pub > 0).then(|| {
        let p = t.add_node("pub", NodeRole::PublisherHost);
        t.add_link(p, sw_a);
        p
    });
    let subscribers: Vec<NodeId> = (0..n_sub)
        .map(|i| {
            let s = t.add_node(format!("sub{i}"), NodeRole::SubscriberHost);
            t.add_link(s, sw_b);
            s
        })
        .collect();
    if let Some(mode) = ct {
        let src = t.add_node("ct_src", NodeRole::CtSource);
        let sink = t.add_node("ct_sink", NodeRole::CtSink);
        t.add_link(src, sw_a);
        t.add_link(sink, sw_b);
        t.cross_traffic
            .push(CrossTrafficProfile::new("ct", src, sink, mode));
    }
    if let Some(p) = publisher {
        for i in 0..n_pub {
            let offers = vec![
                ClassOffer::new(QosClass::Rts, opts.rts_frame_bytes, opts.cycle_time),
                ClassOffer::new(QosClass::IpsTcp, opts.tcp_frame_bytes, opts.cycle_time),
                ClassOffer::new(QosClass::IpsUdp, opts.udp_frame_bytes, opts.cycle_time),
            ];
            t.services.push(ServiceDescriptor {
                service_id: ServiceId(i),
                name: format!("svc{i}"),
                provider_node: p,
                offers,
                cycle_time: opts.cycle_time,
                publish_offset: SimDuration::ZERO,
                deadline: None,
            });
        }
    }
    if opts.auto_subscribe {
        for (j, &node) in subscribers.iter().enumerate() {
            for k in 0..per_node {
                for svc in 0..n_pub {
                    t.subscriptions.push(SubscriptionSpec {
                        name: format!("sub{j}.app{k}.svc{svc}"),
                        request: QosRequest {
                            service_id: ServiceId(svc),
                            required_class: opts.class,
                            max_cycle_time: None,
                            consumer_node: node,
                        },
                        start_at: opts.start_at,
                    });
                }
            }
        }
    }
    Ok(t)
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ZonalOptions {
    /// Messages cycling faster than this use RTS, the rest IPS_UDP.
    pub rts_threshold: SimDuration,
    /// Fixed delay between the CAN frame and its appearance at the gateway.
    pub can_delay: SimDuration,
    /// Start-up offset between consecutive gateways.
    pub ramp_step: SimDuration,
    pub frame_bytes: u32,
    /// Seed for publication phases.
    pub phase_seed: u64,
}

impl Default for ZonalOptions {
    fn default() -> Self {
        ZonalOptions {
            rts_threshold: SimDuration::from_millis(10),
            can_delay: SimDuration::from_micros(200),
            ramp_step: SimDuration::from_millis(1),
            frame_bytes: MIN_FRAME_BYTES,
            phase_seed: 0,
        }
    }
}

pub fn zonal_class(cycle: SimDuration, opts: &ZonalOptions) -> QosClass {
    if cycle < opts.rts_threshold {
        QosClass::Rts
    } else {
        QosClass::IpsUdp
    }
}

/// One gateway per zone behind a zone switch; zone switches hang off a
/// core switch. Every matrix entry becomes a service on the sender's
/// gateway, subscribed by each other zone with a receiver.
pub fn build_zonal_network(
    zones: i64,
    matrix: &CommMatrix,
    opts: &ZonalOptions,
) -> Result<TopologyDescription, ScenarioError> {
    let zones = count("zones", zones)?;
    if zones == 0 {
        return Err(ScenarioError::InvalidCount {
            what: "zones",
            value: 0,
        });
    }
    let zone_of = matrix.zone_map()?;
    if let Some(e) = matrix.ecus.iter().find(|e| e.zone >= zones) {
        return Err(ScenarioError::UnassignedEcu(e.name.clone()));
    }
    let mut t = TopologyDescription::default();
    let core = t.add_node("core", NodeRole::Switch);
    let mut gateways = Vec::new();
    for z in 0..zones {
        let sw = t.add_node(format!("zsw{z}"), NodeRole::Switch);
        let gw = t.add_node(format!("gw{z}"), NodeRole::Gateway);
        t.add_link(sw, core);
        t.add_link(gw, sw);
        gateways.push(gw);
    }
    let mut phase = RngStream::derive(opts.phase_seed, "publish-phase");
    for entry in &matrix.entries {
        let own = zone_of[entry.sender_ecu.as_str()];
        let class = zonal_class(entry.cycle_time, opts);
        let id = ServiceId(entry.message_id);
        let offset = opts.can_delay
            + SimDuration::from_nanos(phase.uniform_u64(0, entry.cycle_time.as_nanos() - 1));
        t.services.push(ServiceDescriptor {
            service_id: id,
            name: format!("msg{}", entry.message_id),
            provider_node: gateways[own as usize],
            offers: vec![ClassOffer::new(class, opts.frame_bytes, entry.cycle_time)],
            cycle_time: entry.cycle_time,
            publish_offset: offset,
            deadline: Some(entry.deadline()),
        });
        for z in matrix.remote_zones(&zone_of, entry) {
            t.subscriptions.push(SubscriptionSpec {
                name: format!("gw{z}.msg{}", entry.message_id),
                request: QosRequest {
                    service_id: id,
                    required_class: class,
                    max_cycle_time: None,
                    consumer_node: gateways[z as usize],
                },
                start_at: SimTime::ZERO + opts.ramp_step * u64::from(z),
            });
        }
    }
    Ok(t)
}

/// Loads every backbone link once: gateway i sends to gateway i+1. With a
/// single zone a sink host on the core switch closes the loop.
pub fn add_zonal_ring_traffic(t: &mut TopologyDescription, mode: CtMode) {
    let gateways: Vec<NodeId> = t
        .nodes
        .iter()
        .enumerate()
        .filter(|(_, n)| n.role == NodeRole::Gateway)
        .map(|(i, _)| NodeId(i as u32))
        .collect();
    match gateways.len() {
        0 => {}
        1 => {
            let core = t.find("core").expect("zonal topology has a core switch");
            let sink = t.add_node("ct_sink", NodeRole::CtSink);
            t.add_link(sink, core);
            t.cross_traffic
                .push(CrossTrafficProfile::new("ring0", gateways[0], sink, mode));
        }
        n => {
            for i in 0..n {
                t.cross_traffic.push(CrossTrafficProfile::new(
                    format!("ring{i}"),
                    gateways[i],
                    gateways[(i + 1) % n],
                    mode,
                ));
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::matrix::{generate_synthetic_matrix, parse_matrix, MatrixParams};

    #[test]
    fn minimal_simple_network() {
        let t = build_simple_network(1, 1, 1, None, &SimpleOptions::default()).unwrap();
        assert_eq!(t.nodes.len(), 4);
        assert_eq!(
            t.nodes
                .iter()
                .filter(|n| n.role == NodeRole::Switch)
                .count(),
            2
        );
        assert_eq!(t.subscriptions.len(), 1);
        t.validate().unwrap();
        let with_ct = build_simple_network(
            1,
            1,
            1,
            Some(CtMode::TargetLoad(1)),
            &SimpleOptions::default(),
        )
        .unwrap();
        assert_eq!(with_ct.nodes.len(), 6);
    }

    #[test]
    fn full_grid_has_100_subscriptions() {
        let t = build_simple_network(10, 10, 1, None, &SimpleOptions::default()).unwrap();
        assert_eq!(t.subscriptions.len(), 100);
        assert_eq!(t.services.len(), 10);
    }

    #[test]
    fn empty_simple_network_is_valid() {
        let t = build_simple_network(0, 0, 0, None, &SimpleOptions::default()).unwrap();
        assert_eq!(t.nodes.len(), 2);
        t.validate().unwrap();
    }

    #[test]
    fn negative_count_rejected() {
        assert!(matches!(
            build_simple_network(-1, 1, 1, None, &SimpleOptions::default()),
            Err(ScenarioError::InvalidCount { .. })
        ));
    }

    #[test]
    fn zonal_services_and_subscriptions_follow_matrix() {
        let m = generate_synthetic_matrix(5, 300, &MatrixParams::default()).unwrap();
        let t = build_zonal_network(9, &m, &ZonalOptions::default()).unwrap();
        assert_eq!(t.services.len(), 300);
        let zones = m.zone_map().unwrap();
        let expected: usize = m
            .entries
            .iter()
            .map(|e| m.remote_zones(&zones, e).len())
            .sum();
        assert_eq!(t.subscriptions.len(), expected);
        t.validate().unwrap();
    }

    #[test]
    fn local_receivers_need_no_ethernet() {
        let m = parse_matrix("ecu,a,0,safety\necu,b,0,safety\necu,c,1,comfort\nmsg,1,a,b,1000,8\n")
            .unwrap();
        let t = build_zonal_network(2, &m, &ZonalOptions::default()).unwrap();
        assert_eq!(t.services.len(), 1);
        assert!(t.subscriptions.is_empty());
    }

    #[test]
    fn single_zone_ring_uses_core_sink() {
        let m = parse_matrix("ecu,a,0,safety\necu,b,0,safety\nmsg,1,a,b,1000,8\n").unwrap();
        let mut t = build_zonal_network(1, &m, &ZonalOptions::default()).unwrap();
        add_zonal_ring_traffic(&mut t, CtMode::TargetLoad(100_000_000));
        assert_eq!(t.cross_traffic.len(), 1);
        assert!(t.subscriptions.is_empty());
        t.validate().unwrap();
    }

    #[test]
    fn ecu_outside_zone_count_is_unassigned() {
        let m = parse_matrix("ecu,a,3,safety\necu,b,0,safety\nmsg,1,a,b,1000,8\n").unwrap();
        assert_eq!(
            build_zonal_network(2, &m, &ZonalOptions::default()).unwrap_err(),
            ScenarioError::UnassignedEcu("a".into())
        );
    }
}
