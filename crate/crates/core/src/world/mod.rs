//! The simulated vehicle network: hosts running the middleware, switches,
//! cross-traffic generators, all driven by one event loop.

mod metrics;
mod qosnp;
mod trace;

use std::collections::HashMap;
use std::io::Write;

use serde_json::json;

pub use metrics::{
    Counters, FrameCounters, LatencySample, LinkLoad, Metrics, NegotiationLog, SetupOutcome,
    SetupStatus,
};
pub use trace::Trace;

use crate::middleware::{
    Broker, ConnectorId, NegotiationId, QosnpKind, QosnpMessage, ServiceDescriptor, ServiceId,
    ServiceRegistry,
};
use crate::net::{
    Destination, EgressPort, Frame, FrameId, NetError, Network, NodeId, NodeKind, PayloadKind,
    PortId, Priority, StreamId, SwitchModel,
};
use crate::protocols::{
    AdmissionControl, ConnectionDetails, EndpointId, EndpointTable, QosClass, Reservation,
    TcpHandshake,
};
use crate::scenario::{
    InterArrival, ModelParams, ScenarioError, SubscriptionSpec, TopologyDescription,
};
use crate::sim::{
    Engine, EventId, Handler, RngStream, RunAbort, RunStats, Scheduler, SimDuration, SimEvent,
    SimTime,
};

#[derive(Debug, thiserror::Error)]
pub enum WorldError {
    #[error(transparent)]
    Net(#[from] NetError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("service registration failed: {0}")]
    Registry(#[from] crate::middleware::MiddlewareError),
    #[error(transparent)]
    Sim(#[from] crate::sim::SimError),
    #[error("trace output failed: {0}")]
    Trace(#[from] std::io::Error),
    #[error("frame {frame} for {dst:?} arrived at {at:?}")]
    Misdelivered { frame: u64, dst: NodeId, at: NodeId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TcpKind {
    Syn,
    SynAck,
    Ack,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SrpKind {
    TalkerAdvertise,
    ListenerReady,
}

/// What a frame carries. The network only looks at the frame header.
#[derive(Clone, Debug, PartialEq)]
pub enum Body {
    CrossTraffic,
    Qosnp(QosnpMessage),
    Tcp {
        kind: TcpKind,
        negotiation: NegotiationId,
        /// Consumer endpoint running the handshake.
        endpoint: EndpointId,
        port: u16,
    },
    Srp {
        kind: SrpKind,
        negotiation: NegotiationId,
        stream: StreamId,
    },
    Data {
        service: ServiceId,
        class: QosClass,
        seq: u64,
    },
}

pub type WorldFrame = Frame<Body>;

#[derive(Debug)]
pub enum Ev {
    /// Selection on a port, after every enqueue of the current instant.
    Kick(PortId),
    /// Interframe gap over.
    PortFree(PortId),
    /// Class-A credit has recovered.
    Wake(PortId),
    TxEnd {
        port: PortId,
        frame: WorldFrame,
    },
    /// Last bit received at the far end of `port`'s link.
    Arrive {
        port: PortId,
        frame: WorldFrame,
    },
    /// Switch hardware delay over; one copy per egress port.
    SwitchOut {
        ports: Vec<PortId>,
        frame: WorldFrame,
    },
    /// Host stack has processed a received frame.
    HostRx {
        node: NodeId,
        ingress: PortId,
        rx_at: SimTime,
        frame: WorldFrame,
    },
    /// Host stack hands an application frame to the NIC.
    HostTx {
        node: NodeId,
        frame: WorldFrame,
    },
    SubscriptionStart(usize),
    Publish(usize),
    CtEmit(usize),
    BrokerTimeout {
        negotiation: NegotiationId,
        provider: bool,
    },
    TcpRetry(EndpointId),
}

impl Ev {
    /// Frames held by this event.
    fn frames(&self) -> u64 {
        match self {
            Ev::TxEnd { .. } | Ev::Arrive { .. } | Ev::HostRx { .. } | Ev::HostTx { .. } => 1,
            Ev::SwitchOut { ports, .. } => ports.len() as u64,
            _ => 0,
        }
    }
}

struct Negotiation {
    subscription: usize,
    service: ServiceId,
    class: QosClass,
    consumer: NodeId,
    provider: NodeId,
    consumer_broker: Broker,
    provider_broker: Option<Broker>,
    consumer_timer: Option<EventId>,
    provider_timer: Option<EventId>,
    details: Option<ConnectionDetails>,
    advertised: bool,
    consumer_endpoint: Option<EndpointId>,
    owns_endpoint: bool,
    listener_ready_sent: bool,
    sent: Vec<QosnpKind>,
}

struct TcpConn {
    handshake: TcpHandshake,
    negotiation: NegotiationId,
    provider: NodeId,
    port: u16,
    timer: Option<EventId>,
}

struct PendingInstall {
    ports: Vec<PortId>,
    idle_slope: u64,
}

struct CtGen {
    source: NodeId,
    sink: NodeId,
    frame_bytes: u32,
    dist: InterArrival,
    stop: Option<SimTime>,
    rng: RngStream,
}

/// Frame accounting at one instant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Conservation {
    pub counters: FrameCounters,
    /// Frames found in queues and pending events.
    pub in_system: u64,
}

impl Conservation {
    pub fn holds(&self) -> bool {
        let c = self.counters;
        c.created == c.delivered + c.pruned + self.in_system && c.live() == self.in_system
    }
}

pub struct World {
    model: ModelParams,
    net: Network,
    names: Vec<String>,
    ports: Vec<EgressPort<Body>>,
    kick_pending: Vec<bool>,
    wake_at: Vec<Option<SimTime>>,
    tables: Vec<SwitchModel>,
    registry: ServiceRegistry,
    services: Vec<ServiceDescriptor>,
    service_idx: HashMap<ServiceId, usize>,
    subscriptions: Vec<SubscriptionSpec>,
    endpoints: EndpointTable,
    admission: AdmissionControl,
    negotiations: Vec<Negotiation>,
    waiters: HashMap<EndpointId, Vec<NegotiationId>>,
    tcp: HashMap<EndpointId, TcpConn>,
    installs: HashMap<NegotiationId, PendingInstall>,
    reservations: Vec<Reservation>,
    ct: Vec<CtGen>,
    seq: Vec<u64>,
    next_frame: u64,
    t_end: SimTime,
    metrics: Metrics,
    trace: Option<Trace>,
}

/// A world together with its event loop.
pub struct Simulation {
    pub engine: Engine<Ev>,
    pub world: World,
}

#[derive(Debug)]
pub struct RunOutput {
    pub stats: RunStats,
    pub metrics: Metrics,
    pub conservation: Conservation,
}

impl Simulation {
    pub fn new(
        topo: &TopologyDescription,
        model: &ModelParams,
        seed: u64,
        t_end: SimTime,
        trace: Option<Box<dyn Write>>,
    ) -> Result<Self, WorldError> {
        let mut engine = Engine::new();
        let world = World::new(topo, model, seed, t_end, trace, &mut engine.sched)?;
        Ok(Simulation { engine, world })
    }

    pub fn run(mut self) -> Result<RunOutput, RunAbort<WorldError>> {
        let t_end = self.world.t_end;
        let stats = self.engine.run_until(t_end, &mut self.world)?;
        let conservation = self.world.conservation(&self.engine.sched);
        let metrics = self
            .world
            .finish()
            .map_err(|source| RunAbort { at: t_end, source })?;
        Ok(RunOutput {
            stats,
            metrics,
            conservation,
        })
    }
}

impl Simulation {
    /// Installs a class-A reservation from `talker` to `listener` without
    /// negotiation: a shaper share and a forwarding entry on every hop.
    pub fn reserve_stream(
        &mut self,
        stream: StreamId,
        talker: NodeId,
        listener: NodeId,
        idle_slope: u64,
    ) -> Result<(), WorldError> {
        let now = self.engine.now();
        for p in self.world.net.path(talker, listener)? {
            let node = self.world.net.port(p).node;
            self.world.tables[node.0 as usize].add_stream_port(stream, p);
            self.world.ports[p.0 as usize].add_reservation(now, idle_slope);
        }
        Ok(())
    }

    /// Schedules a frame that bypasses the middleware to reach `src`'s NIC
    /// at `at`. It is handled like cross traffic on delivery.
    pub fn inject_raw(
        &mut self,
        at: SimTime,
        src: NodeId,
        dst: Destination,
        priority: Priority,
        size_bytes: u32,
    ) -> Result<FrameId, WorldError> {
        let frame = self.world.new_frame(
            at,
            src,
            dst,
            priority,
            size_bytes,
            PayloadKind::CrossTraffic,
            Body::CrossTraffic,
        )?;
        let id = frame.id;
        self.engine.schedule(at, Ev::HostTx { node: src, frame })?;
        Ok(id)
    }
}

impl World {
    fn new(
        topo: &TopologyDescription,
        model: &ModelParams,
        seed: u64,
        t_end: SimTime,
        trace: Option<Box<dyn Write>>,
        sched: &mut Scheduler<Ev>,
    ) -> Result<Self, WorldError> {
        let mut topo = topo.clone();
        topo.set_link_params(model.link_rate_bps, model.propagation);
        let net = topo.validate()?;
        let ports = net
            .ports()
            .map(|(_, p)| EgressPort::new(p.rate_bps, model.ifg_in_occupancy))
            .collect::<Result<Vec<_>, _>>()?;
        let n_ports = ports.len();
        let mut registry = ServiceRegistry::new();
        let mut service_idx = HashMap::new();
        for (i, s) in topo.services.iter().enumerate() {
            registry.register_service(s.provider_node, s.clone())?;
            service_idx.insert(s.service_id, i);
        }
        let mut ct = Vec::new();
        for p in &topo.cross_traffic {
            let rate = net.port(net.route(p.source, p.sink)?).rate_bps;
            if let Some(dist) = p.inter_arrival(rate)? {
                ct.push((
                    p.start,
                    CtGen {
                        source: p.source,
                        sink: p.sink,
                        frame_bytes: p.frame_bytes,
                        dist,
                        stop: p.stop,
                        rng: RngStream::derive(seed, &format!("ct/{}", p.name)),
                    },
                ));
            }
        }
        let setups = topo
            .subscriptions
            .iter()
            .enumerate()
            .map(|(i, s)| {
                SetupOutcome::new(
                    i,
                    s.request.service_id,
                    s.request.required_class,
                    s.start_at,
                )
            })
            .collect();
        let metrics = Metrics {
            setups,
            ..Metrics::default()
        };
        let mut world = World {
            model: model.clone(),
            names: net.nodes().map(|(_, n)| n.name.clone()).collect(),
            tables: (0..net.node_count())
                .map(|_| SwitchModel::new(model.switch_delay))
                .collect(),
            net,
            ports,
            kick_pending: vec![false; n_ports],
            wake_at: vec![None; n_ports],
            registry,
            seq: vec![0; topo.services.len()],
            services: topo.services.clone(),
            service_idx,
            subscriptions: topo.subscriptions.clone(),
            endpoints: EndpointTable::new(),
            admission: AdmissionControl::new(model.cbs_budget),
            negotiations: Vec::new(),
            waiters: HashMap::new(),
            tcp: HashMap::new(),
            installs: HashMap::new(),
            reservations: Vec::new(),
            ct: Vec::new(),
            next_frame: 0,
            t_end,
            metrics,
            trace: trace.map(Trace::new),
        };
        for (i, s) in world.subscriptions.iter().enumerate() {
            if s.start_at <= t_end {
                sched
                    .schedule(s.start_at, Ev::SubscriptionStart(i))
                    .expect("clock at zero");
            }
        }
        for (i, s) in world.services.iter().enumerate() {
            let first = SimTime::ZERO + s.publish_offset;
            if first <= t_end {
                sched
                    .schedule(first, Ev::Publish(i))
                    .expect("clock at zero");
            }
        }
        for (i, (start, mut gen)) in ct.into_iter().enumerate() {
            let gap = gen.sample()?;
            sched
                .schedule(start + gap, Ev::CtEmit(i))
                .expect("clock at zero");
            world.ct.push(gen);
        }
        Ok(world)
    }

    pub fn network(&self) -> &Network {
        &self.net
    }

    pub fn port(&self, p: PortId) -> &EgressPort<Body> {
        &self.ports[p.0 as usize]
    }

    pub fn endpoints(&self) -> &EndpointTable {
        &self.endpoints
    }

    pub fn admission(&self) -> &AdmissionControl {
        &self.admission
    }

    pub fn reservations(&self) -> &[Reservation] {
        &self.reservations
    }

    pub fn registry(&self) -> &ServiceRegistry {
        &self.registry
    }

    pub fn metrics(&self) -> &Metrics {
        &self.metrics
    }

    pub fn open_brokers(&self) -> usize {
        self.negotiations
            .iter()
            .map(|n| {
                usize::from(!n.consumer_broker.state().is_terminal())
                    + n.provider_broker
                        .as_ref()
                        .map_or(0, |b| usize::from(!b.state().is_terminal()))
            })
            .sum()
    }

    /// Compares the frame counters against a scan of queues and pending
    /// events.
    pub fn conservation(&self, sched: &Scheduler<Ev>) -> Conservation {
        let queued: u64 = self.ports.iter().map(|p| p.queued() as u64).sum();
        let pending: u64 = sched.pending_payloads().map(Ev::frames).sum();
        Conservation {
            counters: self.metrics.counters.frames,
            in_system: queued + pending,
        }
    }

    fn finish(mut self) -> Result<Metrics, WorldError> {
        if let Some(t) = &mut self.trace {
            t.flush()?;
        }
        self.metrics.open_brokers = self.open_brokers();
        self.metrics.counters.empty_publishes = self.registry.empty_publishes();
        self.metrics.links = self
            .net
            .ports()
            .map(|(id, info)| {
                let st = &self.ports[id.0 as usize].stats;
                LinkLoad {
                    from: self.names[info.node.0 as usize].clone(),
                    to: self.names[self.net.peer_node(id).0 as usize].clone(),
                    port: id.0,
                    tx_frames: st.tx_frames,
                    tx_class_a_frames: st.tx_class_a_frames,
                    tx_bits: st.tx_bits,
                    busy_ns: st.busy_ns,
                    high_water: st.high_water,
                }
            })
            .collect();
        self.metrics.negotiations = self
            .negotiations
            .iter()
            .enumerate()
            .map(|(i, n)| NegotiationLog {
                negotiation: NegotiationId(i as u64),
                sent: n.sent.clone(),
                succeeded: self.metrics.setups[n.subscription].status == SetupStatus::Connected,
            })
            .collect();
        Ok(self.metrics)
    }

    fn name(&self, n: NodeId) -> &str {
        &self.names[n.0 as usize]
    }

    // ---- frames and ports ----

    #[allow(clippy::too_many_arguments)]
    fn new_frame(
        &mut self,
        now: SimTime,
        src: NodeId,
        dst: Destination,
        priority: Priority,
        size: u32,
        kind: PayloadKind,
        body: Body,
    ) -> Result<WorldFrame, WorldError> {
        let f = Frame::new(
            FrameId(self.next_frame),
            src,
            dst,
            priority,
            size,
            now,
            kind,
            body,
        )?;
        self.next_frame += 1;
        self.metrics.counters.frames.created += 1;
        Ok(f)
    }

    /// Best-effort control frame from `src` to `dst`.
    fn control_frame(
        &mut self,
        now: SimTime,
        src: NodeId,
        dst: NodeId,
        kind: PayloadKind,
        body: Body,
    ) -> Result<WorldFrame, WorldError> {
        let size = self.model.control_frame_bytes;
        self.new_frame(
            now,
            src,
            Destination::Unicast(dst),
            Priority::BestEffort,
            size,
            kind,
            body,
        )
    }

    /// Application send: the frame reaches the NIC after stack processing.
    fn emit(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        frame: WorldFrame,
    ) -> Result<(), WorldError> {
        if self.model.processing_delay == SimDuration::ZERO {
            self.inject(s, node, frame)
        } else {
            s.schedule_in(self.model.processing_delay, Ev::HostTx { node, frame });
            Ok(())
        }
    }

    /// Hands a frame to the host's NIC now.
    fn inject(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        frame: WorldFrame,
    ) -> Result<(), WorldError> {
        let ports: Vec<PortId> = match frame.dst {
            Destination::Unicast(d) => vec![self.net.route(node, d)?],
            Destination::Stream(st) => self.tables[node.0 as usize].stream_ports(st).collect(),
        };
        self.fan_out(s, node, ports, frame)
    }

    fn fan_out(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        ports: Vec<PortId>,
        frame: WorldFrame,
    ) -> Result<(), WorldError> {
        let Some((_, rest)) = ports.split_last() else {
            self.metrics.counters.frames.pruned += 1;
            if let Some(t) = &mut self.trace {
                t.frame(s.now(), "prune", &frame, &self.names[node.0 as usize], None)?;
            }
            return Ok(());
        };
        self.metrics.counters.frames.created += rest.len() as u64;
        self.enqueue_copies(s, &ports, frame)
    }

    /// Enqueues one copy per port; copies are already counted.
    fn enqueue_copies(
        &mut self,
        s: &mut Scheduler<Ev>,
        ports: &[PortId],
        frame: WorldFrame,
    ) -> Result<(), WorldError> {
        if let Some((last, rest)) = ports.split_last() {
            for p in rest {
                self.enqueue(s, *p, frame.clone())?;
            }
            self.enqueue(s, *last, frame)?;
        }
        Ok(())
    }

    fn enqueue(
        &mut self,
        s: &mut Scheduler<Ev>,
        port: PortId,
        frame: WorldFrame,
    ) -> Result<(), WorldError> {
        let now = s.now();
        if let Body::Srp {
            kind: SrpKind::TalkerAdvertise,
            negotiation,
            ..
        } = frame.body
        {
            if let Some(inst) = self.installs.get_mut(&negotiation) {
                if let Some(i) = inst.ports.iter().position(|p| *p == port) {
                    inst.ports.swap_remove(i);
                    self.ports[port.0 as usize].add_reservation(now, inst.idle_slope);
                }
            }
        }
        if let Some(t) = &mut self.trace {
            let node = self.net.port(port).node;
            t.frame(
                now,
                "enqueue",
                &frame,
                &self.names[node.0 as usize],
                Some(port.0),
            )?;
        }
        self.ports[port.0 as usize].enqueue(frame, now);
        self.request_kick(s, port);
        Ok(())
    }

    fn request_kick(&mut self, s: &mut Scheduler<Ev>, port: PortId) {
        let i = port.0 as usize;
        if !self.kick_pending[i] {
            self.kick_pending[i] = true;
            s.schedule_in(SimDuration::ZERO, Ev::Kick(port));
        }
    }

    fn kick(&mut self, s: &mut Scheduler<Ev>, port: PortId) -> Result<(), WorldError> {
        let now = s.now();
        let i = port.0 as usize;
        self.kick_pending[i] = false;
        if !self.ports[i].is_idle(now) {
            return Ok(());
        }
        match self.ports[i].select_next_frame(now) {
            Some(frame) => {
                let tx = self.ports[i].start_transmission(frame, now);
                if let Some(t) = &mut self.trace {
                    let node = self.net.port(port).node;
                    t.frame(
                        now,
                        "tx_start",
                        &tx.frame,
                        &self.names[node.0 as usize],
                        Some(port.0),
                    )?;
                }
                if tx.free_at > tx.tx_end {
                    s.schedule(tx.free_at, Ev::PortFree(port)).expect("future");
                }
                s.schedule(
                    tx.tx_end,
                    Ev::TxEnd {
                        port,
                        frame: tx.frame,
                    },
                )
                .expect("future");
            }
            None => {
                if let Some(w) = self.ports[i].credit_wakeup(now) {
                    if self.wake_at[i] != Some(w) {
                        self.wake_at[i] = Some(w);
                        s.schedule(w, Ev::Wake(port)).expect("future");
                    }
                }
            }
        }
        Ok(())
    }

    fn tx_end(
        &mut self,
        s: &mut Scheduler<Ev>,
        port: PortId,
        frame: WorldFrame,
    ) -> Result<(), WorldError> {
        let now = s.now();
        self.ports[port.0 as usize].finish_transmission(now);
        if self.ports[port.0 as usize].is_idle(now) {
            self.request_kick(s, port);
        }
        let prop = self.net.port(port).propagation;
        if prop == SimDuration::ZERO {
            self.arrive(s, port, frame)
        } else {
            s.schedule_in(prop, Ev::Arrive { port, frame });
            Ok(())
        }
    }

    /// The last bit of `frame`, sent out of `egress`, is now at the far end.
    fn arrive(
        &mut self,
        s: &mut Scheduler<Ev>,
        egress: PortId,
        frame: WorldFrame,
    ) -> Result<(), WorldError> {
        let now = s.now();
        let ingress = self.net.port(egress).peer;
        let node = self.net.port(ingress).node;
        if self.net.node(node).kind == NodeKind::Switch {
            if let Body::Srp {
                kind: SrpKind::ListenerReady,
                stream,
                ..
            } = frame.body
            {
                self.tables[node.0 as usize].add_stream_port(stream, ingress);
            }
            let out = self.tables[node.0 as usize].forward(&self.net, node, frame.dst, ingress)?;
            if out.is_empty() {
                return self.fan_out(s, node, out, frame);
            }
            self.metrics.counters.frames.created += out.len() as u64 - 1;
            s.schedule_in(self.model.switch_delay, Ev::SwitchOut { ports: out, frame });
            return Ok(());
        }
        if let Destination::Unicast(d) = frame.dst {
            if d != node {
                return Err(WorldError::Misdelivered {
                    frame: frame.id.0,
                    dst: d,
                    at: node,
                });
            }
        }
        if frame.kind == PayloadKind::CrossTraffic {
            self.metrics.counters.frames.delivered += 1;
            if let Some(t) = &mut self.trace {
                t.frame(now, "deliver", &frame, &self.names[node.0 as usize], None)?;
            }
            return Ok(());
        }
        s.schedule_in(
            self.model.processing_delay,
            Ev::HostRx {
                node,
                ingress,
                rx_at: now,
                frame,
            },
        );
        Ok(())
    }

    fn ct_emit(&mut self, s: &mut Scheduler<Ev>, i: usize) -> Result<(), WorldError> {
        let now = s.now();
        if self.ct[i].stop.is_some_and(|t| now >= t) {
            return Ok(());
        }
        let (src, sink, size) = (self.ct[i].source, self.ct[i].sink, self.ct[i].frame_bytes);
        let frame = self.new_frame(
            now,
            src,
            Destination::Unicast(sink),
            Priority::BestEffort,
            size,
            PayloadKind::CrossTraffic,
            Body::CrossTraffic,
        )?;
        self.inject(s, src, frame)?;
        let gap = self.ct[i].sample()?;
        s.schedule_in(gap, Ev::CtEmit(i));
        Ok(())
    }

    fn trace_event(
        &mut self,
        now: SimTime,
        ev: &str,
        fields: serde_json::Value,
    ) -> Result<(), WorldError> {
        if let Some(t) = &mut self.trace {
            t.record(now, ev, fields)?;
        }
        Ok(())
    }

    fn provider_connector(&self, service: ServiceId) -> ConnectorId {
        self.registry
            .provider_connector(service)
            .expect("every service was registered at construction")
    }
}

impl CtGen {
    fn sample(&mut self) -> Result<SimDuration, WorldError> {
        let d = self.dist;
        Ok(self.rng.sample_normal(d.mean, d.stddev, d.min, d.max)?)
    }
}

impl Handler<Ev> for World {
    type Error = WorldError;

    fn handle(&mut self, s: &mut Scheduler<Ev>, ev: SimEvent<Ev>) -> Result<(), WorldError> {
        match ev.payload {
            Ev::Kick(p) => self.kick(s, p),
            Ev::PortFree(p) => {
                self.request_kick(s, p);
                Ok(())
            }
            Ev::Wake(p) => {
                if self.wake_at[p.0 as usize] == Some(s.now()) {
                    self.wake_at[p.0 as usize] = None;
                    self.request_kick(s, p);
                }
                Ok(())
            }
            Ev::TxEnd { port, frame } => self.tx_end(s, port, frame),
            Ev::Arrive { port, frame } => self.arrive(s, port, frame),
            Ev::SwitchOut { ports, frame } => self.enqueue_copies(s, &ports, frame),
            Ev::HostTx { node, frame } => self.inject(s, node, frame),
            Ev::HostRx {
                node,
                ingress,
                rx_at,
                frame,
            } => {
                self.metrics.counters.frames.delivered += 1;
                if let Some(t) = &mut self.trace {
                    t.frame(
                        s.now(),
                        "deliver",
                        &frame,
                        &self.names[node.0 as usize],
                        None,
                    )?;
                }
                self.host_rx(s, node, ingress, rx_at, frame)
            }
            Ev::SubscriptionStart(i) => self.start_subscription(s, i),
            Ev::Publish(i) => self.publish(s, i),
            Ev::CtEmit(i) => self.ct_emit(s, i),
            Ev::BrokerTimeout {
                negotiation,
                provider,
            } => self.broker_timeout(s, negotiation, provider),
            Ev::TcpRetry(ep) => self.tcp_retry(s, ep),
        }
    }
}

pub(crate) fn json_kind(k: QosnpKind) -> serde_json::Value {
    json!(k.as_str())
}

#[cfg(test)]
mod tests;
