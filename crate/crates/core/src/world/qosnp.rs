//! Middleware behaviour on the hosts: negotiation, per-class connection
//! establishment and the publish/deliver data path.

use serde_json::json;

use super::{
    json_kind, Body, Ev, LatencySample, Negotiation, PendingInstall, SetupStatus, SrpKind, TcpConn,
    TcpKind, World, WorldError,
};
use crate::middleware::{
    AppId, Broker, BrokerAction, BrokerInput, BrokerState, FailureReason, NegotiationId,
    ProviderState, QosRequest, QosnpBody, QosnpMessage, ServiceId,
};
use crate::net::{Destination, NodeId, PayloadKind, PortId, StreamId};
use crate::protocols::{
    ConnectionDetails, EndpointId, EndpointRole, EndpointState, QosClass, Reservation,
    ReservationStatus, TcpHandshake, TimeoutAction,
};
use crate::sim::{Scheduler, SimTime};

impl World {
    fn neg(&mut self, id: NegotiationId) -> &mut Negotiation {
        &mut self.negotiations[id.0 as usize]
    }

    fn send_qosnp(
        &mut self,
        s: &mut Scheduler<Ev>,
        id: NegotiationId,
        from: NodeId,
        to: NodeId,
        body: QosnpBody,
        via_stack: bool,
    ) -> Result<(), WorldError> {
        let now = s.now();
        let service = self.negotiations[id.0 as usize].service;
        let msg = QosnpMessage {
            negotiation: id,
            service,
            body,
        };
        let kind = msg.kind();
        self.neg(id).sent.push(kind);
        if self.trace.is_some() {
            let payload = match &msg.body {
                QosnpBody::QosRequest(r) => json!({ "class": r.required_class.as_str() }),
                QosnpBody::QosResponse {
                    accept,
                    counter_offers,
                } => json!({
                    "accept": accept,
                    "counter_offers": counter_offers.iter().map(|c| c.as_str()).collect::<Vec<_>>(),
                }),
                QosnpBody::EstablishRequest { class } => json!({ "class": class.as_str() }),
                QosnpBody::ConnectionDetails(Ok(ConnectionDetails::Transport { port })) => {
                    json!({ "port": port })
                }
                QosnpBody::ConnectionDetails(Ok(ConnectionDetails::Stream {
                    stream_id,
                    idle_slope,
                })) => json!({ "stream_id": stream_id.0, "idle_slope": idle_slope }),
                QosnpBody::ConnectionDetails(Err(r)) => json!({ "failure": format!("{r:?}") }),
            };
            let emitted = if via_stack {
                now + self.model.processing_delay
            } else {
                now
            };
            let from_name = self.name(from).to_string();
            let to_name = self.name(to).to_string();
            self.trace_event(
                emitted,
                "qosnp_send",
                json!({
                    "negotiation": id.0,
                    "service": service.0,
                    "msg": json_kind(kind),
                    "from": from_name,
                    "to": to_name,
                    "payload": payload,
                }),
            )?;
        }
        let frame =
            self.control_frame(now, from, to, PayloadKind::Negotiation, Body::Qosnp(msg))?;
        if via_stack {
            self.emit(s, from, frame)
        } else {
            self.inject(s, from, frame)
        }
    }

    fn fail_subscription(
        &mut self,
        now: SimTime,
        i: usize,
        reason: String,
    ) -> Result<(), WorldError> {
        let out = &mut self.metrics.setups[i];
        if out.status == SetupStatus::Connected || out.status == SetupStatus::Failed {
            return Ok(());
        }
        out.status = SetupStatus::Failed;
        out.reason = Some(reason.clone());
        self.trace_event(
            now,
            "setup_failed",
            json!({ "subscription": i, "reason": reason }),
        )
    }

    pub(super) fn start_subscription(
        &mut self,
        s: &mut Scheduler<Ev>,
        i: usize,
    ) -> Result<(), WorldError> {
        let now = s.now();
        self.metrics.setups[i].status = SetupStatus::Pending;
        let req = self.subscriptions[i].request.clone();
        let provider = match self.registry.discover(req.service_id) {
            Ok(addr) => addr.node,
            Err(e) => return self.fail_subscription(now, i, e.to_string()),
        };
        if let Err(e) = req.required_class.ensure_connectable() {
            return self.fail_subscription(now, i, e.to_string());
        }
        let id = NegotiationId(self.negotiations.len() as u64);
        let mut broker = Broker::consumer(id);
        let actions = broker
            .apply(BrokerInput::Start)
            .expect("a fresh consumer broker accepts Start");
        self.negotiations.push(Negotiation {
            subscription: i,
            service: req.service_id,
            class: req.required_class,
            consumer: req.consumer_node,
            provider,
            consumer_broker: broker,
            provider_broker: None,
            consumer_timer: None,
            provider_timer: None,
            details: None,
            advertised: false,
            consumer_endpoint: None,
            owns_endpoint: false,
            listener_ready_sent: false,
            sent: Vec::new(),
        });
        self.metrics.setups[i].negotiation = Some(id);
        self.consumer_actions(s, id, actions, Some(req))
    }

    fn consumer_actions(
        &mut self,
        s: &mut Scheduler<Ev>,
        id: NegotiationId,
        actions: &[BrokerAction],
        request: Option<QosRequest>,
    ) -> Result<(), WorldError> {
        let now = s.now();
        let (consumer, provider, class, sub) = {
            let n = &self.negotiations[id.0 as usize];
            (n.consumer, n.provider, n.class, n.subscription)
        };
        for a in actions {
            match a {
                BrokerAction::SendRequest => {
                    let req = request.clone().expect("request accompanies Start");
                    self.send_qosnp(s, id, consumer, provider, QosnpBody::QosRequest(req), true)?;
                    self.metrics.setups[sub].request_emitted =
                        Some(now + self.model.processing_delay);
                }
                BrokerAction::ArmTimeout => {
                    let t = s.schedule_in(
                        self.model.negotiation_timeout,
                        Ev::BrokerTimeout {
                            negotiation: id,
                            provider: false,
                        },
                    );
                    self.neg(id).consumer_timer = Some(t);
                }
                BrokerAction::CancelTimeout => {
                    if let Some(t) = self.neg(id).consumer_timer.take() {
                        s.cancel(t);
                    }
                }
                BrokerAction::SendEstablish => {
                    self.send_qosnp(
                        s,
                        id,
                        consumer,
                        provider,
                        QosnpBody::EstablishRequest { class },
                        false,
                    )?;
                }
                BrokerAction::ConnectConsumer => self.connect_consumer(s, id)?,
                other => unreachable!("{other:?} is a provider action"),
            }
        }
        if self.negotiations[id.0 as usize].consumer_broker.state()
            == BrokerState::Consumer(crate::middleware::ConsumerState::Failed)
        {
            self.fail_subscription(now, sub, "negotiation failed".into())?;
        }
        Ok(())
    }

    pub(super) fn host_rx(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        ingress: PortId,
        rx_at: SimTime,
        frame: super::WorldFrame,
    ) -> Result<(), WorldError> {
        let created = frame.created_at;
        let frame_id = frame.id.0;
        match frame.body {
            Body::Qosnp(msg) => self.on_qosnp(s, node, rx_at, msg),
            Body::Tcp {
                kind,
                negotiation,
                endpoint,
                port,
            } => match kind {
                TcpKind::Syn => self.on_syn(s, node, negotiation, endpoint, port),
                TcpKind::SynAck => self.on_syn_ack(s, endpoint),
                TcpKind::Ack => self.on_ack(s, node, negotiation, endpoint),
            },
            Body::Srp {
                kind: SrpKind::TalkerAdvertise,
                negotiation,
                ..
            } => self.on_advertise(s, negotiation),
            Body::Srp {
                kind: SrpKind::ListenerReady,
                negotiation,
                stream,
            } => self.on_listener_ready(s, node, ingress, negotiation, stream),
            Body::Data {
                service,
                class,
                seq,
            } => {
                self.on_data(s.now(), node, service, class, seq, frame_id, created);
                Ok(())
            }
            Body::CrossTraffic => Ok(()),
        }
    }

    fn on_qosnp(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        rx_at: SimTime,
        msg: QosnpMessage,
    ) -> Result<(), WorldError> {
        let id = msg.negotiation;
        let kind = msg.kind();
        self.trace_event(
            s.now(),
            "qosnp_recv",
            json!({ "negotiation": id.0, "service": msg.service.0, "msg": json_kind(kind) }),
        )?;
        match msg.body {
            QosnpBody::QosRequest(req) => self.on_request(s, node, id, req),
            QosnpBody::QosResponse { accept, .. } => {
                let n = self.neg(id);
                match n.consumer_broker.apply(BrokerInput::Response { accept }) {
                    Ok(actions) => self.consumer_actions(s, id, actions, None),
                    Err(_) => {
                        self.metrics.counters.stale_messages += 1;
                        Ok(())
                    }
                }
            }
            QosnpBody::EstablishRequest { .. } => self.on_establish(s, node, id),
            QosnpBody::ConnectionDetails(result) => {
                let ok = result.is_ok();
                let n = self.neg(id);
                match n.consumer_broker.apply(BrokerInput::Details { ok }) {
                    Ok(actions) => {
                        let sub = n.subscription;
                        n.details = result.ok();
                        self.metrics.setups[sub].details_received = Some(rx_at);
                        self.consumer_actions(s, id, actions, None)
                    }
                    Err(_) => {
                        self.metrics.counters.stale_messages += 1;
                        Ok(())
                    }
                }
            }
        }
    }

    fn endpoints_on(&self, node: NodeId) -> usize {
        self.endpoints.iter().filter(|e| e.node == node).count()
    }

    fn on_request(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        id: NegotiationId,
        req: QosRequest,
    ) -> Result<(), WorldError> {
        if self.negotiations[id.0 as usize].provider_broker.is_some() {
            self.metrics.counters.stale_messages += 1;
            return Ok(());
        }
        let consumer = self.negotiations[id.0 as usize].consumer;
        let desc = self
            .registry
            .descriptor(req.service_id)
            .filter(|d| d.provider_node == node);
        let offered: Vec<QosClass> = desc
            .map(|d| d.offers.iter().map(|o| o.class).collect())
            .unwrap_or_default();
        let offer_ok = desc
            .and_then(|d| d.offer(req.required_class))
            .is_some_and(|o| req.max_cycle_time.is_none_or(|max| o.cycle_time <= max));
        let reusable = self
            .endpoints
            .find(
                EndpointRole::Provider,
                node,
                req.service_id,
                req.required_class,
            )
            .is_some();
        let capacity_ok = reusable
            || self
                .model
                .endpoint_cap
                .is_none_or(|cap| self.endpoints_on(node) < cap as usize);
        let acceptable = offer_ok && capacity_ok;
        let mut broker = Broker::provider(id);
        let actions = broker
            .apply(BrokerInput::Request { acceptable })
            .expect("a fresh provider broker accepts a request");
        self.neg(id).provider_broker = Some(broker);
        for a in actions {
            match a {
                BrokerAction::SendAccept => self.send_qosnp(
                    s,
                    id,
                    node,
                    consumer,
                    QosnpBody::QosResponse {
                        accept: true,
                        counter_offers: Vec::new(),
                    },
                    false,
                )?,
                BrokerAction::SendReject => self.send_qosnp(
                    s,
                    id,
                    node,
                    consumer,
                    QosnpBody::QosResponse {
                        accept: false,
                        counter_offers: offered.clone(),
                    },
                    false,
                )?,
                BrokerAction::ArmTimeout => {
                    let t = s.schedule_in(
                        self.model.negotiation_timeout,
                        Ev::BrokerTimeout {
                            negotiation: id,
                            provider: true,
                        },
                    );
                    self.neg(id).provider_timer = Some(t);
                }
                other => unreachable!("{other:?} after a request"),
            }
        }
        Ok(())
    }

    fn on_establish(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        id: NegotiationId,
    ) -> Result<(), WorldError> {
        let Some(broker) = self.neg(id).provider_broker.as_mut() else {
            self.metrics.counters.stale_messages += 1;
            return Ok(());
        };
        if broker.apply(BrokerInput::Establish).is_err() {
            self.metrics.counters.stale_messages += 1;
            return Ok(());
        }
        let created = self.create_provider_endpoint(s.now(), node, id)?;
        let actions = self
            .neg(id)
            .provider_broker
            .as_mut()
            .expect("checked above")
            .apply(BrokerInput::EndpointCreated {
                ok: created.is_ok(),
            })
            .expect("creating endpoint accepts the result");
        let consumer = self.negotiations[id.0 as usize].consumer;
        for a in actions {
            match a {
                BrokerAction::CancelTimeout => {
                    if let Some(t) = self.neg(id).provider_timer.take() {
                        s.cancel(t);
                    }
                }
                BrokerAction::SendDetails | BrokerAction::SendFailure => {
                    self.send_qosnp(
                        s,
                        id,
                        node,
                        consumer,
                        QosnpBody::ConnectionDetails(created),
                        false,
                    )?;
                    if let Ok(ConnectionDetails::Stream { stream_id, .. }) = created {
                        let f = self.control_frame(
                            s.now(),
                            node,
                            consumer,
                            PayloadKind::ReservationControl,
                            Body::Srp {
                                kind: SrpKind::TalkerAdvertise,
                                negotiation: id,
                                stream: stream_id,
                            },
                        )?;
                        self.inject(s, node, f)?;
                    }
                }
                other => unreachable!("{other:?} after endpoint creation"),
            }
        }
        Ok(())
    }

    /// Creates or reuses the provider endpoint for a negotiation and wires
    /// it to the service's connector. RTS also runs admission on the path.
    fn create_provider_endpoint(
        &mut self,
        now: SimTime,
        node: NodeId,
        id: NegotiationId,
    ) -> Result<Result<ConnectionDetails, FailureReason>, WorldError> {
        let (service, class, consumer) = {
            let n = &self.negotiations[id.0 as usize];
            (n.service, n.class, n.consumer)
        };
        let svc = &self.services[self.service_idx[&service]];
        let Some(offer) = svc.offer(class).cloned() else {
            return Ok(Err(FailureReason::UnsupportedClass));
        };
        let existing = self
            .endpoints
            .find(EndpointRole::Provider, node, service, class);
        // Requests accepted concurrently may together exceed the cap.
        if existing.is_none()
            && self
                .model
                .endpoint_cap
                .is_some_and(|cap| self.endpoints_on(node) >= cap as usize)
        {
            return Ok(Err(FailureReason::EndpointLimit));
        }
        let mut stream = None;
        if class == QosClass::Rts {
            let stream_id = existing
                .and_then(|e| match self.endpoints.get(e).map(|d| d.details) {
                    Some(ConnectionDetails::Stream { stream_id, .. }) => Some(stream_id),
                    _ => None,
                })
                .unwrap_or(StreamId(service.0));
            let path = self.net.path(node, consumer)?;
            let hops: Vec<(PortId, u64)> = path
                .iter()
                .map(|p| (*p, self.net.port(*p).rate_bps))
                .collect();
            let charged = match self.admission.admit(stream_id, &hops, offer.idle_slope) {
                Ok(c) => c,
                Err(e) => {
                    self.trace_event(
                        now,
                        "admission_refused",
                        json!({ "negotiation": id.0, "reason": e.to_string() }),
                    )?;
                    return Ok(Err(FailureReason::AdmissionRefused));
                }
            };
            self.installs.insert(
                id,
                PendingInstall {
                    ports: charged,
                    idle_slope: offer.idle_slope,
                },
            );
            self.reservations.push(Reservation {
                stream_id,
                talker: node,
                listener: consumer,
                path,
                idle_slope: offer.idle_slope,
                status: ReservationStatus::Advertised,
            });
            stream = Some((stream_id, offer.idle_slope));
        }
        let (ep, _) = self
            .endpoints
            .open(EndpointRole::Provider, node, service, class, stream)
            .expect("class was offered and is connectable");
        let desc = self.endpoints.get_mut(ep).expect("just opened");
        if desc.state() == EndpointState::Creating {
            desc.advance(EndpointState::Ready)
                .expect("creating to ready");
        }
        if class == QosClass::IpsUdp {
            desc.add_peer(consumer);
            desc.advance(EndpointState::Connected)
                .expect("ready to connected");
        }
        let details = desc.details;
        let conn = self.provider_connector(service);
        self.registry.connector_mut(conn).attach_endpoint(ep);
        Ok(Ok(details))
    }

    fn connect_consumer(
        &mut self,
        s: &mut Scheduler<Ev>,
        id: NegotiationId,
    ) -> Result<(), WorldError> {
        let (node, service, class, provider, details) = {
            let n = &self.negotiations[id.0 as usize];
            (
                n.consumer,
                n.service,
                n.class,
                n.provider,
                n.details.expect("connect follows details"),
            )
        };
        let stream = match details {
            ConnectionDetails::Stream {
                stream_id,
                idle_slope,
            } => Some((stream_id, idle_slope)),
            ConnectionDetails::Transport { .. } => None,
        };
        let (ep, created) = self
            .endpoints
            .open(EndpointRole::Consumer, node, service, class, stream)
            .expect("negotiated class is connectable");
        {
            let n = self.neg(id);
            n.consumer_endpoint = Some(ep);
            n.owns_endpoint = created;
        }
        if class == QosClass::IpsUdp {
            let d = self.endpoints.get_mut(ep).expect("just opened");
            if d.state() == EndpointState::Creating {
                d.advance(EndpointState::Ready).expect("creating to ready");
            }
            d.advance(EndpointState::Connected)
                .expect("ready to connected");
            return self.complete(s.now(), id);
        }
        if !created {
            if self.endpoints.get(ep).map(|d| d.state()) == Some(EndpointState::Connected) {
                return self.complete(s.now(), id);
            }
            self.waiters.entry(ep).or_default().push(id);
            return Ok(());
        }
        self.waiters.entry(ep).or_default().push(id);
        match class {
            QosClass::IpsTcp => {
                let ConnectionDetails::Transport { port } = details else {
                    unreachable!("TCP details carry a port")
                };
                self.tcp.insert(
                    ep,
                    TcpConn {
                        handshake: TcpHandshake::start(self.model.tcp_retries),
                        negotiation: id,
                        provider,
                        port,
                        timer: None,
                    },
                );
                self.send_syn(s, ep)
            }
            QosClass::Rts => {
                if self.negotiations[id.0 as usize].advertised {
                    self.send_listener_ready(s, id)?;
                }
                Ok(())
            }
            _ => unreachable!("only connectable classes negotiate"),
        }
    }

    fn complete(&mut self, now: SimTime, id: NegotiationId) -> Result<(), WorldError> {
        let (sub, node, service, class, ep) = {
            let n = &self.negotiations[id.0 as usize];
            (
                n.subscription,
                n.consumer,
                n.service,
                n.class,
                n.consumer_endpoint
                    .expect("endpoint opened before completion"),
            )
        };
        let out = &mut self.metrics.setups[sub];
        if out.status != SetupStatus::Pending {
            return Ok(());
        }
        out.status = SetupStatus::Connected;
        out.connected = Some(now);
        let setup = out.setup_time().map(|d| d.as_nanos());
        let conn = self.registry.consumer_connector(node, service, class);
        let c = self.registry.connector_mut(conn);
        c.attach_app(AppId(sub as u32));
        c.attach_endpoint(ep);
        self.trace_event(
            now,
            "setup_done",
            json!({ "subscription": sub, "negotiation": id.0, "setup_ns": setup }),
        )
    }

    fn complete_waiters(&mut self, now: SimTime, ep: EndpointId) -> Result<(), WorldError> {
        for id in self.waiters.remove(&ep).unwrap_or_default() {
            self.complete(now, id)?;
        }
        Ok(())
    }

    // ---- TCP-like handshake ----

    fn send_syn(&mut self, s: &mut Scheduler<Ev>, ep: EndpointId) -> Result<(), WorldError> {
        let (id, provider, port) = {
            let c = &self.tcp[&ep];
            (c.negotiation, c.provider, c.port)
        };
        let node = self.negotiations[id.0 as usize].consumer;
        let f = self.control_frame(
            s.now(),
            node,
            provider,
            PayloadKind::TransportControl,
            Body::Tcp {
                kind: TcpKind::Syn,
                negotiation: id,
                endpoint: ep,
                port,
            },
        )?;
        self.inject(s, node, f)?;
        let t = s.schedule_in(self.model.tcp_retry_interval, Ev::TcpRetry(ep));
        self.tcp.get_mut(&ep).expect("connection exists").timer = Some(t);
        Ok(())
    }

    fn on_syn(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        id: NegotiationId,
        ep: EndpointId,
        port: u16,
    ) -> Result<(), WorldError> {
        let listening = self.endpoints.iter().any(|e| {
            e.node == node
                && e.role == EndpointRole::Provider
                && e.details == ConnectionDetails::Transport { port }
        });
        if !listening {
            return self.trace_event(
                s.now(),
                "syn_refused",
                json!({ "negotiation": id.0, "port": port }),
            );
        }
        let consumer = self.negotiations[id.0 as usize].consumer;
        let f = self.control_frame(
            s.now(),
            node,
            consumer,
            PayloadKind::TransportControl,
            Body::Tcp {
                kind: TcpKind::SynAck,
                negotiation: id,
                endpoint: ep,
                port,
            },
        )?;
        self.inject(s, node, f)
    }

    fn on_syn_ack(&mut self, s: &mut Scheduler<Ev>, ep: EndpointId) -> Result<(), WorldError> {
        let Some(conn) = self.tcp.get_mut(&ep) else {
            return Ok(());
        };
        if !conn.handshake.on_syn_ack() {
            return Ok(());
        }
        if let Some(t) = conn.timer.take() {
            s.cancel(t);
        }
        let (id, provider, port) = (conn.negotiation, conn.provider, conn.port);
        let d = self
            .endpoints
            .get_mut(ep)
            .expect("handshake endpoint exists");
        d.advance(EndpointState::Ready).expect("creating to ready");
        let node = d.node;
        let f = self.control_frame(
            s.now(),
            node,
            provider,
            PayloadKind::TransportControl,
            Body::Tcp {
                kind: TcpKind::Ack,
                negotiation: id,
                endpoint: ep,
                port,
            },
        )?;
        self.inject(s, node, f)
    }

    fn on_ack(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        id: NegotiationId,
        ep: EndpointId,
    ) -> Result<(), WorldError> {
        let Some(conn) = self.tcp.get_mut(&ep) else {
            return Ok(());
        };
        if !conn.handshake.on_ack_delivered() {
            return Ok(());
        }
        let (service, consumer) = {
            let n = &self.negotiations[id.0 as usize];
            (n.service, n.consumer)
        };
        if let Some(pe) =
            self.endpoints
                .find(EndpointRole::Provider, node, service, QosClass::IpsTcp)
        {
            let d = self.endpoints.get_mut(pe).expect("found");
            d.add_peer(consumer);
            d.advance(EndpointState::Connected)
                .expect("ready to connected");
        }
        self.endpoints
            .get_mut(ep)
            .expect("handshake endpoint exists")
            .advance(EndpointState::Connected)
            .expect("ready to connected");
        self.complete_waiters(s.now(), ep)
    }

    pub(super) fn tcp_retry(
        &mut self,
        s: &mut Scheduler<Ev>,
        ep: EndpointId,
    ) -> Result<(), WorldError> {
        let Some(conn) = self.tcp.get_mut(&ep) else {
            return Ok(());
        };
        conn.timer = None;
        match conn.handshake.on_timeout() {
            TimeoutAction::Retransmit => {
                self.metrics.counters.tcp_retransmissions += 1;
                self.send_syn(s, ep)
            }
            TimeoutAction::GiveUp => {
                let now = s.now();
                for id in self.waiters.remove(&ep).unwrap_or_default() {
                    let sub = self.negotiations[id.0 as usize].subscription;
                    self.fail_subscription(now, sub, "handshake timed out".into())?;
                }
                Ok(())
            }
            TimeoutAction::Ignore => Ok(()),
        }
    }

    // ---- stream reservation ----

    fn send_listener_ready(
        &mut self,
        s: &mut Scheduler<Ev>,
        id: NegotiationId,
    ) -> Result<(), WorldError> {
        let (node, provider, ep, details) = {
            let n = self.neg(id);
            n.listener_ready_sent = true;
            (n.consumer, n.provider, n.consumer_endpoint, n.details)
        };
        let Some(ConnectionDetails::Stream { stream_id, .. }) = details else {
            unreachable!("listener ready follows stream details")
        };
        if let Some(ep) = ep {
            let d = self.endpoints.get_mut(ep).expect("opened");
            if d.state() == EndpointState::Creating {
                d.advance(EndpointState::Ready).expect("creating to ready");
            }
        }
        let f = self.control_frame(
            s.now(),
            node,
            provider,
            PayloadKind::ReservationControl,
            Body::Srp {
                kind: SrpKind::ListenerReady,
                negotiation: id,
                stream: stream_id,
            },
        )?;
        self.inject(s, node, f)
    }

    fn on_advertise(&mut self, s: &mut Scheduler<Ev>, id: NegotiationId) -> Result<(), WorldError> {
        let n = self.neg(id);
        n.advertised = true;
        if n.owns_endpoint && n.details.is_some() && !n.listener_ready_sent {
            self.send_listener_ready(s, id)?;
        }
        Ok(())
    }

    fn on_listener_ready(
        &mut self,
        s: &mut Scheduler<Ev>,
        node: NodeId,
        ingress: PortId,
        id: NegotiationId,
        stream: StreamId,
    ) -> Result<(), WorldError> {
        self.tables[node.0 as usize].add_stream_port(stream, ingress);
        let (service, consumer, ep) = {
            let n = &self.negotiations[id.0 as usize];
            (n.service, n.consumer, n.consumer_endpoint)
        };
        if let Some(pe) = self
            .endpoints
            .find(EndpointRole::Provider, node, service, QosClass::Rts)
        {
            let d = self.endpoints.get_mut(pe).expect("found");
            d.add_peer(consumer);
            d.advance(EndpointState::Connected)
                .expect("ready to connected");
        }
        for r in self
            .reservations
            .iter_mut()
            .filter(|r| r.stream_id == stream && r.listener == consumer)
        {
            r.status = ReservationStatus::Ready;
        }
        if let Some(ep) = ep {
            self.endpoints
                .get_mut(ep)
                .expect("opened")
                .advance(EndpointState::Connected)
                .expect("ready to connected");
            self.complete_waiters(s.now(), ep)?;
        }
        Ok(())
    }

    // ---- timers ----

    pub(super) fn broker_timeout(
        &mut self,
        s: &mut Scheduler<Ev>,
        id: NegotiationId,
        provider: bool,
    ) -> Result<(), WorldError> {
        let now = s.now();
        let n = self.neg(id);
        if provider {
            n.provider_timer = None;
            if let Some(b) = n.provider_broker.as_mut() {
                let _ = b.apply(BrokerInput::Timeout);
                debug_assert_eq!(b.state(), BrokerState::Provider(ProviderState::Failed));
            }
            Ok(())
        } else {
            n.consumer_timer = None;
            if n.consumer_broker.apply(BrokerInput::Timeout).is_ok() {
                let sub = n.subscription;
                return self.fail_subscription(now, sub, "negotiation timed out".into());
            }
            Ok(())
        }
    }

    // ---- data path ----

    pub(super) fn publish(&mut self, s: &mut Scheduler<Ev>, i: usize) -> Result<(), WorldError> {
        let now = s.now();
        let (service, node, cycle) = {
            let svc = &self.services[i];
            (svc.service_id, svc.provider_node, svc.cycle_time)
        };
        self.seq[i] += 1;
        let seq = self.seq[i];
        let conn = self.provider_connector(service);
        let eps = self.registry.connector(conn).endpoints().to_vec();
        let mut sent = false;
        for ep in eps {
            let d = self.endpoints.get(ep).expect("attached endpoints exist");
            if d.peers.is_empty() {
                continue;
            }
            let class = d.qos_class;
            let size = self.services[i]
                .offer(class)
                .expect("endpoints only exist for offered classes")
                .frame_bytes;
            let body = Body::Data {
                service,
                class,
                seq,
            };
            let dsts: Vec<Destination> = match d.details {
                ConnectionDetails::Stream { stream_id, .. } => vec![Destination::Stream(stream_id)],
                ConnectionDetails::Transport { .. } => {
                    d.peers.iter().map(|p| Destination::Unicast(*p)).collect()
                }
            };
            for dst in dsts {
                let f = self.new_frame(
                    now,
                    node,
                    dst,
                    class.data_priority(),
                    size,
                    PayloadKind::Data,
                    body.clone(),
                )?;
                self.emit(s, node, f)?;
                sent = true;
            }
        }
        if !sent {
            self.registry.note_empty_publish();
        }
        if cycle.as_nanos() > 0 && now + cycle <= self.t_end {
            s.schedule_in(cycle, Ev::Publish(i));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn on_data(
        &mut self,
        now: SimTime,
        node: NodeId,
        service: ServiceId,
        class: QosClass,
        seq: u64,
        frame: u64,
        created: SimTime,
    ) {
        let connected = self
            .endpoints
            .find(EndpointRole::Consumer, node, service, class)
            .and_then(|e| self.endpoints.get(e))
            .is_some_and(|d| d.state() == EndpointState::Connected);
        let conn = self.registry.find_consumer_connector(node, service, class);
        let apps = match conn {
            Some(c) if connected => self.registry.connector(c).apps().to_vec(),
            _ => Vec::new(),
        };
        if apps.is_empty() {
            self.metrics.counters.unconsumed_data += 1;
            return;
        }
        for app in apps {
            self.metrics.latencies.push(LatencySample {
                subscription: app.0,
                service,
                class,
                frame,
                seq,
                created,
                delivered: now,
            });
        }
    }
}
