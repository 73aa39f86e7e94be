use serde::Serialize;

use crate::middleware::{NegotiationId, QosnpKind, ServiceId};
use crate::protocols::QosClass;
use crate::sim::{SimDuration, SimTime};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SetupStatus {
    Connected,
    Failed,
    /// Still negotiating or establishing when the run ended.
    Pending,
    /// Subscription start lies beyond the end of the run.
    NotStarted,
}

/// Setup timeline of one subscription.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SetupOutcome {
    pub subscription: usize,
    pub service: ServiceId,
    pub class: QosClass,
    pub negotiation: Option<NegotiationId>,
    pub start: SimTime,
    /// QOS_REQUEST handed to the NIC.
    pub request_emitted: Option<SimTime>,
    /// CONNECTION_DETAILS fully received at the consumer.
    pub details_received: Option<SimTime>,
    pub connected: Option<SimTime>,
    pub status: SetupStatus,
    pub reason: Option<String>,
}

impl SetupOutcome {
    pub fn new(subscription: usize, service: ServiceId, class: QosClass, start: SimTime) -> Self {
        SetupOutcome {
            subscription,
            service,
            class,
            negotiation: None,
            start,
            request_emitted: None,
            details_received: None,
            connected: None,
            status: SetupStatus::NotStarted,
            reason: None,
        }
    }

    /// Start to request emission: local stack processing.
    pub fn bookkeeping(&self) -> Option<SimDuration> {
        Some(self.request_emitted? - self.start)
    }

    /// Request emission to details delivery.
    pub fn negotiation_time(&self) -> Option<SimDuration> {
        Some(self.details_received? - self.request_emitted?)
    }

    /// Details delivery to the class-specific connected condition.
    pub fn establishment(&self) -> Option<SimDuration> {
        Some(self.connected? - self.details_received?)
    }

    pub fn setup_time(&self) -> Option<SimDuration> {
        Some(self.connected? - self.start)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatencySample {
    pub subscription: u32,
    /// Service the payload was tagged with by its publisher.
    pub service: ServiceId,
    pub class: QosClass,
    pub frame: u64,
    pub seq: u64,
    pub created: SimTime,
    pub delivered: SimTime,
}

impl LatencySample {
    pub fn latency(&self) -> SimDuration {
        self.delivered - self.created
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LinkLoad {
    pub from: String,
    pub to: String,
    pub port: u32,
    pub tx_frames: u64,
    pub tx_class_a_frames: u64,
    pub tx_bits: u64,
    pub busy_ns: u64,
    pub high_water: usize,
}

impl LinkLoad {
    pub fn load_bps(&self, window: SimDuration) -> f64 {
        if window == SimDuration::ZERO {
            0.0
        } else {
            self.tx_bits as f64 / window.as_secs_f64()
        }
    }
}

/// Per-negotiation QoSNP message log, in emission order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NegotiationLog {
    pub negotiation: NegotiationId,
    pub sent: Vec<QosnpKind>,
    pub succeeded: bool,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct FrameCounters {
    /// Frames injected plus multicast copies made by switches.
    pub created: u64,
    /// Frames handed to their destination host.
    pub delivered: u64,
    /// Multicast copies with no downstream listener.
    pub pruned: u64,
}

impl FrameCounters {
    pub fn live(&self) -> u64 {
        self.created - self.delivered - self.pruned
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Counters {
    pub frames: FrameCounters,
    pub stale_messages: u64,
    pub empty_publishes: u64,
    /// Data frames reaching a node without a connected endpoint.
    pub unconsumed_data: u64,
    pub tcp_retransmissions: u64,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Metrics {
    pub setups: Vec<SetupOutcome>,
    pub latencies: Vec<LatencySample>,
    pub links: Vec<LinkLoad>,
    pub negotiations: Vec<NegotiationLog>,
    pub counters: Counters,
    /// Brokers not in a terminal state when the run ended.
    pub open_brokers: usize,
}
