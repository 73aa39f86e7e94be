use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::net::Priority;

/// Service classes, from statically scheduled safety traffic to web
/// services. Only RTS and the two IPS transports can be negotiated here.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum QosClass {
    /// Scheduled (TDMA) safety-critical real-time. Reserved value.
    Srts,
    /// Real-time over reserved layer-2 streams.
    Rts,
    /// IP-based, connection-oriented transport.
    IpsTcp,
    /// IP-based, connectionless transport.
    IpsUdp,
    /// Web services over HTTP. Reserved value.
    Ws,
}

/// Descriptive requirement record for a class. Metadata only.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassRequirements {
    pub domains: &'static [&'static str],
    pub abstraction_levels: &'static [&'static str],
    pub realtime_constraints: &'static [&'static str],
    pub locality: &'static [&'static str],
    pub environment: &'static [&'static str],
}

impl QosClass {
    pub const ALL: [QosClass; 5] = [
        QosClass::Srts,
        QosClass::Rts,
        QosClass::IpsTcp,
        QosClass::IpsUdp,
        QosClass::Ws,
    ];

    pub const CONNECTABLE: [QosClass; 3] = [QosClass::Rts, QosClass::IpsTcp, QosClass::IpsUdp];

    pub fn as_str(self) -> &'static str {
        match self {
            QosClass::Srts => "SRTS",
            QosClass::Rts => "RTS",
            QosClass::IpsTcp => "IPS_TCP",
            QosClass::IpsUdp => "IPS_UDP",
            QosClass::Ws => "WS",
        }
    }

    pub fn is_connectable(self) -> bool {
        matches!(self, QosClass::Rts | QosClass::IpsTcp | QosClass::IpsUdp)
    }

    pub fn ensure_connectable(self) -> Result<(), ProtocolError> {
        if self.is_connectable() {
            Ok(())
        } else {
            Err(ProtocolError::UnsupportedClass(self))
        }
    }

    /// Layer-2 priority used for this class's data frames.
    pub fn data_priority(self) -> Priority {
        match self {
            QosClass::Rts | QosClass::Srts => Priority::RtsClassA,
            _ => Priority::BestEffort,
        }
    }

    pub fn requirements(self) -> ClassRequirements {
        match self {
            QosClass::Srts => ClassRequirements {
                domains: &["Safety Electronics", "Engine/Powertrain"],
                abstraction_levels: &["Signal/Physical"],
                realtime_constraints: &["Simple Control Loops"],
                locality: &["Aggregates", "Sensors and Actuators"],
                environment: &["Micro-Devices"],
            },
            QosClass::Rts => ClassRequirements {
                domains: &["Safety Electronics", "Engine/Powertrain", "Multimedia/HMI"],
                abstraction_levels: &["Data", "Signal/Physical"],
                realtime_constraints: &["Vehicle Dynamics Control", "Simple Control Loops"],
                locality: &["Vehicle", "Aggregates", "Sensors and Actuators"],
                environment: &["PCs", "Micro-Devices"],
            },
            QosClass::IpsTcp | QosClass::IpsUdp => ClassRequirements {
                domains: &["all domains"],
                abstraction_levels: &["all levels of abstraction"],
                realtime_constraints: &["Mission Control", "Tactical Control"],
                locality: &["Vehicle", "Aggregates", "Sensors and Actuators"],
                environment: &["PCs", "Micro-Devices"],
            },
            QosClass::Ws => ClassRequirements {
                domains: &[
                    "Multimedia/HMI",
                    "Passenger/Comfort",
                    "Diagnostics/Infrastructure",
                ],
                abstraction_levels: &["Behavior", "Knowledge", "Information"],
                realtime_constraints: &["Cooperative Control", "Mission Control"],
                locality: &["Global Environment", "Local Environment", "Vehicle"],
                environment: &["Cloud-Infrastructure", "PCs"],
            },
        }
    }
}

impl fmt::Display for QosClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QosClass {
    type Err = ProtocolError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_uppercase().as_str() {
            "SRTS" => Ok(QosClass::Srts),
            "RTS" | "AVB" => Ok(QosClass::Rts),
            "IPS_TCP" | "TCP" => Ok(QosClass::IpsTcp),
            "IPS_UDP" | "UDP" => Ok(QosClass::IpsUdp),
            "WS" => Ok(QosClass::Ws),
            _ => Err(ProtocolError::UnknownClass(s.to_string())),
        }
    }
}
