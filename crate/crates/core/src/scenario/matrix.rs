//! Communication matrices: which ECU sends which CAN message to whom, and
//! how often. The synthetic generator stands in for a production matrix.

use std::collections::{BTreeSet, HashMap};
use std::fmt::Write as _;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::sim::{RngStream, SimDuration};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Domain {
    Multimedia,
    Comfort,
    Safety,
    Powertrain,
    Diagnostics,
}

impl Domain {
    pub const ALL: [Domain; 5] = [
        Domain::Multimedia,
        Domain::Comfort,
        Domain::Safety,
        Domain::Powertrain,
        Domain::Diagnostics,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Multimedia => "multimedia",
            Domain::Comfort => "comfort",
            Domain::Safety => "safety",
            Domain::Powertrain => "powertrain",
            Domain::Diagnostics => "diagnostics",
        }
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Domain::ALL
            .into_iter()
            .find(|d| d.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| format!("unknown domain `{s}`"))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Ecu {
    pub name: String,
    pub zone: u32,
    pub domain: Domain,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommMatrixEntry {
    pub message_id: u32,
    pub sender_ecu: String,
    pub receiver_ecus: Vec<String>,
    pub cycle_time: SimDuration,
    pub payload_bytes: u8,
}

impl CommMatrixEntry {
    /// Latency budget: a tenth of the cycle time.
    pub fn deadline(&self) -> SimDuration {
        SimDuration::from_nanos(self.cycle_time.as_nanos() / 10)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CommMatrix {
    pub ecus: Vec<Ecu>,
    pub entries: Vec<CommMatrixEntry>,
}

impl CommMatrix {
    pub fn ecu(&self, name: &str) -> Option<&Ecu> {
        self.ecus.iter().find(|e| e.name == name)
    }

    /// Zone of every referenced ECU, or the first ECU without one.
    pub fn zone_map(&self) -> Result<HashMap<&str, u32>, ScenarioError> {
        let zones: HashMap<&str, u32> = self
            .ecus
            .iter()
            .map(|e| (e.name.as_str(), e.zone))
            .collect();
        for entry in &self.entries {
            for name in std::iter::once(&entry.sender_ecu).chain(&entry.receiver_ecus) {
                if !zones.contains_key(name.as_str()) {
                    return Err(ScenarioError::UnassignedEcu(name.clone()));
                }
            }
        }
        Ok(zones)
    }

    /// Distinct zones other than the sender's that receive `entry`.
    pub fn remote_zones(
        &self,
        zones: &HashMap<&str, u32>,
        entry: &CommMatrixEntry,
    ) -> BTreeSet<u32> {
        let own = zones[entry.sender_ecu.as_str()];
        entry
            .receiver_ecus
            .iter()
            .map(|r| zones[r.as_str()])
            .filter(|z| *z != own)
            .collect()
    }

    /// Serializes to the line format read by [`parse_matrix`].
    pub fn to_text(&self) -> String {
        let mut out = String::from(
            "# ecu,<name>,<zone>,<domain>\n# msg,<id>,<sender>,<receiver;receiver>,<cycle_us>,<payload_bytes>\n",
        );
        for e in &self.ecus {
            let _ = writeln!(out, "ecu,{},{},{}", e.name, e.zone, e.domain.as_str());
        }
        for m in &self.entries {
            let _ = writeln!(
                out,
                "msg,{},{},{},{},{}",
                m.message_id,
                m.sender_ecu,
                m.receiver_ecus.join(";"),
                m.cycle_time.as_nanos() / 1000,
                m.payload_bytes
            );
        }
        out
    }
}

pub fn parse_matrix(text: &str) -> Result<CommMatrix, ScenarioError> {
    let mut m = CommMatrix::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let bad = |msg: String| ScenarioError::Matrix {
            line: i + 1,
            message: msg,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        match f.as_slice() {
            ["ecu", name, zone, domain] => m.ecus.push(Ecu {
                name: name.to_string(),
                zone: zone
                    .parse()
                    .map_err(|_| bad(format!("bad zone `{zone}`")))?,
                domain: domain.parse().map_err(bad)?,
            }),
            ["msg", id, sender, receivers, cycle_us, payload] => {
                let cycle: u64 = cycle_us
                    .parse()
                    .map_err(|_| bad(format!("bad cycle `{cycle_us}`")))?;
                if cycle == 0 {
                    return Err(bad("cycle time must be positive".into()));
                }
                let payload: u8 = payload
                    .parse()
                    .ok()
                    .filter(|p| *p <= 8)
                    .ok_or_else(|| bad(format!("payload `{payload}` not in 0..=8")))?;
                m.entries.push(CommMatrixEntry {
                    message_id: id.parse().map_err(|_| bad(format!("bad id `{id}`")))?,
                    sender_ecu: sender.to_string(),
                    receiver_ecus: receivers
                        .split(';')
                        .filter(|r| !r.is_empty())
                        .map(str::to_string)
                        .collect(),
                    cycle_time: SimDuration::from_micros(cycle),
                    payload_bytes: payload,
                });
            }
            _ => return Err(bad(format!("unrecognized record `{line}`"))),
        }
    }
    Ok(m)
}

#[derive(Clone, Debug, PartialEq)]
pub struct MatrixParams {
    pub zones: u32,
    /// Inclusive range of ECUs per zone.
    pub ecus_per_zone: (u32, u32),
    /// Relative weight of each domain, in [`Domain::ALL`] order.
    pub domain_weights: [f64; 5],
    pub cycle_weights: Vec<(SimDuration, f64)>,
    pub max_receivers: u32,
}

impl Default for MatrixParams {
    fn default() -> Self {
        MatrixParams {
            zones: 9,
            ecus_per_zone: (3, 8),
            domain_weights: [1.0; 5],
            cycle_weights: vec![
                (SimDuration::from_millis(1), 0.15),
                (SimDuration::from_millis(5), 0.25),
                (SimDuration::from_millis(10), 0.30),
                (SimDuration::from_millis(50), 0.30),
            ],
            max_receivers: 4,
        }
    }
}

pub fn generate_synthetic_matrix(
    seed: u64,
    n_messages: u32,
    params: &MatrixParams,
) -> Result<CommMatrix, ScenarioError> {
    if n_messages == 0 {
        return Err(ScenarioError::InvalidCount {
            what: "messages",
            value: 0,
        });
    }
    if params.zones == 0 {
        return Err(ScenarioError::InvalidCount {
            what: "zones",
            value: 0,
        });
    }
    let (lo, hi) = params.ecus_per_zone;
    if lo == 0 || lo > hi {
        return Err(ScenarioError::InvalidCount {
            what: "ecus_per_zone",
            value: i64::from(lo),
        });
    }
    let mut rng = RngStream::derive(seed, "matrix");
    let mut ecus = Vec::new();
    for zone in 0..params.zones {
        let n = rng.uniform_u64(u64::from(lo), u64::from(hi));
        for k in 0..n {
            let domain = Domain::ALL[rng.weighted_index(&params.domain_weights)];
            ecus.push(Ecu {
                name: format!("z{zone}e{k}"),
                zone,
                domain,
            });
        }
    }
    let cycle_w: Vec<f64> = params.cycle_weights.iter().map(|c| c.1).collect();
    let mut entries = Vec::with_capacity(n_messages as usize);
    for id in 0..n_messages {
        let sender = rng.index(ecus.len());
        let wanted = rng.uniform_u64(1, u64::from(params.max_receivers.max(1))) as usize;
        let mut receivers = BTreeSet::new();
        while receivers.len() < wanted.min(ecus.len() - 1) {
            let r = rng.index(ecus.len());
            if r != sender {
                receivers.insert(r);
            }
        }
        entries.push(CommMatrixEntry {
            message_id: id,
            sender_ecu: ecus[sender].name.clone(),
            receiver_ecus: receivers.iter().map(|r| ecus[*r].name.clone()).collect(),
            cycle_time: params.cycle_weights[rng.weighted_index(&cycle_w)].0,
            payload_bytes: 8,
        });
    }
    Ok(CommMatrix { ecus, entries })
}
