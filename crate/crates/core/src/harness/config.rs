//! Scenario files: `[section]` headers followed by `key = value` lines.
//! The `[services]`, `[subscriptions]` and `[cross_traffic]` sections hold
//! named entries whose value is a list of `field=value` words.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use super::HarnessError;
use crate::middleware::{ClassOffer, QosRequest, ServiceDescriptor};
use crate::net::{NodeKind, MIN_FRAME_BYTES};
use crate::protocols::QosClass;
use crate::scenario::{
    add_zonal_ring_traffic, build_simple_network, build_zonal_network, generate_synthetic_matrix,
    parse_matrix, CommMatrix, CrossTrafficProfile, CtMode, InterArrival, MatrixParams, ModelParams,
    SimpleOptions, SubscriptionSpec, TopologyDescription, ZonalOptions,
};
use crate::sim::{SimDuration, SimTime};

const SECTIONS: [&str; 6] = [
    "topology",
    "services",
    "subscriptions",
    "cross_traffic",
    "run",
    "model",
];

/// One problem found while reading a scenario. `line` is 0 for problems
/// that belong to the file as a whole.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub field: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.line == 0 {
            write!(f, "{}: {}", self.field, self.message)
        } else {
            write!(f, "line {}: {}: {}", self.line, self.field, self.message)
        }
    }
}

/// Every problem in a scenario file, in line order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigError>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, e) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{e}")?;
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum TopologyConfig {
    Simple {
        publishers: i64,
        subscriber_nodes: i64,
        subs_per_node: i64,
        options: SimpleOptions,
    },
    Zonal {
        zones: i64,
        matrix: CommMatrix,
        options: ZonalOptions,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub name: String,
    pub provider: String,
    pub offers: Vec<ClassOffer>,
    pub cycle_time: SimDuration,
    pub publish_offset: SimDuration,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubscriptionConfig {
    pub name: String,
    pub node: String,
    pub service: String,
    pub class: QosClass,
    pub start_at: SimTime,
    pub max_cycle_time: Option<SimDuration>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CtPlacement {
    /// Every zonal gateway sends to the next one.
    Ring,
    Hosts {
        source: String,
        sink: String,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct CtConfig {
    pub name: String,
    pub placement: CtPlacement,
    pub mode: CtMode,
    pub frame_bytes: u32,
    pub start: SimTime,
    pub stop: Option<SimTime>,
    pub line: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RunConfig {
    pub t_end: SimDuration,
    pub seed: u64,
    pub seeds: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub topology: TopologyConfig,
    pub services: Vec<ServiceConfig>,
    pub subscriptions: Vec<SubscriptionConfig>,
    pub cross_traffic: Vec<CtConfig>,
    pub run: RunConfig,
    pub model: ModelParams,
    canonical: String,
    overrides: Vec<(String, String)>,
}

/// Reads and validates a scenario file. All problems are reported together.
pub fn load_scenario(path: impl AsRef<Path>) -> Result<ScenarioConfig, HarnessError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    parse_scenario(&name, &text, &dir)
}

/// Parses scenario text. Relative matrix paths resolve against `base_dir`.
pub fn parse_scenario(
    name: &str,
    text: &str,
    base_dir: &Path,
) -> Result<ScenarioConfig, HarnessError> {
    let mut p = Parser::default();
    let raw = p.lex(text);
    let cfg = p.build(name, &raw, base_dir);
    if !p.errors.is_empty() {
        p.errors.sort_by_key(|e| e.line);
        return Err(HarnessError::Invalid(ConfigErrors(p.errors)));
    }
    let cfg = cfg.expect("no errors means a config was built");
    cfg.topology_description()?;
    Ok(cfg)
}

#[derive(Clone, Debug)]
struct RawEntry {
    key: String,
    value: String,
    line: usize,
}

#[derive(Default)]
struct Parser {
    errors: Vec<ConfigError>,
}

type RawSections = BTreeMap<&'static str, Vec<RawEntry>>;

impl Parser {
    fn err(&mut self, line: usize, field: impl Into<String>, message: impl Into<String>) {
        self.errors.push(ConfigError {
            line,
            field: field.into(),
            message: message.into(),
        });
    }

    fn lex(&mut self, text: &str) -> RawSections {
        let mut out: RawSections = SECTIONS.iter().map(|s| (*s, Vec::new())).collect();
        let mut current: Option<&'static str> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let l = raw.split('#').next().unwrap_or("").trim();
            if l.is_empty() {
                continue;
            }
            if let Some(h) = l.strip_prefix('[') {
                let Some(h) = h.strip_suffix(']') else {
                    self.err(line, l, "unterminated section header");
                    continue;
                };
                match SECTIONS.iter().find(|s| **s == h.trim()) {
                    Some(s) => current = Some(s),
                    None => {
                        self.err(line, h.trim(), "unknown section");
                        current = None;
                    }
                }
                continue;
            }
            let Some((k, v)) = l.split_once('=') else {
                self.err(line, l, "expected `key = value`");
                continue;
            };
            let Some(section) = current else {
                if !self.errors.iter().any(|e| e.message == "unknown section") {
                    self.err(line, k.trim(), "entry outside a section");
                }
                continue;
            };
            let key = k.trim().to_string();
            let entries = out.get_mut(section).expect("all sections present");
            if entries.iter().any(|e| e.key == key) {
                self.err(line, &key, "duplicate key");
                continue;
            }
            entries.push(RawEntry {
                key,
                value: v.split_whitespace().collect::<Vec<_>>().join(" "),
                line,
            });
        }
        out
    }

    fn build(&mut self, name: &str, raw: &RawSections, base_dir: &Path) -> Option<ScenarioConfig> {
        let mut extra = String::new();
        let topology = self.topology(&raw["topology"], base_dir, &mut extra);
        let services = raw["services"]
            .iter()
            .filter_map(|e| self.service(e))
            .collect();
        let subscriptions = raw["subscriptions"]
            .iter()
            .filter_map(|e| self.subscription(e))
            .collect();
        let cross_traffic = raw["cross_traffic"]
            .iter()
            .filter_map(|e| self.ct(e))
            .collect();
        let run = self.run(&raw["run"]);
        let model = self.model(&raw["model"]);
        let mut canonical = canonicalize(raw);
        canonical.push_str(&extra);
        Some(ScenarioConfig {
            name: name.to_string(),
            topology: topology?,
            services,
            subscriptions,
            cross_traffic,
            run: run?,
            model: model?,
            canonical,
            overrides: Vec::new(),
        })
    }

    fn topology(
        &mut self,
        entries: &[RawEntry],
        base_dir: &Path,
        extra: &mut String,
    ) -> Option<TopologyConfig> {
        let mut f = Fields::new(self, entries, 0, "topology");
        let kind = f.take_str("kind");
        let topo = match kind.as_deref() {
            Some("simple") => {
                let d = SimpleOptions::default();
                let options = SimpleOptions {
                    class: f.class("class").unwrap_or(d.class),
                    cycle_time: f.positive_duration("cycle_time").unwrap_or(d.cycle_time),
                    rts_frame_bytes: f.frame("rts_frame_bytes").unwrap_or(d.rts_frame_bytes),
                    tcp_frame_bytes: f.frame("tcp_frame_bytes").unwrap_or(d.tcp_frame_bytes),
                    udp_frame_bytes: f.frame("udp_frame_bytes").unwrap_or(d.udp_frame_bytes),
                    auto_subscribe: f.bool("auto_subscribe").unwrap_or(d.auto_subscribe),
                    start_at: f.time("start_at").unwrap_or(d.start_at),
                };
                Some(TopologyConfig::Simple {
                    publishers: f.count("publishers").unwrap_or(1),
                    subscriber_nodes: f.count("subscriber_nodes").unwrap_or(1),
                    subs_per_node: f.count("subs_per_node").unwrap_or(1),
                    options,
                })
            }
            Some("zonal") => {
                let d = ZonalOptions::default();
                let zones = f.count("zones").unwrap_or(9);
                let options = ZonalOptions {
                    rts_threshold: f
                        .positive_duration("rts_threshold")
                        .unwrap_or(d.rts_threshold),
                    can_delay: f.duration("can_delay").unwrap_or(d.can_delay),
                    ramp_step: f.duration("ramp_step").unwrap_or(d.ramp_step),
                    frame_bytes: f.frame("frame_bytes").unwrap_or(d.frame_bytes),
                    phase_seed: f.u64("phase_seed").unwrap_or(d.phase_seed),
                };
                let file = f.take_str("matrix");
                let seed = f.u64("matrix_seed").unwrap_or(0);
                let messages = f.u64("messages").unwrap_or(300);
                let mut params = MatrixParams {
                    zones: u32::try_from(zones.max(0)).unwrap_or(u32::MAX),
                    ..MatrixParams::default()
                };
                if let Some(lo) = f.u64("ecus_per_zone_min") {
                    params.ecus_per_zone.0 = lo as u32;
                }
                if let Some(hi) = f.u64("ecus_per_zone_max") {
                    params.ecus_per_zone.1 = hi as u32;
                }
                if let Some(r) = f.u64("max_receivers") {
                    params.max_receivers = r as u32;
                }
                let matrix = match file {
                    Some(file) => {
                        let path = base_dir.join(&file);
                        match std::fs::read_to_string(&path) {
                            Ok(text) => {
                                extra.push_str("\n[matrix]\n");
                                extra.push_str(&text);
                                parse_matrix(&text).map_err(|e| e.to_string())
                            }
                            Err(e) => Err(format!("{}: {e}", path.display())),
                        }
                    }
                    None => generate_synthetic_matrix(seed, messages as u32, &params)
                        .map_err(|e| e.to_string()),
                };
                let line = f.line_of("matrix").or(f.line_of("messages")).unwrap_or(0);
                let matrix = match matrix {
                    Ok(m) => Some(m),
                    Err(msg) => {
                        f.p.err(line, "matrix", msg);
                        None
                    }
                };
                matrix.map(|matrix| TopologyConfig::Zonal {
                    zones,
                    matrix,
                    options,
                })
            }
            Some(other) => {
                let line = f.line_of("kind").unwrap_or(0);
                f.p.err(line, "kind", format!("unknown topology kind `{other}`"));
                None
            }
            None => {
                f.p.err(0, "topology.kind", "missing; expected `simple` or `zonal`");
                None
            }
        };
        f.finish();
        topo
    }

    fn service(&mut self, e: &RawEntry) -> Option<ServiceConfig> {
        let entries = self.words(e)?;
        let mut f = Fields::new(self, &entries, e.line, &e.key);
        let provider = f.required_str("provider");
        let cycle_time = f.positive_duration("cycle_time");
        let publish_offset = f.duration("offset").unwrap_or(SimDuration::ZERO);
        let offers = f.take_str("offers").and_then(|list| {
            let mut out = Vec::new();
            for item in list.split(',') {
                let (class, size) = match item.split_once(':') {
                    Some((c, s)) => (c, Some(s)),
                    None => (item, None),
                };
                let class = match class.parse::<QosClass>() {
                    Ok(c) => c,
                    Err(err) => {
                        f.p.err(e.line, "offers", err.to_string());
                        return None;
                    }
                };
                let size = match size.map(str::parse::<u32>) {
                    None => MIN_FRAME_BYTES,
                    Some(Ok(s)) => s,
                    Some(Err(_)) => {
                        f.p.err(e.line, "offers", format!("bad frame size in `{item}`"));
                        return None;
                    }
                };
                out.push((class, size));
            }
            Some(out)
        });
        if offers.is_none() && f.p.errors.iter().all(|x| x.line != e.line) {
            f.p.err(e.line, "offers", "required");
        }
        f.finish();
        let cycle_time = cycle_time?;
        Some(ServiceConfig {
            name: e.key.clone(),
            provider: provider?,
            offers: offers?
                .into_iter()
                .map(|(c, s)| ClassOffer::new(c, s, cycle_time))
                .collect(),
            cycle_time,
            publish_offset,
            line: e.line,
        })
    }

    fn subscription(&mut self, e: &RawEntry) -> Option<SubscriptionConfig> {
        let entries = self.words(e)?;
        let mut f = Fields::new(self, &entries, e.line, &e.key);
        let node = f.required_str("node");
        let service = f.required_str("service");
        let class = f.class("class");
        if class.is_none() && f.line_of("class").is_none() {
            f.p.err(e.line, "class", "required");
        }
        let start_at = f.time("start").unwrap_or(SimTime::ZERO);
        let max_cycle_time = f.positive_duration("max_cycle_time");
        f.finish();
        Some(SubscriptionConfig {
            name: e.key.clone(),
            node: node?,
            service: service?,
            class: class?,
            start_at,
            max_cycle_time,
            line: e.line,
        })
    }

    fn ct(&mut self, e: &RawEntry) -> Option<CtConfig> {
        let entries = self.words(e)?;
        let mut f = Fields::new(self, &entries, e.line, &e.key);
        let pattern = f.take_str("pattern");
        let source = f.take_str("source");
        let sink = f.take_str("sink");
        let placement = match (pattern.as_deref(), source, sink) {
            (Some("ring"), None, None) => Some(CtPlacement::Ring),
            (Some(p), _, _) if p != "ring" => {
                f.p.err(e.line, "pattern", format!("unknown pattern `{p}`"));
                None
            }
            (None, Some(source), Some(sink)) => Some(CtPlacement::Hosts { source, sink }),
            _ => {
                f.p.err(
                    e.line,
                    "placement",
                    "give either pattern=ring or both source and sink",
                );
                None
            }
        };
        let load = f.u64("load_mbps");
        let mean = f.positive_duration("mean");
        let stddev = f.duration("stddev");
        let min = f.positive_duration("min");
        let max = f.positive_duration("max");
        let mode = match (load, mean, stddev, min, max) {
            (Some(l), None, None, None, None) => Some(CtMode::TargetLoad(l * 1_000_000)),
            (None, Some(mean), Some(stddev), Some(min), Some(max)) => {
                if min <= mean && mean <= max {
                    Some(CtMode::Explicit(InterArrival {
                        mean,
                        stddev,
                        min,
                        max,
                    }))
                } else {
                    f.p.err(e.line, "mean", "must lie within [min, max]");
                    None
                }
            }
            _ => {
                f.p.err(
                    e.line,
                    "mode",
                    "give either load_mbps or all of mean, stddev, min, max",
                );
                None
            }
        };
        let frame_bytes = f.frame("frame_bytes").unwrap_or(1542);
        let start = f.time("start").unwrap_or(SimTime::ZERO);
        let stop = f.time("stop");
        f.finish();
        Some(CtConfig {
            name: e.key.clone(),
            placement: placement?,
            mode: mode?,
            frame_bytes,
            start,
            stop,
            line: e.line,
        })
    }

    fn run(&mut self, entries: &[RawEntry]) -> Option<RunConfig> {
        let mut f = Fields::new(self, entries, 0, "run");
        let t_end = f.positive_duration("t_end");
        if t_end.is_none() && f.line_of("t_end").is_none() {
            f.p.err(0, "run.t_end", "required");
        }
        let seed = f.u64("seed").unwrap_or(1);
        let seeds = f.u64("seeds").unwrap_or(1);
        if seeds == 0 {
            let line = f.line_of("seeds").unwrap_or(0);
            f.p.err(line, "seeds", "must be at least 1");
        }
        f.finish();
        Some(RunConfig {
            t_end: t_end?,
            seed,
            seeds: seeds as u32,
        })
    }

    fn model(&mut self, entries: &[RawEntry]) -> Option<ModelParams> {
        let d = ModelParams::default();
        let mut f = Fields::new(self, entries, 0, "model");
        let m = ModelParams {
            link_rate_bps: f
                .u64("link_rate_mbps")
                .map(|r| r * 1_000_000)
                .unwrap_or(d.link_rate_bps),
            propagation: f.duration("propagation").unwrap_or(d.propagation),
            switch_delay: f.duration("switch_delay").unwrap_or(d.switch_delay),
            processing_delay: f.duration("processing_delay").unwrap_or(d.processing_delay),
            ifg_in_occupancy: f.bool("ifg_in_occupancy").unwrap_or(d.ifg_in_occupancy),
            cbs_budget: f.fraction("cbs_budget").unwrap_or(d.cbs_budget),
            negotiation_timeout: f
                .positive_duration("negotiation_timeout")
                .unwrap_or(d.negotiation_timeout),
            tcp_retry_interval: f
                .positive_duration("tcp_retry_interval")
                .unwrap_or(d.tcp_retry_interval),
            tcp_retries: f
                .u64("tcp_retries")
                .map(|r| r as u32)
                .unwrap_or(d.tcp_retries),
            control_frame_bytes: f
                .frame("control_frame_bytes")
                .unwrap_or(d.control_frame_bytes),
            endpoint_cap: f.u64("endpoint_cap").map(|c| c as u32).or(d.endpoint_cap),
        };
        if m.link_rate_bps == 0 {
            let line = f.line_of("link_rate_mbps").unwrap_or(0);
            f.p.err(line, "link_rate_mbps", "must be positive");
        }
        f.finish();
        Some(m)
    }

    /// Splits a list entry's value into `field=value` words.
    fn words(&mut self, e: &RawEntry) -> Option<Vec<RawEntry>> {
        let mut out = Vec::new();
        let mut ok = true;
        for w in e.value.split_whitespace() {
            match w.split_once('=') {
                Some((k, v)) if !k.is_empty() => {
                    if out.iter().any(|x: &RawEntry| x.key == k) {
                        self.err(e.line, format!("{}.{k}", e.key), "duplicate field");
                        ok = false;
                    }
                    out.push(RawEntry {
                        key: k.to_string(),
                        value: v.to_string(),
                        line: e.line,
                    });
                }
                _ => {
                    self.err(e.line, &e.key, format!("expected `field=value`, got `{w}`"));
                    ok = false;
                }
            }
        }
        ok.then_some(out)
    }
}

/// Typed access to one section or entry. Fields not taken by the time
/// `finish` runs are reported as unknown.
struct Fields<'p, 'e> {
    p: &'p mut Parser,
    entries: &'e [RawEntry],
    used: Vec<bool>,
    line: usize,
    scope: String,
}

impl<'p, 'e> Fields<'p, 'e> {
    fn new(p: &'p mut Parser, entries: &'e [RawEntry], line: usize, scope: &str) -> Self {
        Fields {
            p,
            entries,
            used: vec![false; entries.len()],
            line,
            scope: scope.to_string(),
        }
    }

    fn line_of(&self, key: &str) -> Option<usize> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.line)
    }

    fn take(&mut self, key: &str) -> Option<(String, usize)> {
        let i = self.entries.iter().position(|e| e.key == key)?;
        self.used[i] = true;
        Some((self.entries[i].value.clone(), self.entries[i].line))
    }

    fn take_str(&mut self, key: &str) -> Option<String> {
        self.take(key).map(|(v, _)| v)
    }

    fn required_str(&mut self, key: &str) -> Option<String> {
        let v = self.take_str(key);
        if v.is_none() {
            let line = self.line;
            self.p
                .err(line, format!("{}.{key}", self.scope), "required");
        }
        v
    }

    fn parse<T>(&mut self, key: &str, f: impl FnOnce(&str) -> Result<T, String>) -> Option<T> {
        let (v, line) = self.take(key)?;
        match f(&v) {
            Ok(x) => Some(x),
            Err(msg) => {
                self.p.err(line, format!("{}.{key}", self.scope), msg);
                None
            }
        }
    }

    fn u64(&mut self, key: &str) -> Option<u64> {
        self.parse(key, |v| {
            v.parse::<u64>()
                .map_err(|_| format!("expected a non-negative integer, got `{v}`"))
        })
    }

    fn count(&mut self, key: &str) -> Option<i64> {
        self.parse(key, |v| match v.parse::<i64>() {
            Ok(n) if n >= 0 => Ok(n),
            Ok(n) => Err(format!("count must not be negative, got {n}")),
            Err(_) => Err(format!("expected an integer, got `{v}`")),
        })
    }

    fn bool(&mut self, key: &str) -> Option<bool> {
        self.parse(key, |v| match v {
            "true" => Ok(true),
            "false" => Ok(false),
            _ => Err(format!("expected true or false, got `{v}`")),
        })
    }

    fn fraction(&mut self, key: &str) -> Option<f64> {
        self.parse(key, |v| match v.parse::<f64>() {
            Ok(x) if x > 0.0 && x <= 1.0 => Ok(x),
            _ => Err(format!("expected a fraction in (0, 1], got `{v}`")),
        })
    }

    fn frame(&mut self, key: &str) -> Option<u32> {
        self.parse(key, |v| match v.parse::<u32>() {
            Ok(n) if crate::net::check_frame_size(n).is_ok() => Ok(n),
            _ => Err(format!(
                "expected a frame size in [64, 1542] bytes, got `{v}`"
            )),
        })
    }

    fn class(&mut self, key: &str) -> Option<QosClass> {
        self.parse(key, |v| v.parse::<QosClass>().map_err(|e| e.to_string()))
    }

    fn duration(&mut self, key: &str) -> Option<SimDuration> {
        self.parse(key, parse_duration)
    }

    fn positive_duration(&mut self, key: &str) -> Option<SimDuration> {
        self.parse(key, |v| match parse_duration(v)? {
            SimDuration::ZERO => Err("duration must be positive".to_string()),
            d => Ok(d),
        })
    }

    fn time(&mut self, key: &str) -> Option<SimTime> {
        self.duration(key).map(|d| SimTime::ZERO + d)
    }

    fn finish(self) {
        for (e, used) in self.entries.iter().zip(&self.used) {
            if !used {
                self.p
                    .err(e.line, format!("{}.{}", self.scope, e.key), "unknown key");
            }
        }
    }
}

/// Parses `<integer><unit>` with unit one of ns, us, ms, s.
pub fn parse_duration(v: &str) -> Result<SimDuration, String> {
    let split = v
        .find(|c: char| !(c.is_ascii_digit() || c == '-'))
        .ok_or_else(|| format!("duration `{v}` needs a unit (ns, us, ms, s)"))?;
    let (num, unit) = v.split_at(split);
    let n: i64 = num.parse().map_err(|_| format!("bad duration `{v}`"))?;
    if n < 0 {
        return Err(format!("duration must not be negative, got `{v}`"));
    }
    let n = n as u64;
    match unit {
        "ns" => Ok(SimDuration::from_nanos(n)),
        "us" => Ok(SimDuration::from_micros(n)),
        "ms" => Ok(SimDuration::from_millis(n)),
        "s" => Ok(SimDuration::from_secs(n)),
        _ => Err(format!("unknown duration unit `{unit}` in `{v}`")),
    }
}

/// Comment-free text with normalized spacing; scalar sections are sorted
/// by key, list sections keep their order because it assigns identities.
fn canonicalize(raw: &RawSections) -> String {
    let mut out = String::new();
    for s in SECTIONS {
        let entries = &raw[s];
        if entries.is_empty() {
            continue;
        }
        out.push_str(&format!("[{s}]\n"));
        let mut lines: Vec<String> = entries
            .iter()
            .map(|e| format!("{} = {}", e.key, e.value))
            .collect();
        if matches!(s, "topology" | "run" | "model") {
            lines.sort();
        }
        for l in lines {
            out.push_str(&l);
            out.push('\n');
        }
    }
    out
}

impl ScenarioConfig {
    /// Hex digest of the canonical scenario text plus any applied
    /// overrides, truncated to 16 characters.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        h.update(self.canonical.as_bytes());
        for (k, v) in &self.overrides {
            h.update(format!("\n{k}={v}").as_bytes());
        }
        hex::encode(&h.finalize()[..8])
    }

    pub fn canonical_text(&self) -> &str {
        &self.canonical
    }

    pub fn overrides(&self) -> &[(String, String)] {
        &self.overrides
    }

    pub fn t_end(&self) -> SimTime {
        SimTime::ZERO + self.run.t_end
    }

    /// Seeds of a multi-seed run: consecutive from the configured seed.
    pub fn seeds(&self) -> Vec<u64> {
        (0..u64::from(self.run.seeds))
            .map(|i| self.run.seed + i)
            .collect()
    }

    /// Returns a copy with one sweep parameter replaced.
    pub fn with_param(
        &self,
        param: SweepParam,
        value: u64,
    ) -> Result<ScenarioConfig, HarnessError> {
        let mut c = self.clone();
        match (param, &mut c.topology) {
            (
                SweepParam::SubscriberNodes,
                TopologyConfig::Simple {
                    subscriber_nodes, ..
                },
            ) => *subscriber_nodes = value as i64,
            (SweepParam::PublisherServices, TopologyConfig::Simple { publishers, .. }) => {
                *publishers = value as i64
            }
            (SweepParam::CtLoad, _) if !c.cross_traffic.is_empty() => {
                for ct in &mut c.cross_traffic {
                    ct.mode = CtMode::TargetLoad(value * 1_000_000);
                }
            }
            _ => {
                return Err(HarnessError::InapplicableParameter {
                    param,
                    scenario: self.name.clone(),
                })
            }
        }
        c.overrides
            .push((param.as_str().to_string(), value.to_string()));
        Ok(c)
    }

    /// Builds and validates the topology the scenario describes.
    pub fn topology_description(&self) -> Result<TopologyDescription, HarnessError> {
        let mut errors = Vec::new();
        let mut err = |line: usize, field: &str, message: String| {
            errors.push(ConfigError {
                line,
                field: field.to_string(),
                message,
            })
        };
        let mut t = match &self.topology {
            TopologyConfig::Simple {
                publishers,
                subscriber_nodes,
                subs_per_node,
                options,
            } => {
                let hosts = self
                    .cross_traffic
                    .iter()
                    .any(|c| matches!(c.placement, CtPlacement::Hosts { .. }))
                    .then_some(CtMode::TargetLoad(0));
                let mut t = build_simple_network(
                    *publishers,
                    *subscriber_nodes,
                    *subs_per_node,
                    hosts,
                    options,
                )?;
                t.cross_traffic.clear();
                t
            }
            TopologyConfig::Zonal {
                zones,
                matrix,
                options,
            } => build_zonal_network(*zones, matrix, options)?,
        };
        for s in &self.services {
            let Some(node) = t.find(&s.provider) else {
                err(s.line, "provider", format!("unknown node `{}`", s.provider));
                continue;
            };
            if t.service_by_name(&s.name).is_some() {
                err(s.line, &s.name, "service name already in use".into());
                continue;
            }
            let id = t.next_service_id();
            t.services.push(ServiceDescriptor {
                service_id: id,
                name: s.name.clone(),
                provider_node: node,
                offers: s.offers.clone(),
                cycle_time: s.cycle_time,
                publish_offset: s.publish_offset,
                deadline: None,
            });
        }
        for s in &self.subscriptions {
            let node = t.find(&s.node);
            if node.is_none() {
                err(s.line, "node", format!("unknown node `{}`", s.node));
            }
            let service = t.service_by_name(&s.service).map(|d| d.service_id);
            if service.is_none() {
                err(
                    s.line,
                    "service",
                    format!("unknown service `{}`", s.service),
                );
            }
            if let (Some(node), Some(service)) = (node, service) {
                t.subscriptions.push(SubscriptionSpec {
                    name: s.name.clone(),
                    request: QosRequest {
                        service_id: service,
                        required_class: s.class,
                        max_cycle_time: s.max_cycle_time,
                        consumer_node: node,
                    },
                    start_at: s.start_at,
                });
            }
        }
        for c in &self.cross_traffic {
            let before = t.cross_traffic.len();
            match &c.placement {
                CtPlacement::Ring => {
                    if !matches!(self.topology, TopologyConfig::Zonal { .. }) {
                        err(
                            c.line,
                            "pattern",
                            "ring traffic needs a zonal topology".into(),
                        );
                        continue;
                    }
                    add_zonal_ring_traffic(&mut t, c.mode);
                }
                CtPlacement::Hosts { source, sink } => {
                    let host = |name: &str| {
                        t.find(name)
                            .filter(|n| t.nodes[n.0 as usize].role.kind() == NodeKind::Host)
                    };
                    match (host(source), host(sink)) {
                        (Some(a), Some(b)) => t.cross_traffic.push(CrossTrafficProfile::new(
                            c.name.clone(),
                            a,
                            b,
                            c.mode,
                        )),
                        (a, _) => {
                            let bad = if a.is_none() { source } else { sink };
                            err(c.line, "source/sink", format!("unknown host `{bad}`"));
                            continue;
                        }
                    }
                }
            }
            for p in &mut t.cross_traffic[before..] {
                p.frame_bytes = c.frame_bytes;
                p.start = c.start;
                p.stop = c.stop;
            }
        }
        if !errors.is_empty() {
            return Err(HarnessError::Invalid(ConfigErrors(errors)));
        }
        t.set_link_params(self.model.link_rate_bps, self.model.propagation);
        t.validate()?;
        Ok(t)
    }
}

/// Parameters a sweep can vary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SweepParam {
    SubscriberNodes,
    PublisherServices,
    /// Cross-traffic target load in Mbit/s on every cross-traffic profile.
    CtLoad,
}

impl SweepParam {
    pub fn as_str(self) -> &'static str {
        match self {
            SweepParam::SubscriberNodes => "subscriber_nodes",
            SweepParam::PublisherServices => "publisher_services",
            SweepParam::CtLoad => "ct_load",
        }
    }
}

impl fmt::Display for SweepParam {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for SweepParam {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "subscriber_nodes" => Ok(SweepParam::SubscriberNodes),
            "publisher_services" => Ok(SweepParam::PublisherServices),
            "ct_load" => Ok(SweepParam::CtLoad),
            _ => Err(format!(
                "unknown parameter `{s}` (expected subscriber_nodes, publisher_services or ct_load)"
            )),
        }
    }
}

/// Directory holding the shipped scenarios, for tests and tools.
pub fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig, HarnessError> {
        parse_scenario("t", text, Path::new("."))
    }

    fn errors(text: &str) -> Vec<ConfigError> {
        match parse(text) {
            Err(HarnessError::Invalid(ConfigErrors(e))) => e,
            other => panic!("expected validation errors, got {other:?}"),
        }
    }

    const BASE: &str = "[topology]\nkind = simple\n[run]\nt_end = 1ms\n";

    #[test]
    fn minimal_simple_scenario() {
        let c = parse(BASE).unwrap();
        assert_eq!(c.run.t_end, SimDuration::from_millis(1));
        assert_eq!(c.model, ModelParams::default());
        let t = c.topology_description().unwrap();
        assert_eq!(t.subscriptions.len(), 1);
    }

    #[test]
    fn durations_need_units_and_sign() {
        assert_eq!(parse_duration("8us"), Ok(SimDuration::from_micros(8)));
        assert_eq!(parse_duration("20ns"), Ok(SimDuration::from_nanos(20)));
        assert_eq!(parse_duration("2s"), Ok(SimDuration::from_secs(2)));
        assert!(parse_duration("8").is_err());
        assert!(parse_duration("-8us").is_err());
        assert!(parse_duration("8 parsecs").is_err());
    }

    #[test]
    fn negative_switch_delay_rejected() {
        let e = errors(&format!("{BASE}[model]\nswitch_delay = -8us\n"));
        assert_eq!(e.len(), 1);
        assert_eq!(e[0].line, 6);
        assert_eq!(e[0].field, "model.switch_delay");
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = errors(&format!("{BASE}bogus = 1\n[model]\nswitch_dealy = 8us\n"));
        assert_eq!(e.len(), 2);
        assert!(e.iter().all(|x| x.message == "unknown key"));
        assert_eq!(e[0].line, 5);
        assert_eq!(e[1].line, 7);
    }

    #[test]
    fn all_errors_reported() {
        let text = "[topology]\nkind = simple\nsubscriber_nodes = -1\n[run]\n[model]\ncbs_budget = 2\n[nonsense]\n";
        let e = errors(text);
        let fields: Vec<&str> = e.iter().map(|x| x.field.as_str()).collect();
        assert!(fields.contains(&"topology.subscriber_nodes"));
        assert!(fields.contains(&"run.t_end"));
        assert!(fields.contains(&"model.cbs_budget"));
        assert!(fields.contains(&"nonsense"));
    }

    #[test]
    fn references_checked() {
        let text = "[topology]\nkind = simple\nauto_subscribe = false\n[subscriptions]\na = node=nowhere service=svc0 class=RTS\nb = node=sub0 service=nope class=RTS\n[run]\nt_end = 1ms\n";
        let e = errors(text);
        assert_eq!(e.len(), 2);
        assert_eq!((e[0].line, e[0].field.as_str()), (5, "node"));
        assert_eq!((e[1].line, e[1].field.as_str()), (6, "service"));
    }

    #[test]
    fn hash_ignores_comments_and_spacing_only() {
        let a = parse(BASE).unwrap();
        let b = parse("# comment\n[topology]\n  kind=simple   \n\n[run]\nt_end   =  1ms # end\n")
            .unwrap();
        assert_eq!(a.hash(), b.hash());
        let c = parse("[topology]\nkind = simple\n[run]\nt_end = 2ms\n").unwrap();
        assert_ne!(a.hash(), c.hash());
        let d = a.with_param(SweepParam::SubscriberNodes, 3).unwrap();
        assert_ne!(a.hash(), d.hash());
    }

    #[test]
    fn sweep_parameters_apply_to_their_family() {
        let a = parse(BASE).unwrap();
        assert!(matches!(
            a.with_param(SweepParam::CtLoad, 100),
            Err(HarnessError::InapplicableParameter { .. })
        ));
        let z = parse("[topology]\nkind = zonal\nzones = 2\nmessages = 5\n[run]\nt_end = 1ms\n")
            .unwrap();
        assert!(matches!(
            z.with_param(SweepParam::SubscriberNodes, 2),
            Err(HarnessError::InapplicableParameter { .. })
        ));
    }

    #[test]
    fn explicit_and_ring_cross_traffic() {
        let text = "[topology]\nkind = simple\n[cross_traffic]\nct = source=ct_src sink=ct_sink mean=12985ns stddev=3500ns min=2us max=23us\n[run]\nt_end = 1ms\n";
        let c = parse(text).unwrap();
        let t = c.topology_description().unwrap();
        assert_eq!(t.cross_traffic.len(), 1);
        assert!(matches!(t.cross_traffic[0].mode, CtMode::Explicit(_)));
        let bad = "[topology]\nkind = simple\n[cross_traffic]\nct = pattern=ring load_mbps=100\n[run]\nt_end = 1ms\n";
        assert_eq!(errors(bad)[0].field, "pattern");
        let z = "[topology]\nkind = zonal\nzones = 3\nmessages = 10\n[cross_traffic]\nct = pattern=ring load_mbps=100\n[run]\nt_end = 1ms\n";
        let t = parse(z).unwrap().topology_description().unwrap();
        assert_eq!(t.cross_traffic.len(), 3);
    }
}
