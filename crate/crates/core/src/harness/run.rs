//! Single runs and their CSV/JSON outputs.

use std::fs;
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use super::{HarnessError, ScenarioConfig};
use crate::sim::{RunStats, SimTime};
use crate::world::{Conservation, Metrics, SetupStatus, Simulation};

/// Version of the CSV column layout and `run.json` fields.
pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug)]
pub struct RunRecord {
    pub scenario: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub t_end: SimTime,
    pub subscription_names: Vec<String>,
    pub stats: RunStats,
    pub metrics: Metrics,
    pub conservation: Conservation,
}

/// Runs one seed of a scenario. `trace` receives NDJSON frame and
/// negotiation records.
pub fn run_scenario(
    cfg: &ScenarioConfig,
    seed: u64,
    trace: Option<Box<dyn Write>>,
) -> Result<RunRecord, HarnessError> {
    let topo = cfg.topology_description()?;
    let sim = Simulation::new(&topo, &cfg.model, seed, cfg.t_end(), trace)?;
    let out = sim.run().map_err(|e| HarnessError::Aborted {
        at: e.at,
        source: e.source,
    })?;
    Ok(RunRecord {
        scenario: cfg.name.clone(),
        scenario_hash: cfg.hash(),
        seed,
        t_end: cfg.t_end(),
        subscription_names: topo.subscriptions.iter().map(|s| s.name.clone()).collect(),
        stats: out.stats,
        metrics: out.metrics,
        conservation: out.conservation,
    })
}

/// Runs several seeds in parallel; results come back in seed order.
pub fn run_seeds(cfg: &ScenarioConfig, seeds: &[u64]) -> Result<Vec<RunRecord>, HarnessError> {
    seeds
        .par_iter()
        .map(|&s| run_scenario(cfg, s, None))
        .collect()
}

#[derive(Serialize)]
struct SetupRow<'a> {
    scenario_hash: &'a str,
    seed: u64,
    subscription: usize,
    name: &'a str,
    service: u32,
    class: &'static str,
    status: SetupStatus,
    start_ns: u64,
    request_emitted_ns: Option<u64>,
    details_received_ns: Option<u64>,
    connected_ns: Option<u64>,
    bookkeeping_ns: Option<u64>,
    negotiation_ns: Option<u64>,
    establishment_ns: Option<u64>,
    setup_ns: Option<u64>,
    reason: Option<&'a str>,
}

#[derive(Serialize)]
struct LatencyRow<'a> {
    scenario_hash: &'a str,
    seed: u64,
    subscription: u32,
    service: u32,
    class: &'static str,
    frame: u64,
    seq: u64,
    created_ns: u64,
    delivered_ns: u64,
    latency_ns: u64,
}

#[derive(Serialize)]
struct LinkRow<'a> {
    scenario_hash: &'a str,
    seed: u64,
    from: &'a str,
    to: &'a str,
    port: u32,
    tx_frames: u64,
    tx_class_a_frames: u64,
    tx_bits: u64,
    busy_ns: u64,
    load_bps: u64,
    high_water: usize,
}

impl RunRecord {
    /// Appends this run's setup rows; headers follow the writer's policy.
    pub fn write_setup_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<(), HarnessError> {
        for s in &self.metrics.setups {
            w.serialize(SetupRow {
                scenario_hash: &self.scenario_hash,
                seed: self.seed,
                subscription: s.subscription,
                name: &self.subscription_names[s.subscription],
                service: s.service.0,
                class: s.class.as_str(),
                status: s.status,
                start_ns: s.start.as_nanos(),
                request_emitted_ns: s.request_emitted.map(SimTime::as_nanos),
                details_received_ns: s.details_received.map(SimTime::as_nanos),
                connected_ns: s.connected.map(SimTime::as_nanos),
                bookkeeping_ns: s.bookkeeping().map(|d| d.as_nanos()),
                negotiation_ns: s.negotiation_time().map(|d| d.as_nanos()),
                establishment_ns: s.establishment().map(|d| d.as_nanos()),
                setup_ns: s.setup_time().map(|d| d.as_nanos()),
                reason: s.reason.as_deref(),
            })?;
        }
        Ok(())
    }

    pub fn write_latency_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<(), HarnessError> {
        for l in &self.metrics.latencies {
            w.serialize(LatencyRow {
                scenario_hash: &self.scenario_hash,
                seed: self.seed,
                subscription: l.subscription,
                service: l.service.0,
                class: l.class.as_str(),
                frame: l.frame,
                seq: l.seq,
                created_ns: l.created.as_nanos(),
                delivered_ns: l.delivered.as_nanos(),
                latency_ns: l.latency().as_nanos(),
            })?;
        }
        Ok(())
    }

    pub fn write_link_csv<W: Write>(&self, w: &mut csv::Writer<W>) -> Result<(), HarnessError> {
        let window = self.t_end - SimTime::ZERO;
        for l in &self.metrics.links {
            w.serialize(LinkRow {
                scenario_hash: &self.scenario_hash,
                seed: self.seed,
                from: &l.from,
                to: &l.to,
                port: l.port,
                tx_frames: l.tx_frames,
                tx_class_a_frames: l.tx_class_a_frames,
                tx_bits: l.tx_bits,
                busy_ns: l.busy_ns,
                load_bps: l.load_bps(window).round() as u64,
                high_water: l.high_water,
            })?;
        }
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        let c = &self.metrics.counters;
        json!({
            "seed": self.seed,
            "events_processed": self.stats.events_processed,
            "final_clock_ns": self.stats.final_clock.as_nanos(),
            "frames": c.frames,
            "frames_in_system": self.conservation.in_system,
            "conservation_holds": self.conservation.holds(),
            "stale_messages": c.stale_messages,
            "empty_publishes": c.empty_publishes,
            "unconsumed_data": c.unconsumed_data,
            "tcp_retransmissions": c.tcp_retransmissions,
            "open_brokers": self.metrics.open_brokers,
            "subscriptions": self.metrics.setups.len(),
            "connected": self.metrics.setups.iter().filter(|s| s.status == SetupStatus::Connected).count(),
            "latency_samples": self.metrics.latencies.len(),
        })
    }
}

fn atomic_write(path: &Path, bytes: &[u8]) -> Result<(), HarnessError> {
    let io = |e: std::io::Error| HarnessError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

const SETUP_HEADER: [&str; 16] = [
    "scenario_hash",
    "seed",
    "subscription",
    "name",
    "service",
    "class",
    "status",
    "start_ns",
    "request_emitted_ns",
    "details_received_ns",
    "connected_ns",
    "bookkeeping_ns",
    "negotiation_ns",
    "establishment_ns",
    "setup_ns",
    "reason",
];

const LATENCY_HEADER: [&str; 10] = [
    "scenario_hash",
    "seed",
    "subscription",
    "service",
    "class",
    "frame",
    "seq",
    "created_ns",
    "delivered_ns",
    "latency_ns",
];

const LINK_HEADER: [&str; 11] = [
    "scenario_hash",
    "seed",
    "from",
    "to",
    "port",
    "tx_frames",
    "tx_class_a_frames",
    "tx_bits",
    "busy_ns",
    "load_bps",
    "high_water",
];

/// Header row is written even when there are no records.
fn csv_bytes(
    runs: &[RunRecord],
    header: &[&str],
    f: impl Fn(&RunRecord, &mut csv::Writer<Vec<u8>>) -> Result<(), HarnessError>,
) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(Vec::new());
    w.write_record(header)?;
    for r in runs {
        f(r, &mut w)?;
    }
    w.into_inner()
        .map_err(|e| HarnessError::Csv(e.into_error().into()))
}

/// `setup_times.csv` content for the given runs.
pub fn setup_csv(runs: &[RunRecord]) -> Result<Vec<u8>, HarnessError> {
    csv_bytes(runs, &SETUP_HEADER, RunRecord::write_setup_csv)
}

/// Writes `setup_times.csv`, `latencies.csv`, `link_loads.csv` and
/// `run.json` for the given runs into `dir`, rows ordered by run.
pub fn write_runs(
    cfg: &ScenarioConfig,
    runs: &[RunRecord],
    dir: &Path,
) -> Result<(), HarnessError> {
    fs::create_dir_all(dir).map_err(|e| HarnessError::Io {
        path: dir.to_path_buf(),
        message: e.to_string(),
    })?;
    atomic_write(&dir.join("setup_times.csv"), &setup_csv(runs)?)?;
    atomic_write(
        &dir.join("latencies.csv"),
        &csv_bytes(runs, &LATENCY_HEADER, RunRecord::write_latency_csv)?,
    )?;
    atomic_write(
        &dir.join("link_loads.csv"),
        &csv_bytes(runs, &LINK_HEADER, RunRecord::write_link_csv)?,
    )?;
    let meta = json!({
        "schema_version": SCHEMA_VERSION,
        "scenario": cfg.name,
        "scenario_hash": cfg.hash(),
        "t_end_ns": cfg.t_end().as_nanos(),
        "model": cfg.model,
        "runs": runs.iter().map(RunRecord::summary_json).collect::<Vec<_>>(),
    });
    let text = serde_json::to_string_pretty(&meta).expect("json values serialize");
    atomic_write(&dir.join("run.json"), text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{load_scenario, scenarios_dir};

    #[test]
    fn shipped_scenarios_validate() {
        let mut n = 0;
        for e in fs::read_dir(scenarios_dir()).unwrap() {
            let p = e.unwrap().path();
            if p.extension().is_some_and(|x| x == "scn") {
                let cfg = load_scenario(&p).unwrap();
                cfg.topology_description().unwrap();
                n += 1;
            }
        }
        assert!(n >= 6);
    }

    #[test]
    fn repeated_runs_write_identical_files() {
        let cfg = load_scenario(scenarios_dir().join("unloaded_rts.scn")).unwrap();
        let a = run_scenario(&cfg, 4, None).unwrap();
        let b = run_scenario(&cfg, 4, None).unwrap();
        assert_eq!(setup_csv(&[a]).unwrap(), setup_csv(&[b]).unwrap());

        let dir = tempfile::tempdir().unwrap();
        let runs = run_seeds(&cfg, &cfg.seeds()).unwrap();
        write_runs(&cfg, &runs, dir.path()).unwrap();
        let setup = fs::read_to_string(dir.path().join("setup_times.csv")).unwrap();
        assert!(setup.starts_with("scenario_hash,seed,subscription,"));
        assert_eq!(setup.lines().count(), 1 + runs.len());
        let meta: serde_json::Value =
            serde_json::from_slice(&fs::read(dir.path().join("run.json")).unwrap()).unwrap();
        assert_eq!(meta["schema_version"], SCHEMA_VERSION);
        assert_eq!(meta["scenario_hash"], cfg.hash());
    }

    #[test]
    fn empty_run_list_still_has_headers() {
        let csv = String::from_utf8(setup_csv(&[]).unwrap()).unwrap();
        assert_eq!(csv.lines().count(), 1);
    }
}
