//! Parameter sweeps: one run per (value combination, seed), one CSV row
//! per run.

use std::io::Write;

use rayon::prelude::*;

use super::{run_scenario, HarnessError, ScenarioConfig, SweepParam};
use crate::world::SetupStatus;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepAxis {
    pub param: SweepParam,
    pub values: Vec<u64>,
}

/// Per-run aggregates. Setup statistics cover connected subscriptions;
/// `setup_avg_ns` is the floor of the mean. Percentiles use nearest rank.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SweepRow {
    pub scenario_hash: String,
    pub values: Vec<u64>,
    pub seed: u64,
    pub subscriptions: usize,
    pub connected: usize,
    pub failed: usize,
    pub setup_min_ns: Option<u64>,
    pub setup_avg_ns: Option<u64>,
    pub setup_max_ns: Option<u64>,
    pub latency_samples: usize,
    pub latency_p50_ns: Option<u64>,
    pub latency_p99_ns: Option<u64>,
    pub latency_max_ns: Option<u64>,
}

/// Nearest-rank percentile of sorted data.
pub fn percentile(sorted: &[u64], p: f64) -> Option<u64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = ((p / 100.0) * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

fn combinations(axes: &[SweepAxis]) -> Vec<Vec<u64>> {
    axes.iter().fold(vec![Vec::new()], |acc, axis| {
        acc.iter()
            .flat_map(|prefix| {
                axis.values.iter().map(move |v| {
                    let mut p = prefix.clone();
                    p.push(*v);
                    p
                })
            })
            .collect()
    })
}

/// Runs the cartesian product of the axes for every seed. Rows are
/// ordered by value combination (first axis slowest), then seed.
pub fn sweep(
    cfg: &ScenarioConfig,
    axes: &[SweepAxis],
    seeds: &[u64],
) -> Result<Vec<SweepRow>, HarnessError> {
    for a in axes {
        cfg.with_param(a.param, 0)?;
    }
    let mut jobs = Vec::new();
    for values in combinations(axes) {
        let mut c = cfg.clone();
        for (a, v) in axes.iter().zip(&values) {
            c = c.with_param(a.param, *v)?;
        }
        for &seed in seeds {
            jobs.push((c.clone(), values.clone(), seed));
        }
    }
    jobs.into_par_iter()
        .map(|(c, values, seed)| {
            let r = run_scenario(&c, seed, None)?;
            let mut setups: Vec<u64> = r
                .metrics
                .setups
                .iter()
                .filter_map(|s| s.setup_time())
                .map(|d| d.as_nanos())
                .collect();
            setups.sort_unstable();
            let mut lat: Vec<u64> = r
                .metrics
                .latencies
                .iter()
                .map(|l| l.latency().as_nanos())
                .collect();
            lat.sort_unstable();
            Ok(SweepRow {
                scenario_hash: r.scenario_hash,
                values,
                seed,
                subscriptions: r.metrics.setups.len(),
                connected: setups.len(),
                failed: r
                    .metrics
                    .setups
                    .iter()
                    .filter(|s| s.status == SetupStatus::Failed)
                    .count(),
                setup_min_ns: setups.first().copied(),
                setup_avg_ns: (!setups.is_empty())
                    .then(|| setups.iter().sum::<u64>() / setups.len() as u64),
                setup_max_ns: setups.last().copied(),
                latency_samples: lat.len(),
                latency_p50_ns: percentile(&lat, 50.0),
                latency_p99_ns: percentile(&lat, 99.0),
                latency_max_ns: lat.last().copied(),
            })
        })
        .collect()
}

fn opt(v: Option<u64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn write_sweep_csv<W: Write>(
    axes: &[SweepAxis],
    rows: &[SweepRow],
    w: W,
) -> Result<(), HarnessError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    let mut header = vec!["scenario_hash".to_string()];
    header.extend(axes.iter().map(|a| a.param.as_str().to_string()));
    header.extend(
        [
            "seed",
            "subscriptions",
            "connected",
            "failed",
            "setup_min_ns",
            "setup_avg_ns",
            "setup_max_ns",
            "latency_samples",
            "latency_p50_ns",
            "latency_p99_ns",
            "latency_max_ns",
        ]
        .map(String::from),
    );
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.scenario_hash.clone()];
        rec.extend(r.values.iter().map(u64::to_string));
        rec.extend([
            r.seed.to_string(),
            r.subscriptions.to_string(),
            r.connected.to_string(),
            r.failed.to_string(),
            opt(r.setup_min_ns),
            opt(r.setup_avg_ns),
            opt(r.setup_max_ns),
            r.latency_samples.to_string(),
            opt(r.latency_p50_ns),
            opt(r.latency_p99_ns),
            opt(r.latency_max_ns),
        ]);
        w.write_record(&rec)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
