use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use qosnp_sim::harness::{
    load_scenario, run_scenario, run_seeds, scenario_bound, sweep, write_runs, write_sweep_csv,
    HarnessError, SweepAxis, SweepParam,
};
use qosnp_sim::net::StreamId;
use qosnp_sim::scenario::{generate_synthetic_matrix, MatrixParams};

#[derive(Parser)]
#[command(
    name = "qosnp-sim",
    version,
    about = "QoS-negotiating middleware simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario and write CSV metrics.
    Run {
        scenario: PathBuf,
        /// Run only this seed instead of the scenario's seed list.
        #[arg(long)]
        seed: Option<u64>,
        /// Also write an NDJSON event trace (single seed only).
        #[arg(long)]
        trace: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Sweep one or more parameters; prints one CSV row per (values, seed).
    Sweep {
        scenario: PathBuf,
        /// subscriber_nodes, publisher_services or ct_load. Repeat for a grid.
        #[arg(long, required = true)]
        param: Vec<SweepParam>,
        /// Values for the matching --param: `1,2,5`, `1..10` or `0..1000:100`.
        #[arg(long, required = true, allow_hyphen_values = true)]
        values: Vec<String>,
        /// Number of seeds per cell; defaults to the scenario's.
        #[arg(long)]
        seeds: Option<u32>,
        /// Output file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario and print a summary.
    Validate { scenario: PathBuf },
    /// Print the analytic worst-case latency of a reserved stream.
    Bound {
        scenario: PathBuf,
        #[arg(long)]
        stream: u32,
    },
    /// Print a synthetic communication matrix.
    Matrix {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 300)]
        messages: u32,
        #[arg(long, default_value_t = 9)]
        zones: u32,
    },
}

fn parse_values(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if s.is_empty() {
        return Ok(Vec::new());
    }
    if let Some((lo, rest)) = s.split_once("..") {
        let (hi, step) = rest.split_once(':').unwrap_or((rest, "1"));
        let (lo, hi, step): (u64, u64, u64) = (lo.parse()?, hi.parse()?, step.parse()?);
        if step == 0 {
            bail!("range step must be positive");
        }
        return Ok((lo..=hi).step_by(step as usize).collect());
    }
    s.split(',')
        .map(|v| v.trim().parse().with_context(|| format!("bad value `{v}`")))
        .collect()
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Run {
            scenario,
            seed,
            trace,
            out,
        } => {
            let cfg = load_scenario(&scenario)?;
            let seeds = seed.map_or_else(|| cfg.seeds(), |s| vec![s]);
            let runs = if trace {
                if seeds.len() != 1 {
                    bail!("--trace needs a single seed; pass --seed");
                }
                std::fs::create_dir_all(&out)?;
                let path = out.join("trace.ndjson");
                let file = File::create(&path).with_context(|| path.display().to_string())?;
                vec![run_scenario(
                    &cfg,
                    seeds[0],
                    Some(Box::new(BufWriter::new(file))),
                )?]
            } else {
                run_seeds(&cfg, &seeds)?
            };
            write_runs(&cfg, &runs, &out)?;
            for r in &runs {
                let connected = r
                    .metrics
                    .setups
                    .iter()
                    .filter(|s| s.connected.is_some())
                    .count();
                println!(
                    "seed {}: {}/{} subscriptions connected, {} latency samples, {} events",
                    r.seed,
                    connected,
                    r.metrics.setups.len(),
                    r.metrics.latencies.len(),
                    r.stats.events_processed
                );
            }
            println!("wrote {}", out.display());
        }
        Cmd::Sweep {
            scenario,
            param,
            values,
            seeds,
            out,
        } => {
            if param.len() != values.len() {
                bail!("give one --values per --param");
            }
            let mut cfg = load_scenario(&scenario)?;
            if let Some(k) = seeds {
                cfg.run.seeds = k;
            }
            let axes = param
                .into_iter()
                .zip(&values)
                .map(|(param, v)| {
                    Ok(SweepAxis {
                        param,
                        values: parse_values(v)?,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let rows = sweep(&cfg, &axes, &cfg.seeds())?;
            match out {
                Some(path) => {
                    let f = File::create(&path).with_context(|| path.display().to_string())?;
                    write_sweep_csv(&axes, &rows, BufWriter::new(f))?;
                }
                None => write_sweep_csv(&axes, &rows, io::stdout().lock())?,
            }
        }
        Cmd::Validate { scenario } => {
            let cfg = load_scenario(&scenario)?;
            let t = cfg.topology_description()?;
            println!("scenario {} ({})", cfg.name, cfg.hash());
            println!(
                "  {} nodes, {} links, {} services, {} subscriptions, {} cross-traffic flows",
                t.nodes.len(),
                t.links.len(),
                t.services.len(),
                t.subscriptions.len(),
                t.cross_traffic.len()
            );
            println!(
                "  t_end {} ns, seeds {:?}",
                cfg.t_end().as_nanos(),
                cfg.seeds()
            );
        }
        Cmd::Bound { scenario, stream } => {
            let cfg = load_scenario(&scenario)?;
            let b = scenario_bound(&cfg, StreamId(stream))?;
            println!("{} ns ({:.3} us)", b.as_nanos(), b.as_micros_f64());
        }
        Cmd::Matrix {
            seed,
            messages,
            zones,
        } => {
            let params = MatrixParams {
                zones,
                ..MatrixParams::default()
            };
            let m =
                generate_synthetic_matrix(seed, messages, &params).map_err(HarnessError::from)?;
            io::stdout().lock().write_all(m.to_text().as_bytes())?;
        }
    }
    Ok(())
}
