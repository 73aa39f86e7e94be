//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any criterion fails.

use std::cell::RefCell;
use std::collections::{BTreeMap, VecDeque};
use std::io::Write;
use std::process::ExitCode;
use std::rc::Rc;
use std::time::Instant;

use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestCaseError, TestRng, TestRunner};
use serde_json::Value;

use qosnp_sim::harness::{
    fit_two_segments, load_scenario, run_scenario, run_seeds, scenario_bound, scenarios_dir, sweep,
    write_runs, HarnessError, RunRecord, ScenarioConfig, SweepAxis, SweepParam,
};
use qosnp_sim::middleware::{
    transition, Broker, BrokerAction, BrokerInput, BrokerState, ConsumerState, NegotiationId,
    ProviderState, QosnpKind, Step,
};
use qosnp_sim::net::{
    transmission_time, Destination, EgressPort, Frame, FrameId, NodeId, PayloadKind, Priority,
    StreamId, GIGABIT, MIN_FRAME_BYTES,
};
use qosnp_sim::protocols::QosClass;
use qosnp_sim::scenario::{ModelParams, NodeRole, TopologyDescription};
use qosnp_sim::sim::{SimDuration, SimTime};
use qosnp_sim::world::Simulation;

type Outcome = Result<(bool, String), HarnessError>;
type Criterion = (&'static str, fn() -> Outcome);

fn load(name: &str) -> Result<ScenarioConfig, HarnessError> {
    load_scenario(scenarios_dir().join(name))
}

fn us(ns: u64) -> f64 {
    ns as f64 / 1_000.0
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= target * tol
}

/// Shared in-memory sink for an event trace.
#[derive(Clone, Default)]
struct TraceBuf(Rc<RefCell<Vec<u8>>>);

impl Write for TraceBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

impl TraceBuf {
    fn records(&self) -> Vec<Value> {
        self.0
            .borrow()
            .split(|b| *b == b'\n')
            .filter(|l| !l.is_empty())
            .map(|l| serde_json::from_slice(l).expect("trace lines are json"))
            .collect()
    }
}

fn traced_run(cfg: &ScenarioConfig, seed: u64) -> Result<(RunRecord, Vec<Value>), HarnessError> {
    let buf = TraceBuf::default();
    let r = run_scenario(cfg, seed, Some(Box::new(buf.clone())))?;
    Ok((r, buf.records()))
}

fn class_max(r: &RunRecord, pred: impl Fn(QosClass) -> bool) -> Option<u64> {
    r.metrics
        .latencies
        .iter()
        .filter(|l| pred(l.class))
        .map(|l| l.latency().as_nanos())
        .max()
}

fn rts_bound_safety() -> Outcome {
    let cfg = load("ct_saturated.scn")?;
    let seeds = cfg.seeds();
    let runs = run_seeds(&cfg, &seeds)?;
    let rts = runs[0]
        .metrics
        .setups
        .iter()
        .find(|s| s.class == QosClass::Rts)
        .expect("scenario has an RTS subscription");
    let bound = scenario_bound(&cfg, StreamId(rts.service.0))?.as_nanos();
    let mut rts_max = 0;
    let mut ips_max = 0;
    let mut rts_samples = 0;
    let mut violations = 0;
    for r in &runs {
        for l in r
            .metrics
            .latencies
            .iter()
            .filter(|l| l.class == QosClass::Rts)
        {
            rts_samples += 1;
            if l.latency().as_nanos() > bound {
                violations += 1;
            }
        }
        rts_max = rts_max.max(class_max(r, |c| c == QosClass::Rts).unwrap_or(0));
        ips_max = ips_max.max(class_max(r, |c| c != QosClass::Rts).unwrap_or(0));
    }
    let pass = rts_samples > 0
        && violations == 0
        && bound.abs_diff(30_200) <= 500
        && ips_max > rts_max
        && (15.0..=60.0).contains(&us(rts_max))
        && (46.5..=186.0).contains(&us(ips_max));
    Ok((
        pass,
        format!(
            "bound {bound} ns; {} seeds, {rts_samples} RTS samples, {violations} over bound; \
             RTS max {:.1} us, IPS max {:.1} us",
            seeds.len(),
            us(rts_max),
            us(ips_max)
        ),
    ))
}

fn unloaded(name: &str) -> Result<(u64, u64), HarnessError> {
    let cfg = load(name)?;
    let r = run_scenario(&cfg, cfg.run.seed, None)?;
    let s = &r.metrics.setups[0];
    let neg = s.negotiation_time().map(|d| d.as_nanos()).unwrap_or(0);
    let total = s.setup_time().map(|d| d.as_nanos()).unwrap_or(0);
    Ok((neg, total))
}

fn negotiation_independence() -> Outcome {
    let runs = [
        unloaded("unloaded_rts.scn")?,
        unloaded("unloaded_tcp.scn")?,
        unloaded("unloaded_udp.scn")?,
    ];
    let negs: Vec<u64> = runs.iter().map(|r| r.0).collect();
    let spread = negs.iter().max().unwrap() - negs.iter().min().unwrap();
    let frame = transmission_time(MIN_FRAME_BYTES, GIGABIT)
        .unwrap()
        .as_nanos();
    let pass = negs
        .iter()
        .all(|&n| n > 0 && within(n as f64, 76_000.0, 0.2))
        && spread <= frame;
    Ok((
        pass,
        format!(
            "negotiation RTS {} ns, TCP {} ns, UDP {} ns; spread {spread} ns (limit {frame} ns)",
            negs[0], negs[1], negs[2]
        ),
    ))
}

fn establishment_ordering() -> Outcome {
    let (_, rts) = unloaded("unloaded_rts.scn")?;
    let (_, tcp) = unloaded("unloaded_tcp.scn")?;
    let (_, udp) = unloaded("unloaded_udp.scn")?;
    let pass = udp > 0
        && udp < rts
        && rts < tcp
        && within(udp as f64, 60_000.0, 0.25)
        && within(rts as f64, 100_000.0, 0.25)
        && within(tcp as f64, 130_000.0, 0.25);
    Ok((
        pass,
        format!(
            "setup UDP {:.1} us < AVB {:.1} us < TCP {:.1} us (targets 60/100/130 us, 25%)",
            us(udp),
            us(rts),
            us(tcp)
        ),
    ))
}

fn negotiation_scaling() -> Outcome {
    let cfg = load("negotiation_grid.scn")?;
    let axes = [
        SweepAxis {
            param: SweepParam::PublisherServices,
            values: (1..=10).collect(),
        },
        SweepAxis {
            param: SweepParam::SubscriberNodes,
            values: (1..=10).collect(),
        },
    ];
    let rows = sweep(&cfg, &axes, &[cfg.run.seed])?;
    let mut by_count: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut incomplete = 0;
    for r in &rows {
        if r.connected != r.subscriptions {
            incomplete += 1;
        }
        if let Some(avg) = r.setup_avg_ns {
            by_count
                .entry(r.subscriptions)
                .or_default()
                .push(avg as f64);
        }
    }
    let points: Vec<(f64, f64)> = by_count
        .iter()
        .map(|(n, v)| (*n as f64, v.iter().sum::<f64>() / v.len() as f64))
        .collect();
    let monotone = points.windows(2).all(|w| w[1].1 >= w[0].1);
    let Some(fit) = fit_two_segments(&points) else {
        return Ok((false, "fit needs at least four distinct counts".into()));
    };
    let level = fit.level / 1_000.0;
    let pass = incomplete == 0
        && monotone
        && (25.0..=55.0).contains(&fit.breakpoint)
        && within(level, 100.0, 0.25)
        && fit.right_slope > fit.left_slope;
    Ok((
        pass,
        format!(
            "{} cells, {} distinct counts, non-decreasing {monotone}; break at {:.1} \
             negotiations, level {level:.1} us, slopes {:.3}/{:.3} us per negotiation",
            rows.len(),
            points.len(),
            fit.breakpoint,
            fit.left_slope / 1_000.0,
            fit.right_slope / 1_000.0
        ),
    ))
}

fn cross_traffic_sweep() -> Outcome {
    let cfg = load("zonal_ct.scn")?;
    let loads: Vec<u64> = (0..=1000).step_by(100).collect();
    let axes = [SweepAxis {
        param: SweepParam::CtLoad,
        values: loads.clone(),
    }];
    let rows = sweep(&cfg, &axes, &cfg.seeds())?;
    let mut min_at = BTreeMap::new();
    let mut max_at = BTreeMap::new();
    for r in &rows {
        let load = r.values[0];
        if let (Some(lo), Some(hi)) = (r.setup_min_ns, r.setup_max_ns) {
            let m = min_at.entry(load).or_insert(u64::MAX);
            *m = (*m).min(lo);
            let m = max_at.entry(load).or_insert(0);
            *m = (*m).max(hi);
        }
    }
    if min_at.len() != loads.len() {
        return Ok((false, "some loads connected no subscription".into()));
    }
    let lo = *min_at.values().min().unwrap() as f64;
    let hi = *min_at.values().max().unwrap() as f64;
    let min_variation = (hi - lo) / lo;
    let max700 = max_at[&700];
    let ratio = max_at[&900] as f64 / max_at[&300] as f64;
    let checks = [min_variation < 0.2, max700 <= 2_000_000, ratio >= 3.0];
    Ok((
        checks.iter().all(|c| *c),
        format!(
            "min setup varies {:.0}% (limit 20%) [{}]; max at 700 Mbit/s {:.3} ms (limit 2 ms) [{}]; \
             max@900 / max@300 = {ratio:.2} (need 3) [{}]",
            min_variation * 100.0,
            ok(checks[0]),
            max700 as f64 / 1e6,
            ok(checks[1]),
            ok(checks[2])
        ),
    ))
}

fn runner(cases: u32) -> TestRunner {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha))
}

fn ok(b: bool) -> &'static str {
    if b {
        "ok"
    } else {
        "FAIL"
    }
}

// Drives a single shaped port through arbitrary arrivals and checks that
// class-A output never exceeds the reserved rate plus one frame over any
// window opening when the class-A queue becomes non-empty.
fn cbs_cap_case(idle: u64, mut arrivals: Vec<(u64, bool, u32)>) -> Result<(), TestCaseError> {
    arrivals.sort_by_key(|a| a.0);
    let mut port = EgressPort::<()>::new(GIGABIT, true).unwrap();
    port.add_reservation(SimTime::ZERO, idle);
    let mut next = 0;
    let mut t = 0u64;
    let mut tx_end: Option<u64> = None;
    let mut wake: Option<u64> = None;
    let mut opens = Vec::new();
    let mut sent: Vec<(u64, u64, u64)> = Vec::new();
    let mut id = 0;
    loop {
        let now = SimTime::from_nanos(t);
        if tx_end == Some(t) {
            port.finish_transmission(now);
            tx_end = None;
        }
        while next < arrivals.len() && arrivals[next].0 == t {
            let (_, class_a, size) = arrivals[next];
            if class_a && port.class_a_len() == 0 {
                opens.push(t);
            }
            let prio = if class_a {
                Priority::RtsClassA
            } else {
                Priority::BestEffort
            };
            let f = Frame::new(
                FrameId(id),
                NodeId(0),
                Destination::Unicast(NodeId(1)),
                prio,
                size,
                now,
                PayloadKind::CrossTraffic,
                (),
            )
            .unwrap();
            id += 1;
            port.enqueue(f, now);
            next += 1;
        }
        if port.is_idle(now) {
            wake = None;
            if let Some(f) = port.select_next_frame(now) {
                let bits = u64::from(f.size_bytes) * 8;
                let a = f.priority == Priority::RtsClassA;
                let tx = port.start_transmission(f, now);
                if a {
                    sent.push((t, tx.tx_end.as_nanos(), bits));
                }
                tx_end = Some(tx.tx_end.as_nanos());
            } else {
                wake = port.credit_wakeup(now).map(SimTime::as_nanos);
            }
        }
        let candidates = [
            arrivals.get(next).map(|a| a.0),
            tx_end,
            (port.busy_until().as_nanos() > t).then(|| port.busy_until().as_nanos()),
            wake,
        ];
        match candidates.into_iter().flatten().min() {
            Some(n) => t = n,
            None => break,
        }
    }
    let total_a = arrivals.iter().filter(|a| a.1).count();
    prop_assert_eq!(sent.len(), total_a, "every class-A frame is sent");
    let slack = u128::from(1542u64 * 8) * 1_000_000_000;
    for &s in &opens {
        let mut bits = 0u64;
        for &(_, end, b) in sent.iter().filter(|x| x.0 >= s) {
            bits += b;
            let allowed = u128::from(idle) * u128::from(end - s) + slack;
            prop_assert!(
                u128::from(bits) * 1_000_000_000 <= allowed,
                "{} bits in {} ns at idle slope {}",
                bits,
                end - s,
                idle
            );
        }
    }
    Ok(())
}

fn cbs_cap_property() -> (bool, String) {
    let strategy = (
        1_000_000u64..=750_000_000,
        prop::collection::vec(
            (0u64..150_000, prop::bool::weighted(0.7), 64u32..=1542),
            1..60,
        ),
    );
    let mut runner = runner(400);
    match runner.run(&strategy, |(idle, arrivals)| cbs_cap_case(idle, arrivals)) {
        Ok(()) => (true, "cap holds on 400 traces".into()),
        Err(e) => (false, format!("cap violated: {e}")),
    }
}

fn expected_transition(s: BrokerState, i: BrokerInput) -> Option<(BrokerState, Vec<BrokerAction>)> {
    use BrokerAction::*;
    use BrokerInput as I;
    use BrokerState::{Consumer as C, Provider as P};
    use ConsumerState as Cs;
    use ProviderState as Ps;
    let table: [(BrokerState, BrokerInput, BrokerState, &[BrokerAction]); 14] = [
        (
            C(Cs::Idle),
            I::Start,
            C(Cs::WaitResponse),
            &[SendRequest, ArmTimeout],
        ),
        (
            C(Cs::WaitResponse),
            I::Response { accept: true },
            C(Cs::WaitDetails),
            &[SendEstablish],
        ),
        (
            C(Cs::WaitResponse),
            I::Response { accept: false },
            C(Cs::Failed),
            &[CancelTimeout],
        ),
        (C(Cs::WaitResponse), I::Timeout, C(Cs::Failed), &[]),
        (
            C(Cs::WaitDetails),
            I::Details { ok: true },
            C(Cs::Connected),
            &[CancelTimeout, ConnectConsumer],
        ),
        (
            C(Cs::WaitDetails),
            I::Details { ok: false },
            C(Cs::Failed),
            &[CancelTimeout],
        ),
        (C(Cs::WaitDetails), I::Timeout, C(Cs::Failed), &[]),
        (
            P(Ps::Idle),
            I::Request { acceptable: true },
            P(Ps::Offered),
            &[SendAccept, ArmTimeout],
        ),
        (
            P(Ps::Idle),
            I::Request { acceptable: false },
            P(Ps::Failed),
            &[SendReject],
        ),
        (
            P(Ps::Offered),
            I::Establish,
            P(Ps::CreatingEndpoint),
            &[CreateEndpoint],
        ),
        (P(Ps::Offered), I::Timeout, P(Ps::Failed), &[]),
        (
            P(Ps::CreatingEndpoint),
            I::EndpointCreated { ok: true },
            P(Ps::Connected),
            &[CancelTimeout, SendDetails],
        ),
        (
            P(Ps::CreatingEndpoint),
            I::EndpointCreated { ok: false },
            P(Ps::Failed),
            &[CancelTimeout, SendFailure],
        ),
        (P(Ps::CreatingEndpoint), I::Timeout, P(Ps::Failed), &[]),
    ];
    table
        .iter()
        .find(|r| r.0 == s && r.1 == i)
        .map(|r| (r.2, r.3.to_vec()))
}

fn broker_enumeration() -> (bool, String) {
    let mut moves = 0;
    let mut ignored = 0;
    let mut bad = Vec::new();
    for s in BrokerState::ALL {
        for i in BrokerInput::ALL {
            let got = transition(s, i);
            let want = expected_transition(s, i);
            let terminal_ok = !s.is_terminal() || got == Step::Ignored;
            let matches = match (&got, &want) {
                (Step::Move { to, actions }, Some((wto, wact))) => {
                    to == wto && actions.to_vec() == *wact
                }
                (Step::Ignored, None) => true,
                _ => false,
            };
            match got {
                Step::Move { .. } => moves += 1,
                Step::Ignored => ignored += 1,
            }
            let mut b = match s {
                BrokerState::Consumer(_) => Broker::consumer(NegotiationId(0)),
                BrokerState::Provider(_) => Broker::provider(NegotiationId(0)),
            };
            // Walk the broker into `s` using the table itself.
            let reachable = drive_to(&mut b, s);
            let apply_ok = !reachable
                || match b.apply(i) {
                    Ok(_) => got != Step::Ignored,
                    Err(_) => got == Step::Ignored && b.state() == s,
                };
            if !(matches && terminal_ok && apply_ok) {
                bad.push(format!("{s:?} x {i:?}"));
            }
        }
    }
    (
        bad.is_empty(),
        format!(
            "{} pairs: {moves} transitions, {ignored} ignored; mismatches {:?}",
            moves + ignored,
            bad
        ),
    )
}

fn drive_to(b: &mut Broker, target: BrokerState) -> bool {
    for _ in 0..4 {
        if b.state() == target {
            return true;
        }
        let step = BrokerInput::ALL
            .iter()
            .find(|i| match transition(b.state(), **i) {
                Step::Move { to, .. } => reachable_from(to, target),
                Step::Ignored => false,
            });
        match step {
            Some(i) => {
                b.apply(*i).unwrap();
            }
            None => return false,
        }
    }
    b.state() == target
}

fn reachable_from(from: BrokerState, target: BrokerState) -> bool {
    let mut seen = vec![from];
    let mut i = 0;
    while i < seen.len() {
        let s = seen[i];
        for inp in BrokerInput::ALL {
            if let Step::Move { to, .. } = transition(s, inp) {
                if !seen.contains(&to) {
                    seen.push(to);
                }
            }
        }
        i += 1;
    }
    seen.contains(&target)
}

fn output_bytes(cfg: &ScenarioConfig, seed: u64) -> Result<Vec<Vec<u8>>, HarnessError> {
    let dir = tempfile::tempdir().expect("temporary directory");
    let r = run_scenario(cfg, seed, None)?;
    write_runs(cfg, &[r], dir.path())?;
    Ok([
        "setup_times.csv",
        "latencies.csv",
        "link_loads.csv",
        "run.json",
    ]
    .iter()
    .map(|f| std::fs::read(dir.path().join(f)).expect("output file"))
    .collect())
}

fn determinism() -> Result<(bool, String), HarnessError> {
    let mut saturated = load("ct_saturated.scn")?;
    saturated.run.t_end = SimDuration::from_millis(200);
    let cases = [
        ("unloaded_tcp", load("unloaded_tcp.scn")?, 1),
        ("ct_saturated (200 ms)", saturated, 3),
        (
            "zonal_ct @600",
            load("zonal_ct.scn")?.with_param(SweepParam::CtLoad, 600)?,
            2,
        ),
    ];
    let mut differing = Vec::new();
    for (name, cfg, seed) in &cases {
        if output_bytes(cfg, *seed)? != output_bytes(cfg, *seed)? {
            differing.push(*name);
        }
    }
    Ok((
        differing.is_empty(),
        format!(
            "{} scenarios repeated, differing outputs {:?}",
            cases.len(),
            differing
        ),
    ))
}

fn conservation() -> Result<(bool, String), HarnessError> {
    let mut paths: Vec<_> = std::fs::read_dir(scenarios_dir())
        .map_err(|e| HarnessError::Io {
            path: scenarios_dir(),
            message: e.to_string(),
        })?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "scn"))
        .collect();
    paths.sort();
    let mut broken = Vec::new();
    let mut frames = 0;
    for p in &paths {
        let cfg = load_scenario(p)?;
        let r = run_scenario(&cfg, cfg.run.seed, None)?;
        frames += r.conservation.counters.created;
        if !r.conservation.holds() {
            broken.push(cfg.name.clone());
        }
    }
    let loaded = load("zonal_ct.scn")?.with_param(SweepParam::CtLoad, 900)?;
    let r = run_scenario(&loaded, 1, None)?;
    frames += r.conservation.counters.created;
    if !r.conservation.holds() {
        broken.push("zonal_ct @900".into());
    }
    Ok((
        broken.is_empty(),
        format!(
            "{} scenarios plus one loaded variant, {frames} frames accounted; broken {:?}",
            paths.len(),
            broken
        ),
    ))
}

fn message_order() -> Result<(bool, String), HarnessError> {
    let order: Vec<&str> = QosnpKind::SEQUENCE.iter().map(|k| k.as_str()).collect();
    let mut checked = 0;
    let mut bad = Vec::new();
    let mut traced = Vec::new();
    for name in [
        "unloaded_rts.scn",
        "unloaded_tcp.scn",
        "unloaded_udp.scn",
        "negotiation_grid.scn",
    ] {
        traced.push((name.to_string(), load(name)?));
    }
    let zonal = load("zonal_ct.scn")?;
    for load_mbps in [0, 600, 900] {
        traced.push((
            format!("zonal_ct @{load_mbps}"),
            zonal.with_param(SweepParam::CtLoad, load_mbps)?,
        ));
    }
    for (name, cfg) in &traced {
        let (r, trace) = traced_run(cfg, cfg.run.seed)?;
        let mut sends: BTreeMap<u64, Vec<String>> = BTreeMap::new();
        for rec in trace.iter().filter(|r| r["ev"] == "qosnp_send") {
            let id = rec["negotiation"].as_u64().expect("negotiation id");
            let msg = rec["msg"].as_str().expect("message kind").to_string();
            sends.entry(id).or_default().push(msg);
        }
        for n in r.metrics.negotiations.iter().filter(|n| n.succeeded) {
            checked += 1;
            let logged = n.sent == QosnpKind::SEQUENCE;
            let seen = sends.get(&n.negotiation.0).is_some_and(|s| *s == order);
            if !(logged && seen) {
                bad.push(format!("{name}#{}", n.negotiation.0));
            }
        }
    }
    Ok((
        checked > 0 && bad.is_empty(),
        format!(
            "{checked} successful negotiations traced; out of order {:?}",
            bad
        ),
    ))
}

fn property_suites() -> Outcome {
    let parts = [
        ("a", cbs_cap_property()),
        ("b", broker_enumeration()),
        ("c", determinism()?),
        ("d", conservation()?),
        ("e", message_order()?),
    ];
    let pass = parts.iter().all(|p| p.1 .0);
    let detail = parts
        .iter()
        .map(|(k, (p, d))| format!("({k}) [{}] {d}", ok(*p)))
        .collect::<Vec<_>>()
        .join("; ");
    Ok((pass, detail))
}

#[derive(Clone, Copy, Debug)]
struct MicroFrame {
    from_a: bool,
    class_a: bool,
    size: u32,
    at: u64,
}

#[derive(Debug, Default, PartialEq, Eq)]
struct Timeline {
    tx_start: BTreeMap<(usize, String), u64>,
    delivered: BTreeMap<usize, u64>,
}

fn micro_event_driven(frames: &[MicroFrame], idle: u64) -> Result<Timeline, String> {
    let mut t = TopologyDescription::default();
    let a = t.add_node("a", NodeRole::PublisherHost);
    let c = t.add_node("c", NodeRole::CtSource);
    let sw1 = t.add_node("sw1", NodeRole::Switch);
    let sw2 = t.add_node("sw2", NodeRole::Switch);
    let b = t.add_node("b", NodeRole::SubscriberHost);
    t.add_link(a, sw1);
    t.add_link(c, sw1);
    t.add_link(sw1, sw2);
    t.add_link(sw2, b);
    let buf = TraceBuf::default();
    let e = |e: &dyn std::fmt::Display| e.to_string();
    let mut sim = Simulation::new(
        &t,
        &ModelParams::default(),
        1,
        SimTime::from_nanos(10_000_000),
        Some(Box::new(buf.clone())),
    )
    .map_err(|x| e(&x))?;
    let stream = StreamId(7);
    sim.reserve_stream(stream, a, b, idle).map_err(|x| e(&x))?;
    let mut ids = BTreeMap::new();
    for (i, f) in frames.iter().enumerate() {
        let (dst, prio) = if f.class_a {
            (Destination::Stream(stream), Priority::RtsClassA)
        } else {
            (Destination::Unicast(b), Priority::BestEffort)
        };
        let src = if f.from_a { a } else { c };
        let id = sim
            .inject_raw(SimTime::from_nanos(f.at), src, dst, prio, f.size)
            .map_err(|x| e(&x))?;
        ids.insert(id.0, i);
    }
    let out = sim.run().map_err(|x| x.source.to_string())?;
    if !out.conservation.holds() {
        return Err("frame conservation broken".into());
    }
    let mut tl = Timeline::default();
    for rec in buf.records() {
        let Some(&i) = rec["frame"].as_u64().and_then(|id| ids.get(&id)) else {
            continue;
        };
        let at = rec["t"].as_u64().unwrap();
        let node = rec["node"].as_str().unwrap().to_string();
        match rec["ev"].as_str() {
            Some("tx_start") => {
                tl.tx_start.insert((i, node), at);
            }
            Some("deliver") if node == "b" => {
                tl.delivered.insert(i, at);
            }
            _ => {}
        }
    }
    Ok(tl)
}

// Independent timeline calculator: steps every nanosecond, keeps credit
// in bit-nanoseconds per second, and knows the micro topology by heart.
// Ports: 0 = a->sw1, 1 = c->sw1, 2 = sw1->sw2, 3 = sw2->b.
#[derive(Default)]
struct OraclePort {
    shaped: bool,
    credit: i128,
    class_a: VecDeque<usize>,
    best_effort: VecDeque<usize>,
    tx: Option<(usize, u64)>,
    free_at: u64,
}

#[derive(Default)]
struct OracleStats {
    credit_blocked: bool,
    overtaken: bool,
}

fn micro_oracle(frames: &[MicroFrame], idle: u64) -> Option<(Timeline, OracleStats)> {
    const RATE: i128 = 1_000_000_000;
    const GAP: u64 = 160;
    const SWITCH: u64 = 8_000;
    const PORT_NODE: [&str; 4] = ["a", "c", "sw1", "sw2"];
    let mut ports: Vec<OraclePort> = (0..4)
        .map(|p| OraclePort {
            shaped: p != 1,
            ..OraclePort::default()
        })
        .collect();
    // (time, port, frame)
    let mut arrivals: Vec<(u64, usize, usize)> = frames
        .iter()
        .enumerate()
        .map(|(i, f)| (f.at, if f.from_a { 0 } else { 1 }, i))
        .collect();
    let mut tl = Timeline::default();
    let mut stats = OracleStats::default();
    let idle = i128::from(idle);
    let mut t = 0u64;
    while tl.delivered.len() < frames.len() {
        if t > 10_000_000 {
            return None;
        }
        let mut ended = Vec::new();
        for (p, port) in ports.iter_mut().enumerate() {
            if let Some((f, end)) = port.tx {
                if end == t {
                    port.tx = None;
                    if frames[f].class_a && port.class_a.is_empty() && port.credit > 0 {
                        port.credit = 0;
                    }
                    ended.push(p);
                    match p {
                        0 | 1 => arrivals.push((t + SWITCH, 2, f)),
                        2 => arrivals.push((t + SWITCH, 3, f)),
                        _ => {
                            tl.delivered.insert(f, t);
                        }
                    }
                }
            }
        }
        let now: Vec<(u64, usize, usize)> = arrivals.iter().copied().filter(|a| a.0 == t).collect();
        arrivals.retain(|a| a.0 != t);
        for (i, &(_, p, f)) in now.iter().enumerate() {
            // Coincident events on one port have an order the model does
            // not define; such cases are skipped.
            let same_class = now[..i]
                .iter()
                .any(|&(_, q, g)| q == p && frames[g].class_a == frames[f].class_a);
            if same_class || ended.contains(&p) {
                return None;
            }
            if frames[f].class_a {
                ports[p].class_a.push_back(f);
            } else {
                ports[p].best_effort.push_back(f);
            }
        }
        for (p, port) in ports.iter_mut().enumerate() {
            if port.tx.is_some() || t < port.free_at {
                continue;
            }
            let a_ok = !port.class_a.is_empty() && (!port.shaped || port.credit >= 0);
            let pick = if a_ok {
                port.class_a.pop_front()
            } else {
                if !port.class_a.is_empty() {
                    stats.credit_blocked = true;
                    if !port.best_effort.is_empty() {
                        stats.overtaken = true;
                    }
                }
                port.best_effort.pop_front()
            };
            if let Some(f) = pick {
                let end = t + u64::from(frames[f].size) * 8;
                port.tx = Some((f, end));
                port.free_at = end + GAP;
                tl.tx_start.insert((f, PORT_NODE[p].to_string()), t);
            }
        }
        for port in ports.iter_mut().filter(|p| p.shaped) {
            let sending_a = port.tx.is_some_and(|(f, _)| frames[f].class_a);
            port.credit = if sending_a {
                port.credit + idle - RATE
            } else if !port.class_a.is_empty() {
                port.credit + idle
            } else if port.credit < 0 {
                (port.credit + idle).min(0)
            } else {
                0
            };
        }
        t += 1;
    }
    Some((tl, stats))
}

fn micro_case(frames: &[MicroFrame], idle: u64) -> Result<Option<OracleStats>, String> {
    let Some((want, stats)) = micro_oracle(frames, idle) else {
        return Ok(None);
    };
    let got = micro_event_driven(frames, idle)?;
    if got != want {
        return Err(format!(
            "frames {frames:?} idle {idle}: simulator {got:?}, oracle {want:?}"
        ));
    }
    Ok(Some(stats))
}

fn oracle_equivalence() -> (bool, String) {
    let fixed = [
        MicroFrame {
            from_a: true,
            class_a: true,
            size: 1000,
            at: 0,
        },
        MicroFrame {
            from_a: true,
            class_a: false,
            size: 1500,
            at: 100,
        },
        MicroFrame {
            from_a: true,
            class_a: true,
            size: 400,
            at: 200,
        },
    ];
    let fixed_stats = match micro_case(&fixed, 100_000_000) {
        Ok(Some(s)) => s,
        Ok(None) => return (false, "fixed case has coincident events".into()),
        Err(e) => return (false, e),
    };
    let frame = (prop::bool::ANY, prop::bool::ANY, 64u32..=1542, 0u64..40_000).prop_map(
        |(a, ca, size, at)| MicroFrame {
            from_a: a || ca,
            class_a: ca,
            size,
            at,
        },
    );
    let strategy = (prop::collection::vec(frame, 3), 10u64..=750);
    let mut runner = runner(300);
    let compared = RefCell::new((0, 0, 0));
    let res = runner.run(&strategy, |(frames, idle_mbps)| {
        match micro_case(&frames, idle_mbps * 1_000_000) {
            Ok(Some(s)) => {
                let mut c = compared.borrow_mut();
                c.0 += 1;
                c.1 += usize::from(s.credit_blocked);
                c.2 += usize::from(s.overtaken);
                Ok(())
            }
            Ok(None) => Err(TestCaseError::reject("coincident events")),
            Err(e) => Err(TestCaseError::fail(e)),
        }
    });
    let (n, blocked, overtaken) = *compared.borrow();
    match res {
        Ok(()) => (
            fixed_stats.credit_blocked && fixed_stats.overtaken && overtaken > 0,
            format!(
                "fixed case identical (credit wait {}, overtake {}); {n} random cases identical, \
                 {blocked} with credit waits, {overtaken} with best-effort overtaking",
                fixed_stats.credit_blocked, fixed_stats.overtaken
            ),
        ),
        Err(e) => (false, format!("mismatch: {e}")),
    }
}

fn main() -> ExitCode {
    let criteria: [Criterion; 7] = [
        ("rts-bound-safety", rts_bound_safety),
        ("class-independent-negotiation", negotiation_independence),
        ("establishment-ordering", establishment_ordering),
        ("negotiation-scaling", negotiation_scaling),
        ("cross-traffic-sweep", cross_traffic_sweep),
        ("property-suites", property_suites),
        ("oracle-equivalence", || Ok(oracle_equivalence())),
    ];
    // Numeric arguments select criteria; anything else is ignored.
    let only: Vec<usize> = std::env::args()
        .skip(1)
        .filter_map(|a| a.parse().ok())
        .collect();
    let mut failed = 0;
    let mut ran = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        if !only.is_empty() && !only.contains(&(i + 1)) {
            continue;
        }
        ran += 1;
        let start = Instant::now();
        let (pass, detail) = check().unwrap_or_else(|e| (false, format!("error: {e}")));
        if !pass {
            failed += 1;
        }
        println!(
            "criterion {} {name}: {} ({detail}) [{:.1} s]",
            i + 1,
            if pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
        std::io::stdout().flush().ok();
    }
    println!("{} of {ran} criteria passed", ran - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
