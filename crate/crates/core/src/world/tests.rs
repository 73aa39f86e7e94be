use super::*;
use std::cell::RefCell;
use std::rc::Rc;

use proptest::prelude::*;

use crate::net::GIGABIT;
use crate::protocols::{EndpointRole, QosClass};
use crate::scenario::{
    build_simple_network, compute_avb_latency_bound, CtMode, ModelParams, SimpleOptions,
};
use crate::sim::SimDuration;

fn run_simple(class: QosClass, t_end_ms: u64) -> RunOutput {
    let opts = SimpleOptions {
        class,
        ..SimpleOptions::default()
    };
    let topo = build_simple_network(1, 1, 1, None, &opts).unwrap();
    simulate(&topo, &ModelParams::default(), t_end_ms)
        .run()
        .unwrap()
}

fn simulate(topo: &TopologyDescription, model: &ModelParams, t_end_ms: u64) -> Simulation {
    let t_end = SimTime::ZERO + SimDuration::from_millis(t_end_ms);
    Simulation::new(topo, model, 1, t_end, None).unwrap()
}

/// Runs to the end but keeps the world around for inspection.
fn run_kept(topo: &TopologyDescription, model: &ModelParams, t_end_ms: u64) -> Simulation {
    let mut sim = simulate(topo, model, t_end_ms);
    let t_end = sim.world.t_end;
    sim.engine.run_until(t_end, &mut sim.world).unwrap();
    sim
}

fn statuses(sim: &Simulation) -> Vec<SetupStatus> {
    sim.world.metrics.setups.iter().map(|s| s.status).collect()
}

fn setup(out: &RunOutput) -> &SetupOutcome {
    &out.metrics.setups[0]
}

#[test]
fn unloaded_udp_timeline() {
    let out = run_simple(QosClass::IpsUdp, 5);
    let s = setup(&out);
    assert_eq!(s.status, SetupStatus::Connected);
    assert_eq!(s.request_emitted.unwrap().as_nanos(), 20);
    assert_eq!(s.details_received.unwrap().as_nanos(), 70_224);
    assert_eq!(s.connected.unwrap().as_nanos(), 70_244);
    assert!(out.conservation.holds());
}

#[test]
fn unloaded_tcp_and_rts_timelines() {
    let tcp = run_simple(QosClass::IpsTcp, 5);
    let rts = run_simple(QosClass::Rts, 5);
    let t = setup(&tcp).connected.unwrap().as_nanos();
    let r = setup(&rts).connected.unwrap().as_nanos();
    assert_eq!(setup(&tcp).status, SetupStatus::Connected);
    assert_eq!(setup(&rts).status, SetupStatus::Connected);
    assert!(r > 70_244 && t > r);
}

#[test]
fn provider_endpoint_is_shared() {
    let topo = build_simple_network(1, 2, 2, None, &SimpleOptions::default()).unwrap();
    let sim = run_kept(&topo, &ModelParams::default(), 2);
    assert_eq!(statuses(&sim), vec![SetupStatus::Connected; 4]);
    assert_eq!(sim.world.endpoints.count(EndpointRole::Provider), 1);
    let mut heard: Vec<u32> = sim
        .world
        .metrics
        .latencies
        .iter()
        .map(|l| l.subscription)
        .collect();
    heard.sort_unstable();
    heard.dedup();
    assert_eq!(heard, vec![0, 1, 2, 3]);
    assert_eq!(sim.world.metrics.counters.unconsumed_data, 0);
}

#[test]
fn admission_refuses_oversubscription() {
    let opts = SimpleOptions {
        class: QosClass::Rts,
        rts_frame_bytes: 1542,
        cycle_time: SimDuration::from_micros(30),
        ..SimpleOptions::default()
    };
    let topo = build_simple_network(2, 1, 1, None, &opts).unwrap();
    let sim = run_kept(&topo, &ModelParams::default(), 2);
    let st = statuses(&sim);
    assert_eq!(
        st.iter().filter(|s| **s == SetupStatus::Connected).count(),
        1
    );
    assert_eq!(st.iter().filter(|s| **s == SetupStatus::Failed).count(), 1);
    assert_eq!(sim.world.reservations.len(), 1);
    for p in sim.world.net.ports().map(|(id, _)| id) {
        assert!(sim.world.admission.used(p) <= sim.world.admission.budget(GIGABIT));
    }
}

#[test]
fn endpoint_cap_rejects_request() {
    let model = ModelParams {
        endpoint_cap: Some(1),
        ..ModelParams::default()
    };
    // Simultaneous requests are both accepted; the cap bites at creation.
    let topo = build_simple_network(2, 1, 1, None, &SimpleOptions::default()).unwrap();
    let sim = run_kept(&topo, &model, 2);
    assert_eq!(
        statuses(&sim),
        vec![SetupStatus::Connected, SetupStatus::Failed]
    );
    assert_eq!(sim.world.endpoints.count(EndpointRole::Provider), 1);

    // A later request is refused outright.
    let mut topo = topo;
    topo.subscriptions[1].start_at = SimTime::from_nanos(1_000_000);
    let out = simulate(&topo, &model, 2).run().unwrap();
    assert_eq!(out.metrics.setups[1].status, SetupStatus::Failed);
    let sent = &out.metrics.negotiations[1].sent;
    assert_eq!(sent, &[QosnpKind::QosRequest, QosnpKind::QosResponse]);
}

#[test]
fn unknown_service_and_reserved_class_fail() {
    let mut topo = build_simple_network(1, 1, 1, None, &SimpleOptions::default()).unwrap();
    let mut bad = topo.subscriptions[0].clone();
    bad.request.service_id = ServiceId(99);
    topo.subscriptions.push(bad);
    let mut srts = topo.subscriptions[0].clone();
    srts.request.required_class = QosClass::Srts;
    topo.subscriptions.push(srts);
    let out = simulate(&topo, &ModelParams::default(), 2).run().unwrap();
    let s = &out.metrics.setups;
    assert_eq!(s[0].status, SetupStatus::Connected);
    assert_eq!(s[1].status, SetupStatus::Failed);
    assert!(s[1].negotiation.is_none() && s[1].reason.is_some());
    assert_eq!(s[2].status, SetupStatus::Failed);
    assert!(out.conservation.holds());
}

#[test]
fn short_timeout_fails_and_late_messages_are_stale() {
    let model = ModelParams {
        negotiation_timeout: SimDuration::from_micros(10),
        ..ModelParams::default()
    };
    let topo = build_simple_network(1, 1, 1, None, &SimpleOptions::default()).unwrap();
    let out = simulate(&topo, &model, 2).run().unwrap();
    let s = &out.metrics.setups[0];
    assert_eq!(s.status, SetupStatus::Failed);
    assert!(s.connected.is_none());
    assert!(out.metrics.counters.stale_messages > 0);
    assert!(out.metrics.latencies.is_empty());
    assert!(out.conservation.holds());
}

#[test]
fn conservation_under_cross_traffic() {
    let ct = CtMode::TargetLoad(900_000_000);
    let topo = build_simple_network(2, 3, 2, Some(ct), &SimpleOptions::default()).unwrap();
    let out = simulate(&topo, &ModelParams::default(), 20).run().unwrap();
    assert!(out.conservation.holds());
    assert!(out.conservation.counters.delivered > 0);
    assert!(out
        .metrics
        .setups
        .iter()
        .all(|s| s.status == SetupStatus::Connected));
}

#[derive(Clone, Default)]
struct SharedBuf(Rc<RefCell<Vec<u8>>>);

impl std::io::Write for SharedBuf {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        self.0.borrow_mut().extend_from_slice(buf);
        Ok(buf.len())
    }

    fn flush(&mut self) -> std::io::Result<()> {
        Ok(())
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

    #[test]
    fn random_simple_runs_keep_invariants(
        pubs in 1i64..=3,
        subs in 1i64..=3,
        per in 1i64..=2,
        class in prop::sample::select(QosClass::CONNECTABLE.to_vec()),
        ct_mbps in prop::option::of(0u64..=950),
        seed in 0u64..1_000,
    ) {
        let opts = SimpleOptions { class, ..SimpleOptions::default() };
        let ct = ct_mbps.map(|m| CtMode::TargetLoad(m * 1_000_000));
        let topo = build_simple_network(pubs, subs, per, ct, &opts).unwrap();
        let model = ModelParams::default();
        let buf = SharedBuf::default();
        let t_end = SimTime::ZERO + SimDuration::from_millis(5);
        let sim = Simulation::new(&topo, &model, seed, t_end, Some(Box::new(buf.clone()))).unwrap();
        let out = sim.run().unwrap();

        prop_assert!(out.conservation.holds());
        prop_assert_eq!(out.metrics.open_brokers, 0);
        for s in &out.metrics.setups {
            prop_assert_eq!(s.status, SetupStatus::Connected);
            let parts = s.bookkeeping().unwrap() + s.negotiation_time().unwrap() + s.establishment().unwrap();
            prop_assert_eq!(parts, s.setup_time().unwrap());
        }
        for n in &out.metrics.negotiations {
            prop_assert_eq!(n.succeeded, n.sent == QosnpKind::SEQUENCE);
            prop_assert!(QosnpKind::SEQUENCE.starts_with(&n.sent));
        }
        for l in &out.metrics.latencies {
            let sub = &topo.subscriptions[l.subscription as usize];
            prop_assert_eq!(l.service, sub.request.service_id);
            let connected = out.metrics.setups[l.subscription as usize].connected.unwrap();
            prop_assert!(l.delivered >= connected);
        }
        if class == QosClass::Rts && pubs == 1 {
            let bound = compute_avb_latency_bound(&topo, StreamId(0), &model).unwrap();
            for l in &out.metrics.latencies {
                prop_assert!(l.latency() <= bound);
            }
        }
        let text = buf.0.borrow();
        let mut last = 0;
        for line in text.split(|b| *b == b'\n').filter(|l| !l.is_empty()) {
            let v: serde_json::Value = serde_json::from_slice(line).unwrap();
            let t = v["t"].as_u64().unwrap();
            prop_assert!(t >= last);
            last = t;
        }
    }
}

#[test]
fn target_load_is_realized_within_two_percent() {
    let ct = CtMode::TargetLoad(600_000_000);
    let topo = build_simple_network(0, 1, 1, Some(ct), &SimpleOptions::default()).unwrap();
    let out = simulate(&topo, &ModelParams::default(), 1_000)
        .run()
        .unwrap();
    let src = out
        .metrics
        .links
        .iter()
        .find(|l| l.from == "ct_src")
        .unwrap();
    let load = src.tx_bits as f64;
    assert!((load - 6e8).abs() <= 0.02 * 6e8, "realized {load} bit/s");
}
