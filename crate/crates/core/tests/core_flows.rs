use edgesim::core5g::{
    registration_flow, run_data_transfer, run_pdu_establishment, run_registration, CoreError,
    CoreNetwork, CoreSetup, NfKind, Outcome, Procedure, Step, UeContext, UeState,
};
use edgesim::metrics::KpiProcedure;
use edgesim::runner::{build_setup, parse_scenario, run_experiment, RunnerError};
use edgesim::workload::Direction;

fn setup(json: &str) -> CoreSetup {
    build_setup(&parse_scenario(json).unwrap()).unwrap()
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

#[test]
fn unreachable_core_times_out_after_three_attempts() {
    let s = setup(
        r#"{"architecture":"accessopt","use_case":"iiot","seed":1,"latency":{"dc_cloudlet":150}}"#,
    );
    let mut ue = UeContext::new(0, UeState::Deregistered);
    let r = run_registration(&s, &mut ue).unwrap();
    assert_eq!(r.outcome, Outcome::Timeout);
    assert_eq!(r.attempts, 3);
    assert_eq!(r.messages_sent, 3 * registration_flow().legs.len() as u64);
    assert!(close(r.duration(), 3000.0));
    assert_eq!(ue.state, UeState::Failed);
    assert_eq!(ue.attempts_used, 3);
}

#[test]
fn late_attempt_still_sends_its_remaining_legs() {
    let s = setup(
        r#"{"architecture":"baseline","use_case":"iiot","seed":1,
            "defaults":{"registration_timer_ms":50,"max_retries":0}}"#,
    );
    let r = run_registration(&s, &mut UeContext::new(0, UeState::Deregistered)).unwrap();
    assert_eq!(r.outcome, Outcome::Timeout);
    assert_eq!(r.attempts, 1);
    assert!(close(r.duration(), 50.0));
    assert_eq!(r.messages_sent, 18);
}

#[test]
fn procedures_require_the_right_state() {
    let s = setup(r#"{"architecture":"baseline","use_case":"iiot","seed":1}"#);
    let mut ue = UeContext::new(3, UeState::Deregistered);
    assert!(matches!(
        run_pdu_establishment(&s, &mut ue),
        Err(CoreError::InvalidState { ue: 3, .. })
    ));
    assert!(run_data_transfer(&s, &mut ue, 10, Direction::Up, 0.0).is_err());
    run_registration(&s, &mut ue).unwrap();
    assert_eq!(ue.state, UeState::Registered);
    run_pdu_establishment(&s, &mut ue).unwrap();
    assert_eq!(ue.state, UeState::SessionActive);
}

#[test]
fn empty_uplink_takes_the_path_latency() {
    let s = setup(r#"{"architecture":"baseline","use_case":"iiot","seed":1}"#);
    let mut ue = UeContext::new(0, UeState::SessionActive);
    let r = run_data_transfer(&s, &mut ue, 0, Direction::Up, 0.0).unwrap();
    // radio 2 + N3 13 + N6 0.5
    assert!(close(r.duration(), 15.5), "{}", r.duration());
    assert_eq!(r.messages_sent, 3);
}

#[test]
fn upload_then_response_matches_pipeline_arithmetic() {
    let s = setup(r#"{"architecture":"baseline","use_case":"iiot","seed":1}"#);
    let mut ue = UeContext::new(0, UeState::SessionActive);
    let r = run_data_transfer(&s, &mut ue, 640_000, Direction::Updown, 1.0).unwrap();
    let ser = |b: f64| b * 8.0 / 1e9 * 1000.0;
    // store and forward: at every hop after the first the 1000 B tail waits
    // for the full chunk ahead of it, so the pipeline drains after 428 full
    // serializations plus one of the tail
    let upload = 428.0 * ser(1500.0) + ser(1000.0) + 15.5;
    let expected = upload + 1.0 + 15.5 + 3.0 * ser(1500.0);
    assert!(
        close(r.duration(), expected),
        "{} vs {expected}",
        r.duration()
    );
    assert_eq!(r.messages_sent, 3 * 427 + 3);
}

#[test]
fn nf_processing_queues_concurrent_ues() {
    let mut s = setup(r#"{"architecture":"baseline","use_case":"iiot","seed":1}"#);
    s.config.processing_ms.insert(NfKind::Amf, 1.0);
    let mut net = CoreNetwork::new(&s, false).unwrap();
    for id in 0..2 {
        net.add_ue(
            UeContext::new(id, UeState::Deregistered),
            vec![Step::Register],
            0.0,
        )
        .unwrap();
    }
    let out = net.run(None);
    let a = out.result(0, Procedure::Registration).unwrap().duration();
    let b = out.result(1, Procedure::Registration).unwrap().duration();
    // seven legs end at the AMF; the second UE waits behind the first each time
    assert!(close(a, 79.0 + 7.0));
    assert!(b > a);
}

#[test]
fn duplicate_ue_rejected() {
    let s = setup(r#"{"architecture":"baseline","use_case":"iiot","seed":1}"#);
    let mut net = CoreNetwork::new(&s, false).unwrap();
    net.add_ue(
        UeContext::new(0, UeState::Deregistered),
        vec![Step::Register],
        0.0,
    )
    .unwrap();
    assert!(net
        .add_ue(
            UeContext::new(0, UeState::Deregistered),
            vec![Step::Register],
            0.0
        )
        .is_err());
}

#[test]
fn failed_registration_skips_the_rest_of_the_workload() {
    let s = parse_scenario(
        r#"{"architecture":"accessopt","use_case":"miot","seed":3,"workload":{"n_ues":5},"latency":{"dc_cloudlet":150}}"#,
    )
    .unwrap();
    let b = run_experiment(&s, false).unwrap();
    assert!(b.summary(KpiProcedure::PduEstablishment).is_none());
    let e2e = b.summary(KpiProcedure::EndToEnd).unwrap();
    assert_eq!(e2e.success_rate, 0.0);
    assert_eq!(
        b.summary(KpiProcedure::Registration).unwrap().success_rate,
        0.0
    );
}

#[test]
fn horizon_abandons_work_in_flight() {
    let s = parse_scenario(
        r#"{"architecture":"baseline","use_case":"miot","seed":3,"defaults":{"horizon_ms":400}}"#,
    )
    .unwrap();
    let b = run_experiment(&s, false).unwrap();
    assert!(b.records.iter().any(|r| r.outcome == Outcome::Abandoned));
    assert!(b.records.iter().all(|r| r.end <= 400.0));
    // UEs that had not arrived yet produce nothing
    assert!(b.summary(KpiProcedure::EndToEnd).unwrap().n < 50);
}

#[test]
fn downlink_without_pacing_reports_chunks() {
    let s = parse_scenario(
        r#"{"architecture":"latopt","use_case":"ar","seed":1,
            "workload":{"n_ues":1,"payload_bytes":15000}}"#,
    )
    .unwrap();
    let b = run_experiment(&s, false).unwrap();
    let e2e = b.summary(KpiProcedure::EndToEnd).unwrap();
    assert_eq!(e2e.n, 10);
    assert!(close(e2e.p50_ms, 4.036));
}

const CUSTOM: &str = r#"{
  "architecture": "custom", "use_case": "iiot", "seed": 1,
  "workload": {"n_ues": 1},
  "topology": {
    "ue_node": "phone",
    "nodes": [
      {"name": "phone", "kind": "ran", "cpu_millicores": 1000, "mem_mb": 1024},
      {"name": "site", "kind": "edge", "cpu_millicores": 8000, "mem_mb": 16384},
      {"name": "cloud", "kind": "datacenter", "cpu_millicores": 8000, "mem_mb": 16384}
    ],
    "links": [
      {"src": "phone", "dst": "site", "name": "RADIO", "base_latency_ms": 2.0, "bidirectional": true},
      {"src": "site", "dst": "cloud", "additional_latency_ms": 5.0, "bidirectional": true}
    ],
    "shaping": [SHAPING]
  },
  "placement": {
    "amf": {"pin": "cloud", "cpu_millicores": 500, "mem_mb": 512},
    "smf": {"pin": "cloud", "cpu_millicores": 500, "mem_mb": 512},
    "dccore": {"pin": "cloud", "cpu_millicores": 500, "mem_mb": 512},
    "upf": {"pin": "site", "cpu_millicores": 500, "mem_mb": 512},
    "gnb": {"pin": "site", "cpu_millicores": 500, "mem_mb": 512},
    "dn": {"pin": "site", "cpu_millicores": 500, "mem_mb": 512}
  }
}"#;

#[test]
fn custom_topology_with_shaping() {
    let pdu = |shaping: &str| {
        let s = parse_scenario(&CUSTOM.replace("SHAPING", shaping)).unwrap();
        let b = run_experiment(&s, false).unwrap();
        b.summary(KpiProcedure::PduEstablishment).unwrap().mean_ms
    };
    let plain = pdu("");
    // radio 3 x 2; gNB<->AMF 3 x 5.5; AMF/SMF/DC loopback 5 x 0.05; SMF<->UPF 4 x 5.5
    assert!(close(plain, 6.0 + 16.5 + 0.25 + 22.0), "{plain}");
    let shaped = pdu(r#"{"owner": "smf", "dst": {"node": "site"}, "delay_ms": 10}"#);
    // shaping acts on the owner's node, so AMF->gNB pays too: two N4 legs and one N2
    assert!(close(shaped - plain, 30.0), "{shaped}");
}

#[test]
fn custom_topology_errors_propagate() {
    let bad = CUSTOM.replace("SHAPING", "").replace(
        r#""pin": "site", "cpu_millicores": 500"#,
        r#""pin": "nowhere", "cpu_millicores": 500"#,
    );
    let s = parse_scenario(&bad).unwrap();
    assert!(matches!(
        run_experiment(&s, false),
        Err(RunnerError::Core(CoreError::Placement(_)))
    ));
}
