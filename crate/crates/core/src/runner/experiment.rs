use std::fs;
use std::io::BufWriter;
use std::path::Path;

use super::presets::{inventory_nodes, realize_links, Architecture, LinkDefaults, UE_NODE};
use super::scenario::Scenario;
use super::RunnerError;
use crate::core5g::{
    instantiate_core, CoreConfig, CoreNetwork, CoreSetup, Outcome, ProcedureResult, RunOutput,
    Step, TransferSpec, UeContext, UeState,
};
use crate::engine::{write_trace, TraceRecord};
use crate::metrics::{
    summarize, write_kpis_csv, write_summary_json, KpiProcedure, KpiRecord, MetricsStore, Summary,
};
use crate::placement::Assignment;
use crate::topology::{build_topology, TopologySpec};
use crate::workload::{arrival_schedule, Direction};

#[derive(Debug, Clone)]
pub struct RunBundle {
    pub scenario: Scenario,
    pub assignment: Assignment,
    /// Raw per-procedure outcomes, including attempt counts.
    pub procedures: Vec<ProcedureResult>,
    pub records: Vec<KpiRecord>,
    pub summaries: Vec<Summary>,
    pub trace: Option<Vec<TraceRecord>>,
}

impl RunBundle {
    pub fn summary(&self, procedure: KpiProcedure) -> Option<&Summary> {
        self.summaries.iter().find(|s| s.procedure == procedure)
    }
}

fn core_config(s: &Scenario) -> CoreConfig {
    CoreConfig {
        processing_ms: s.defaults.processing_ms.clone(),
        registration_timer_ms: s.defaults.registration_timer_ms,
        session_timer_ms: s.defaults.session_timer_ms,
        max_retries: s.defaults.max_retries,
        chunk_bytes: s.defaults.chunk_bytes,
        registration: s.flows.registration.clone(),
        pdu_establishment: s.flows.pdu_establishment.clone(),
        data_path: s.flows.data_path.clone(),
    }
}

/// Topology, NF placement and core configuration for `s`.
pub fn build_setup(s: &Scenario) -> Result<CoreSetup, RunnerError> {
    let (topology, assignment, ue_node) = match (&s.architecture, &s.topology) {
        (Architecture::Custom, Some(spec)) => {
            let topo = build_topology(spec)?;
            let (_, assignment) = instantiate_core(&topo, &s.placement)?;
            let mut shaped = topo;
            for rule in &spec.shaping {
                shaped = shaped.apply_shaping(rule.clone(), &assignment)?;
            }
            let ue = spec.ue_node.clone().expect("validated on load");
            (shaped, assignment, ue)
        }
        _ => {
            let nodes = inventory_nodes(&s.inventory);
            let bare = build_topology(&TopologySpec {
                nodes: nodes.clone(),
                ..Default::default()
            })?;
            let (_, assignment) = instantiate_core(&bare, &s.placement)?;
            let links = realize_links(
                &nodes,
                &assignment,
                UE_NODE,
                &s.latency,
                &LinkDefaults {
                    base_latency_ms: s.defaults.base_latency_ms,
                    radio_ms: s.defaults.radio_ms,
                    bandwidth_bps: s.defaults.bandwidth_bps,
                },
            );
            let topo = build_topology(&TopologySpec {
                nodes,
                links,
                ..Default::default()
            })?;
            (topo, assignment, UE_NODE.to_string())
        }
    };
    Ok(CoreSetup {
        topology: topology.with_loopback_ms(s.defaults.loopback_ms),
        assignment,
        ue_node,
        config: core_config(s),
    })
}

/// Initial state and step list of every UE under the scenario's workload.
fn ue_plan(s: &Scenario) -> (UeState, Vec<Step>) {
    let w = &s.workload;
    let transfer = TransferSpec {
        payload_bytes: w.payload_bytes,
        direction: w.direction,
        server_proc_ms: w.server_proc_ms,
        response_bytes: w.response_bytes,
        stream_rate_bps: w.stream_rate_bps,
        per_chunk_kpi: w.direction == Direction::Down,
    };
    let mut steps = Vec::new();
    let state = if w.includes_registration {
        steps.push(Step::Register);
        UeState::Deregistered
    } else if w.includes_establishment {
        UeState::Registered
    } else {
        UeState::SessionActive
    };
    if w.includes_establishment {
        steps.push(Step::Establish);
    }
    steps.push(Step::Transfer(transfer));
    (state, steps)
}

pub fn run_experiment(s: &Scenario, trace: bool) -> Result<RunBundle, RunnerError> {
    let setup = build_setup(s)?;
    let mut net = CoreNetwork::new(&setup, trace)?;
    let (state, steps) = ue_plan(s);
    for (ue, t) in arrival_schedule(&s.workload, s.seed) {
        net.add_ue(UeContext::new(ue, state), steps.clone(), t)?;
    }
    let out = net.run(s.defaults.horizon_ms);
    let records = kpi_records(s, &out)?;
    let summaries = summarize(&records);
    Ok(RunBundle {
        scenario: s.clone(),
        assignment: setup.assignment,
        procedures: out.results,
        records,
        summaries,
        trace: out.trace,
    })
}

fn kpi_records(s: &Scenario, out: &RunOutput) -> Result<Vec<KpiRecord>, RunnerError> {
    let mut store = MetricsStore::new();
    let base =
        |ue_id: u32, procedure: KpiProcedure, start: f64, end: f64, outcome, messages_sent| {
            KpiRecord {
                scenario: s.name.clone(),
                architecture: s.architecture.as_str().to_string(),
                use_case: s.use_case.as_str().to_string(),
                ue_id,
                procedure,
                start,
                end,
                outcome,
                messages_sent,
            }
        };
    for r in &out.results {
        store.record(base(
            r.ue_id,
            r.procedure.into(),
            r.start,
            r.end,
            r.outcome,
            r.messages_sent,
        ))?;
    }
    for e in &out.end_to_end {
        store.record(base(
            e.ue_id,
            KpiProcedure::EndToEnd,
            e.start,
            e.end,
            e.outcome,
            e.messages_sent,
        ))?;
    }
    for c in &out.chunks {
        store.record(base(
            c.ue_id,
            KpiProcedure::EndToEnd,
            c.start,
            c.end,
            Outcome::Success,
            u64::from(c.hops),
        ))?;
    }
    Ok(store.into_records())
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> RunnerError {
    RunnerError::Io(format!("{}: {e}", path.display()))
}

/// Writes scenario.json, kpis.csv, summary.json and, when traced,
/// trace.jsonl into `dir`.
pub fn write_bundle(b: &RunBundle, dir: &Path) -> Result<(), RunnerError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let p = dir.join("scenario.json");
    fs::write(&p, b.scenario.to_json()).map_err(|e| io_err(&p, e))?;

    let p = dir.join("kpis.csv");
    let f = fs::File::create(&p).map_err(|e| io_err(&p, e))?;
    write_kpis_csv(&b.records, BufWriter::new(f))?;

    let p = dir.join("summary.json");
    let f = fs::File::create(&p).map_err(|e| io_err(&p, e))?;
    write_summary_json(&b.summaries, BufWriter::new(f))?;

    if let Some(trace) = &b.trace {
        let p = dir.join("trace.jsonl");
        let f = fs::File::create(&p).map_err(|e| io_err(&p, e))?;
        write_trace(trace, BufWriter::new(f)).map_err(|e| io_err(&p, e))?;
    }
    Ok(())
}
