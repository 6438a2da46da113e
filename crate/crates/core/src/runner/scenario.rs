//! Scenario files: strict JSON in, fully resolved [`Scenario`] out.
//!
//! Every section except `architecture`, `use_case` and `seed` is optional and
//! falls back to the preset or use-case defaults. The resolved scenario
//! serializes back into a file that loads to the same value.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::presets::{preset, preset_placement, Architecture, Inventory, LatencyProfile};
use super::RunnerError;
use crate::core5g::{
    data_path_flow, pdu_establishment_flow, registration_flow, FlowTable, NfKind, PlacementRule,
    Procedure,
};
use crate::topology::TopologySpec;
use crate::workload::{Direction, UseCaseKind, UseCaseSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Defaults {
    pub radio_ms: f64,
    pub base_latency_ms: f64,
    pub loopback_ms: f64,
    pub bandwidth_bps: f64,
    pub processing_ms: BTreeMap<NfKind, f64>,
    pub registration_timer_ms: f64,
    pub session_timer_ms: f64,
    pub max_retries: u32,
    pub chunk_bytes: u64,
    /// Size of every signaling message.
    pub control_msg_bytes: u64,
    /// Stop the simulation here; runs still in flight are abandoned.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon_ms: Option<f64>,
}

impl Defaults {
    pub fn for_use_case(kind: UseCaseKind) -> Self {
        let processing_ms = match kind {
            UseCaseKind::Miot => BTreeMap::from([(NfKind::Amf, 0.5), (NfKind::Smf, 0.5)]),
            _ => BTreeMap::new(),
        };
        Self {
            radio_ms: 2.0,
            base_latency_ms: crate::topology::BASE_LATENCY_MS,
            loopback_ms: crate::topology::LOOPBACK_MS,
            bandwidth_bps: crate::topology::DEFAULT_BANDWIDTH_BPS,
            processing_ms,
            registration_timer_ms: 1000.0,
            session_timer_ms: 1000.0,
            max_retries: 2,
            chunk_bytes: crate::core5g::DEFAULT_CHUNK_BYTES,
            control_msg_bytes: 0,
            horizon_ms: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flows {
    pub registration: FlowTable,
    pub pdu_establishment: FlowTable,
    pub data_path: FlowTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub architecture: Architecture,
    pub use_case: UseCaseKind,
    pub seed: u64,
    pub latency: LatencyProfile,
    pub workload: UseCaseSpec,
    pub defaults: Defaults,
    pub inventory: Inventory,
    pub placement: BTreeMap<NfKind, PlacementRule>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub topology: Option<TopologySpec>,
    pub flows: Flows,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct LatencyFile {
    n2: Option<f64>,
    n3: Option<f64>,
    n4: Option<f64>,
    n6: Option<f64>,
    dc_cloudlet: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct WorkloadFile {
    kind: Option<UseCaseKind>,
    n_ues: Option<u32>,
    payload_bytes: Option<u64>,
    direction: Option<Direction>,
    includes_registration: Option<bool>,
    includes_establishment: Option<bool>,
    arrival_window_ms: Option<f64>,
    stream_rate_bps: Option<f64>,
    server_proc_ms: Option<f64>,
    response_bytes: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct DefaultsFile {
    radio_ms: Option<f64>,
    base_latency_ms: Option<f64>,
    loopback_ms: Option<f64>,
    bandwidth_bps: Option<f64>,
    processing_ms: Option<BTreeMap<NfKind, f64>>,
    registration_timer_ms: Option<f64>,
    session_timer_ms: Option<f64>,
    max_retries: Option<u32>,
    chunk_bytes: Option<u64>,
    control_msg_bytes: Option<u64>,
    horizon_ms: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct InventoryFile {
    datacenters: Option<u32>,
    cloudlets: Option<u32>,
    edges: Option<u32>,
    cpu_millicores: Option<u32>,
    mem_mb: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FlowsFile {
    registration: Option<FlowTable>,
    pdu_establishment: Option<FlowTable>,
    data_path: Option<FlowTable>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    name: Option<String>,
    architecture: Architecture,
    use_case: UseCaseKind,
    seed: u64,
    #[serde(default)]
    latency: LatencyFile,
    #[serde(default)]
    workload: WorkloadFile,
    #[serde(default)]
    defaults: DefaultsFile,
    #[serde(default)]
    inventory: InventoryFile,
    #[serde(default)]
    placement: BTreeMap<NfKind, PlacementRule>,
    topology: Option<TopologySpec>,
    #[serde(default)]
    flows: FlowsFile,
    output: Option<String>,
}

fn invalid(path: impl Into<String>, reason: impl Into<String>) -> RunnerError {
    RunnerError::Invalid {
        path: path.into(),
        reason: reason.into(),
    }
}

fn non_negative(path: &str, v: f64) -> Result<(), RunnerError> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be a finite value >= 0"))
    }
}

fn positive(path: &str, v: f64) -> Result<(), RunnerError> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(path, "must be a finite value > 0"))
    }
}

pub fn load_scenario(path: &Path) -> Result<Scenario, RunnerError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| RunnerError::Io(format!("{}: {e}", path.display())))?;
    parse_scenario(&text)
}

pub fn parse_scenario(text: &str) -> Result<Scenario, RunnerError> {
    let file: ScenarioFile =
        serde_json::from_str(text).map_err(|e| RunnerError::Parse(e.to_string()))?;
    resolve(file)
}

pub fn scenario_from_value(value: serde_json::Value) -> Result<Scenario, RunnerError> {
    let file: ScenarioFile =
        serde_json::from_value(value).map_err(|e| RunnerError::Parse(e.to_string()))?;
    resolve(file)
}

fn resolve(f: ScenarioFile) -> Result<Scenario, RunnerError> {
    let arch = f.architecture;
    let base = preset(arch)
        .map(|p| p.latency)
        .unwrap_or(LatencyProfile::ZERO);
    let latency = LatencyProfile {
        n2: f.latency.n2.unwrap_or(base.n2),
        n3: f.latency.n3.unwrap_or(base.n3),
        n4: f.latency.n4.unwrap_or(base.n4),
        n6: f.latency.n6.unwrap_or(base.n6),
        dc_cloudlet: f.latency.dc_cloudlet.unwrap_or(base.dc_cloudlet),
    };
    for (name, v) in latency.fields() {
        non_negative(&format!("latency.{name}"), v)?;
    }

    let w = f.workload;
    if let Some(kind) = w.kind {
        if kind != f.use_case {
            return Err(invalid(
                "workload.kind",
                format!("must match use_case `{}`", f.use_case),
            ));
        }
    }
    let mut workload = f.use_case.spec();
    macro_rules! take {
        ($src:ident => $dst:ident: $($field:ident),*) => {
            $(if let Some(v) = $src.$field { $dst.$field = v; })*
        };
    }
    take!(
        w => workload:
        n_ues,
        payload_bytes,
        direction,
        includes_registration,
        includes_establishment,
        arrival_window_ms,
        server_proc_ms,
        response_bytes
    );
    if let Some(rate) = w.stream_rate_bps {
        workload.stream_rate_bps = Some(rate);
    }
    workload
        .validate()
        .map_err(|(field, reason)| invalid(format!("workload.{field}"), reason))?;

    let d = f.defaults;
    let mut defaults = Defaults::for_use_case(f.use_case);
    take!(
        d => defaults:
        radio_ms,
        base_latency_ms,
        loopback_ms,
        bandwidth_bps,
        processing_ms,
        registration_timer_ms,
        session_timer_ms,
        max_retries,
        chunk_bytes,
        control_msg_bytes
    );
    defaults.horizon_ms = d.horizon_ms;
    non_negative("defaults.radio_ms", defaults.radio_ms)?;
    non_negative("defaults.base_latency_ms", defaults.base_latency_ms)?;
    non_negative("defaults.loopback_ms", defaults.loopback_ms)?;
    positive("defaults.bandwidth_bps", defaults.bandwidth_bps)?;
    for (nf, v) in &defaults.processing_ms {
        non_negative(&format!("defaults.processing_ms.{nf}"), *v)?;
    }
    positive(
        "defaults.registration_timer_ms",
        defaults.registration_timer_ms,
    )?;
    positive("defaults.session_timer_ms", defaults.session_timer_ms)?;
    if defaults.chunk_bytes == 0 {
        return Err(invalid("defaults.chunk_bytes", "must be > 0"));
    }
    if let Some(h) = defaults.horizon_ms {
        positive("defaults.horizon_ms", h)?;
    }

    let i = f.inventory;
    let mut inventory = Inventory::default();
    take!(i => inventory: datacenters, cloudlets, edges, cpu_millicores, mem_mb);
    for (name, v) in [
        ("datacenters", inventory.datacenters),
        ("cloudlets", inventory.cloudlets),
        ("edges", inventory.edges),
        ("cpu_millicores", inventory.cpu_millicores),
        ("mem_mb", inventory.mem_mb),
    ] {
        if v == 0 {
            return Err(invalid(format!("inventory.{name}"), "must be > 0"));
        }
    }

    let placement = match arch {
        Architecture::Custom => {
            let topo = f
                .topology
                .as_ref()
                .ok_or_else(|| invalid("topology", "required for a custom architecture"))?;
            if topo.ue_node.is_none() {
                return Err(invalid(
                    "topology.ue_node",
                    "required for a custom architecture",
                ));
            }
            for nf in NfKind::DEPLOYED {
                if !f.placement.contains_key(&nf) {
                    return Err(invalid(
                        format!("placement.{nf}"),
                        "every network function needs a rule in a custom architecture",
                    ));
                }
            }
            f.placement
        }
        _ => {
            if f.topology.is_some() {
                return Err(invalid(
                    "topology",
                    "only allowed with architecture `custom`",
                ));
            }
            let mut p = preset_placement(arch, &inventory);
            p.extend(f.placement);
            p
        }
    };
    if placement.contains_key(&NfKind::Ue) {
        return Err(invalid(
            "placement.ue",
            "UEs are not placed by the scheduler",
        ));
    }

    let flows = Flows {
        registration: f
            .flows
            .registration
            .unwrap_or_else(|| registration_flow().with_bytes(defaults.control_msg_bytes)),
        pdu_establishment: f
            .flows
            .pdu_establishment
            .unwrap_or_else(|| pdu_establishment_flow().with_bytes(defaults.control_msg_bytes)),
        data_path: f.flows.data_path.unwrap_or_else(data_path_flow),
    };
    for (name, table, expected) in [
        ("registration", &flows.registration, Procedure::Registration),
        (
            "pdu_establishment",
            &flows.pdu_establishment,
            Procedure::PduEstablishment,
        ),
        ("data_path", &flows.data_path, Procedure::DataTransfer),
    ] {
        if table.procedure != expected {
            return Err(invalid(
                format!("flows.{name}.procedure"),
                format!("must be `{}`", expected.as_str()),
            ));
        }
        table
            .validate()
            .map_err(|e| invalid(format!("flows.{name}"), e.to_string()))?;
    }

    let name = f
        .name
        .unwrap_or_else(|| format!("{}-{}-s{}", arch, f.use_case, f.seed));
    Ok(Scenario {
        name,
        architecture: arch,
        use_case: f.use_case,
        seed: f.seed,
        latency,
        workload,
        defaults,
        inventory,
        placement,
        topology: f.topology,
        flows,
        output: f.output,
    })
}

impl Scenario {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scenario serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn latopt_ar_gets_preset_latencies() {
        let s = parse_scenario(r#"{"architecture":"latopt","use_case":"ar","seed":42}"#).unwrap();
        assert_eq!(s.latency, preset(Architecture::LatOpt).unwrap().latency);
        assert_eq!(s.workload.n_ues, 3);
        assert_eq!(s.seed, 42);
        assert_eq!(s.name, "latopt-ar-s42");
        assert_eq!(s.placement[&NfKind::Upf].pin.as_deref(), Some("edge-0"));
    }

    #[test]
    fn unknown_key_is_named() {
        let err =
            parse_scenario(r#"{"archtecture":"latopt","use_case":"ar","seed":42}"#).unwrap_err();
        assert!(
            matches!(&err, RunnerError::Parse(m) if m.contains("archtecture")),
            "{err}"
        );
        let err = parse_scenario(
            r#"{"architecture":"latopt","use_case":"ar","seed":1,"latency":{"n7":1}}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("n7"));
    }

    #[test]
    fn missing_seed_rejected() {
        let err = parse_scenario(r#"{"architecture":"baseline","use_case":"miot"}"#).unwrap_err();
        assert!(err.to_string().contains("seed"));
    }

    #[test]
    fn invalid_values_report_field_path() {
        let err = parse_scenario(
            r#"{"architecture":"baseline","use_case":"miot","seed":1,"latency":{"dc_cloudlet":-1}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, RunnerError::Invalid { ref path, .. } if path == "latency.dc_cloudlet")
        );
        let err = parse_scenario(
            r#"{"architecture":"baseline","use_case":"miot","seed":1,"workload":{"n_ues":0}}"#,
        )
        .unwrap_err();
        assert!(matches!(err, RunnerError::Invalid { ref path, .. } if path == "workload.n_ues"));
        let err = parse_scenario(
            r#"{"architecture":"baseline","use_case":"miot","seed":1,"defaults":{"processing_ms":{"amf":-0.5}}}"#,
        )
        .unwrap_err();
        assert!(
            matches!(err, RunnerError::Invalid { ref path, .. } if path == "defaults.processing_ms.amf")
        );
    }

    #[test]
    fn custom_needs_topology() {
        let err =
            parse_scenario(r#"{"architecture":"custom","use_case":"ar","seed":1}"#).unwrap_err();
        assert!(matches!(err, RunnerError::Invalid { ref path, .. } if path == "topology"));
    }

    #[test]
    fn overrides_apply() {
        let s = parse_scenario(
            r#"{"architecture":"accessopt","use_case":"miot","seed":7,
                "latency":{"dc_cloudlet":150},
                "workload":{"n_ues":5},
                "defaults":{"control_msg_bytes":512,"max_retries":0}}"#,
        )
        .unwrap();
        assert_eq!(s.latency.dc_cloudlet, 150.0);
        assert_eq!(s.latency.n2, 3.5);
        assert_eq!(s.workload.n_ues, 5);
        assert_eq!(s.defaults.max_retries, 0);
        assert!(s.flows.registration.legs.iter().all(|l| l.bytes == 512));
        assert_eq!(s.defaults.processing_ms[&NfKind::Amf], 0.5);
    }

    #[test]
    fn resolved_echo_reloads_identically() {
        for arch in ["baseline", "latopt", "accessopt"] {
            for uc in ["ar", "iiot", "miot"] {
                let s = parse_scenario(&format!(
                    r#"{{"architecture":"{arch}","use_case":"{uc}","seed":3,"defaults":{{"horizon_ms":5000}}}}"#
                ))
                .unwrap();
                let again = parse_scenario(&s.to_json()).unwrap();
                assert_eq!(again, s);
            }
        }
    }
}
