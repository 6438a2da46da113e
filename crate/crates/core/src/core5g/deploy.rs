use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{CoreError, NfKind};
use crate::placement::{schedule, Assignment, PodSpec, Toleration};
use crate::topology::Topology;

/// How one NF pod is placed: an explicit pin, or a selector/toleration set
/// left to the scheduler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlacementRule {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pin: Option<String>,
    #[serde(default)]
    pub node_selector: BTreeMap<String, String>,
    #[serde(default)]
    pub tolerations: Vec<Toleration>,
    pub cpu_millicores: u32,
    pub mem_mb: u32,
}

pub fn core_pods(rules: &BTreeMap<NfKind, PlacementRule>) -> Result<Vec<PodSpec>, CoreError> {
    if rules.contains_key(&NfKind::Ue) {
        return Err(CoreError::NfSet("UEs are workload actors, not pods".into()));
    }
    NfKind::DEPLOYED
        .iter()
        .map(|&nf| {
            let rule = rules
                .get(&nf)
                .ok_or_else(|| CoreError::NfSet(format!("no placement for {nf}")))?;
            Ok(PodSpec {
                name: nf.pod_name().to_string(),
                nf_kind: nf,
                cpu_request: rule.cpu_millicores,
                mem_request: rule.mem_mb,
                node_selector: rule.node_selector.clone(),
                tolerations: rule.tolerations.clone(),
                pinned_node: rule.pin.clone(),
            })
        })
        .collect()
}

/// One pod per deployed NF, scheduled onto `topology`.
pub fn instantiate_core(
    topology: &Topology,
    rules: &BTreeMap<NfKind, PlacementRule>,
) -> Result<(Vec<PodSpec>, Assignment), CoreError> {
    let pods = core_pods(rules)?;
    let assignment = schedule(&pods, topology)?;
    Ok((pods, assignment))
}
