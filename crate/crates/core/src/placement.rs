//! Kubernetes-like pod placement: node selectors, NoSchedule taints with
//! tolerations, capacity filtering, least-allocated scoring and manual pins.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::core5g::NfKind;
use crate::topology::{Node, Topology};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PlacementError {
    #[error("pod `{0}` has no feasible node")]
    Unschedulable(String),
    #[error("pod `{pod}` cannot run on its pinned node `{node}`")]
    PinnedInfeasible { pod: String, node: String },
    #[error("unknown pod `{0}`")]
    UnknownPod(String),
    #[error("invalid pod `{pod}`: {reason}")]
    InvalidPod { pod: String, reason: String },
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TaintEffect {
    #[default]
    NoSchedule,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Taint {
    pub key: String,
    pub value: String,
    #[serde(default)]
    pub effect: TaintEffect,
}

impl Taint {
    pub fn no_schedule(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            value: value.into(),
            effect: TaintEffect::NoSchedule,
        }
    }
}

/// A missing `value` tolerates every value of `key`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Toleration {
    pub key: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub value: Option<String>,
}

impl Toleration {
    pub fn equal(key: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            key: key.into(),
            value: Some(value.into()),
        }
    }

    pub fn tolerates(&self, taint: &Taint) -> bool {
        self.key == taint.key && self.value.as_ref().is_none_or(|v| *v == taint.value)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PodSpec {
    pub name: String,
    pub nf_kind: NfKind,
    /// Millicores.
    pub cpu_request: u32,
    /// Megabytes.
    pub mem_request: u32,
    pub node_selector: BTreeMap<String, String>,
    pub tolerations: Vec<Toleration>,
    pub pinned_node: Option<String>,
}

impl PodSpec {
    pub fn new(
        name: impl Into<String>,
        nf_kind: NfKind,
        cpu_request: u32,
        mem_request: u32,
    ) -> Self {
        Self {
            name: name.into(),
            nf_kind,
            cpu_request,
            mem_request,
            node_selector: BTreeMap::new(),
            tolerations: Vec::new(),
            pinned_node: None,
        }
    }

    fn selects(&self, node: &Node) -> bool {
        self.node_selector
            .iter()
            .all(|(k, v)| node.labels.get(k).is_some_and(|have| have == v))
    }

    fn tolerates_all(&self, node: &Node) -> bool {
        node.taints
            .iter()
            .all(|t| self.tolerations.iter().any(|tol| tol.tolerates(t)))
    }
}

/// Pod name to node name, plus the resources each placement consumes.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Assignment {
    placements: BTreeMap<String, String>,
    used: BTreeMap<String, (u64, u64)>,
}

impl Assignment {
    pub fn insert(&mut self, pod: &str, node: &str, cpu: u32, mem: u32) {
        if let Some(prev) = self.placements.insert(pod.to_string(), node.to_string()) {
            // re-placing a pod is not expected; keep accounting consistent anyway
            debug_assert_eq!(prev, node, "pod {pod} moved");
        }
        let slot = self.used.entry(node.to_string()).or_default();
        slot.0 += u64::from(cpu);
        slot.1 += u64::from(mem);
    }

    pub fn node_of(&self, pod: &str) -> Option<&str> {
        self.placements.get(pod).map(String::as_str)
    }

    /// (cpu millicores, memory MB) consumed on `node`.
    pub fn used(&self, node: &str) -> (u64, u64) {
        self.used.get(node).copied().unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.placements
            .iter()
            .map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn len(&self) -> usize {
        self.placements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.placements.is_empty()
    }
}

fn fits(pod: &PodSpec, node: &Node, current: &Assignment) -> bool {
    let (cpu, mem) = current.used(&node.name);
    u64::from(node.cpu_capacity) >= cpu + u64::from(pod.cpu_request)
        && u64::from(node.mem_capacity) >= mem + u64::from(pod.mem_request)
}

/// Nodes matching every selector entry, with every taint tolerated and enough
/// cpu and memory left over given `current`.
pub fn feasible_nodes(
    pod: &PodSpec,
    topology: &Topology,
    current: &Assignment,
) -> BTreeSet<String> {
    topology
        .nodes()
        .iter()
        .filter(|n| pod.selects(n) && pod.tolerates_all(n) && fits(pod, n, current))
        .map(|n| n.name.clone())
        .collect()
}

fn validate(pods: &[PodSpec]) -> Result<(), PlacementError> {
    let mut seen = HashSet::new();
    for p in pods {
        if p.cpu_request == 0 || p.mem_request == 0 {
            return Err(PlacementError::InvalidPod {
                pod: p.name.clone(),
                reason: "resource requests must be > 0".into(),
            });
        }
        if !seen.insert(p.name.as_str()) {
            return Err(PlacementError::InvalidPod {
                pod: p.name.clone(),
                reason: "duplicate pod name".into(),
            });
        }
    }
    Ok(())
}

/// Places pods in declaration order without backtracking.
pub fn schedule(pods: &[PodSpec], topology: &Topology) -> Result<Assignment, PlacementError> {
    validate(pods)?;
    let mut assignment = Assignment::default();
    for pod in pods {
        let feasible = feasible_nodes(pod, topology, &assignment);
        let target = match &pod.pinned_node {
            Some(pin) => {
                if !feasible.contains(pin) {
                    return Err(PlacementError::PinnedInfeasible {
                        pod: pod.name.clone(),
                        node: pin.clone(),
                    });
                }
                pin.clone()
            }
            None => {
                // least allocated cpu wins; BTreeSet order makes the first max the smallest name
                let mut best: Option<(&str, u64)> = None;
                for name in &feasible {
                    let node = topology.node(name).expect("feasible node exists");
                    let free = u64::from(node.cpu_capacity) - assignment.used(name).0;
                    if best.is_none_or(|(_, b)| free > b) {
                        best = Some((name, free));
                    }
                }
                best.map(|(n, _)| n.to_string())
                    .ok_or_else(|| PlacementError::Unschedulable(pod.name.clone()))?
            }
        };
        assignment.insert(&pod.name, &target, pod.cpu_request, pod.mem_request);
    }
    Ok(assignment)
}

pub fn pin(pods: &[PodSpec], pod: &str, node: &str) -> Result<Vec<PodSpec>, PlacementError> {
    if !pods.iter().any(|p| p.name == pod) {
        return Err(PlacementError::UnknownPod(pod.to_string()));
    }
    Ok(pods
        .iter()
        .map(|p| {
            let mut p = p.clone();
            if p.name == pod {
                p.pinned_node = Some(node.to_string());
            }
            p
        })
        .collect())
}
