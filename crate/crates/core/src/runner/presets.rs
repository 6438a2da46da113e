//! Architecture presets, the default node inventory and link realization.
//!
//! Preset topologies are built in two steps: pods are scheduled onto the bare
//! inventory, then a full mesh of links is laid between nodes and each pair is
//! classified by the network functions it connects. The preset's additional
//! latency for that class is put on the link.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::core5g::{NfKind, PlacementRule};
use crate::placement::{Assignment, Taint, Toleration};
use crate::topology::{
    LinkName, LinkSpec, NodeKind, NodeSpec, LABEL_ACCELERATOR, LABEL_KIND, LABEL_SITE,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Architecture {
    Baseline,
    #[serde(rename = "latopt")]
    LatOpt,
    #[serde(rename = "accessopt")]
    AccessOpt,
    /// User-supplied topology and placement.
    Custom,
}

impl Architecture {
    pub const PRESETS: [Architecture; 3] = [
        Architecture::Baseline,
        Architecture::LatOpt,
        Architecture::AccessOpt,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Architecture::Baseline => "baseline",
            Architecture::LatOpt => "latopt",
            Architecture::AccessOpt => "accessopt",
            Architecture::Custom => "custom",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Additional one-way latency per link class, in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatencyProfile {
    pub n2: f64,
    pub n3: f64,
    pub n4: f64,
    pub n6: f64,
    pub dc_cloudlet: f64,
}

impl LatencyProfile {
    pub const ZERO: LatencyProfile = LatencyProfile {
        n2: 0.0,
        n3: 0.0,
        n4: 0.0,
        n6: 0.0,
        dc_cloudlet: 0.0,
    };

    pub fn get(&self, name: LinkName) -> f64 {
        match name {
            LinkName::N2 => self.n2,
            LinkName::N3 => self.n3,
            LinkName::N4 => self.n4,
            LinkName::N6 => self.n6,
            LinkName::DcCloudlet => self.dc_cloudlet,
            LinkName::Local | LinkName::Radio | LinkName::Other => 0.0,
        }
    }

    pub fn fields(&self) -> [(&'static str, f64); 5] {
        [
            ("n2", self.n2),
            ("n3", self.n3),
            ("n4", self.n4),
            ("n6", self.n6),
            ("dc_cloudlet", self.dc_cloudlet),
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArchitecturePreset {
    pub name: Architecture,
    pub latency: LatencyProfile,
}

pub fn preset(arch: Architecture) -> Option<ArchitecturePreset> {
    let latency = match arch {
        Architecture::Baseline => LatencyProfile {
            n2: 12.5,
            n3: 12.5,
            n4: 0.0,
            n6: 0.0,
            dc_cloudlet: 0.0,
        },
        Architecture::LatOpt => LatencyProfile {
            n2: 12.5,
            n3: 1.0,
            n4: 12.5,
            n6: 0.0,
            dc_cloudlet: 0.0,
        },
        Architecture::AccessOpt => LatencyProfile {
            n2: 3.5,
            n3: 1.0,
            n4: 3.5,
            n6: 0.0,
            dc_cloudlet: 9.0,
        },
        Architecture::Custom => return None,
    };
    Some(ArchitecturePreset {
        name: arch,
        latency,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Inventory {
    pub datacenters: u32,
    pub cloudlets: u32,
    pub edges: u32,
    pub cpu_millicores: u32,
    pub mem_mb: u32,
}

impl Default for Inventory {
    fn default() -> Self {
        Self {
            datacenters: 3,
            cloudlets: 2,
            edges: 1,
            cpu_millicores: 2000,
            mem_mb: 4096,
        }
    }
}

pub const GNB_NODE: &str = "ran-0";
pub const UE_NODE: &str = "ran-1";
pub const DN_NODE: &str = "dn-0";

fn node_name(kind: NodeKind, i: u32) -> String {
    let prefix = match kind {
        NodeKind::Datacenter => "dc",
        other => other.as_str(),
    };
    format!("{prefix}-{i}")
}

fn node(kind: NodeKind, i: u32, site: &str, inv: &Inventory) -> NodeSpec {
    let labels = BTreeMap::from([
        (LABEL_KIND.to_string(), kind.as_str().to_string()),
        (LABEL_SITE.to_string(), site.to_string()),
        (LABEL_ACCELERATOR.to_string(), "none".to_string()),
    ]);
    let taints = match kind {
        NodeKind::Datacenter => Vec::new(),
        k => vec![Taint::no_schedule(LABEL_KIND, k.as_str())],
    };
    NodeSpec {
        name: node_name(kind, i),
        kind,
        labels,
        cpu_millicores: inv.cpu_millicores,
        mem_mb: inv.mem_mb,
        taints,
    }
}

/// Datacenter, cloudlet and edge nodes as counted by `inv`, one RAN node for
/// the gNB, one for the UEs and one data network host.
pub fn inventory_nodes(inv: &Inventory) -> Vec<NodeSpec> {
    let mut nodes = Vec::new();
    for i in 0..inv.datacenters {
        nodes.push(node(NodeKind::Datacenter, i, "core", inv));
    }
    for i in 0..inv.cloudlets {
        nodes.push(node(NodeKind::Cloudlet, i, "access", inv));
    }
    for i in 0..inv.edges {
        nodes.push(node(NodeKind::Edge, i, "edge", inv));
    }
    nodes.push(node(NodeKind::Ran, 0, "ran", inv));
    nodes.push(node(NodeKind::Ran, 1, "ue", inv));
    nodes.push(node(NodeKind::Dn, 0, "internet", inv));
    nodes
}

fn requests(nf: NfKind) -> (u32, u32) {
    match nf {
        NfKind::Upf => (1000, 1024),
        NfKind::Dccore => (1000, 2048),
        _ => (500, 512),
    }
}

fn pinned(nf: NfKind, kind: NodeKind, i: u32) -> (NfKind, PlacementRule) {
    let (cpu, mem) = requests(nf);
    let tolerations = match kind {
        NodeKind::Datacenter => Vec::new(),
        k => vec![Toleration::equal(LABEL_KIND, k.as_str())],
    };
    (
        nf,
        PlacementRule {
            pin: Some(node_name(kind, i)),
            node_selector: BTreeMap::new(),
            tolerations,
            cpu_millicores: cpu,
            mem_mb: mem,
        },
    )
}

/// Where each NF goes under a preset. Indices wrap when the inventory is
/// smaller than the default one.
pub fn preset_placement(arch: Architecture, inv: &Inventory) -> BTreeMap<NfKind, PlacementRule> {
    use NodeKind::*;
    let dc = |i: u32| i % inv.datacenters.max(1);
    let cl = |i: u32| i % inv.cloudlets.max(1);
    let (amf, smf) = match arch {
        Architecture::AccessOpt => (
            pinned(NfKind::Amf, Cloudlet, cl(0)),
            pinned(NfKind::Smf, Cloudlet, cl(1)),
        ),
        _ => (
            pinned(NfKind::Amf, Datacenter, dc(0)),
            pinned(NfKind::Smf, Datacenter, dc(1)),
        ),
    };
    let upf = match arch {
        Architecture::Baseline => pinned(NfKind::Upf, Datacenter, dc(2)),
        _ => pinned(NfKind::Upf, Edge, 0),
    };
    BTreeMap::from([
        amf,
        smf,
        upf,
        pinned(NfKind::Dccore, Datacenter, dc(2)),
        pinned(NfKind::Gnb, Ran, 0),
        pinned(NfKind::Dn, Dn, 0),
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkDefaults {
    pub base_latency_ms: f64,
    pub radio_ms: f64,
    pub bandwidth_bps: f64,
}

/// Full mesh over `nodes` except `ue_node`, which only gets a radio link to
/// the gNB host. A pair joining the hosts of two NFs on a reference interface
/// takes that interface's latency; a pair matching several classes takes the
/// largest.
pub fn realize_links(
    nodes: &[NodeSpec],
    assignment: &Assignment,
    ue_node: &str,
    latency: &LatencyProfile,
    defaults: &LinkDefaults,
) -> Vec<LinkSpec> {
    let host = |nf: NfKind| assignment.node_of(nf.pod_name());
    let interfaces = [
        (LinkName::N2, host(NfKind::Gnb), host(NfKind::Amf)),
        (LinkName::N3, host(NfKind::Gnb), host(NfKind::Upf)),
        (LinkName::N4, host(NfKind::Smf), host(NfKind::Upf)),
        (LinkName::N6, host(NfKind::Upf), host(NfKind::Dn)),
    ];
    let mut links = Vec::new();
    for a in nodes.iter().filter(|n| n.name != ue_node) {
        for b in nodes
            .iter()
            .filter(|n| n.name != ue_node && n.name != a.name)
        {
            let pair = |x: Option<&str>, y: Option<&str>| {
                (x == Some(&a.name) && y == Some(&b.name))
                    || (x == Some(&b.name) && y == Some(&a.name))
            };
            let mut classes: Vec<LinkName> = interfaces
                .iter()
                .filter(|(_, x, y)| pair(*x, *y))
                .map(|(n, _, _)| *n)
                .collect();
            let kinds = (a.kind, b.kind);
            if matches!(
                kinds,
                (NodeKind::Cloudlet, NodeKind::Datacenter)
                    | (NodeKind::Datacenter, NodeKind::Cloudlet)
            ) {
                classes.push(LinkName::DcCloudlet);
            }
            let name = classes
                .iter()
                .copied()
                .reduce(|best, c| {
                    if latency.get(c) > latency.get(best) {
                        c
                    } else {
                        best
                    }
                })
                .unwrap_or(if a.kind == b.kind {
                    LinkName::Local
                } else {
                    LinkName::Other
                });
            let mut link = LinkSpec::new(a.name.clone(), b.name.clone());
            link.name = Some(name);
            link.base_latency_ms = defaults.base_latency_ms;
            link.additional_latency_ms = latency.get(name);
            link.bandwidth_bps = defaults.bandwidth_bps;
            links.push(link);
        }
    }
    if let Some(gnb) = host(NfKind::Gnb) {
        let mut radio = LinkSpec::new(ue_node, gnb);
        radio.name = Some(LinkName::Radio);
        radio.base_latency_ms = defaults.radio_ms;
        radio.bandwidth_bps = defaults.bandwidth_bps;
        radio.bidirectional = true;
        links.push(radio);
    }
    links
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::core5g::instantiate_core;
    use crate::topology::{build_topology, TopologySpec};

    #[test]
    fn preset_values() {
        let b = preset(Architecture::Baseline).unwrap().latency;
        assert_eq!(b.fields().map(|f| f.1), [12.5, 12.5, 0.0, 0.0, 0.0]);
        let l = preset(Architecture::LatOpt).unwrap().latency;
        assert_eq!(l.fields().map(|f| f.1), [12.5, 1.0, 12.5, 0.0, 0.0]);
        let a = preset(Architecture::AccessOpt).unwrap().latency;
        assert_eq!(a.fields().map(|f| f.1), [3.5, 1.0, 3.5, 0.0, 9.0]);
        assert!(preset(Architecture::Custom).is_none());
    }

    #[test]
    fn architecture_names_parse() {
        let a: Architecture = serde_json::from_str("\"latopt\"").unwrap();
        assert_eq!(a, Architecture::LatOpt);
        assert!(serde_json::from_str::<Architecture>("\"LatOpt\"").is_err());
    }

    fn placed(arch: Architecture) -> (Vec<NodeSpec>, Assignment) {
        let inv = Inventory::default();
        let nodes = inventory_nodes(&inv);
        let topo = build_topology(&TopologySpec {
            nodes: nodes.clone(),
            ..Default::default()
        })
        .unwrap();
        let (_, asg) = instantiate_core(&topo, &preset_placement(arch, &inv)).unwrap();
        (nodes, asg)
    }

    #[test]
    fn presets_schedule_where_pinned() {
        let (_, asg) = placed(Architecture::AccessOpt);
        assert_eq!(asg.node_of("amf"), Some("cloudlet-0"));
        assert_eq!(asg.node_of("smf"), Some("cloudlet-1"));
        assert_eq!(asg.node_of("upf"), Some("edge-0"));
        let (_, asg) = placed(Architecture::Baseline);
        assert_eq!(asg.node_of("upf"), Some("dc-2"));
        assert_eq!(asg.node_of("gnb"), Some(GNB_NODE));
        assert_eq!(asg.node_of("dn"), Some(DN_NODE));
    }

    #[test]
    fn links_carry_interface_latency() {
        let (nodes, asg) = placed(Architecture::LatOpt);
        let lat = preset(Architecture::LatOpt).unwrap().latency;
        let d = LinkDefaults {
            base_latency_ms: 0.5,
            radio_ms: 2.0,
            bandwidth_bps: 1e9,
        };
        let spec = TopologySpec {
            nodes: nodes.clone(),
            links: realize_links(&nodes, &asg, UE_NODE, &lat, &d),
            ..Default::default()
        };
        let topo = build_topology(&spec).unwrap();
        assert_eq!(topo.effective_latency("ran-0", "dc-0").unwrap(), 13.0);
        assert_eq!(topo.effective_latency("edge-0", "ran-0").unwrap(), 1.5);
        assert_eq!(topo.effective_latency("dc-1", "edge-0").unwrap(), 13.0);
        assert_eq!(topo.effective_latency("dc-0", "dc-2").unwrap(), 0.5);
        assert_eq!(topo.effective_latency(UE_NODE, "ran-0").unwrap(), 2.0);
        assert!(topo.effective_latency(UE_NODE, "dc-0").is_err());
        assert_eq!(
            topo.link("dc-0", "dc-1").unwrap().name,
            Some(LinkName::Local)
        );
        assert_eq!(
            topo.link("cloudlet-0", "dc-1").unwrap().name,
            Some(LinkName::DcCloudlet)
        );
    }

    #[test]
    fn small_inventory_wraps() {
        let inv = Inventory {
            datacenters: 1,
            cloudlets: 1,
            ..Default::default()
        };
        let p = preset_placement(Architecture::AccessOpt, &inv);
        assert_eq!(p[&NfKind::Amf].pin.as_deref(), Some("cloudlet-0"));
        assert_eq!(p[&NfKind::Smf].pin.as_deref(), Some("cloudlet-0"));
        assert_eq!(p[&NfKind::Dccore].pin.as_deref(), Some("dc-0"));
    }
}
