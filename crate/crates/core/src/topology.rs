//! Node/link graph of the continuum and the tc-style shaping layered on top of it.
//!
//! Latencies are milliseconds, sizes are bytes and rates are bits per second.
//! Every ordered node pair carries at most one [`Link`]; traffic between two pods
//! on the same node takes the loopback constant and is never rate limited.

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::placement::{Assignment, Taint};

pub const LOOPBACK_MS: f64 = 0.05;
pub const BASE_LATENCY_MS: f64 = 0.5;
pub const DEFAULT_BANDWIDTH_BPS: f64 = 1e9;

/// Label keys understood by the preset inventories.
pub const LABEL_KIND: &str = "kind";
pub const LABEL_SITE: &str = "site";
pub const LABEL_ACCELERATOR: &str = "accelerator";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TopologyError {
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("node `{0}` must have positive cpu and memory capacity")]
    NonPositiveCapacity(String),
    #[error("node `{node}` carries label kind={found} but is of kind {expected}")]
    KindLabelMismatch {
        node: String,
        expected: NodeKind,
        found: String,
    },
    #[error("link {src}->{dst}: {reason}")]
    InvalidLink {
        src: String,
        dst: String,
        reason: String,
    },
    #[error("duplicate link {src}->{dst}")]
    DuplicateLink { src: String, dst: String },
    #[error("no route from `{src}` to `{dst}`")]
    NoRoute { src: String, dst: String },
    #[error("shaping owner `{0}` is not placed on any node")]
    UnknownOwner(String),
    #[error("invalid shaping rule for `{owner}`: {reason}")]
    InvalidShaping { owner: String, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeKind {
    Datacenter,
    Cloudlet,
    Edge,
    Ran,
    /// Hosts the data network endpoint (application server).
    Dn,
}

impl NodeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            NodeKind::Datacenter => "datacenter",
            NodeKind::Cloudlet => "cloudlet",
            NodeKind::Edge => "edge",
            NodeKind::Ran => "ran",
            NodeKind::Dn => "dn",
        }
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LinkName {
    N2,
    N3,
    N4,
    N6,
    DcCloudlet,
    Local,
    Radio,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Node {
    pub name: String,
    pub kind: NodeKind,
    pub labels: BTreeMap<String, String>,
    /// Millicores.
    pub cpu_capacity: u32,
    /// Megabytes.
    pub mem_capacity: u32,
    pub taints: Vec<Taint>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Link {
    pub src: String,
    pub dst: String,
    pub name: Option<LinkName>,
    pub base_latency_ms: f64,
    pub additional_latency_ms: f64,
    pub bandwidth_bps: f64,
}

impl Link {
    pub fn latency_ms(&self) -> f64 {
        self.base_latency_ms + self.additional_latency_ms
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum DstSelector {
    Node(String),
    Labels(BTreeMap<String, String>),
}

impl DstSelector {
    fn matches(&self, node: &Node) -> bool {
        match self {
            DstSelector::Node(name) => *name == node.name,
            DstSelector::Labels(wanted) => wanted
                .iter()
                .all(|(k, v)| node.labels.get(k).is_some_and(|have| have == v)),
        }
    }
}

/// Egress shaping installed by a side-car in `owner`: extra delay and an
/// optional rate cap on traffic towards nodes matched by `dst`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapingRule {
    pub owner: String,
    pub dst: DstSelector,
    #[serde(default)]
    pub delay_ms: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_bps: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub name: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
    pub cpu_millicores: u32,
    pub mem_mb: u32,
    #[serde(default)]
    pub taints: Vec<Taint>,
}

fn default_base_latency() -> f64 {
    BASE_LATENCY_MS
}

fn default_bandwidth() -> f64 {
    DEFAULT_BANDWIDTH_BPS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinkSpec {
    pub src: String,
    pub dst: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<LinkName>,
    #[serde(default = "default_base_latency")]
    pub base_latency_ms: f64,
    #[serde(default)]
    pub additional_latency_ms: f64,
    #[serde(default = "default_bandwidth")]
    pub bandwidth_bps: f64,
    /// Also create the reverse link with identical parameters.
    #[serde(default)]
    pub bidirectional: bool,
}

impl LinkSpec {
    pub fn new(src: impl Into<String>, dst: impl Into<String>) -> Self {
        Self {
            src: src.into(),
            dst: dst.into(),
            name: None,
            base_latency_ms: BASE_LATENCY_MS,
            additional_latency_ms: 0.0,
            bandwidth_bps: DEFAULT_BANDWIDTH_BPS,
            bidirectional: false,
        }
    }
}

/// Declarative topology as it appears in scenario files. Shaping rules are
/// applied once pods have been placed, see [`Topology::apply_shaping`].
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub links: Vec<LinkSpec>,
    #[serde(default)]
    pub shaping: Vec<ShapingRule>,
    /// Node hosting the UEs; required when the topology is user supplied.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ue_node: Option<String>,
}

#[derive(Debug, Clone)]
struct InstalledRule {
    rule: ShapingRule,
    owner_node: usize,
}

#[derive(Debug, Clone)]
pub struct Topology {
    nodes: Vec<Node>,
    node_index: HashMap<String, usize>,
    links: Vec<Link>,
    link_index: HashMap<(usize, usize), usize>,
    shaping: Vec<InstalledRule>,
    loopback_ms: f64,
}

pub fn build_topology(spec: &TopologySpec) -> Result<Topology, TopologyError> {
    let mut nodes = Vec::with_capacity(spec.nodes.len());
    let mut node_index = HashMap::new();
    for ns in &spec.nodes {
        if node_index.contains_key(&ns.name) {
            return Err(TopologyError::DuplicateNode(ns.name.clone()));
        }
        if ns.cpu_millicores == 0 || ns.mem_mb == 0 {
            return Err(TopologyError::NonPositiveCapacity(ns.name.clone()));
        }
        let mut labels = ns.labels.clone();
        match labels.get(LABEL_KIND) {
            Some(found) if found != ns.kind.as_str() => {
                return Err(TopologyError::KindLabelMismatch {
                    node: ns.name.clone(),
                    expected: ns.kind,
                    found: found.clone(),
                })
            }
            Some(_) => {}
            None => {
                labels.insert(LABEL_KIND.to_string(), ns.kind.as_str().to_string());
            }
        }
        node_index.insert(ns.name.clone(), nodes.len());
        nodes.push(Node {
            name: ns.name.clone(),
            kind: ns.kind,
            labels,
            cpu_capacity: ns.cpu_millicores,
            mem_capacity: ns.mem_mb,
            taints: ns.taints.clone(),
        });
    }

    let mut links = Vec::new();
    let mut link_index = HashMap::new();
    for ls in &spec.links {
        let invalid = |reason: &str| TopologyError::InvalidLink {
            src: ls.src.clone(),
            dst: ls.dst.clone(),
            reason: reason.to_string(),
        };
        if !(ls.base_latency_ms >= 0.0 && ls.base_latency_ms.is_finite()) {
            return Err(invalid("base latency must be a finite value >= 0"));
        }
        if !(ls.additional_latency_ms >= 0.0 && ls.additional_latency_ms.is_finite()) {
            return Err(invalid("additional latency must be a finite value >= 0"));
        }
        if ls.bandwidth_bps.is_nan() || ls.bandwidth_bps <= 0.0 {
            return Err(invalid("bandwidth must be > 0"));
        }
        if ls.src == ls.dst {
            return Err(invalid("self links are implicit (loopback)"));
        }
        let mut pairs = vec![(&ls.src, &ls.dst)];
        if ls.bidirectional {
            pairs.push((&ls.dst, &ls.src));
        }
        for (src, dst) in pairs {
            let s = *node_index
                .get(src)
                .ok_or_else(|| TopologyError::UnknownNode(src.clone()))?;
            let d = *node_index
                .get(dst)
                .ok_or_else(|| TopologyError::UnknownNode(dst.clone()))?;
            if link_index.contains_key(&(s, d)) {
                return Err(TopologyError::DuplicateLink {
                    src: src.clone(),
                    dst: dst.clone(),
                });
            }
            link_index.insert((s, d), links.len());
            links.push(Link {
                src: src.clone(),
                dst: dst.clone(),
                name: ls.name,
                base_latency_ms: ls.base_latency_ms,
                additional_latency_ms: ls.additional_latency_ms,
                bandwidth_bps: ls.bandwidth_bps,
            });
        }
    }

    Ok(Topology {
        nodes,
        node_index,
        links,
        link_index,
        shaping: Vec::new(),
        loopback_ms: LOOPBACK_MS,
    })
}

/// Store-and-forward cost of one hop before any queueing: propagation plus
/// serialization of `size` bytes at `rate_bps`.
pub fn transmission_time(size: u64, link_latency_ms: f64, rate_bps: f64) -> f64 {
    link_latency_ms + serialization_ms(size, Some(rate_bps))
}

/// Time the egress is occupied by `size` bytes. `None` means unlimited.
pub fn serialization_ms(size: u64, rate_bps: Option<f64>) -> f64 {
    match rate_bps {
        Some(rate) => size as f64 * 8.0 / rate * 1000.0,
        None => 0.0,
    }
}

impl Topology {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn shaping_rules(&self) -> impl Iterator<Item = &ShapingRule> {
        self.shaping.iter().map(|r| &r.rule)
    }

    pub fn node(&self, name: &str) -> Option<&Node> {
        self.node_index.get(name).map(|&i| &self.nodes[i])
    }

    pub fn link(&self, src: &str, dst: &str) -> Option<&Link> {
        let s = *self.node_index.get(src)?;
        let d = *self.node_index.get(dst)?;
        self.link_index.get(&(s, d)).map(|&i| &self.links[i])
    }

    pub fn loopback_ms(&self) -> f64 {
        self.loopback_ms
    }

    pub fn with_loopback_ms(mut self, loopback_ms: f64) -> Self {
        self.loopback_ms = loopback_ms;
        self
    }

    fn indices(&self, src: &str, dst: &str) -> Result<(usize, usize), TopologyError> {
        let s = *self
            .node_index
            .get(src)
            .ok_or_else(|| TopologyError::UnknownNode(src.to_string()))?;
        let d = *self
            .node_index
            .get(dst)
            .ok_or_else(|| TopologyError::UnknownNode(dst.to_string()))?;
        Ok((s, d))
    }

    fn matching_rules(&self, s: usize, d: usize) -> impl Iterator<Item = &ShapingRule> {
        let dst_node = &self.nodes[d];
        self.shaping
            .iter()
            .filter(move |r| r.owner_node == s && r.rule.dst.matches(dst_node))
            .map(|r| &r.rule)
    }

    /// One-way latency between pods hosted on `src` and `dst`.
    pub fn effective_latency(&self, src: &str, dst: &str) -> Result<f64, TopologyError> {
        let (s, d) = self.indices(src, dst)?;
        if s == d {
            return Ok(self.loopback_ms);
        }
        let link = self
            .link_index
            .get(&(s, d))
            .map(|&i| &self.links[i])
            .ok_or_else(|| TopologyError::NoRoute {
                src: src.to_string(),
                dst: dst.to_string(),
            })?;
        let shaped: f64 = self.matching_rules(s, d).map(|r| r.delay_ms).sum();
        Ok(link.latency_ms() + shaped)
    }

    /// Serialization rate on the `src -> dst` hop; `None` for loopback.
    pub fn egress_rate(&self, src: &str, dst: &str) -> Result<Option<f64>, TopologyError> {
        let (s, d) = self.indices(src, dst)?;
        if s == d {
            return Ok(None);
        }
        let link = self
            .link_index
            .get(&(s, d))
            .map(|&i| &self.links[i])
            .ok_or_else(|| TopologyError::NoRoute {
                src: src.to_string(),
                dst: dst.to_string(),
            })?;
        let rate = self
            .matching_rules(s, d)
            .filter_map(|r| r.rate_bps)
            .fold(link.bandwidth_bps, f64::min);
        Ok(Some(rate))
    }

    /// Returns a copy with `rule` installed. A previous rule with the same
    /// owner and destination selector is replaced rather than stacked.
    pub fn apply_shaping(
        &self,
        rule: ShapingRule,
        placements: &Assignment,
    ) -> Result<Topology, TopologyError> {
        if !(rule.delay_ms >= 0.0 && rule.delay_ms.is_finite()) {
            return Err(TopologyError::InvalidShaping {
                owner: rule.owner,
                reason: "delay must be a finite value >= 0".into(),
            });
        }
        if let Some(rate) = rule.rate_bps {
            if rate.is_nan() || rate <= 0.0 {
                return Err(TopologyError::InvalidShaping {
                    owner: rule.owner,
                    reason: "rate must be > 0 when bounded".into(),
                });
            }
        }
        let owner_node = placements
            .node_of(&rule.owner)
            .and_then(|n| self.node_index.get(n).copied())
            .ok_or_else(|| TopologyError::UnknownOwner(rule.owner.clone()))?;
        let mut next = self.clone();
        next.shaping
            .retain(|r| !(r.rule.owner == rule.owner && r.rule.dst == rule.dst));
        next.shaping.push(InstalledRule { rule, owner_node });
        Ok(next)
    }
}
