//! In-memory typed property graph of the monitored infrastructure.
//!
//! Nodes cover five layers (network, authorization, host, vulnerability,
//! mission) plus detectors and their observations. Relations are typed with
//! fixed domain/range constraints; `validate_schema` reports every violation
//! instead of failing fast, because an out-of-schema graph is data to inspect,
//! not a programming error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Kind carried by every graph node. Exactly one per node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Network,
    IpAddress,
    Router,
    Firewall,
    FirewallRule,
    Host,
    SoftwareResource,
    Port,
    UserAccount,
    Principal,
    Vulnerability,
    MissionFunction,
    DataAsset,
    Detector,
    Observation,
}

impl NodeKind {
    pub const ALL: [NodeKind; 15] = [
        NodeKind::Network,
        NodeKind::IpAddress,
        NodeKind::Router,
        NodeKind::Firewall,
        NodeKind::FirewallRule,
        NodeKind::Host,
        NodeKind::SoftwareResource,
        NodeKind::Port,
        NodeKind::UserAccount,
        NodeKind::Principal,
        NodeKind::Vulnerability,
        NodeKind::MissionFunction,
        NodeKind::DataAsset,
        NodeKind::Detector,
        NodeKind::Observation,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            NodeKind::Network => "network",
            NodeKind::IpAddress => "ip_address",
            NodeKind::Router => "router",
            NodeKind::Firewall => "firewall",
            NodeKind::FirewallRule => "firewall_rule",
            NodeKind::Host => "host",
            NodeKind::SoftwareResource => "software_resource",
            NodeKind::Port => "port",
            NodeKind::UserAccount => "user_account",
            NodeKind::Principal => "principal",
            NodeKind::Vulnerability => "vulnerability",
            NodeKind::MissionFunction => "mission_function",
            NodeKind::DataAsset => "data_asset",
            NodeKind::Detector => "detector",
            NodeKind::Observation => "observation",
        }
    }

    pub fn parse(s: &str) -> Option<NodeKind> {
        NodeKind::ALL.iter().copied().find(|k| k.name() == s)
    }
}

impl fmt::Display for NodeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Typed edge label. Domain/range constraints live in [`Relation::signature`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    MemberOf,
    AssignedTo,
    Routes,
    HasRule,
    Runs,
    Uses,
    ListensOn,
    HasVulnerability,
    HasAccount,
    HasPrincipal,
    Provides,
    DependsOn,
    Stores,
    Monitors,
    ObservedBy,
    Concerns,
}

impl Relation {
    pub const ALL: [Relation; 16] = [
        Relation::MemberOf,
        Relation::AssignedTo,
        Relation::Routes,
        Relation::HasRule,
        Relation::Runs,
        Relation::Uses,
        Relation::ListensOn,
        Relation::HasVulnerability,
        Relation::HasAccount,
        Relation::HasPrincipal,
        Relation::Provides,
        Relation::DependsOn,
        Relation::Stores,
        Relation::Monitors,
        Relation::ObservedBy,
        Relation::Concerns,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Relation::MemberOf => "member_of",
            Relation::AssignedTo => "assigned_to",
            Relation::Routes => "routes",
            Relation::HasRule => "has_rule",
            Relation::Runs => "runs",
            Relation::Uses => "uses",
            Relation::ListensOn => "listens_on",
            Relation::HasVulnerability => "has_vulnerability",
            Relation::HasAccount => "has_account",
            Relation::HasPrincipal => "has_principal",
            Relation::Provides => "provides",
            Relation::DependsOn => "depends_on",
            Relation::Stores => "stores",
            Relation::Monitors => "monitors",
            Relation::ObservedBy => "observed_by",
            Relation::Concerns => "concerns",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Relation::ALL.iter().copied().find(|r| r.name() == s)
    }

    /// Allowed (source kinds, destination kinds) for this relation.
    pub fn signature(&self) -> (&'static [NodeKind], &'static [NodeKind]) {
        use NodeKind::*;
        match self {
            Relation::MemberOf => (&[IpAddress], &[Network]),
            Relation::AssignedTo => (&[IpAddress], &[Host]),
            Relation::Routes => (&[Router], &[Network]),
            Relation::HasRule => (&[Firewall], &[FirewallRule]),
            Relation::Runs => (&[Host], &[SoftwareResource]),
            Relation::Uses => (&[SoftwareResource], &[SoftwareResource]),
            Relation::ListensOn => (&[SoftwareResource], &[Port]),
            Relation::HasVulnerability => (&[SoftwareResource], &[Vulnerability]),
            Relation::HasAccount => (&[Host], &[UserAccount]),
            Relation::HasPrincipal => (&[UserAccount], &[Principal]),
            Relation::Provides => (&[Host], &[MissionFunction]),
            Relation::DependsOn => (&[MissionFunction], &[DataAsset]),
            Relation::Stores => (&[Host], &[DataAsset]),
            Relation::Monitors => (&[Detector], &[Host, Network]),
            Relation::ObservedBy => (&[Observation], &[Detector]),
            Relation::Concerns => (&[Observation], &[Host, IpAddress]),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Scalar attribute value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum AttrValue {
    Str(String),
    Int(i64),
    Float(f64),
    Bool(bool),
}

impl AttrValue {
    pub fn as_str(&self) -> Option<&str> {
        match self {
            AttrValue::Str(s) => Some(s),
            _ => None,
        }
    }

    pub fn as_int(&self) -> Option<i64> {
        match self {
            AttrValue::Int(i) => Some(*i),
            _ => None,
        }
    }

    pub fn as_float(&self) -> Option<f64> {
        match self {
            AttrValue::Float(v) => Some(*v),
            AttrValue::Int(i) => Some(*i as f64),
            _ => None,
        }
    }
}

impl fmt::Display for AttrValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AttrValue::Str(s) => f.write_str(s),
            AttrValue::Int(i) => write!(f, "{i}"),
            AttrValue::Float(v) => write!(f, "{v}"),
            AttrValue::Bool(b) => write!(f, "{b}"),
        }
    }
}

impl From<&str> for AttrValue {
    fn from(s: &str) -> Self {
        AttrValue::Str(s.to_string())
    }
}

impl From<String> for AttrValue {
    fn from(s: String) -> Self {
        AttrValue::Str(s)
    }
}

impl From<i64> for AttrValue {
    fn from(i: i64) -> Self {
        AttrValue::Int(i)
    }
}

impl From<f64> for AttrValue {
    fn from(v: f64) -> Self {
        AttrValue::Float(v)
    }
}

/// A graph node: unique id, one kind, scalar attributes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KgNode {
    pub id: String,
    pub kind: NodeKind,
    #[serde(default)]
    pub attributes: BTreeMap<String, AttrValue>,
}

impl KgNode {
    pub fn new(id: impl Into<String>, kind: NodeKind) -> Self {
        KgNode {
            id: id.into(),
            kind,
            attributes: BTreeMap::new(),
        }
    }

    pub fn with_attr(mut self, key: &str, value: impl Into<AttrValue>) -> Self {
        self.attributes.insert(key.to_string(), value.into());
        self
    }

    pub fn attr_str(&self, key: &str) -> Option<&str> {
        self.attributes.get(key).and_then(AttrValue::as_str)
    }

    pub fn attr_int(&self, key: &str) -> Option<i64> {
        self.attributes.get(key).and_then(AttrValue::as_int)
    }

    pub fn attr_float(&self, key: &str) -> Option<f64> {
        self.attributes.get(key).and_then(AttrValue::as_float)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct KgEdge {
    pub src: String,
    pub relation: Relation,
    pub dst: String,
}

impl KgEdge {
    pub fn new(src: impl Into<String>, relation: Relation, dst: impl Into<String>) -> Self {
        KgEdge {
            src: src.into(),
            relation,
            dst: dst.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum KgError {
    #[error("duplicate node id: {0}")]
    DuplicateNode(String),
    #[error("unknown detector: {0}")]
    UnknownDetector(String),
    #[error("unknown subject: {0}")]
    UnknownSubject(String),
    #[error("unknown node kind: {0}")]
    UnknownKind(String),
    #[error("unknown relation: {0}")]
    UnknownRelation(String),
}

/// One schema violation found by [`KnowledgeGraph::validate_schema`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Violation {
    /// Node id or edge description the violation is about.
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

/// Descriptor for attaching a new detector observation to the graph.
#[derive(Debug, Clone)]
pub struct ObservationDescriptor {
    pub detector: String,
    /// Host id or IP address the observation concerns.
    pub subject: String,
    pub indicator_type: String,
    /// Milliseconds since epoch.
    pub timestamp: i64,
    pub attributes: BTreeMap<String, AttrValue>,
}

/// Query pattern: a node kind, equality filters on attributes, and an
/// optional relation step constraining the matched node's neighbours.
#[derive(Debug, Clone, Default)]
pub struct QueryPattern {
    pub kind: String,
    pub attrs: Vec<(String, AttrValue)>,
    pub step: Option<QueryStep>,
}

#[derive(Debug, Clone)]
pub struct QueryStep {
    pub relation: String,
    pub target_kind: Option<String>,
    pub target_attrs: Vec<(String, AttrValue)>,
}

/// The typed property graph. Mutations go through the public mutators and
/// each bumps `revision` by exactly one; readers clone the whole graph when
/// they need a stable snapshot.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct KnowledgeGraph {
    nodes: BTreeMap<String, KgNode>,
    edges: Vec<KgEdge>,
    revision: u64,
}

/// Graphs are equal node-for-node and edge-for-edge; edge insertion order
/// does not matter.
impl PartialEq for KnowledgeGraph {
    fn eq(&self, other: &Self) -> bool {
        if self.nodes != other.nodes || self.revision != other.revision {
            return false;
        }
        let mut a = self.edges.clone();
        let mut b = other.edges.clone();
        a.sort();
        b.sort();
        a == b
    }
}

impl KnowledgeGraph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn revision(&self) -> u64 {
        self.revision
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: &str) -> Option<&KgNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &KgNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> &[KgEdge] {
        &self.edges
    }

    pub fn nodes_of_kind(&self, kind: NodeKind) -> impl Iterator<Item = &KgNode> {
        self.nodes.values().filter(move |n| n.kind == kind)
    }

    /// Outgoing edges of `src` with the given relation.
    pub fn out_edges<'a>(
        &'a self,
        src: &'a str,
        relation: Relation,
    ) -> impl Iterator<Item = &'a KgEdge> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.src == src && e.relation == relation)
    }

    /// Incoming edges of `dst` with the given relation.
    pub fn in_edges<'a>(
        &'a self,
        dst: &'a str,
        relation: Relation,
    ) -> impl Iterator<Item = &'a KgEdge> + 'a {
        self.edges
            .iter()
            .filter(move |e| e.dst == dst && e.relation == relation)
    }

    /// Inserts a node. One mutation, bumps revision by one.
    pub fn insert_node(&mut self, node: KgNode) -> Result<(), KgError> {
        if self.nodes.contains_key(&node.id) {
            return Err(KgError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id.clone(), node);
        self.revision += 1;
        Ok(())
    }

    /// Inserts an edge. Endpoints are not checked here; dangling references
    /// surface through `validate_schema`. One mutation, bumps revision by one.
    pub fn insert_edge(&mut self, edge: KgEdge) {
        self.edges.push(edge);
        self.revision += 1;
    }

    /// Removes a node, leaving any edges that referenced it dangling (they
    /// show up in `validate_schema`). One mutation, bumps revision by one.
    pub fn remove_node(&mut self, id: &str) -> Option<KgNode> {
        let removed = self.nodes.remove(id);
        if removed.is_some() {
            self.revision += 1;
        }
        removed
    }

    pub(crate) fn insert_node_raw(&mut self, node: KgNode) -> Result<(), KgError> {
        if self.nodes.contains_key(&node.id) {
            return Err(KgError::DuplicateNode(node.id));
        }
        self.nodes.insert(node.id.clone(), node);
        Ok(())
    }

    pub(crate) fn insert_edge_raw(&mut self, edge: KgEdge) {
        self.edges.push(edge);
    }

    pub(crate) fn set_revision(&mut self, revision: u64) {
        self.revision = revision;
    }

    /// Attaches a new Observation node, linked to its detector and to the
    /// concerned host or address. Observations are events: repeated identical
    /// descriptors create distinct nodes. Bumps revision by one.
    pub fn add_observation(&mut self, obs: &ObservationDescriptor) -> Result<String, KgError> {
        let detector_ok = self
            .nodes
            .get(&obs.detector)
            .map(|n| n.kind == NodeKind::Detector)
            .unwrap_or(false);
        if !detector_ok {
            return Err(KgError::UnknownDetector(obs.detector.clone()));
        }
        let subject_ok = self
            .nodes
            .get(&obs.subject)
            .map(|n| matches!(n.kind, NodeKind::Host | NodeKind::IpAddress))
            .unwrap_or(false);
        if !subject_ok {
            return Err(KgError::UnknownSubject(obs.subject.clone()));
        }

        let seq = self.nodes_of_kind(NodeKind::Observation).count();
        let mut id = format!("obs/{seq}");
        // Ids of removed observations may leave gaps; probe forward.
        let mut probe = seq;
        while self.nodes.contains_key(&id) {
            probe += 1;
            id = format!("obs/{probe}");
        }

        let mut node = KgNode::new(id.clone(), NodeKind::Observation)
            .with_attr("indicator_type", obs.indicator_type.as_str())
            .with_attr("timestamp", obs.timestamp);
        for (k, v) in &obs.attributes {
            node.attributes.insert(k.clone(), v.clone());
        }
        self.nodes.insert(id.clone(), node);
        self.edges.push(KgEdge::new(
            id.clone(),
            Relation::ObservedBy,
            obs.detector.clone(),
        ));
        self.edges.push(KgEdge::new(
            id.clone(),
            Relation::Concerns,
            obs.subject.clone(),
        ));
        self.revision += 1;
        Ok(id)
    }

    /// Checks every node and edge against the schema. Empty result means the
    /// graph is well formed.
    pub fn validate_schema(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        for node in self.nodes.values() {
            self.validate_node(node, &mut out);
        }
        for edge in &self.edges {
            self.validate_edge(edge, &mut out);
        }
        // Every observation belongs to exactly one detector.
        for node in self.nodes_of_kind(NodeKind::Observation) {
            let n = self.out_edges(&node.id, Relation::ObservedBy).count();
            if n != 1 {
                out.push(Violation {
                    subject: node.id.clone(),
                    message: format!(
                        "observation must have exactly one observed_by edge, found {n}"
                    ),
                });
            }
        }
        out
    }

    fn validate_node(&self, node: &KgNode, out: &mut Vec<Violation>) {
        let mut require = |keys: &[&str]| {
            for key in keys {
                if !node.attributes.contains_key(*key) {
                    out.push(Violation {
                        subject: node.id.clone(),
                        message: format!("missing required attribute `{key}`"),
                    });
                }
            }
        };
        match node.kind {
            NodeKind::Network => require(&["name", "cidr"]),
            NodeKind::IpAddress => require(&["address"]),
            NodeKind::Host => require(&["name"]),
            NodeKind::SoftwareResource => require(&["name"]),
            NodeKind::Port => require(&["port_number", "protocol"]),
            NodeKind::FirewallRule => require(&[
                "action",
                "src_network",
                "dst_network",
                "dst_port",
                "protocol",
                "order",
            ]),
            NodeKind::Vulnerability => {
                require(&["cve_id", "cvss_base_score", "locality", "effect"])
            }
            NodeKind::UserAccount => require(&["name", "privilege"]),
            NodeKind::MissionFunction => require(&["name"]),
            NodeKind::DataAsset => require(&["name"]),
            NodeKind::Detector => require(&["name", "indicator_types"]),
            NodeKind::Observation => require(&["indicator_type", "timestamp"]),
            NodeKind::Router | NodeKind::Firewall | NodeKind::Principal => {}
        }

        let mut check_enum = |key: &str, allowed: &[&str]| {
            if let Some(v) = node.attr_str(key) {
                if !allowed.contains(&v) {
                    out.push(Violation {
                        subject: node.id.clone(),
                        message: format!("attribute `{key}` must be one of {allowed:?}, got `{v}`"),
                    });
                }
            }
        };
        match node.kind {
            NodeKind::FirewallRule => check_enum("action", &["allow", "block"]),
            NodeKind::Vulnerability => {
                check_enum("locality", &["remote", "local"]);
                check_enum(
                    "effect",
                    &["code_exec", "priv_esc", "info_leak", "weak_auth"],
                );
                if let Some(score) = node.attr_float("cvss_base_score") {
                    if !(0.0..=10.0).contains(&score) {
                        out.push(Violation {
                            subject: node.id.clone(),
                            message: format!("cvss_base_score {score} outside [0.0, 10.0]"),
                        });
                    }
                }
            }
            NodeKind::UserAccount => check_enum("privilege", &["user", "root"]),
            NodeKind::Port => {
                if let Some(p) = node.attr_int("port_number") {
                    if !(0..=65535).contains(&p) {
                        out.push(Violation {
                            subject: node.id.clone(),
                            message: format!("port_number {p} outside [0, 65535]"),
                        });
                    }
                }
            }
            _ => {}
        }
    }

    fn validate_edge(&self, edge: &KgEdge, out: &mut Vec<Violation>) {
        let desc = format!("{} -{}-> {}", edge.src, edge.relation, edge.dst);
        let (domain, range) = edge.relation.signature();
        match self.nodes.get(&edge.src) {
            None => out.push(Violation {
                subject: desc.clone(),
                message: format!(
                    "dangling reference: source node `{}` does not exist",
                    edge.src
                ),
            }),
            Some(n) if !domain.contains(&n.kind) => out.push(Violation {
                subject: desc.clone(),
                message: format!("source kind {} not allowed for {}", n.kind, edge.relation),
            }),
            _ => {}
        }
        match self.nodes.get(&edge.dst) {
            None => out.push(Violation {
                subject: desc,
                message: format!(
                    "dangling reference: target node `{}` does not exist",
                    edge.dst
                ),
            }),
            Some(n) if !range.contains(&n.kind) => out.push(Violation {
                subject: desc,
                message: format!("target kind {} not allowed for {}", n.kind, edge.relation),
            }),
            _ => {}
        }
    }

    /// Deterministic pattern query: matching node ids in ascending order.
    pub fn query(&self, pattern: &QueryPattern) -> Result<Vec<String>, KgError> {
        let kind = NodeKind::parse(&pattern.kind)
            .ok_or_else(|| KgError::UnknownKind(pattern.kind.clone()))?;
        let step = match &pattern.step {
            Some(s) => {
                let relation = Relation::parse(&s.relation)
                    .ok_or_else(|| KgError::UnknownRelation(s.relation.clone()))?;
                let target_kind = match &s.target_kind {
                    Some(k) => {
                        Some(NodeKind::parse(k).ok_or_else(|| KgError::UnknownKind(k.clone()))?)
                    }
                    None => None,
                };
                Some((relation, target_kind, &s.target_attrs))
            }
            None => None,
        };

        let attrs_match = |node: &KgNode, filters: &[(String, AttrValue)]| {
            filters
                .iter()
                .all(|(k, v)| node.attributes.get(k) == Some(v))
        };

        let mut ids: Vec<String> = self
            .nodes_of_kind(kind)
            .filter(|n| attrs_match(n, &pattern.attrs))
            .filter(|n| match &step {
                None => true,
                Some((relation, target_kind, target_attrs)) => {
                    self.out_edges(&n.id, *relation).any(|e| {
                        self.nodes.get(&e.dst).is_some_and(|t| {
                            target_kind.is_none_or(|k| t.kind == k) && attrs_match(t, target_attrs)
                        })
                    })
                }
            })
            .map(|n| n.id.clone())
            .collect();
        ids.sort();
        Ok(ids)
    }

    /// Host ids known to the graph.
    pub fn host_ids(&self) -> BTreeSet<String> {
        self.nodes_of_kind(NodeKind::Host)
            .map(|n| n.id.clone())
            .collect()
    }

    /// Resolves a host id or IP address to a host id.
    pub fn resolve_host(&self, subject: &str) -> Option<String> {
        match self.nodes.get(subject)?.kind {
            NodeKind::Host => Some(subject.to_string()),
            NodeKind::IpAddress => self
                .out_edges(subject, Relation::AssignedTo)
                .next()
                .map(|e| e.dst.clone()),
            _ => None,
        }
    }

    /// CVE id -> CVSS base score for every vulnerability node.
    pub fn vuln_scores(&self) -> BTreeMap<String, f64> {
        self.nodes_of_kind(NodeKind::Vulnerability)
            .filter_map(|n| {
                Some((
                    n.attr_str("cve_id")?.to_string(),
                    n.attr_float("cvss_base_score")?,
                ))
            })
            .collect()
    }
}

/// A detector with its declared indicator types and the set of hosts it
/// effectively monitors (direct host edges plus every host addressed in a
/// monitored network).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectorBinding {
    pub name: String,
    pub indicator_types: Vec<String>,
    pub monitored_hosts: BTreeSet<String>,
    pub true_positive_rate: f64,
}

pub const DEFAULT_TRUE_POSITIVE_RATE: f64 = 0.9;

impl KnowledgeGraph {
    pub fn detector_bindings(&self) -> Vec<DetectorBinding> {
        let mut out = Vec::new();
        for det in self.nodes_of_kind(NodeKind::Detector) {
            let indicator_types: Vec<String> = det
                .attr_str("indicator_types")
                .unwrap_or_default()
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect();
            let mut monitored_hosts = BTreeSet::new();
            for edge in self.out_edges(&det.id, Relation::Monitors) {
                match self.nodes.get(&edge.dst).map(|n| n.kind) {
                    Some(NodeKind::Host) => {
                        monitored_hosts.insert(edge.dst.clone());
                    }
                    Some(NodeKind::Network) => {
                        // Every host with an address in the monitored network.
                        for member in self.in_edges(&edge.dst, Relation::MemberOf) {
                            for assigned in self.out_edges(&member.src, Relation::AssignedTo) {
                                monitored_hosts.insert(assigned.dst.clone());
                            }
                        }
                    }
                    _ => {}
                }
            }
            out.push(DetectorBinding {
                name: det.id.clone(),
                indicator_types,
                monitored_hosts,
                true_positive_rate: det
                    .attr_float("true_positive_rate")
                    .unwrap_or(DEFAULT_TRUE_POSITIVE_RATE),
            });
        }
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    }
}
