//! Deterministic translation of a knowledge graph into ground facts for
//! attack-graph inference.
//!
//! The vocabulary is closed and fixed-arity; firewall semantics are folded
//! into `flow_allowed` here (first matching rule by ascending order wins,
//! intra-network traffic implicitly allowed) so the rule library downstream
//! stays free of negation.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{KnowledgeGraph, NodeKind, Relation};
use crate::scenario::ATTACKER_ORIGIN_ATTR;

/// Closed fact vocabulary with declared arities.
pub const FACT_VOCABULARY: &[(&str, usize)] = &[
    ("attacker_located", 1),
    ("in_zone", 2),
    ("network_service", 5),
    ("flow_allowed", 4),
    ("vuln_exists", 5),
    ("has_account", 3),
    ("stores_data", 2),
    ("mission_depends", 2),
    ("can_control", 2),
];

pub fn vocabulary_arity(predicate: &str) -> Option<usize> {
    FACT_VOCABULARY
        .iter()
        .find(|(p, _)| *p == predicate)
        .map(|(_, a)| *a)
}

/// A ground fact: predicate plus ordered constant arguments.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Fact {
    pub predicate: String,
    pub args: Vec<String>,
}

impl Fact {
    pub fn new(predicate: &str, args: &[&str]) -> Self {
        Fact {
            predicate: predicate.to_string(),
            args: args.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl fmt::Display for Fact {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.predicate, self.args.join(","))
    }
}

/// Duplicate-free fact set extracted from one graph revision.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct FactBase {
    pub facts: BTreeSet<Fact>,
    pub source_revision: u64,
}

impl FactBase {
    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn contains(&self, fact: &Fact) -> bool {
        self.facts.contains(fact)
    }

    /// One fact per line, sorted lexicographically.
    pub fn dump(&self) -> String {
        let mut lines: Vec<String> = self.facts.iter().map(|f| f.to_string()).collect();
        lines.sort();
        let mut out = lines.join("\n");
        if !out.is_empty() {
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("knowledge graph fails schema validation: {0}")]
    Schema(String),
}

#[derive(Debug, Clone)]
struct FirewallRule {
    order: i64,
    tiebreak: String,
    action_allow: bool,
    src_network: String,
    dst_network: String,
    protocol: String,
    dst_port: String,
}

impl FirewallRule {
    fn matches(&self, src: &str, dst: &str, protocol: &str, port: i64) -> bool {
        (self.src_network == "*" || self.src_network == src)
            && (self.dst_network == "*" || self.dst_network == dst)
            && (self.protocol == "*" || self.protocol == protocol)
            && (self.dst_port == "*" || self.dst_port == port.to_string())
    }
}

/// Extracts the full fact base licensed by the mapping rules. Pure function
/// of the graph snapshot; equal graphs yield equal fact bases.
pub fn extract_facts(kg: &KnowledgeGraph) -> Result<FactBase, ExtractError> {
    let violations = kg.validate_schema();
    if let Some(v) = violations.first() {
        return Err(ExtractError::Schema(v.to_string()));
    }

    let mut facts = BTreeSet::new();
    let mut push = |predicate: &str, args: Vec<String>| {
        debug_assert_eq!(vocabulary_arity(predicate), Some(args.len()));
        facts.insert(Fact {
            predicate: predicate.to_string(),
            args,
        });
    };

    // attacker_located(zone)
    for net in kg.nodes_of_kind(NodeKind::Network) {
        if net.attr_str(ATTACKER_ORIGIN_ATTR).is_some()
            || net.attributes.get(ATTACKER_ORIGIN_ATTR) == Some(&crate::kg::AttrValue::Bool(true))
        {
            push("attacker_located", vec![net.id.clone()]);
        }
    }

    // in_zone(host, network) via address membership
    for addr in kg.nodes_of_kind(NodeKind::IpAddress) {
        for assigned in kg.out_edges(&addr.id, Relation::AssignedTo) {
            for member in kg.out_edges(&addr.id, Relation::MemberOf) {
                push("in_zone", vec![assigned.dst.clone(), member.dst.clone()]);
            }
        }
    }

    // network_service(host, software, protocol, port, account-privilege)
    // and vuln_exists(host, cve, software, locality, effect)
    let mut service_ports: BTreeSet<(String, i64)> = BTreeSet::new();
    for host in kg.nodes_of_kind(NodeKind::Host) {
        for runs in kg.out_edges(&host.id, Relation::Runs) {
            let Some(sw) = kg.node(&runs.dst) else {
                continue;
            };
            let sw_name = sw.attr_str("name").unwrap_or(&sw.id).to_string();
            let service_account = sw.attr_str("runs_as").unwrap_or("user").to_string();
            for listens in kg.out_edges(&sw.id, Relation::ListensOn) {
                let Some(port) = kg.node(&listens.dst) else {
                    continue;
                };
                let number = port.attr_int("port_number").unwrap_or(0);
                let protocol = port.attr_str("protocol").unwrap_or("tcp").to_string();
                service_ports.insert((protocol.clone(), number));
                push(
                    "network_service",
                    vec![
                        host.id.clone(),
                        sw_name.clone(),
                        protocol,
                        number.to_string(),
                        service_account.clone(),
                    ],
                );
            }
            for hv in kg.out_edges(&sw.id, Relation::HasVulnerability) {
                let Some(vuln) = kg.node(&hv.dst) else {
                    continue;
                };
                push(
                    "vuln_exists",
                    vec![
                        host.id.clone(),
                        vuln.id.clone(),
                        sw_name.clone(),
                        vuln.attr_str("locality").unwrap_or("remote").to_string(),
                        vuln.attr_str("effect").unwrap_or("code_exec").to_string(),
                    ],
                );
            }
        }

        // has_account(host, account, privilege)
        for ha in kg.out_edges(&host.id, Relation::HasAccount) {
            let Some(acct) = kg.node(&ha.dst) else {
                continue;
            };
            push(
                "has_account",
                vec![
                    host.id.clone(),
                    acct.attr_str("name").unwrap_or(&acct.id).to_string(),
                    acct.attr_str("privilege").unwrap_or("user").to_string(),
                ],
            );
        }

        // stores_data(host, data_asset)
        for st in kg.out_edges(&host.id, Relation::Stores) {
            push("stores_data", vec![host.id.clone(), st.dst.clone()]);
        }

        // can_control(host, mission)
        for pr in kg.out_edges(&host.id, Relation::Provides) {
            push("can_control", vec![host.id.clone(), pr.dst.clone()]);
        }
    }

    // mission_depends(mission, data_asset)
    for mission in kg.nodes_of_kind(NodeKind::MissionFunction) {
        for dep in kg.out_edges(&mission.id, Relation::DependsOn) {
            push("mission_depends", vec![mission.id.clone(), dep.dst.clone()]);
        }
    }

    // flow_allowed(src_network, dst_network, protocol, port): evaluated over
    // every ordered network pair and every (protocol, port) known to the
    // graph, from firewall rules in ascending global order, first match wins.
    let mut rules: Vec<FirewallRule> = kg
        .nodes_of_kind(NodeKind::FirewallRule)
        .map(|r| FirewallRule {
            order: r.attr_int("order").unwrap_or(i64::MAX),
            tiebreak: r.id.clone(),
            action_allow: r.attr_str("action") == Some("allow"),
            src_network: r.attr_str("src_network").unwrap_or("*").to_string(),
            dst_network: r.attr_str("dst_network").unwrap_or("*").to_string(),
            protocol: r.attr_str("protocol").unwrap_or("*").to_string(),
            dst_port: r.attr_str("dst_port").unwrap_or("*").to_string(),
        })
        .collect();
    rules.sort_by(|a, b| (a.order, &a.tiebreak).cmp(&(b.order, &b.tiebreak)));

    let mut candidate_ports: BTreeSet<(String, i64)> = service_ports;
    for rule in &rules {
        if rule.protocol != "*" {
            if let Ok(port) = rule.dst_port.parse::<i64>() {
                candidate_ports.insert((rule.protocol.clone(), port));
            }
        }
    }
    let networks: Vec<String> = kg
        .nodes_of_kind(NodeKind::Network)
        .map(|n| n.id.clone())
        .collect();
    for src in &networks {
        for dst in &networks {
            for (protocol, port) in &candidate_ports {
                let verdict = rules
                    .iter()
                    .find(|r| r.matches(src, dst, protocol, *port))
                    .map(|r| r.action_allow)
                    .unwrap_or(src == dst);
                if verdict {
                    push(
                        "flow_allowed",
                        vec![src.clone(), dst.clone(), protocol.clone(), port.to_string()],
                    );
                }
            }
        }
    }

    Ok(FactBase {
        facts,
        source_revision: kg.revision(),
    })
}

/// Constants a fact may legally use: node ids, node attribute values, and the
/// closed literal sets. Used by property tests.
pub fn known_constants(kg: &KnowledgeGraph) -> BTreeSet<String> {
    let mut out: BTreeSet<String> = kg.nodes().map(|n| n.id.clone()).collect();
    for node in kg.nodes() {
        for value in node.attributes.values() {
            out.insert(value.to_string());
        }
    }
    for lit in ["user", "root", "remote", "local", "tcp", "udp"] {
        out.insert(lit.to_string());
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::load_scenario_str;

    const WEAK_SSH: &str = r#"
[attacker]
zone = "lan"

[[networks]]
name = "lan"
cidr = "10.0.0.0/24"

[[hosts]]
name = "h1"
addresses = [{ address = "10.0.0.1", network = "lan" }]

[[hosts.software]]
name = "sshd"
ports = [{ port_number = 22, protocol = "tcp" }]
vulnerabilities = ["cve-x"]

[[vulnerabilities]]
cve_id = "cve-x"
cvss_base_score = 5.3
locality = "remote"
effect = "weak_auth"
"#;

    #[test]
    fn weak_ssh_service_extraction() {
        let kg = load_scenario_str(WEAK_SSH).unwrap();
        let base = extract_facts(&kg).unwrap();
        assert!(base.contains(&Fact::new(
            "network_service",
            &["h1", "sshd", "tcp", "22", "user"]
        )));
        assert!(base.contains(&Fact::new(
            "vuln_exists",
            &["h1", "cve-x", "sshd", "remote", "weak_auth"]
        )));
        assert!(base.contains(&Fact::new("attacker_located", &["lan"])));
        assert!(base.contains(&Fact::new("in_zone", &["h1", "lan"])));
        // No firewall: intra-network traffic is implicitly allowed.
        assert!(base.contains(&Fact::new("flow_allowed", &["lan", "lan", "tcp", "22"])));
    }

    #[test]
    fn empty_graph_extracts_nothing() {
        let kg = load_scenario_str("").unwrap();
        let base = extract_facts(&kg).unwrap();
        assert!(base.is_empty());
        assert_eq!(base.source_revision, 0);
    }

    #[test]
    fn extraction_is_deterministic() {
        let kg = load_scenario_str(WEAK_SSH).unwrap();
        assert_eq!(extract_facts(&kg).unwrap(), extract_facts(&kg).unwrap());
    }

    #[test]
    fn extraction_is_monotone_under_additions() {
        let kg = load_scenario_str(WEAK_SSH).unwrap();
        let before = extract_facts(&kg).unwrap();
        let mut grown = kg.clone();
        grown
            .insert_node(
                crate::kg::KgNode::new("billing", NodeKind::MissionFunction)
                    .with_attr("name", "billing"),
            )
            .unwrap();
        grown.insert_edge(crate::kg::KgEdge::new("h1", Relation::Provides, "billing"));
        let after = extract_facts(&grown).unwrap();
        assert!(before.facts.is_subset(&after.facts));
        assert!(after.contains(&Fact::new("can_control", &["h1", "billing"])));
    }

    #[test]
    fn block_rule_overrides_intra_network_default() {
        let text = format!(
            "{WEAK_SSH}
[[firewalls]]
name = \"fw\"

[[firewalls.rules]]
action = \"block\"
src_network = \"lan\"
dst_network = \"lan\"
dst_port = \"22\"
protocol = \"tcp\"
order = 1
"
        );
        let kg = load_scenario_str(&text).unwrap();
        let base = extract_facts(&kg).unwrap();
        assert!(!base.contains(&Fact::new("flow_allowed", &["lan", "lan", "tcp", "22"])));
    }

    #[test]
    fn invalid_graph_is_rejected() {
        let mut kg = load_scenario_str(WEAK_SSH).unwrap();
        kg.remove_node("cve-x");
        assert!(matches!(extract_facts(&kg), Err(ExtractError::Schema(_))));
    }

    #[test]
    fn fact_constants_trace_to_the_graph() {
        let kg = load_scenario_str(WEAK_SSH).unwrap();
        let base = extract_facts(&kg).unwrap();
        let known = known_constants(&kg);
        for fact in &base.facts {
            for arg in &fact.args {
                assert!(
                    known.contains(arg),
                    "constant `{arg}` of {fact} not in graph"
                );
            }
        }
    }

    #[test]
    fn dump_is_sorted_one_per_line() {
        let kg = load_scenario_str(WEAK_SSH).unwrap();
        let dump = extract_facts(&kg).unwrap().dump();
        let lines: Vec<&str> = dump.lines().collect();
        let mut sorted = lines.clone();
        sorted.sort();
        assert_eq!(lines, sorted);
        assert!(lines.iter().all(|l| l.contains('(') && l.ends_with(')')));
    }
}
