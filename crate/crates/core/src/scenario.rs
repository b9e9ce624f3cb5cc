//! Scenario documents: a single TOML tree describing networks, hosts,
//! firewalls, accounts, vulnerabilities, missions and detectors, plus the
//! attacker's starting zone and optional probability overrides.
//!
//! `load_scenario` turns a parsed document into a [`KnowledgeGraph`];
//! `export_snapshot` is its inverse with bit-stable ordering, so a load →
//! export → load round trip reproduces the graph node for node.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::kg::{AttrValue, KgEdge, KgNode, KnowledgeGraph, NodeKind, Relation};

#[derive(Debug, Error)]
pub enum ScenarioError {
    /// Malformed document; the message carries the toml line/column context.
    #[error("scenario parse error: {0}")]
    Parse(String),
    /// Structurally valid document that violates the schema; names the entity.
    #[error("scenario schema error: {entity}: {message}")]
    Schema { entity: String, message: String },
}

fn schema_err(entity: impl Into<String>, message: impl Into<String>) -> ScenarioError {
    ScenarioError::Schema {
        entity: entity.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub attacker: Option<AttackerDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub networks: Vec<NetworkDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hosts: Vec<HostDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub firewalls: Vec<FirewallDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub accounts: Vec<AccountDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vulnerabilities: Vec<VulnerabilityDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missions: Vec<MissionDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub detectors: Vec<DetectorDecl>,
    /// Present in snapshots of graphs that already carry observations.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub observations: Vec<ObservationDecl>,
    /// Attack-step label -> probability, reproduces published risk values.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub pinned_risk: BTreeMap<String, f64>,
    /// Rule label -> local probability override.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub local_probabilities: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackerDecl {
    /// Network name the attacker starts in.
    pub zone: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkDecl {
    pub name: String,
    pub cidr: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HostDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub addresses: Vec<AddressDecl>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub software: Vec<SoftwareDecl>,
    /// Data assets stored on this host (declared implicitly by name).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stores: Vec<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AddressDecl {
    pub address: String,
    pub network: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SoftwareDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub version: Option<String>,
    /// Privilege the service runs under; defaults to `user`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs_as: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub ports: Vec<PortDecl>,
    /// CVE ids referencing entries of the `vulnerabilities` section.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vulnerabilities: Vec<String>,
    /// Names of sibling software resources this one uses.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub uses: Vec<String>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PortDecl {
    pub port_number: i64,
    pub protocol: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirewallDecl {
    pub name: String,
    /// Networks this device routes between; routing emits a companion router
    /// node, so a pure filter can omit it.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub connects: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub rules: Vec<FirewallRuleDecl>,
    #[serde(flatten)]
    pub extra: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FirewallRuleDecl {
    /// `allow` or `block`.
    pub action: String,
    /// Network name or `*`.
    pub src_network: String,
    pub dst_network: String,
    /// Port number as string, or `*`.
    pub dst_port: String,
    /// Protocol name or `*`.
    pub protocol: String,
    /// Evaluation order, ascending, global across firewalls.
    pub order: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountDecl {
    pub host: String,
    pub name: String,
    pub privilege: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VulnerabilityDecl {
    pub cve_id: String,
    pub cvss_base_score: f64,
    pub locality: String,
    pub effect: String,
    #[serde(flatten)]
    pub extra: BTreeMap<String, AttrValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MissionDecl {
    pub name: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub provided_by: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub depends_on: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorDecl {
    pub name: String,
    /// Host or network names.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monitors: Vec<String>,
    pub indicator_types: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub true_positive_rate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationDecl {
    pub detector: String,
    pub subject: String,
    pub indicator_type: String,
    pub timestamp: i64,
}

impl ScenarioDoc {
    pub fn parse(text: &str) -> Result<ScenarioDoc, ScenarioError> {
        toml::from_str(text).map_err(|e| ScenarioError::Parse(e.to_string()))
    }
}

/// Attribute marking the attacker's starting network.
pub const ATTACKER_ORIGIN_ATTR: &str = "attacker_origin";

/// Builds the knowledge graph described by the document. The returned graph
/// is revision 0 (the load is snapshot zero) and passes `validate_schema`.
pub fn load_scenario(doc: &ScenarioDoc) -> Result<KnowledgeGraph, ScenarioError> {
    let mut kg = KnowledgeGraph::new();
    let network_names: BTreeSet<&str> = doc.networks.iter().map(|n| n.name.as_str()).collect();
    let host_names: BTreeSet<&str> = doc.hosts.iter().map(|h| h.name.as_str()).collect();
    let cve_ids: BTreeSet<&str> = doc
        .vulnerabilities
        .iter()
        .map(|v| v.cve_id.as_str())
        .collect();

    let add_node = |kg: &mut KnowledgeGraph, node: KgNode| -> Result<(), ScenarioError> {
        let id = node.id.clone();
        kg.insert_node_raw(node)
            .map_err(|_| schema_err(id, "duplicate node id"))
    };

    for net in &doc.networks {
        let mut node = KgNode::new(net.name.clone(), NodeKind::Network)
            .with_attr("name", net.name.clone())
            .with_attr("cidr", net.cidr.clone());
        node.attributes.extend(net.extra.clone());
        if doc.attacker.as_ref().is_some_and(|a| a.zone == net.name) {
            node.attributes
                .insert(ATTACKER_ORIGIN_ATTR.into(), AttrValue::Bool(true));
        }
        add_node(&mut kg, node)?;
    }
    if let Some(attacker) = &doc.attacker {
        if !network_names.contains(attacker.zone.as_str()) {
            return Err(schema_err(
                "attacker",
                format!("unknown zone `{}`", attacker.zone),
            ));
        }
    }

    for vuln in &doc.vulnerabilities {
        let mut node = KgNode::new(vuln.cve_id.clone(), NodeKind::Vulnerability)
            .with_attr("cve_id", vuln.cve_id.clone())
            .with_attr("cvss_base_score", vuln.cvss_base_score)
            .with_attr("locality", vuln.locality.clone())
            .with_attr("effect", vuln.effect.clone());
        node.attributes.extend(vuln.extra.clone());
        add_node(&mut kg, node)?;
    }

    // Data assets are declared implicitly through hosts.stores and
    // missions.depends_on.
    let mut assets: BTreeSet<&str> = BTreeSet::new();
    assets.extend(
        doc.hosts
            .iter()
            .flat_map(|h| h.stores.iter().map(String::as_str)),
    );
    assets.extend(
        doc.missions
            .iter()
            .flat_map(|m| m.depends_on.iter().map(String::as_str)),
    );
    for asset in &assets {
        add_node(
            &mut kg,
            KgNode::new(*asset, NodeKind::DataAsset).with_attr("name", *asset),
        )?;
    }

    for host in &doc.hosts {
        let mut node =
            KgNode::new(host.name.clone(), NodeKind::Host).with_attr("name", host.name.clone());
        node.attributes.extend(host.extra.clone());
        add_node(&mut kg, node)?;
        for addr in &host.addresses {
            if !network_names.contains(addr.network.as_str()) {
                return Err(schema_err(
                    &host.name,
                    format!("unknown network `{}`", addr.network),
                ));
            }
            add_node(
                &mut kg,
                KgNode::new(addr.address.clone(), NodeKind::IpAddress)
                    .with_attr("address", addr.address.clone()),
            )?;
            kg.insert_edge_raw(KgEdge::new(
                addr.address.clone(),
                Relation::MemberOf,
                addr.network.clone(),
            ));
            kg.insert_edge_raw(KgEdge::new(
                addr.address.clone(),
                Relation::AssignedTo,
                host.name.clone(),
            ));
        }
        for sw in &host.software {
            let sw_id = format!("{}/{}", host.name, sw.name);
            let mut node = KgNode::new(sw_id.clone(), NodeKind::SoftwareResource)
                .with_attr("name", sw.name.clone());
            if let Some(v) = &sw.version {
                node.attributes.insert("version".into(), v.clone().into());
            }
            if let Some(acct) = &sw.runs_as {
                node.attributes
                    .insert("runs_as".into(), acct.clone().into());
            }
            node.attributes.extend(sw.extra.clone());
            add_node(&mut kg, node)?;
            kg.insert_edge_raw(KgEdge::new(
                host.name.clone(),
                Relation::Runs,
                sw_id.clone(),
            ));
            for port in &sw.ports {
                let port_id = format!(
                    "{}/{}/{}/{}",
                    host.name, sw.name, port.protocol, port.port_number
                );
                add_node(
                    &mut kg,
                    KgNode::new(port_id.clone(), NodeKind::Port)
                        .with_attr("port_number", port.port_number)
                        .with_attr("protocol", port.protocol.clone()),
                )?;
                kg.insert_edge_raw(KgEdge::new(sw_id.clone(), Relation::ListensOn, port_id));
            }
            for cve in &sw.vulnerabilities {
                if !cve_ids.contains(cve.as_str()) {
                    return Err(schema_err(&sw_id, format!("unknown vulnerability `{cve}`")));
                }
                kg.insert_edge_raw(KgEdge::new(
                    sw_id.clone(),
                    Relation::HasVulnerability,
                    cve.clone(),
                ));
            }
            for used in &sw.uses {
                let used_id = format!("{}/{}", host.name, used);
                if !host.software.iter().any(|s| &s.name == used) {
                    return Err(schema_err(&sw_id, format!("unknown software `{used}`")));
                }
                kg.insert_edge_raw(KgEdge::new(sw_id.clone(), Relation::Uses, used_id));
            }
        }
        for asset in &host.stores {
            kg.insert_edge_raw(KgEdge::new(
                host.name.clone(),
                Relation::Stores,
                asset.clone(),
            ));
        }
    }

    for fw in &doc.firewalls {
        let mut node =
            KgNode::new(fw.name.clone(), NodeKind::Firewall).with_attr("name", fw.name.clone());
        node.attributes.extend(fw.extra.clone());
        add_node(&mut kg, node)?;
        if !fw.connects.is_empty() {
            let router_id = format!("{}/router", fw.name);
            add_node(
                &mut kg,
                KgNode::new(router_id.clone(), NodeKind::Router).with_attr("name", fw.name.clone()),
            )?;
            for net in &fw.connects {
                if !network_names.contains(net.as_str()) {
                    return Err(schema_err(&fw.name, format!("unknown network `{net}`")));
                }
                kg.insert_edge_raw(KgEdge::new(
                    router_id.clone(),
                    Relation::Routes,
                    net.clone(),
                ));
            }
        }
        for rule in &fw.rules {
            for net in [&rule.src_network, &rule.dst_network] {
                if net != "*" && !network_names.contains(net.as_str()) {
                    return Err(schema_err(
                        &fw.name,
                        format!("unknown network `{net}` in rule"),
                    ));
                }
            }
            let rule_id = format!("{}/rule{}", fw.name, rule.order);
            add_node(
                &mut kg,
                KgNode::new(rule_id.clone(), NodeKind::FirewallRule)
                    .with_attr("action", rule.action.clone())
                    .with_attr("src_network", rule.src_network.clone())
                    .with_attr("dst_network", rule.dst_network.clone())
                    .with_attr("dst_port", rule.dst_port.clone())
                    .with_attr("protocol", rule.protocol.clone())
                    .with_attr("order", rule.order),
            )?;
            kg.insert_edge_raw(KgEdge::new(fw.name.clone(), Relation::HasRule, rule_id));
        }
    }

    // One principal node per privilege level actually in use.
    let privileges: BTreeSet<&str> = doc.accounts.iter().map(|a| a.privilege.as_str()).collect();
    for priv_level in &privileges {
        add_node(
            &mut kg,
            KgNode::new(format!("principal/{priv_level}"), NodeKind::Principal)
                .with_attr("name", *priv_level),
        )?;
    }
    for acct in &doc.accounts {
        if !host_names.contains(acct.host.as_str()) {
            return Err(schema_err(
                &acct.name,
                format!("unknown host `{}`", acct.host),
            ));
        }
        let acct_id = format!("{}/{}", acct.host, acct.name);
        add_node(
            &mut kg,
            KgNode::new(acct_id.clone(), NodeKind::UserAccount)
                .with_attr("name", acct.name.clone())
                .with_attr("privilege", acct.privilege.clone()),
        )?;
        kg.insert_edge_raw(KgEdge::new(
            acct.host.clone(),
            Relation::HasAccount,
            acct_id.clone(),
        ));
        kg.insert_edge_raw(KgEdge::new(
            acct_id,
            Relation::HasPrincipal,
            format!("principal/{}", acct.privilege),
        ));
    }

    for mission in &doc.missions {
        add_node(
            &mut kg,
            KgNode::new(mission.name.clone(), NodeKind::MissionFunction)
                .with_attr("name", mission.name.clone()),
        )?;
        for host in &mission.provided_by {
            if !host_names.contains(host.as_str()) {
                return Err(schema_err(&mission.name, format!("unknown host `{host}`")));
            }
            kg.insert_edge_raw(KgEdge::new(
                host.clone(),
                Relation::Provides,
                mission.name.clone(),
            ));
        }
        for asset in &mission.depends_on {
            kg.insert_edge_raw(KgEdge::new(
                mission.name.clone(),
                Relation::DependsOn,
                asset.clone(),
            ));
        }
    }

    for det in &doc.detectors {
        if let Some(rate) = det.true_positive_rate {
            if !(rate > 0.0 && rate <= 1.0) {
                return Err(schema_err(
                    &det.name,
                    format!("true_positive_rate {rate} outside (0, 1]"),
                ));
            }
        }
        let mut node = KgNode::new(det.name.clone(), NodeKind::Detector)
            .with_attr("name", det.name.clone())
            .with_attr("indicator_types", det.indicator_types.join(","));
        if let Some(rate) = det.true_positive_rate {
            node.attributes
                .insert("true_positive_rate".into(), rate.into());
        }
        add_node(&mut kg, node)?;
        for target in &det.monitors {
            if !host_names.contains(target.as_str()) && !network_names.contains(target.as_str()) {
                return Err(schema_err(
                    &det.name,
                    format!("unknown monitor target `{target}`"),
                ));
            }
            kg.insert_edge_raw(KgEdge::new(
                det.name.clone(),
                Relation::Monitors,
                target.clone(),
            ));
        }
    }

    for (i, obs) in doc.observations.iter().enumerate() {
        let id = format!("obs/{i}");
        add_node(
            &mut kg,
            KgNode::new(id.clone(), NodeKind::Observation)
                .with_attr("indicator_type", obs.indicator_type.clone())
                .with_attr("timestamp", obs.timestamp),
        )?;
        kg.insert_edge_raw(KgEdge::new(
            id.clone(),
            Relation::ObservedBy,
            obs.detector.clone(),
        ));
        kg.insert_edge_raw(KgEdge::new(id, Relation::Concerns, obs.subject.clone()));
    }

    let violations = kg.validate_schema();
    if let Some(v) = violations.first() {
        return Err(schema_err(v.subject.clone(), v.message.clone()));
    }
    kg.set_revision(0);
    Ok(kg)
}

/// Convenience: parse + load in one step.
pub fn load_scenario_str(text: &str) -> Result<KnowledgeGraph, ScenarioError> {
    load_scenario(&ScenarioDoc::parse(text)?)
}

/// Serializes the graph back into the scenario format with bit-stable
/// ordering: nodes by id, edges by (src, relation, dst). Pins and probability
/// overrides are run configuration, not graph state, so they do not appear.
pub fn export_snapshot(kg: &KnowledgeGraph) -> String {
    let doc = snapshot_doc(kg);
    toml::to_string(&doc).expect("snapshot serialization cannot fail")
}

fn attr_owned(node: &KgNode, key: &str) -> String {
    node.attributes
        .get(key)
        .map(|v| v.to_string())
        .unwrap_or_default()
}

fn extra_attrs(node: &KgNode, own: &[&str]) -> BTreeMap<String, AttrValue> {
    node.attributes
        .iter()
        .filter(|(k, _)| !own.contains(&k.as_str()))
        .map(|(k, v)| (k.clone(), v.clone()))
        .collect()
}

fn snapshot_doc(kg: &KnowledgeGraph) -> ScenarioDoc {
    let mut doc = ScenarioDoc::default();

    for net in kg.nodes_of_kind(NodeKind::Network) {
        if net.attributes.get(ATTACKER_ORIGIN_ATTR) == Some(&AttrValue::Bool(true)) {
            doc.attacker = Some(AttackerDecl {
                zone: net.id.clone(),
            });
        }
        doc.networks.push(NetworkDecl {
            name: net.id.clone(),
            cidr: attr_owned(net, "cidr"),
            extra: extra_attrs(net, &["name", "cidr", ATTACKER_ORIGIN_ATTR]),
        });
    }

    for vuln in kg.nodes_of_kind(NodeKind::Vulnerability) {
        doc.vulnerabilities.push(VulnerabilityDecl {
            cve_id: vuln.id.clone(),
            cvss_base_score: vuln.attr_float("cvss_base_score").unwrap_or(0.0),
            locality: attr_owned(vuln, "locality"),
            effect: attr_owned(vuln, "effect"),
            extra: extra_attrs(vuln, &["cve_id", "cvss_base_score", "locality", "effect"]),
        });
    }

    for host in kg.nodes_of_kind(NodeKind::Host) {
        let mut addresses: Vec<AddressDecl> = kg
            .in_edges(&host.id, Relation::AssignedTo)
            .filter_map(|e| {
                let network = kg.out_edges(&e.src, Relation::MemberOf).next()?.dst.clone();
                Some(AddressDecl {
                    address: e.src.clone(),
                    network,
                })
            })
            .collect();
        addresses.sort_by(|a, b| a.address.cmp(&b.address));

        let mut software: Vec<SoftwareDecl> = kg
            .out_edges(&host.id, Relation::Runs)
            .filter_map(|e| kg.node(&e.dst))
            .map(|sw| {
                let mut ports: Vec<PortDecl> = kg
                    .out_edges(&sw.id, Relation::ListensOn)
                    .filter_map(|e| kg.node(&e.dst))
                    .map(|p| PortDecl {
                        port_number: p.attr_int("port_number").unwrap_or(0),
                        protocol: attr_owned(p, "protocol"),
                    })
                    .collect();
                ports.sort_by(|a, b| {
                    (a.port_number, &a.protocol).cmp(&(b.port_number, &b.protocol))
                });
                let mut vulnerabilities: Vec<String> = kg
                    .out_edges(&sw.id, Relation::HasVulnerability)
                    .map(|e| e.dst.clone())
                    .collect();
                vulnerabilities.sort();
                let mut uses: Vec<String> = kg
                    .out_edges(&sw.id, Relation::Uses)
                    .filter_map(|e| kg.node(&e.dst))
                    .map(|n| attr_owned(n, "name"))
                    .collect();
                uses.sort();
                SoftwareDecl {
                    name: attr_owned(sw, "name"),
                    version: sw.attr_str("version").map(str::to_string),
                    runs_as: sw.attr_str("runs_as").map(str::to_string),
                    ports,
                    vulnerabilities,
                    uses,
                    extra: extra_attrs(sw, &["name", "version", "runs_as"]),
                }
            })
            .collect();
        software.sort_by(|a, b| a.name.cmp(&b.name));

        let mut stores: Vec<String> = kg
            .out_edges(&host.id, Relation::Stores)
            .map(|e| e.dst.clone())
            .collect();
        stores.sort();

        doc.hosts.push(HostDecl {
            name: host.id.clone(),
            addresses,
            software,
            stores,
            extra: extra_attrs(host, &["name"]),
        });
    }

    for fw in kg.nodes_of_kind(NodeKind::Firewall) {
        let router_id = format!("{}/router", fw.id);
        let mut connects: Vec<String> = kg
            .out_edges(&router_id, Relation::Routes)
            .map(|e| e.dst.clone())
            .collect();
        connects.sort();
        let mut rules: Vec<FirewallRuleDecl> = kg
            .out_edges(&fw.id, Relation::HasRule)
            .filter_map(|e| kg.node(&e.dst))
            .map(|r| FirewallRuleDecl {
                action: attr_owned(r, "action"),
                src_network: attr_owned(r, "src_network"),
                dst_network: attr_owned(r, "dst_network"),
                dst_port: attr_owned(r, "dst_port"),
                protocol: attr_owned(r, "protocol"),
                order: r.attr_int("order").unwrap_or(0),
            })
            .collect();
        rules.sort_by_key(|r| r.order);
        doc.firewalls.push(FirewallDecl {
            name: fw.id.clone(),
            connects,
            rules,
            extra: extra_attrs(fw, &["name"]),
        });
    }

    for acct in kg.nodes_of_kind(NodeKind::UserAccount) {
        let host = kg
            .in_edges(&acct.id, Relation::HasAccount)
            .next()
            .map(|e| e.src.clone())
            .unwrap_or_default();
        doc.accounts.push(AccountDecl {
            host,
            name: attr_owned(acct, "name"),
            privilege: attr_owned(acct, "privilege"),
        });
    }
    doc.accounts
        .sort_by(|a, b| (&a.host, &a.name).cmp(&(&b.host, &b.name)));

    for mission in kg.nodes_of_kind(NodeKind::MissionFunction) {
        let mut provided_by: Vec<String> = kg
            .in_edges(&mission.id, Relation::Provides)
            .map(|e| e.src.clone())
            .collect();
        provided_by.sort();
        let mut depends_on: Vec<String> = kg
            .out_edges(&mission.id, Relation::DependsOn)
            .map(|e| e.dst.clone())
            .collect();
        depends_on.sort();
        doc.missions.push(MissionDecl {
            name: mission.id.clone(),
            provided_by,
            depends_on,
        });
    }

    for det in kg.nodes_of_kind(NodeKind::Detector) {
        let mut monitors: Vec<String> = kg
            .out_edges(&det.id, Relation::Monitors)
            .map(|e| e.dst.clone())
            .collect();
        monitors.sort();
        doc.detectors.push(DetectorDecl {
            name: det.id.clone(),
            monitors,
            indicator_types: attr_owned(det, "indicator_types")
                .split(',')
                .filter(|s| !s.is_empty())
                .map(str::to_string)
                .collect(),
            true_positive_rate: det.attr_float("true_positive_rate"),
        });
    }

    let mut obs_nodes: Vec<&KgNode> = kg.nodes_of_kind(NodeKind::Observation).collect();
    obs_nodes.sort_by_key(|n| {
        n.id.strip_prefix("obs/")
            .and_then(|s| s.parse::<u64>().ok())
            .unwrap_or(u64::MAX)
    });
    for obs in obs_nodes {
        doc.observations.push(ObservationDecl {
            detector: kg
                .out_edges(&obs.id, Relation::ObservedBy)
                .next()
                .map(|e| e.dst.clone())
                .unwrap_or_default(),
            subject: kg
                .out_edges(&obs.id, Relation::Concerns)
                .next()
                .map(|e| e.dst.clone())
                .unwrap_or_default(),
            indicator_type: attr_owned(obs, "indicator_type"),
            timestamp: obs.attr_int("timestamp").unwrap_or(0),
        });
    }

    doc
}
