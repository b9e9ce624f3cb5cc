//! Conversion of a risk-assessed attack graph into the correlation model: a
//! Petri net whose places are security conditions, whose transitions are
//! atomic attack steps, and whose transitions emit indicator observations
//! with per-arc confidence. A single noise transition absorbs alerts judged
//! benign.
//!
//! Token semantics are monotone: firing marks outputs and never unmarks
//! inputs, because attacker capabilities are not lost by acting on them.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::attack_graph::{AgNodeKind, AttackGraph};
use crate::kg::DetectorBinding;

pub const DEFAULT_FALSE_POSITIVE_RATE: f64 = 0.05;
pub const DEFAULT_MISS_PENALTY: f64 = 0.3;

#[derive(Debug, Clone, Serialize)]
pub struct Place {
    pub id: usize,
    pub label: String,
    /// Initially marked places are the base facts; derived conditions start
    /// unmarked.
    pub marked: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Transition {
    pub id: usize,
    pub label: String,
    /// Risk probability copied from the attack-graph rule node.
    pub risk: f64,
    pub inputs: Vec<usize>,
    pub outputs: Vec<usize>,
    /// Mirrored attack-graph rule node (noise transition points at itself).
    pub ag_node: usize,
    /// Host the step acts on, when one can be named.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub target_host: Option<String>,
    #[serde(skip)]
    pub emits: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ObservationNode {
    pub id: usize,
    pub indicator_type: String,
    /// True-positive rate of the emitting detector for this arc.
    pub emission: f64,
    /// Owning (non-noise) transition.
    pub transition: usize,
    pub detector: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct HcpnModel {
    pub places: Vec<Place>,
    pub transitions: Vec<Transition>,
    pub observations: Vec<ObservationNode>,
    /// Index into `transitions`; no input or output places.
    pub noise_transition: usize,
    /// Emission of the noise transition towards every observation node.
    pub false_positive_rate: f64,
    /// Penalty probability for a fired but unobserved step.
    pub miss_penalty: f64,
    pub source_revision: u64,
    /// Declared detector indicator types that matched no transition.
    pub unmapped_indicators: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum HcpnError {
    #[error("attack graph node `{0}` has no risk; run assessment first")]
    UnassessedGraph(String),
}

impl HcpnModel {
    pub fn node_count(&self) -> usize {
        self.places.len() + self.transitions.len() + self.observations.len()
    }

    pub fn initial_marking(&self) -> BTreeSet<usize> {
        self.places
            .iter()
            .filter(|p| p.marked)
            .map(|p| p.id)
            .collect()
    }

    pub fn enabled(&self, marking: &BTreeSet<usize>, transition: usize) -> bool {
        transition != self.noise_transition
            && self.transitions[transition]
                .inputs
                .iter()
                .all(|p| marking.contains(p))
    }

    /// Monotone firing: adds output tokens, inputs stay marked.
    pub fn fire(&self, marking: &BTreeSet<usize>, transition: usize) -> BTreeSet<usize> {
        let mut next = marking.clone();
        next.extend(self.transitions[transition].outputs.iter().copied());
        next
    }

    /// Observation nodes of a transition matching an indicator type.
    pub fn matching_observations<'a>(
        &'a self,
        transition: usize,
        indicator_type: &'a str,
    ) -> impl Iterator<Item = &'a ObservationNode> + 'a {
        self.observations
            .iter()
            .filter(move |o| o.transition == transition && o.indicator_type == indicator_type)
    }

    /// Deterministic text export: places, transitions, observation arcs,
    /// noise arcs, initial marking.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for place in &self.places {
            out.push_str(&format!(
                "place {} {} {}\n",
                place.id,
                if place.marked { "marked" } else { "unmarked" },
                place.label
            ));
        }
        for t in &self.transitions {
            let kind = if t.id == self.noise_transition {
                "noise"
            } else {
                "step"
            };
            out.push_str(&format!(
                "transition {} {} risk={:.6} in={:?} out={:?} {}\n",
                t.id, kind, t.risk, t.inputs, t.outputs, t.label
            ));
        }
        for o in &self.observations {
            out.push_str(&format!(
                "observation {} {} emission={:.6} transition={} detector={}\n",
                o.id, o.indicator_type, o.emission, o.transition, o.detector
            ));
            out.push_str(&format!(
                "noise-arc {} -> {} emission={:.6}\n",
                self.noise_transition, o.id, self.false_positive_rate
            ));
        }
        out
    }
}

/// Parameters for the conversion; rates are overridable per run.
#[derive(Debug, Clone)]
pub struct HcpnConfig {
    pub false_positive_rate: f64,
    pub miss_penalty: f64,
}

impl Default for HcpnConfig {
    fn default() -> Self {
        HcpnConfig {
            false_positive_rate: DEFAULT_FALSE_POSITIVE_RATE,
            miss_penalty: DEFAULT_MISS_PENALTY,
        }
    }
}

/// Builds the net: condition/fact nodes become places, rule nodes become
/// transitions with their assessed risk, and for every detector monitoring a
/// transition's target host an observation node is attached per indicator
/// type the detector declares and the rule can emit. The noise transition is
/// connected to every observation node with the false-positive rate.
pub fn build_hcpn(
    graph: &AttackGraph,
    detectors: &[DetectorBinding],
    hosts: &BTreeSet<String>,
    source_revision: u64,
    config: &HcpnConfig,
) -> Result<HcpnModel, HcpnError> {
    let mut places = Vec::new();
    let mut place_of: BTreeMap<usize, usize> = BTreeMap::new();
    for node in &graph.nodes {
        match node.kind {
            AgNodeKind::Fact | AgNodeKind::Derived => {
                let id = places.len();
                places.push(Place {
                    id,
                    label: node.label.clone(),
                    marked: node.kind == AgNodeKind::Fact,
                });
                place_of.insert(node.id, id);
            }
            AgNodeKind::Rule => {}
        }
    }

    let mut transitions = Vec::new();
    for node in &graph.nodes {
        if node.kind != AgNodeKind::Rule {
            continue;
        }
        let risk = node
            .risk
            .ok_or_else(|| HcpnError::UnassessedGraph(node.label.clone()))?;
        let inputs: Vec<usize> = graph.parents(node.id).map(|p| place_of[&p]).collect();
        let outputs: Vec<usize> = graph.children(node.id).map(|c| place_of[&c]).collect();
        let target_host = transition_target(graph, node.id, hosts);
        transitions.push(Transition {
            id: transitions.len(),
            label: node.label.clone(),
            risk,
            inputs,
            outputs,
            ag_node: node.id,
            target_host,
            emits: node.emits.clone(),
        });
    }

    let noise_transition = transitions.len();
    transitions.push(Transition {
        id: noise_transition,
        label: "benign activity".to_string(),
        risk: 1.0,
        inputs: Vec::new(),
        outputs: Vec::new(),
        ag_node: usize::MAX,
        target_host: None,
        emits: Vec::new(),
    });

    let mut observations = Vec::new();
    let mut mapped: BTreeSet<(String, String)> = BTreeSet::new();
    for t in &transitions {
        if t.id == noise_transition {
            continue;
        }
        let Some(host) = &t.target_host else { continue };
        for detector in detectors {
            if !detector.monitored_hosts.contains(host) {
                continue;
            }
            for indicator in &detector.indicator_types {
                if !t.emits.contains(indicator) {
                    continue;
                }
                observations.push(ObservationNode {
                    id: observations.len(),
                    indicator_type: indicator.clone(),
                    emission: detector.true_positive_rate,
                    transition: t.id,
                    detector: detector.name.clone(),
                });
                mapped.insert((detector.name.clone(), indicator.clone()));
            }
        }
    }

    let mut unmapped = Vec::new();
    for detector in detectors {
        for indicator in &detector.indicator_types {
            if !mapped.contains(&(detector.name.clone(), indicator.clone())) {
                unmapped.push((detector.name.clone(), indicator.clone()));
            }
        }
    }

    Ok(HcpnModel {
        places,
        transitions,
        observations,
        noise_transition,
        false_positive_rate: config.false_positive_rate,
        miss_penalty: config.miss_penalty,
        source_revision,
        unmapped_indicators: unmapped,
    })
}

/// The host a rule instantiation acts on: the first argument of the derived
/// condition when it names a host, otherwise the first host named anywhere in
/// the instantiation (conclusion first, then premises).
fn transition_target(
    graph: &AttackGraph,
    rule_node: usize,
    hosts: &BTreeSet<String>,
) -> Option<String> {
    let conclusion = graph
        .children(rule_node)
        .next()
        .and_then(|c| graph.nodes[c].fact.clone());
    if let Some(fact) = &conclusion {
        if let Some(first) = fact.args.first() {
            if hosts.contains(first) {
                return Some(first.clone());
            }
        }
    }
    let mut candidates = Vec::new();
    if let Some(fact) = &conclusion {
        candidates.extend(fact.args.iter().cloned());
    }
    for parent in graph.parents(rule_node) {
        if let Some(fact) = &graph.nodes[parent].fact {
            candidates.extend(fact.args.iter().cloned());
        }
    }
    candidates.into_iter().find(|c| hosts.contains(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attack_graph::{assess_risk, build_attack_graph};
    use crate::datalog::DerivationTrace;
    use crate::facts::{Fact, FactBase};

    fn minimal_model(emits: Vec<String>, detectors: &[DetectorBinding]) -> HcpnModel {
        let f = Fact::new("cond", &["h1"]);
        let d = Fact::new("exec_code", &["h1", "user"]);
        let base = FactBase {
            facts: [f.clone()].into_iter().collect(),
            source_revision: 7,
        };
        let traces = vec![DerivationTrace {
            derived: d,
            rule_label: "step".to_string(),
            premises: vec![f],
            bindings: BTreeMap::new(),
            local_probability: 0.5,
            emits,
        }];
        let graph = build_attack_graph(&traces, &base).unwrap();
        let assessed = assess_risk(&graph, &BTreeMap::new(), &BTreeMap::new()).unwrap();
        let hosts: BTreeSet<String> = ["h1".to_string()].into_iter().collect();
        build_hcpn(&assessed, detectors, &hosts, 7, &HcpnConfig::default()).unwrap()
    }

    #[test]
    fn minimal_conversion() {
        let model = minimal_model(vec![], &[]);
        assert_eq!(model.places.len(), 2);
        // One step plus the noise transition.
        assert_eq!(model.transitions.len(), 2);
        assert_eq!(model.initial_marking().len(), 1);
        assert_eq!(model.source_revision, 7);
        let step = &model.transitions[0];
        assert_eq!(step.risk, 0.5);
        assert_eq!(step.target_host.as_deref(), Some("h1"));
        let noise = &model.transitions[model.noise_transition];
        assert!(noise.inputs.is_empty() && noise.outputs.is_empty());
    }

    #[test]
    fn no_detectors_means_no_observation_nodes() {
        let model = minimal_model(vec!["ssh_login".to_string()], &[]);
        assert!(model.observations.is_empty());
    }

    #[test]
    fn detector_indicator_must_intersect_rule_emissions() {
        let detector = DetectorBinding {
            name: "ids".to_string(),
            indicator_types: vec!["ssh_login".to_string(), "dns_tunnel".to_string()],
            monitored_hosts: ["h1".to_string()].into_iter().collect(),
            true_positive_rate: 0.9,
        };
        let model = minimal_model(vec!["ssh_login".to_string()], &[detector]);
        assert_eq!(model.observations.len(), 1);
        assert_eq!(model.observations[0].indicator_type, "ssh_login");
        assert_eq!(model.observations[0].emission, 0.9);
        // dns_tunnel matched nothing and is reported.
        assert_eq!(
            model.unmapped_indicators,
            vec![("ids".to_string(), "dns_tunnel".to_string())]
        );
    }

    #[test]
    fn firing_is_monotone() {
        let model = minimal_model(vec![], &[]);
        let marking = model.initial_marking();
        assert!(model.enabled(&marking, 0));
        let next = model.fire(&marking, 0);
        assert!(marking.is_subset(&next));
        assert_eq!(next.len(), 2);
        // Noise is never "enabled" as an attack step.
        assert!(!model.enabled(&marking, model.noise_transition));
    }

    #[test]
    fn unassessed_graph_is_rejected() {
        let f = Fact::new("cond", &["h1"]);
        let d = Fact::new("goal", &["h1"]);
        let base = FactBase {
            facts: [f.clone()].into_iter().collect(),
            source_revision: 0,
        };
        let traces = vec![DerivationTrace {
            derived: d,
            rule_label: "step".to_string(),
            premises: vec![f],
            bindings: BTreeMap::new(),
            local_probability: 0.5,
            emits: vec![],
        }];
        let graph = build_attack_graph(&traces, &base).unwrap();
        let err = build_hcpn(&graph, &[], &BTreeSet::new(), 0, &HcpnConfig::default());
        assert!(matches!(err, Err(HcpnError::UnassessedGraph(_))));
    }
}
