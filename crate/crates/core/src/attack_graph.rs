//! AND/OR attack graph assembled from derivation traces, with per-node risk
//! probabilities.
//!
//! Fact nodes are leaves (base facts), rule nodes are AND nodes (one per
//! distinct rule instantiation), derived nodes are OR nodes (one per derived
//! fact). Goals are the derived nodes without outgoing edges. Risk propagates
//! leaf-to-goal: facts carry probability 1.0 (CVSS/10 for vulnerabilities),
//! AND nodes multiply their premises by the rule's local probability, OR
//! nodes combine alternatives noisy-OR style. Pinned labels override the
//! recurrence verbatim.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::datalog::DerivationTrace;
use crate::facts::{Fact, FactBase};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AgNodeKind {
    /// Leaf: a base fact.
    Fact,
    /// AND node: one rule instantiation, i.e. one atomic attack step.
    Rule,
    /// OR node: a derivable attacker capability or condition.
    Derived,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgNode {
    pub id: usize,
    pub kind: AgNodeKind,
    pub label: String,
    /// Rule nodes only.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub local_probability: Option<f64>,
    /// Filled by `assess_risk`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub risk: Option<f64>,
    /// Fact and derived nodes: the fact this node stands for.
    #[serde(skip)]
    pub fact: Option<Fact>,
    /// Rule nodes: label of the instantiated rule.
    #[serde(skip)]
    pub rule_label: Option<String>,
    /// Rule nodes: the instantiation bindings (the "colors" carried onward).
    #[serde(skip)]
    pub bindings: BTreeMap<String, String>,
    /// Rule nodes: indicator types instantiations of this rule can raise.
    #[serde(skip)]
    pub emits: Vec<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct AttackGraph {
    pub nodes: Vec<AgNode>,
    /// Directed edges: premise -> rule and rule -> conclusion.
    pub edges: Vec<(usize, usize)>,
    /// Derived nodes with no outgoing edges, ascending.
    pub goals: Vec<usize>,
    /// Labels of the rule->derived edges removed by the cycle cut.
    pub cut_edges: Vec<(String, String)>,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("inconsistent trace: premise {premise} of rule `{rule}` is neither base nor derived")]
    InconsistentTrace { rule: String, premise: String },
    #[error("attack graph contains a cycle after cycle-cut")]
    CyclicGraph,
    #[error("pinned label matches no node: {0}")]
    UnknownPinnedLabel(String),
}

impl AttackGraph {
    pub fn node(&self, id: usize) -> &AgNode {
        &self.nodes[id]
    }

    pub fn parents(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(_, dst)| *dst == id)
            .map(|(src, _)| *src)
    }

    pub fn children(&self, id: usize) -> impl Iterator<Item = usize> + '_ {
        self.edges
            .iter()
            .filter(move |(src, _)| *src == id)
            .map(|(_, dst)| *dst)
    }

    pub fn rule_nodes(&self) -> impl Iterator<Item = &AgNode> {
        self.nodes.iter().filter(|n| n.kind == AgNodeKind::Rule)
    }

    /// Topological order over the current edge set; None if cyclic.
    pub fn topological_order(&self) -> Option<Vec<usize>> {
        let n = self.nodes.len();
        let mut indegree = vec![0usize; n];
        let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
        for &(src, dst) in &self.edges {
            indegree[dst] += 1;
            adjacency[src].push(dst);
        }
        let mut queue: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
        let mut order = Vec::with_capacity(n);
        while let Some(&next) = queue.iter().next() {
            queue.remove(&next);
            order.push(next);
            for &dst in &adjacency[next] {
                indegree[dst] -= 1;
                if indegree[dst] == 0 {
                    queue.insert(dst);
                }
            }
        }
        (order.len() == n).then_some(order)
    }

    /// Deterministic text export: nodes then edges, one per line.
    pub fn export(&self) -> String {
        let mut out = String::new();
        for node in &self.nodes {
            let kind = match node.kind {
                AgNodeKind::Fact => "fact",
                AgNodeKind::Rule => "rule",
                AgNodeKind::Derived => "derived",
            };
            let risk = node
                .risk
                .map(|r| format!("{r:.6}"))
                .unwrap_or_else(|| "-".into());
            out.push_str(&format!(
                "node {} {} {} {}\n",
                node.id, kind, risk, node.label
            ));
        }
        for (src, dst) in &self.edges {
            out.push_str(&format!("edge {src} -> {dst}\n"));
        }
        for goal in &self.goals {
            out.push_str(&format!("goal {goal}\n"));
        }
        out
    }
}

fn step_label(trace: &DerivationTrace) -> String {
    if trace.bindings.is_empty() {
        trace.rule_label.clone()
    } else {
        let bound: Vec<String> = trace
            .bindings
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect();
        format!("{} [{}]", trace.rule_label, bound.join(", "))
    }
}

/// Builds the AND/OR graph from traces. Every premise must be a base fact or
/// a fact some trace derives. Cycles (mutually enabling conditions) are cut
/// by dropping, per cycle, the rule->derived edge whose rule has the lowest
/// local probability, then pruning whatever lost its support.
pub fn build_attack_graph(
    traces: &[DerivationTrace],
    base: &FactBase,
) -> Result<AttackGraph, GraphError> {
    let derived_facts: BTreeSet<&Fact> = traces.iter().map(|t| &t.derived).collect();

    let mut graph = AttackGraph::default();
    let mut fact_ids: HashMap<&Fact, usize> = HashMap::new();
    let mut derived_ids: HashMap<&Fact, usize> = HashMap::new();

    // Derived nodes first (stable ids independent of premise order), then
    // fact leaves as they are referenced, then rule nodes.
    for fact in &derived_facts {
        let id = graph.nodes.len();
        graph.nodes.push(AgNode {
            id,
            kind: AgNodeKind::Derived,
            label: fact.to_string(),
            local_probability: None,
            risk: None,
            fact: Some((*fact).clone()),
            rule_label: None,
            bindings: BTreeMap::new(),
            emits: Vec::new(),
        });
        derived_ids.insert(fact, id);
    }

    for trace in traces {
        let mut premise_ids = Vec::with_capacity(trace.premises.len());
        for premise in &trace.premises {
            let id = if let Some(&id) = derived_ids.get(premise) {
                id
            } else if base.facts.contains(premise) {
                *fact_ids.entry(premise).or_insert_with(|| {
                    let id = graph.nodes.len();
                    graph.nodes.push(AgNode {
                        id,
                        kind: AgNodeKind::Fact,
                        label: premise.to_string(),
                        local_probability: None,
                        risk: None,
                        fact: Some(premise.clone()),
                        rule_label: None,
                        bindings: BTreeMap::new(),
                        emits: Vec::new(),
                    });
                    id
                })
            } else {
                return Err(GraphError::InconsistentTrace {
                    rule: trace.rule_label.clone(),
                    premise: premise.to_string(),
                });
            };
            premise_ids.push(id);
        }

        let rule_id = graph.nodes.len();
        graph.nodes.push(AgNode {
            id: rule_id,
            kind: AgNodeKind::Rule,
            label: step_label(trace),
            local_probability: Some(trace.local_probability),
            risk: None,
            fact: None,
            rule_label: Some(trace.rule_label.clone()),
            bindings: trace.bindings.clone(),
            emits: trace.emits.clone(),
        });
        premise_ids.sort_unstable();
        premise_ids.dedup();
        for premise in premise_ids {
            graph.edges.push((premise, rule_id));
        }
        let conclusion = derived_ids[&trace.derived];
        graph.edges.push((rule_id, conclusion));
    }

    cut_cycles(&mut graph);
    prune_unsupported(&mut graph, base);
    graph.goals = identify_goals(&graph);
    Ok(graph)
}

/// Removes rule->derived edges until no cycle remains. Within each found
/// cycle the edge with the lowest rule local probability goes first, ties by
/// rule node id.
fn cut_cycles(graph: &mut AttackGraph) {
    while let Some(cycle) = find_cycle(graph) {
        let candidate = cycle
            .iter()
            .filter(|(src, dst)| {
                graph.nodes[*src].kind == AgNodeKind::Rule
                    && graph.nodes[*dst].kind == AgNodeKind::Derived
            })
            .min_by(|a, b| {
                let pa = graph.nodes[a.0].local_probability.unwrap_or(1.0);
                let pb = graph.nodes[b.0].local_probability.unwrap_or(1.0);
                pa.partial_cmp(&pb).unwrap().then(a.0.cmp(&b.0))
            })
            .copied();
        let Some(edge) = candidate else { break };
        graph.edges.retain(|e| *e != edge);
        graph.cut_edges.push((
            graph.nodes[edge.0].label.clone(),
            graph.nodes[edge.1].label.clone(),
        ));
    }
}

fn find_cycle(graph: &AttackGraph) -> Option<Vec<(usize, usize)>> {
    let n = graph.nodes.len();
    let mut adjacency: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(src, dst) in &graph.edges {
        adjacency[src].push(dst);
    }
    // 0 fresh, 1 on stack, 2 done
    let mut state = vec![0u8; n];
    let mut stack: Vec<usize> = Vec::new();

    fn dfs(
        node: usize,
        adjacency: &[Vec<usize>],
        state: &mut [u8],
        stack: &mut Vec<usize>,
    ) -> Option<Vec<(usize, usize)>> {
        state[node] = 1;
        stack.push(node);
        for &next in &adjacency[node] {
            if state[next] == 1 {
                // Cycle: slice of the stack from `next` to `node`, plus the
                // closing edge.
                let pos = stack.iter().position(|&x| x == next).unwrap();
                let mut cycle = Vec::new();
                for pair in stack[pos..].windows(2) {
                    cycle.push((pair[0], pair[1]));
                }
                cycle.push((node, next));
                return Some(cycle);
            }
            if state[next] == 0 {
                if let Some(cycle) = dfs(next, adjacency, state, stack) {
                    return Some(cycle);
                }
            }
        }
        stack.pop();
        state[node] = 2;
        None
    }

    for start in 0..n {
        if state[start] == 0 {
            if let Some(cycle) = dfs(start, &adjacency, &mut state, &mut stack) {
                return Some(cycle);
            }
        }
    }
    None
}

/// Drops derived nodes that lost every incoming rule edge, and the rule
/// nodes that depended on them, repeating until stable. Node ids are then
/// compacted.
fn prune_unsupported(graph: &mut AttackGraph, base: &FactBase) {
    let _ = base;
    loop {
        let mut dead: BTreeSet<usize> = BTreeSet::new();
        for node in &graph.nodes {
            match node.kind {
                AgNodeKind::Derived => {
                    if graph.parents(node.id).next().is_none() {
                        dead.insert(node.id);
                    }
                }
                AgNodeKind::Rule => {
                    if graph.children(node.id).next().is_none() {
                        dead.insert(node.id);
                    }
                }
                AgNodeKind::Fact => {}
            }
        }
        if dead.is_empty() {
            return;
        }
        // Rules consuming a dead premise die with it.
        for &(src, dst) in &graph.edges {
            if dead.contains(&src) && graph.nodes[dst].kind == AgNodeKind::Rule {
                dead.insert(dst);
            }
        }
        let mut remap: HashMap<usize, usize> = HashMap::new();
        let mut kept = Vec::new();
        for node in graph.nodes.drain(..) {
            if dead.contains(&node.id) {
                continue;
            }
            let new_id = kept.len();
            remap.insert(node.id, new_id);
            let mut node = node;
            node.id = new_id;
            kept.push(node);
        }
        graph.nodes = kept;
        graph.edges = graph
            .edges
            .iter()
            .filter(|(src, dst)| remap.contains_key(src) && remap.contains_key(dst))
            .map(|(src, dst)| (remap[src], remap[dst]))
            .collect();
    }
}

/// Exactly the derived nodes with out-degree zero, ascending by id.
pub fn identify_goals(graph: &AttackGraph) -> Vec<usize> {
    let mut has_out = vec![false; graph.nodes.len()];
    for &(src, _) in &graph.edges {
        has_out[src] = true;
    }
    graph
        .nodes
        .iter()
        .filter(|n| n.kind == AgNodeKind::Derived && !has_out[n.id])
        .map(|n| n.id)
        .collect()
}

/// Fills every node's risk in topological order. `pinned` maps node labels to
/// verbatim probabilities and wins over the recurrence; `vuln_scores` maps
/// CVE ids to CVSS base scores for leaf vulnerability facts.
pub fn assess_risk(
    graph: &AttackGraph,
    vuln_scores: &BTreeMap<String, f64>,
    pinned: &BTreeMap<String, f64>,
) -> Result<AttackGraph, GraphError> {
    for label in pinned.keys() {
        if !graph.nodes.iter().any(|n| &n.label == label) {
            return Err(GraphError::UnknownPinnedLabel(label.clone()));
        }
    }
    let order = graph.topological_order().ok_or(GraphError::CyclicGraph)?;

    let mut out = graph.clone();
    for id in order {
        if let Some(&pin) = pinned.get(&out.nodes[id].label) {
            out.nodes[id].risk = Some(pin);
            continue;
        }
        let risk = match out.nodes[id].kind {
            AgNodeKind::Fact => {
                let fact = out.nodes[id].fact.as_ref().expect("fact node carries fact");
                if fact.predicate == "vuln_exists" {
                    let cve = fact.args.get(1).cloned().unwrap_or_default();
                    vuln_scores.get(&cve).map(|s| s / 10.0).unwrap_or(1.0)
                } else {
                    1.0
                }
            }
            AgNodeKind::Rule => {
                let local = out.nodes[id].local_probability.unwrap_or(1.0);
                let product: f64 = out
                    .parents(id)
                    .map(|p| out.nodes[p].risk.expect("topological order"))
                    .product();
                local * product
            }
            AgNodeKind::Derived => {
                let mut miss = 1.0;
                for parent in out.parents(id).collect::<Vec<_>>() {
                    miss *= 1.0 - out.nodes[parent].risk.expect("topological order");
                }
                1.0 - miss
            }
        };
        out.nodes[id].risk = Some(risk.clamp(0.0, 1.0));
    }
    Ok(out)
}
