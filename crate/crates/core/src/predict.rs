//! Bayesian next-step prediction over the attack-graph structure.
//!
//! Every attack-graph node becomes a binary variable: leaves carry their
//! risk as prior, AND nodes are true with the rule's local probability when
//! all parents hold (zero otherwise), OR nodes are deterministic
//! disjunctions. Inference is exact variable elimination; a full-joint
//! enumerator doubles as the verification oracle on small nets.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::attack_graph::{AgNodeKind, AttackGraph};
use crate::correlate::CorrelationResult;

#[derive(Debug, Clone, PartialEq)]
pub enum BnKind {
    Leaf { prior: f64 },
    AndRule { local_probability: f64 },
    OrDerived,
}

#[derive(Debug, Clone)]
pub struct BnNode {
    pub id: usize,
    pub label: String,
    pub parents: Vec<usize>,
    pub kind: BnKind,
    /// Assessed risk of the mirrored attack-graph node (pinned when pinned).
    pub risk: f64,
}

/// Structure-isomorphic mirror of an assessed attack graph; node ids match.
#[derive(Debug, Clone)]
pub struct BayesNet {
    pub nodes: Vec<BnNode>,
}

#[derive(Debug, Error)]
pub enum PredictError {
    #[error("attack graph contains a cycle")]
    CyclicGraph,
    #[error("attack graph node `{0}` has no risk; run assessment first")]
    Unassessed(String),
    #[error("evidence has zero probability under the model")]
    EvidenceConflict,
}

impl BayesNet {
    pub fn children(&self, id: usize) -> Vec<usize> {
        self.nodes
            .iter()
            .filter(|n| n.parents.contains(&id))
            .map(|n| n.id)
            .collect()
    }

    /// Conditional probability P(node = true | parent assignment).
    pub fn p_true_given(&self, node: usize, parent_values: &[bool]) -> f64 {
        match &self.nodes[node].kind {
            BnKind::Leaf { prior } => *prior,
            BnKind::AndRule { local_probability } => {
                if parent_values.iter().all(|&b| b) {
                    *local_probability
                } else {
                    0.0
                }
            }
            BnKind::OrDerived => {
                if parent_values.iter().any(|&b| b) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }
}

/// Builds the network mirror. Requires an acyclic, risk-assessed graph.
pub fn build_bn(graph: &AttackGraph) -> Result<BayesNet, PredictError> {
    if graph.topological_order().is_none() {
        return Err(PredictError::CyclicGraph);
    }
    let mut nodes = Vec::with_capacity(graph.nodes.len());
    for ag_node in &graph.nodes {
        let risk = ag_node
            .risk
            .ok_or_else(|| PredictError::Unassessed(ag_node.label.clone()))?;
        let kind = match ag_node.kind {
            AgNodeKind::Fact => BnKind::Leaf {
                // Leaf priors come from the unpinned recurrence inputs; the
                // assessed value already folds CVSS scaling in.
                prior: risk,
            },
            AgNodeKind::Rule => BnKind::AndRule {
                local_probability: ag_node.local_probability.unwrap_or(1.0),
            },
            AgNodeKind::Derived => BnKind::OrDerived,
        };
        let mut parents: Vec<usize> = graph.parents(ag_node.id).collect();
        parents.sort_unstable();
        nodes.push(BnNode {
            id: ag_node.id,
            label: ag_node.label.clone(),
            parents,
            kind,
            risk,
        });
    }
    Ok(BayesNet { nodes })
}

// ---------------------------------------------------------------------------
// Variable elimination

#[derive(Debug, Clone)]
struct Factor {
    /// Ascending variable ids; bit i of a table index is vars[i]'s value.
    vars: Vec<usize>,
    table: Vec<f64>,
}

impl Factor {
    fn constant(value: f64) -> Factor {
        Factor {
            vars: Vec::new(),
            table: vec![value],
        }
    }

    fn restrict(&self, var: usize, value: bool) -> Factor {
        let Some(pos) = self.vars.iter().position(|&v| v == var) else {
            return self.clone();
        };
        let vars: Vec<usize> = self.vars.iter().copied().filter(|&v| v != var).collect();
        let mut table = vec![0.0; 1 << vars.len()];
        for (idx, slot) in table.iter_mut().enumerate() {
            let low = idx & ((1 << pos) - 1);
            let high = idx >> pos;
            let full = low | ((value as usize) << pos) | (high << (pos + 1));
            *slot = self.table[full];
        }
        Factor { vars, table }
    }

    fn multiply(&self, other: &Factor) -> Factor {
        let vars: Vec<usize> = {
            let set: BTreeSet<usize> = self.vars.iter().chain(other.vars.iter()).copied().collect();
            set.into_iter().collect()
        };
        // Bit position of each union variable inside the operand tables.
        let pos_in = |factor: &Factor| -> Vec<Option<usize>> {
            vars.iter()
                .map(|v| factor.vars.iter().position(|x| x == v))
                .collect()
        };
        let self_pos = pos_in(self);
        let other_pos = pos_in(other);
        let mut table = vec![0.0; 1 << vars.len()];
        for (idx, slot) in table.iter_mut().enumerate() {
            let mut self_idx = 0usize;
            let mut other_idx = 0usize;
            for bit in 0..vars.len() {
                let value = idx >> bit & 1;
                if let Some(p) = self_pos[bit] {
                    self_idx |= value << p;
                }
                if let Some(p) = other_pos[bit] {
                    other_idx |= value << p;
                }
            }
            *slot = self.table[self_idx] * other.table[other_idx];
        }
        Factor { vars, table }
    }

    fn sum_out(&self, var: usize) -> Factor {
        let t = self.restrict(var, true);
        let f = self.restrict(var, false);
        Factor {
            vars: t.vars.clone(),
            table: t
                .table
                .iter()
                .zip(f.table.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

fn node_factor(bn: &BayesNet, node: usize) -> Factor {
    let mut vars: Vec<usize> = bn.nodes[node].parents.clone();
    vars.push(node);
    vars.sort_unstable();
    let mut table = vec![0.0; 1 << vars.len()];
    for (idx, slot) in table.iter_mut().enumerate() {
        let value_of = |v: usize| -> bool {
            let pos = vars.iter().position(|&x| x == v).unwrap();
            idx >> pos & 1 == 1
        };
        let parent_values: Vec<bool> = bn.nodes[node]
            .parents
            .iter()
            .map(|&p| value_of(p))
            .collect();
        let p_true = bn.p_true_given(node, &parent_values);
        *slot = if value_of(node) { p_true } else { 1.0 - p_true };
    }
    Factor { vars, table }
}

/// Exact posterior P(query = true | evidence) by variable elimination with a
/// greedy min-degree ordering. Nodes that are not ancestors of the query or
/// the evidence are barren (their factors sum out to one) and are skipped.
pub fn posterior(
    bn: &BayesNet,
    evidence: &BTreeMap<usize, bool>,
    query: usize,
) -> Result<f64, PredictError> {
    if let Some(&value) = evidence.get(&query) {
        return Ok(if value { 1.0 } else { 0.0 });
    }

    let mut relevant: BTreeSet<usize> = BTreeSet::new();
    let mut frontier: Vec<usize> = evidence.keys().copied().chain([query]).collect();
    while let Some(node) = frontier.pop() {
        if relevant.insert(node) {
            frontier.extend(bn.nodes[node].parents.iter().copied());
        }
    }

    let mut factors: Vec<Factor> = relevant
        .iter()
        .map(|&n| {
            let mut factor = node_factor(bn, n);
            for (&var, &value) in evidence {
                factor = factor.restrict(var, value);
            }
            factor
        })
        .collect();

    let mut to_eliminate: BTreeSet<usize> = relevant
        .iter()
        .copied()
        .filter(|n| *n != query && !evidence.contains_key(n))
        .collect();

    while let Some(var) = pick_min_degree(&factors, &to_eliminate) {
        to_eliminate.remove(&var);
        let (touching, rest): (Vec<Factor>, Vec<Factor>) =
            factors.into_iter().partition(|f| f.vars.contains(&var));
        let product = touching
            .into_iter()
            .fold(Factor::constant(1.0), |acc, f| acc.multiply(&f));
        factors = rest;
        factors.push(product.sum_out(var));
    }

    let joint = factors
        .into_iter()
        .fold(Factor::constant(1.0), |acc, f| acc.multiply(&f));
    let p_true = joint.restrict(query, true).table[0];
    let p_false = joint.restrict(query, false).table[0];
    let z = p_true + p_false;
    if z <= 0.0 {
        return Err(PredictError::EvidenceConflict);
    }
    Ok(p_true / z)
}

/// Smallest resulting clique first; deterministic tie-break by variable id.
fn pick_min_degree(factors: &[Factor], candidates: &BTreeSet<usize>) -> Option<usize> {
    candidates
        .iter()
        .map(|&var| {
            let clique: BTreeSet<usize> = factors
                .iter()
                .filter(|f| f.vars.contains(&var))
                .flat_map(|f| f.vars.iter().copied())
                .collect();
            (clique.len(), var)
        })
        .min()
        .map(|(_, var)| var)
}

/// Full-joint enumeration oracle (exponential; intended for nets of at most
/// ~20 nodes in tests). Returns None when the evidence has zero probability.
pub fn joint_posterior(
    bn: &BayesNet,
    evidence: &BTreeMap<usize, bool>,
    query: usize,
) -> Option<f64> {
    let n = bn.nodes.len();
    assert!(n <= 22, "joint enumeration is for small nets");
    let order = topological(bn);
    let mut p_query_true = 0.0;
    let mut p_evidence = 0.0;
    for mask in 0u64..(1 << n) {
        let value = |id: usize| mask >> id & 1 == 1;
        if evidence.iter().any(|(&var, &v)| value(var) != v) {
            continue;
        }
        let mut p = 1.0;
        for &node in &order {
            let parent_values: Vec<bool> =
                bn.nodes[node].parents.iter().map(|&x| value(x)).collect();
            let p_true = bn.p_true_given(node, &parent_values);
            p *= if value(node) { p_true } else { 1.0 - p_true };
            if p == 0.0 {
                break;
            }
        }
        p_evidence += p;
        if value(query) {
            p_query_true += p;
        }
    }
    (p_evidence > 0.0).then(|| p_query_true / p_evidence)
}

fn topological(bn: &BayesNet) -> Vec<usize> {
    let n = bn.nodes.len();
    let mut indegree: Vec<usize> = bn.nodes.iter().map(|x| x.parents.len()).collect();
    let mut order = Vec::with_capacity(n);
    let mut queue: BTreeSet<usize> = (0..n).filter(|&i| indegree[i] == 0).collect();
    while let Some(&next) = queue.iter().next() {
        queue.remove(&next);
        order.push(next);
        for child in bn.children(next) {
            indegree[child] -= 1;
            if indegree[child] == 0 {
                queue.insert(child);
            }
        }
    }
    order
}

// ---------------------------------------------------------------------------
// Next-step prediction

pub const DEFAULT_ENABLING_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct RankedStep {
    pub transition: usize,
    pub label: String,
    pub posterior: f64,
}

#[derive(Debug, Clone)]
pub struct PredictedNext {
    pub transition: usize,
    pub label: String,
    pub posterior: f64,
    /// The step's assessed risk (the pinned value when pins are active);
    /// what the report displays alongside the prediction flag.
    pub displayed_pr: f64,
}

#[derive(Debug, Clone)]
pub struct Prediction {
    /// Unfired steps in descending posterior order, ties by transition id.
    pub ranking: Vec<RankedStep>,
    /// Best-ranked unfired step whose input conditions all reach the
    /// enabling threshold.
    pub predicted_next: Option<PredictedNext>,
}

/// Ranks unfired steps after conditioning on the correlation outcome: every
/// fired step and its output conditions become true evidence.
pub fn predict_next(
    bn: &BayesNet,
    result: &CorrelationResult,
    enabling_threshold: f64,
) -> Result<Prediction, PredictError> {
    let mut evidence: BTreeMap<usize, bool> = BTreeMap::new();
    for step in &result.steps {
        if step.fired {
            evidence.insert(step.ag_node, true);
            for child in bn.children(step.ag_node) {
                evidence.insert(child, true);
            }
        }
    }

    let mut posterior_cache: BTreeMap<usize, f64> = BTreeMap::new();
    let mut posterior_of = |node: usize| -> Result<f64, PredictError> {
        if let Some(&p) = posterior_cache.get(&node) {
            return Ok(p);
        }
        let p = posterior(bn, &evidence, node)?;
        posterior_cache.insert(node, p);
        Ok(p)
    };

    let mut ranking = Vec::new();
    let mut enabled: BTreeMap<usize, bool> = BTreeMap::new();
    for step in &result.steps {
        if step.fired {
            continue;
        }
        let p = posterior_of(step.ag_node)?;
        ranking.push(RankedStep {
            transition: step.transition,
            label: step.label.clone(),
            posterior: p,
        });
        let mut ok = true;
        for parent in bn.nodes[step.ag_node].parents.clone() {
            if posterior_of(parent)? < enabling_threshold {
                ok = false;
                break;
            }
        }
        enabled.insert(step.transition, ok);
    }
    ranking.sort_by(|a, b| {
        b.posterior
            .partial_cmp(&a.posterior)
            .unwrap()
            .then(a.transition.cmp(&b.transition))
    });

    let predicted_next = ranking
        .iter()
        .find(|r| enabled.get(&r.transition).copied().unwrap_or(false))
        .map(|r| {
            let step = result
                .steps
                .iter()
                .find(|s| s.transition == r.transition)
                .expect("ranked step exists");
            PredictedNext {
                transition: r.transition,
                label: r.label.clone(),
                posterior: r.posterior,
                displayed_pr: step.risk,
            }
        });

    Ok(Prediction {
        ranking,
        predicted_next,
    })
}
