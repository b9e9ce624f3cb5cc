//! Alert-to-action correlation: binds raw detector alerts to observation
//! nodes of the net and decodes the most likely attack path by dynamic
//! programming.
//!
//! Hypothesis space (the "attack path" model): an ordered sequence of
//! distinct transitions where the first needs no derived input and every
//! derived input of a later step was produced by its immediate predecessor
//! or is initially marked, plus an assignment of each observation to the
//! step that was current when it arrived, or to noise. Observations never
//! support steps retroactively, which keeps the table two-dimensional and
//! the runtime O(m^2 n). `brute_force_correlate` searches the same space
//! exhaustively and must agree exactly; that equality is the acceptance gate
//! for the reconstruction.
//!
//! Scoring, in log space: each fired step contributes ln(risk) and a miss
//! penalty that its first supporting observation refunds; every supporting
//! observation adds ln(emission); every noise observation adds ln(fp rate).

#![allow(clippy::needless_range_loop)] // the DP tables index transitions by id throughout

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::hcpn::HcpnModel;
use crate::kg::{KnowledgeGraph, NodeKind};

/// A raw detector record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertEvent {
    /// Milliseconds since epoch.
    pub timestamp: i64,
    pub detector: String,
    pub indicator_type: String,
    /// Host id or IP address.
    pub subject: String,
    #[serde(default)]
    pub attributes: BTreeMap<String, String>,
}

#[derive(Debug, Error)]
pub enum AlertParseError {
    #[error("alert line {line}: {message}")]
    Malformed { line: usize, message: String },
}

/// Parses one `timestamp|detector|indicator_type|subject|key=value,...` record.
pub fn parse_alert_line(text: &str, line_no: usize) -> Result<AlertEvent, AlertParseError> {
    let mut parts = text.splitn(5, '|');
    let mut next = |what: &str| {
        parts
            .next()
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .ok_or_else(|| AlertParseError::Malformed {
                line: line_no,
                message: format!("missing {what}"),
            })
    };
    let timestamp: i64 = next("timestamp")?
        .parse()
        .map_err(|_| AlertParseError::Malformed {
            line: line_no,
            message: "timestamp must be integer milliseconds".to_string(),
        })?;
    if timestamp < 0 {
        return Err(AlertParseError::Malformed {
            line: line_no,
            message: "timestamp must be non-negative".to_string(),
        });
    }
    let detector = next("detector")?;
    let indicator_type = next("indicator_type")?;
    let subject = next("subject")?;
    let mut attributes = BTreeMap::new();
    if let Some(tail) = parts.next() {
        for pair in tail.split(',').filter(|s| !s.is_empty()) {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| AlertParseError::Malformed {
                    line: line_no,
                    message: format!("attribute `{pair}` is not key=value"),
                })?;
            attributes.insert(k.to_string(), v.to_string());
        }
    }
    Ok(AlertEvent {
        timestamp,
        detector,
        indicator_type,
        subject,
        attributes,
    })
}

/// Parses a newline-delimited alert stream; blank lines and `#` comments are
/// skipped.
pub fn parse_alert_stream(text: &str) -> Result<Vec<AlertEvent>, AlertParseError> {
    let mut out = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        out.push(parse_alert_line(line, idx + 1)?);
    }
    Ok(out)
}

/// An alert bound to the observation nodes it may have come from. Empty
/// candidates are fine: such alerts can only map to noise.
#[derive(Debug, Clone, Serialize)]
pub struct ObservationInstance {
    pub alert: AlertEvent,
    pub candidates: Vec<usize>,
    pub order_index: usize,
}

#[derive(Debug, Error)]
pub enum CorrelateError {
    #[error("unknown detector: {0}")]
    UnknownDetector(String),
    #[error("observation {index} references node {node} absent from the model")]
    ModelMismatch { index: usize, node: usize },
    #[error("instance too large for exhaustive search: {transitions} transitions, {observations} observations")]
    TooLarge {
        transitions: usize,
        observations: usize,
    },
}

/// Binds alerts to candidate observation nodes by indicator type and target
/// host. Alerts are ordered by timestamp, ties by arrival.
pub fn map_alerts(
    kg: &KnowledgeGraph,
    model: &HcpnModel,
    alerts: &[AlertEvent],
) -> Result<Vec<ObservationInstance>, CorrelateError> {
    for alert in alerts {
        let known = kg
            .node(&alert.detector)
            .map(|n| n.kind == NodeKind::Detector)
            .unwrap_or(false);
        if !known {
            return Err(CorrelateError::UnknownDetector(alert.detector.clone()));
        }
    }
    let mut ordered: Vec<(usize, &AlertEvent)> = alerts.iter().enumerate().collect();
    ordered.sort_by_key(|(arrival, alert)| (alert.timestamp, *arrival));

    let mut out = Vec::with_capacity(alerts.len());
    for (order_index, (_, alert)) in ordered.into_iter().enumerate() {
        let subject_host = kg.resolve_host(&alert.subject);
        let candidates: Vec<usize> = model
            .observations
            .iter()
            .filter(|obs| {
                obs.indicator_type == alert.indicator_type
                    && subject_host.is_some()
                    && model.transitions[obs.transition].target_host == subject_host
            })
            .map(|obs| obs.id)
            .collect();
        out.push(ObservationInstance {
            alert: alert.clone(),
            candidates,
            order_index,
        });
    }
    Ok(out)
}

/// One row of the correlation outcome; steps cover every non-noise
/// transition of the model in id order.
#[derive(Debug, Clone, Serialize)]
pub struct CorrelationStep {
    pub transition: usize,
    /// Mirrored attack-graph rule node, shared with the Bayesian net.
    pub ag_node: usize,
    pub label: String,
    pub risk: f64,
    /// The A_a flag: fired in the decoded sequence.
    pub fired: bool,
    /// Supporting observation order indices, ascending.
    pub support: Vec<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CorrelationResult {
    pub steps: Vec<CorrelationStep>,
    /// Fired transitions in firing order.
    pub fired_sequence: Vec<usize>,
    /// Observation order indices mapped to the noise transition, ascending.
    pub noise_assignments: Vec<usize>,
    pub log_likelihood: f64,
    /// DP cell updates, for the complexity bound check.
    pub operations: u64,
}

impl CorrelationResult {
    pub fn fired_labels(&self) -> Vec<&str> {
        self.fired_sequence
            .iter()
            .map(|&t| self.steps[t].label.as_str())
            .collect()
    }
}

/// Emission of observation `o` towards transition `t`: the best matching
/// candidate arc, if any.
fn emission(model: &HcpnModel, obs: &ObservationInstance, transition: usize) -> Option<f64> {
    obs.candidates
        .iter()
        .map(|&c| &model.observations[c])
        .filter(|node| node.transition == transition)
        .map(|node| node.emission)
        .fold(None, |acc, e| Some(acc.map_or(e, |a: f64| a.max(e))))
}

/// Chain predecessors of each non-noise transition: `None` marks the start
/// (no derived inputs), `Some(t')` means every derived input of the
/// transition is initially marked or produced by `t'`.
fn predecessors(model: &HcpnModel) -> Vec<Vec<Option<usize>>> {
    let initial = model.initial_marking();
    let m = model.noise_transition;
    let mut preds: Vec<Vec<Option<usize>>> = vec![Vec::new(); m];
    for t in 0..m {
        let needed: BTreeSet<usize> = model.transitions[t]
            .inputs
            .iter()
            .copied()
            .filter(|p| !initial.contains(p))
            .collect();
        if needed.is_empty() {
            // Root-enabled steps open chains. They never appear mid-chain:
            // that keeps the predecessor relation acyclic on nets derived
            // from acyclic attack graphs, so chains cannot revisit a step
            // and the table needs no visited-set dimension.
            preds[t].push(None);
            continue;
        }
        for other in 0..m {
            if other == t {
                continue;
            }
            let outputs: BTreeSet<usize> =
                model.transitions[other].outputs.iter().copied().collect();
            if needed.is_subset(&outputs) {
                preds[t].push(Some(other));
            }
        }
    }
    preds
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Score {
    log_likelihood: f64,
    risk_sum: f64,
}

impl Score {
    const UNREACHABLE: Score = Score {
        log_likelihood: f64::NEG_INFINITY,
        risk_sum: 0.0,
    };

    fn better_than(&self, other: &Score) -> bool {
        // Higher likelihood wins; ties prefer the riskier (more committed)
        // hypothesis, matching the oracle's deterministic ordering.
        self.log_likelihood > other.log_likelihood
            || (self.log_likelihood == other.log_likelihood && self.risk_sum > other.risk_sum)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Move {
    Origin,
    /// Consumed the observation at `j-1` as noise; previous state had same t/s.
    Noise {
        from: State,
    },
    /// Assigned the observation at `j-1` to this transition.
    Assign {
        from: State,
    },
    /// Fired this transition from a predecessor state at the same j.
    Fire {
        from: State,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum State {
    Start { j: usize },
    At { t: usize, j: usize, supported: bool },
}

struct Tables {
    n: usize,
    start: Vec<(Score, Move)>,
    cells: Vec<(Score, Move)>,
}

impl Tables {
    fn new(m: usize, n: usize) -> Self {
        Tables {
            n,
            start: vec![(Score::UNREACHABLE, Move::Origin); n + 1],
            cells: vec![(Score::UNREACHABLE, Move::Origin); m * (n + 1) * 2],
        }
    }

    fn idx(&self, t: usize, j: usize, supported: bool) -> usize {
        (t * (self.n + 1) + j) * 2 + supported as usize
    }

    fn get(&self, state: State) -> (Score, Move) {
        match state {
            State::Start { j } => self.start[j],
            State::At { t, j, supported } => self.cells[self.idx(t, j, supported)],
        }
    }

    /// Updates a cell when the score improves. Fire moves demand a strict
    /// likelihood gain (never a tie-break-only gain), which rules out
    /// backpointer cycles through zero-cost firing loops.
    fn offer(&mut self, state: State, score: Score, mv: Move, ops: &mut u64) -> bool {
        *ops += 1;
        let slot = match state {
            State::Start { j } => &mut self.start[j],
            State::At { t, j, supported } => {
                let idx = self.idx(t, j, supported);
                &mut self.cells[idx]
            }
        };
        let accept = if matches!(mv, Move::Fire { .. }) {
            score.log_likelihood > slot.0.log_likelihood
        } else {
            score.better_than(&slot.0)
        };
        if accept {
            *slot = (score, mv);
            true
        } else {
            false
        }
    }
}

/// Decodes the most likely attack path and observation assignment. Exact
/// over the chain hypothesis space; ties resolved deterministically by
/// (likelihood, total risk, iteration order).
pub fn correlate(
    model: &HcpnModel,
    observations: &[ObservationInstance],
) -> Result<CorrelationResult, CorrelateError> {
    debug_assert!(
        observations
            .windows(2)
            .all(|w| w[0].order_index <= w[1].order_index),
        "observations must arrive ordered by order_index"
    );
    for obs in observations {
        if let Some(&bad) = obs
            .candidates
            .iter()
            .find(|&&c| c >= model.observations.len())
        {
            return Err(CorrelateError::ModelMismatch {
                index: obs.order_index,
                node: bad,
            });
        }
    }

    let m = model.noise_transition;
    let n = observations.len();
    let log_fp = model.false_positive_rate.ln();
    let log_miss = model.miss_penalty.ln();
    let preds = predecessors(model);

    let mut tables = Tables::new(m, n);
    let mut ops: u64 = 0;
    tables.offer(
        State::Start { j: 0 },
        Score {
            log_likelihood: 0.0,
            risk_sum: 0.0,
        },
        Move::Origin,
        &mut ops,
    );

    for j in 0..=n {
        // Firing closure at this observation boundary: chains can extend by
        // several steps between observations. Bounded by m rounds since each
        // useful chain visits distinct transitions.
        for _round in 0..m {
            let mut changed = false;
            for t in 0..m {
                let fire_cost = model.transitions[t].risk.ln() + log_miss;
                for &pred in &preds[t] {
                    let from_states: &[State] = match pred {
                        None => &[State::Start { j }],
                        Some(p) => &[
                            State::At {
                                t: p,
                                j,
                                supported: false,
                            },
                            State::At {
                                t: p,
                                j,
                                supported: true,
                            },
                        ],
                    };
                    for &from in from_states {
                        let (score, _) = tables.get(from);
                        if score.log_likelihood == f64::NEG_INFINITY {
                            continue;
                        }
                        let next = Score {
                            log_likelihood: score.log_likelihood + fire_cost,
                            risk_sum: score.risk_sum + model.transitions[t].risk,
                        };
                        changed |= tables.offer(
                            State::At {
                                t,
                                j,
                                supported: false,
                            },
                            next,
                            Move::Fire { from },
                            &mut ops,
                        );
                    }
                }
            }
            if !changed {
                break;
            }
        }

        if j == n {
            break;
        }

        // Consume observation j: noise everywhere, assignment where matched.
        let obs = &observations[j];
        let start_state = State::Start { j };
        let (score, _) = tables.get(start_state);
        if score.log_likelihood > f64::NEG_INFINITY {
            tables.offer(
                State::Start { j: j + 1 },
                Score {
                    log_likelihood: score.log_likelihood + log_fp,
                    risk_sum: score.risk_sum,
                },
                Move::Noise { from: start_state },
                &mut ops,
            );
        }
        for t in 0..m {
            let em = emission(model, obs, t);
            for supported in [false, true] {
                let from = State::At { t, j, supported };
                let (score, _) = tables.get(from);
                if score.log_likelihood == f64::NEG_INFINITY {
                    continue;
                }
                tables.offer(
                    State::At {
                        t,
                        j: j + 1,
                        supported,
                    },
                    Score {
                        log_likelihood: score.log_likelihood + log_fp,
                        risk_sum: score.risk_sum,
                    },
                    Move::Noise { from },
                    &mut ops,
                );
                if let Some(em) = em {
                    // First support refunds the pre-charged miss penalty.
                    let refund = if supported { 0.0 } else { -log_miss };
                    tables.offer(
                        State::At {
                            t,
                            j: j + 1,
                            supported: true,
                        },
                        Score {
                            log_likelihood: score.log_likelihood + em.ln() + refund,
                            risk_sum: score.risk_sum,
                        },
                        Move::Assign { from },
                        &mut ops,
                    );
                }
            }
        }
    }

    // Best final state.
    let mut best_state = State::Start { j: n };
    let mut best = tables.get(best_state).0;
    for t in 0..m {
        for supported in [false, true] {
            let state = State::At { t, j: n, supported };
            let score = tables.get(state).0;
            if score.better_than(&best) {
                best = score;
                best_state = state;
            }
        }
    }

    // Walk the backpointers.
    let mut fired_rev: Vec<usize> = Vec::new();
    let mut support: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut noise: Vec<usize> = Vec::new();
    let mut cursor = best_state;
    loop {
        let (_, mv) = tables.get(cursor);
        match mv {
            Move::Origin => break,
            Move::Noise { from } => {
                let j = match from {
                    State::Start { j } | State::At { j, .. } => j,
                };
                noise.push(j);
                cursor = from;
            }
            Move::Assign { from } => {
                let (t, j) = match (cursor, from) {
                    (State::At { t, .. }, State::At { j, .. }) => (t, j),
                    _ => unreachable!("assign moves stay on a transition"),
                };
                support.entry(t).or_default().push(j);
                cursor = from;
            }
            Move::Fire { from } => {
                if let State::At { t, .. } = cursor {
                    fired_rev.push(t);
                }
                cursor = from;
            }
        }
    }
    fired_rev.reverse();
    noise.reverse();
    for indices in support.values_mut() {
        indices.reverse();
    }

    let fired_set: BTreeSet<usize> = fired_rev.iter().copied().collect();
    let steps: Vec<CorrelationStep> = (0..m)
        .map(|t| CorrelationStep {
            transition: t,
            ag_node: model.transitions[t].ag_node,
            label: model.transitions[t].label.clone(),
            risk: model.transitions[t].risk,
            fired: fired_set.contains(&t),
            support: support.get(&t).cloned().unwrap_or_default(),
        })
        .collect();

    let log_likelihood = if best.log_likelihood == f64::NEG_INFINITY {
        0.0
    } else {
        best.log_likelihood
    };
    Ok(CorrelationResult {
        steps,
        fired_sequence: fired_rev,
        noise_assignments: noise,
        log_likelihood,
        operations: ops,
    })
}

/// Exhaustive search over the same hypothesis space, for verification.
/// Enumerates every chain of distinct transitions (depth-first over the
/// predecessor relation, capped at `max_len`) and aligns the observation
/// sequence optimally against each chain.
pub fn brute_force_correlate(
    model: &HcpnModel,
    observations: &[ObservationInstance],
    max_len: usize,
) -> Result<CorrelationResult, CorrelateError> {
    brute_force_with_uniqueness(model, observations, max_len).map(|(result, _)| result)
}

/// Like [`brute_force_correlate`], additionally reporting whether the
/// optimal fired chain is unique at the optimal likelihood.
pub fn brute_force_with_uniqueness(
    model: &HcpnModel,
    observations: &[ObservationInstance],
    max_len: usize,
) -> Result<(CorrelationResult, bool), CorrelateError> {
    let m = model.noise_transition;
    let n = observations.len();
    if m > 12 || n > 8 {
        return Err(CorrelateError::TooLarge {
            transitions: m,
            observations: n,
        });
    }
    for obs in observations {
        if let Some(&bad) = obs
            .candidates
            .iter()
            .find(|&&c| c >= model.observations.len())
        {
            return Err(CorrelateError::ModelMismatch {
                index: obs.order_index,
                node: bad,
            });
        }
    }

    let preds = predecessors(model);
    // successors[t] = transitions that may fire right after t; roots fire first.
    let mut roots: Vec<usize> = Vec::new();
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); m];
    for t in 0..m {
        for &pred in &preds[t] {
            match pred {
                None => roots.push(t),
                Some(p) => successors[p].push(t),
            }
        }
    }

    struct Search<'a> {
        model: &'a HcpnModel,
        observations: &'a [ObservationInstance],
        successors: &'a [Vec<usize>],
        max_len: usize,
        best: Score,
        best_chain: Vec<usize>,
        best_assignment: Vec<Option<usize>>,
        distinct_optimum: bool,
    }

    impl Search<'_> {
        fn visit(&mut self, chain: &mut Vec<usize>, in_chain: &mut Vec<bool>) {
            let (score, assignment) = align(self.model, self.observations, chain);
            if score.better_than(&self.best) {
                self.best = score;
                self.best_chain = chain.clone();
                self.best_assignment = assignment;
                self.distinct_optimum = true;
            } else if score.log_likelihood == self.best.log_likelihood
                && chain.iter().ne(self.best_chain.iter())
            {
                self.distinct_optimum = false;
            }
            if chain.len() >= self.max_len {
                return;
            }
            let frontier: Vec<usize> = match chain.last() {
                None => return,
                Some(&last) => self.successors[last].clone(),
            };
            for next in frontier {
                if in_chain[next] {
                    continue;
                }
                chain.push(next);
                in_chain[next] = true;
                self.visit(chain, in_chain);
                in_chain[next] = false;
                chain.pop();
            }
        }
    }

    let mut search = Search {
        model,
        observations,
        successors: &successors,
        max_len,
        best: Score::UNREACHABLE,
        best_chain: Vec::new(),
        best_assignment: vec![None; n],
        distinct_optimum: true,
    };
    // Empty chain: everything is noise.
    let (empty_score, empty_assignment) = align(model, observations, &[]);
    search.best = empty_score;
    search.best_assignment = empty_assignment;

    let mut in_chain = vec![false; m];
    for root in roots {
        if in_chain[root] {
            continue;
        }
        let mut chain = vec![root];
        in_chain[root] = true;
        search.visit(&mut chain, &mut in_chain);
        in_chain[root] = false;
    }

    let fired = search.best_chain.clone();
    let fired_set: BTreeSet<usize> = fired.iter().copied().collect();
    let mut support: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    let mut noise = Vec::new();
    for (j, slot) in search.best_assignment.iter().enumerate() {
        match slot {
            Some(pos) => support.entry(fired[*pos]).or_default().push(j),
            None => noise.push(j),
        }
    }
    let steps: Vec<CorrelationStep> = (0..m)
        .map(|t| CorrelationStep {
            transition: t,
            ag_node: model.transitions[t].ag_node,
            label: model.transitions[t].label.clone(),
            risk: model.transitions[t].risk,
            fired: fired_set.contains(&t),
            support: support.get(&t).cloned().unwrap_or_default(),
        })
        .collect();
    let log_likelihood = if search.best.log_likelihood == f64::NEG_INFINITY {
        0.0
    } else {
        search.best.log_likelihood
    };
    let unique = search.distinct_optimum;
    Ok((
        CorrelationResult {
            steps,
            fired_sequence: fired,
            noise_assignments: noise,
            log_likelihood,
            operations: 0,
        },
        unique,
    ))
}

/// Optimal monotone alignment of the observation sequence against a fixed
/// chain: each observation goes to noise or to a chain position at or after
/// the previous non-noise assignment. Returns the score and, per
/// observation, the chosen chain position.
fn align(
    model: &HcpnModel,
    observations: &[ObservationInstance],
    chain: &[usize],
) -> (Score, Vec<Option<usize>>) {
    let n = observations.len();
    let k = chain.len();
    let log_fp = model.false_positive_rate.ln();
    let log_miss = model.miss_penalty.ln();

    let base: f64 = chain
        .iter()
        .map(|&t| model.transitions[t].risk.ln() + log_miss)
        .sum();
    let risk_sum: f64 = chain.iter().map(|&t| model.transitions[t].risk).sum();

    // value[p] = best extra score with the cursor at chain position p
    // (0 = before any support; positions are 1-based).
    // (previous cursor, assigned chain position) per observation and cursor.
    type BackPointer = Option<(usize, Option<usize>)>;
    let mut value = vec![f64::NEG_INFINITY; k + 1];
    let mut back: Vec<Vec<BackPointer>> = vec![vec![None; k + 1]; n];
    value[0] = 0.0;

    for (j, obs) in observations.iter().enumerate() {
        let mut next = vec![f64::NEG_INFINITY; k + 1];
        for p in 0..=k {
            if value[p] == f64::NEG_INFINITY {
                continue;
            }
            // Noise keeps the cursor.
            let noise_score = value[p] + log_fp;
            if noise_score > next[p] {
                next[p] = noise_score;
                back[j][p] = Some((p, None));
            }
            // Assignment to any position at or after the cursor.
            for q in p.max(1)..=k {
                if let Some(em) = emission(model, obs, chain[q - 1]) {
                    let refund = if q > p { -log_miss } else { 0.0 };
                    let score = value[p] + em.ln() + refund;
                    if score > next[q] {
                        next[q] = score;
                        back[j][q] = Some((p, Some(q - 1)));
                    }
                }
            }
        }
        value = next;
    }

    let (mut cursor, extra) = value
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap().then(a.0.cmp(&b.0)))
        .map(|(p, v)| (p, *v))
        .unwrap();
    if extra == f64::NEG_INFINITY {
        return (Score::UNREACHABLE, vec![None; n]);
    }
    let mut assignment = vec![None; n];
    for j in (0..n).rev() {
        let (prev, assigned) = back[j][cursor].expect("reachable state has backpointer");
        assignment[j] = assigned;
        cursor = prev;
    }
    (
        Score {
            log_likelihood: base + extra,
            risk_sum,
        },
        assignment,
    )
}

/// Replays `result.fired_sequence` from the initial marking; true when every
/// step was enabled when fired.
pub fn replay_is_sound(model: &HcpnModel, result: &CorrelationResult) -> bool {
    let mut marking = model.initial_marking();
    for &t in &result.fired_sequence {
        if !model.enabled(&marking, t) {
            return false;
        }
        marking = model.fire(&marking, t);
    }
    true
}
