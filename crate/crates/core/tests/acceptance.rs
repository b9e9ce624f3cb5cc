//! Acceptance suite: one test per release criterion, each printing a
//! PASS line with the measured evidence. Run with
//! `cargo test -p stagecraft-core --test acceptance -- --nocapture`.

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::time::Instant;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use stagecraft_core::attack_graph::{assess_risk, build_attack_graph, AgNodeKind, AttackGraph};
use stagecraft_core::correlate::{
    brute_force_with_uniqueness, correlate, replay_is_sound, AlertEvent, ObservationInstance,
};
use stagecraft_core::datalog::{evaluate, naive, parse_rules, replay_trace, DerivationTrace, Rule};
use stagecraft_core::facts::{Fact, FactBase};
use stagecraft_core::hcpn::{HcpnModel, ObservationNode, Place, Transition};
use stagecraft_core::pipeline::{run_pipeline, AlertSource, RunConfig};
use stagecraft_core::predict::{build_bn, joint_posterior, posterior};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn campaign_config() -> RunConfig {
    let mut config = RunConfig::new(
        fixture("case_study.toml"),
        AlertSource::File(fixture("case_study_alerts.log")),
    );
    config.rules = Some(fixture("case_study_rules.dl"));
    config
}

fn base_of(facts: &[Fact]) -> FactBase {
    FactBase {
        facts: facts.iter().cloned().collect(),
        source_revision: 0,
    }
}

fn trace(rule: &str, p: f64, premises: &[Fact], derived: Fact) -> DerivationTrace {
    DerivationTrace {
        derived,
        rule_label: rule.to_string(),
        premises: premises.to_vec(),
        bindings: BTreeMap::new(),
        local_probability: p,
        emits: Vec::new(),
    }
}

// ---------------------------------------------------------------------------
// Criterion 1: Table 1 reproduction (qualitative, exact)

#[test]
fn criterion_1_published_table_reproduction() {
    let artifacts = run_pipeline(&campaign_config()).unwrap();
    let rows = &artifacts.report.rows;

    let expected: [(&str, f64, bool, bool); 13] = [
        (
            "Exploit Vulnerabilities of Web Services",
            0.30,
            false,
            false,
        ),
        ("Access Credential Data for VPN", 0.53, false, false),
        ("VPN Server Configuration Compromised", 0.13, false, false),
        ("Insider Attack", 0.33, false, false),
        ("Dictionary Attack", 0.30, true, false),
        ("Access to DSR Platform", 0.26, true, false),
        ("Escalation of Privileges", 0.25, true, false),
        ("Remote Control of DSR Platform", 0.61, false, false),
        ("Theft of Personal Data", 0.61, false, false),
        ("Manipulation of Smart Meter Data", 0.96, true, false),
        ("Manipulation of Historical Data", 0.24, false, false),
        ("Manipulation of Future Forecast Data", 0.06, false, false),
        ("Sending Grid Harmful Control Commands", 0.93, false, true),
    ];
    assert_eq!(rows.len(), expected.len(), "one row per published step");
    for (row, (step, pr, fired, predicted)) in rows.iter().zip(expected.iter()) {
        assert_eq!(row.attack_step, *step);
        let shown = format!("{:.2}", row.pr);
        let want = format!("{:.2}", pr);
        assert_eq!(shown, want, "{step}: Pr {shown} != {want}");
        assert_eq!(row.fired, *fired, "{step}: A_a flag");
        assert_eq!(row.predicted, *predicted, "{step}: A_p flag");
    }
    println!("criterion 1 (published-table reproduction): PASS (13 rows, 4 fired, 1 predicted)");
}

// ---------------------------------------------------------------------------
// Criterion 2: Pr computation properties with pins disabled

#[test]
fn criterion_2_unpinned_risk_properties() {
    let mut config = campaign_config();
    config.pin_risks = false;
    let artifacts = run_pipeline(&config).unwrap();
    let graph = &artifacts.graph;

    for node in &graph.nodes {
        let risk = node.risk.unwrap();
        assert!((0.0..=1.0).contains(&risk), "{}: risk {risk}", node.label);
        match node.kind {
            AgNodeKind::Rule => {
                for p in graph.parents(node.id) {
                    assert!(
                        risk <= graph.nodes[p].risk.unwrap() + 1e-12,
                        "AND node {} above premise",
                        node.label
                    );
                }
            }
            AgNodeKind::Derived => {
                for p in graph.parents(node.id) {
                    assert!(
                        risk >= graph.nodes[p].risk.unwrap() - 1e-12,
                        "OR node {} below alternative",
                        node.label
                    );
                }
            }
            AgNodeKind::Fact => {}
        }
    }

    let pr_of = |label: &str| {
        artifacts
            .report
            .rows
            .iter()
            .find(|r| r.attack_step == label)
            .unwrap()
            .pr
    };
    let smd = pr_of("Manipulation of Smart Meter Data");
    assert!(smd > pr_of("Manipulation of Historical Data"));
    assert!(smd > pr_of("Manipulation of Future Forecast Data"));

    // And with its supporting observation in the stream, the posterior
    // ranking under the correlation evidence agrees: the smart-meter step
    // dominates the other two manipulation branches (fired steps count as
    // certain).
    let posterior_of = |label: &str| -> f64 {
        let step = artifacts
            .correlation
            .steps
            .iter()
            .find(|s| s.label == label)
            .unwrap();
        if step.fired {
            1.0
        } else {
            artifacts
                .prediction
                .ranking
                .iter()
                .find(|r| r.label == label)
                .unwrap()
                .posterior
        }
    };
    let smd_posterior = posterior_of("Manipulation of Smart Meter Data");
    assert!(smd_posterior > posterior_of("Manipulation of Historical Data"));
    assert!(smd_posterior > posterior_of("Manipulation of Future Forecast Data"));
    println!(
        "criterion 2 (unpinned Pr properties): PASS (smd {:.3} > hist {:.3}, forecast {:.3})",
        smd,
        pr_of("Manipulation of Historical Data"),
        pr_of("Manipulation of Future Forecast Data")
    );
}

// ---------------------------------------------------------------------------
// Criterion 3: correlator oracle equivalence on randomized nets

/// Random layered net in the shape build_hcpn produces: marked base places,
/// transitions consuming at most a few places and producing fresh derived
/// places, observation nodes attached per transition.
fn random_model(rng: &mut ChaCha8Rng) -> HcpnModel {
    let transition_count = rng.gen_range(3..=12);
    let base_count = rng.gen_range(2..=4);
    let indicator_alphabet = ["alpha", "beta", "gamma", "delta", "epsilon"];

    let mut places: Vec<Place> = (0..base_count)
        .map(|i| Place {
            id: i,
            label: format!("base{i}"),
            marked: true,
        })
        .collect();
    let mut transitions: Vec<Transition> = Vec::new();
    let mut observations: Vec<ObservationNode> = Vec::new();

    for t in 0..transition_count {
        let mut inputs: Vec<usize> = Vec::new();
        inputs.push(rng.gen_range(0..base_count));
        // Sometimes depend on an earlier transition's output.
        if t > 0 && rng.gen_bool(0.7) {
            let producer = rng.gen_range(0..t);
            inputs.extend(transitions[producer].outputs.iter().copied());
        }
        inputs.sort_unstable();
        inputs.dedup();
        let output = places.len();
        places.push(Place {
            id: output,
            label: format!("derived{t}"),
            marked: false,
        });
        let emits: Vec<String> = (0..rng.gen_range(0..=2))
            .map(|_| indicator_alphabet[rng.gen_range(0..indicator_alphabet.len())].to_string())
            .collect();
        for indicator in &emits {
            observations.push(ObservationNode {
                id: observations.len(),
                indicator_type: indicator.clone(),
                emission: rng.gen_range(0.5..0.95),
                transition: t,
                detector: "gen".to_string(),
            });
        }
        transitions.push(Transition {
            id: t,
            label: format!("t{t}"),
            risk: rng.gen_range(0.05..0.98),
            inputs,
            outputs: vec![output],
            ag_node: t,
            target_host: Some("host".to_string()),
            emits,
        });
    }
    let noise = transitions.len();
    transitions.push(Transition {
        id: noise,
        label: "benign activity".to_string(),
        risk: 1.0,
        inputs: vec![],
        outputs: vec![],
        ag_node: usize::MAX,
        target_host: None,
        emits: vec![],
    });

    HcpnModel {
        places,
        transitions,
        observations,
        noise_transition: noise,
        false_positive_rate: rng.gen_range(0.02..0.10),
        miss_penalty: rng.gen_range(0.15..0.5),
        source_revision: 0,
        unmapped_indicators: vec![],
    }
}

fn random_observations(rng: &mut ChaCha8Rng, model: &HcpnModel) -> Vec<ObservationInstance> {
    let indicator_alphabet = ["alpha", "beta", "gamma", "delta", "epsilon", "zeta"];
    let n = rng.gen_range(0..=8);
    (0..n)
        .map(|order_index| {
            let indicator =
                indicator_alphabet[rng.gen_range(0..indicator_alphabet.len())].to_string();
            let candidates: Vec<usize> = model
                .observations
                .iter()
                .filter(|o| o.indicator_type == indicator)
                .map(|o| o.id)
                .collect();
            ObservationInstance {
                alert: AlertEvent {
                    timestamp: order_index as i64 * 1000,
                    detector: "gen".to_string(),
                    indicator_type: indicator,
                    subject: "host".to_string(),
                    attributes: BTreeMap::new(),
                },
                candidates,
                order_index,
            }
        })
        .collect()
}

#[test]
fn criterion_3_correlator_matches_exhaustive_oracle() {
    let started = Instant::now();
    let mut unique_checked = 0usize;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = random_model(&mut rng);
        let observations = random_observations(&mut rng, &model);

        let fast = correlate(&model, &observations).unwrap();
        let (oracle, unique) =
            brute_force_with_uniqueness(&model, &observations, model.noise_transition).unwrap();

        assert!(
            (fast.log_likelihood - oracle.log_likelihood).abs() < 1e-9,
            "seed {seed}: dp {} vs oracle {} (fired {:?} vs {:?})",
            fast.log_likelihood,
            oracle.log_likelihood,
            fast.fired_sequence,
            oracle.fired_sequence
        );
        if unique {
            unique_checked += 1;
            assert_eq!(
                fast.fired_sequence, oracle.fired_sequence,
                "seed {seed}: fired sets differ at unique optimum"
            );
        }
        assert!(
            replay_is_sound(&model, &fast),
            "seed {seed}: unsound replay"
        );
        let assigned: usize = fast.steps.iter().map(|s| s.support.len()).sum();
        assert_eq!(assigned + fast.noise_assignments.len(), observations.len());

        // Order consistency: supports ascend within a step, and across the
        // fired sequence the earliest supports never decrease.
        let mut last_first = 0usize;
        for &t in &fast.fired_sequence {
            let support = &fast.steps[t].support;
            assert!(support.windows(2).all(|w| w[0] < w[1]));
            if let Some(&first) = support.first() {
                assert!(first >= last_first, "seed {seed}: retroactive support");
                last_first = first;
            }
        }

        // Empirical O(m^2 n) bound on DP cell updates.
        let m = model.noise_transition as u64 + 1;
        let n = observations.len() as u64 + 1;
        assert!(
            fast.operations <= 24 * m * m * n,
            "seed {seed}: {} ops above bound",
            fast.operations
        );
    }
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs() < 60, "oracle sweep took {elapsed:?}");
    println!(
        "criterion 3 (correlator oracle equivalence): PASS (200 instances, {unique_checked} unique optima, {:.2}s)",
        elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// Criterion 4: Datalog semi-naive vs naive on randomized programs

fn random_program(rng: &mut ChaCha8Rng) -> (Vec<Rule>, FactBase) {
    let predicate_count = rng.gen_range(2..=6);
    let arities: Vec<usize> = (0..predicate_count).map(|_| rng.gen_range(1..=3)).collect();
    let constants = ["c0", "c1", "c2", "c3", "c4", "c5", "c6", "c7"];

    let fact_count = rng.gen_range(1..=40);
    let mut facts = BTreeSet::new();
    for _ in 0..fact_count {
        let p = rng.gen_range(0..predicate_count);
        let args: Vec<String> = (0..arities[p])
            .map(|_| constants[rng.gen_range(0..constants.len())].to_string())
            .collect();
        facts.insert(Fact {
            predicate: format!("p{p}"),
            args,
        });
    }

    let variables = ["X", "Y", "Z", "W"];
    let rule_count = rng.gen_range(1..=6);
    let mut lines = Vec::new();
    for r in 0..rule_count {
        let body_len = rng.gen_range(1..=3);
        let mut body_terms: Vec<String> = Vec::new();
        let mut body_vars: Vec<&str> = Vec::new();
        for _ in 0..body_len {
            let p = rng.gen_range(0..predicate_count);
            let terms: Vec<String> = (0..arities[p])
                .map(|_| {
                    if rng.gen_bool(0.6) {
                        let v = variables[rng.gen_range(0..variables.len())];
                        body_vars.push(v);
                        v.to_string()
                    } else {
                        constants[rng.gen_range(0..constants.len())].to_string()
                    }
                })
                .collect();
            body_terms.push(format!("p{p}({})", terms.join(", ")));
        }
        let hp = rng.gen_range(0..predicate_count);
        let head_terms: Vec<String> = (0..arities[hp])
            .map(|_| {
                if !body_vars.is_empty() && rng.gen_bool(0.7) {
                    body_vars[rng.gen_range(0..body_vars.len())].to_string()
                } else {
                    constants[rng.gen_range(0..constants.len())].to_string()
                }
            })
            .collect();
        lines.push(format!(
            "r{r}: p{hp}({}) :- {}",
            head_terms.join(", "),
            body_terms.join(", ")
        ));
    }
    let rules = parse_rules(&lines.join("\n")).unwrap();
    (
        rules,
        FactBase {
            facts,
            source_revision: 0,
        },
    )
}

#[test]
fn criterion_4_datalog_seminaive_equals_naive() {
    let mut total_derived = 0usize;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
        let (rules, base) = random_program(&mut rng);
        let fast = evaluate(&rules, &base).unwrap();
        let slow = naive::evaluate(&rules, &base).unwrap();
        assert_eq!(fast.derived, slow, "seed {seed}: fixpoints differ");
        total_derived += fast.derived.len();

        // Coarse termination bound: |constants|^max_arity * |predicates|.
        assert!(
            fast.iterations <= 8usize.pow(3) * 6,
            "seed {seed}: {} rounds",
            fast.iterations
        );

        let mut available: BTreeSet<Fact> = base.facts.clone();
        available.extend(fast.derived.iter().cloned());
        for trace in &fast.traces {
            assert!(
                replay_trace(trace, &rules, &available),
                "seed {seed}: trace does not replay: {trace:?}"
            );
        }
        for fact in &fast.derived {
            assert!(
                fast.traces.iter().any(|t| &t.derived == fact),
                "seed {seed}: derived fact without trace"
            );
        }
    }
    println!("criterion 4 (datalog correctness): PASS (50 programs, {total_derived} derived facts replayed)");
}

// ---------------------------------------------------------------------------
// Criterion 5: risk propagation on hand-computed fixtures

#[test]
fn criterion_5_risk_recurrence_hand_values() {
    let tol = 1e-12;
    // Chain: fact(1.0) -> rule 0.8 -> d1 -> rule 0.9 -> d2.
    let f = Fact::new("cond", &["a"]);
    let d1 = Fact::new("mid", &["a"]);
    let d2 = Fact::new("top", &["a"]);
    let chain = assess(
        &[
            trace("first", 0.8, &[f.clone()], d1.clone()),
            trace("second", 0.9, &[d1], d2.clone()),
        ],
        &base_of(&[f.clone()]),
        &BTreeMap::new(),
    );
    assert_close(&chain, "mid(a)", 0.8, tol);
    assert_close(&chain, "top(a)", 0.72, tol);

    // Diamond: two rules (0.7 / 0.6) derive the same condition from one
    // leaf; noisy-OR = 0.88; a 0.5 rule on top gives 0.44.
    let d = Fact::new("goal", &["a"]);
    let top = Fact::new("beyond", &["a"]);
    let diamond = assess(
        &[
            trace("left", 0.7, &[f.clone()], d.clone()),
            trace("right", 0.6, &[f.clone()], d.clone()),
            trace("cap", 0.5, &[d], top),
        ],
        &base_of(&[f.clone()]),
        &BTreeMap::new(),
    );
    assert_close(&diamond, "goal(a)", 0.88, tol);
    assert_close(&diamond, "beyond(a)", 0.44, tol);

    // Two goals: a shared leaf plus a CVSS-weighted vulnerability leaf.
    let vuln = Fact::new("vuln_exists", &["h", "cve-q", "s", "remote", "code_exec"]);
    let g1 = Fact::new("left_goal", &["a"]);
    let g2 = Fact::new("right_goal", &["a"]);
    let scores = BTreeMap::from([("cve-q".to_string(), 6.0)]);
    let two_goal = assess(
        &[
            trace("one", 0.25, &[f.clone()], g1),
            trace("two", 0.9, &[f.clone(), vuln.clone()], g2),
        ],
        &base_of(&[f, vuln]),
        &scores,
    );
    assert_close(&two_goal, "left_goal(a)", 0.25, tol);
    assert_close(&two_goal, "right_goal(a)", 0.54, tol);
    assert_eq!(two_goal.goals.len(), 2);
    println!("criterion 5 (risk propagation fixtures): PASS (chain 0.72, diamond 0.88/0.44, goals 0.25/0.54)");
}

fn assess(
    traces: &[DerivationTrace],
    base: &FactBase,
    scores: &BTreeMap<String, f64>,
) -> AttackGraph {
    let graph = build_attack_graph(traces, base).unwrap();
    assess_risk(&graph, scores, &BTreeMap::new()).unwrap()
}

fn assert_close(graph: &AttackGraph, label: &str, expected: f64, tol: f64) {
    let got = graph
        .nodes
        .iter()
        .find(|n| n.label == label)
        .unwrap()
        .risk
        .unwrap();
    assert!((got - expected).abs() < tol, "{label}: {got} != {expected}");
}

// ---------------------------------------------------------------------------
// Criterion 6: Bayesian predictor exactness

fn random_attack_graph(rng: &mut ChaCha8Rng) -> Option<AttackGraph> {
    let leaf_count = rng.gen_range(2..=4);
    let leaves: Vec<Fact> = (0..leaf_count)
        .map(|i| {
            if rng.gen_bool(0.4) {
                Fact::new(
                    "vuln_exists",
                    &[
                        &format!("h{i}"),
                        &format!("cve-{i}"),
                        "s",
                        "remote",
                        "code_exec",
                    ],
                )
            } else {
                Fact::new("cond", &[&format!("c{i}")])
            }
        })
        .collect();
    let mut traces = Vec::new();
    let mut derived: Vec<Fact> = Vec::new();
    let rule_count = rng.gen_range(1..=5);
    for r in 0..rule_count {
        let mut premises: Vec<Fact> = Vec::new();
        premises.push(leaves[rng.gen_range(0..leaves.len())].clone());
        if !derived.is_empty() && rng.gen_bool(0.6) {
            premises.push(derived[rng.gen_range(0..derived.len())].clone());
        }
        // Occasionally re-derive an existing condition for OR structure.
        let conclusion = if !derived.is_empty() && rng.gen_bool(0.3) {
            derived[rng.gen_range(0..derived.len())].clone()
        } else {
            let fresh = Fact::new("cap", &[&format!("d{r}")]);
            derived.push(fresh.clone());
            fresh
        };
        if premises.contains(&conclusion) {
            continue;
        }
        traces.push(trace(
            &format!("rule{r}"),
            rng.gen_range(0.2..0.95),
            &premises,
            conclusion,
        ));
    }
    if traces.is_empty() {
        return None;
    }
    let base = base_of(&leaves);
    let graph = build_attack_graph(&traces, &base).ok()?;
    let scores: BTreeMap<String, f64> = (0..leaf_count)
        .map(|i| (format!("cve-{i}"), rng.gen_range(2.0..9.9)))
        .collect();
    let graph = assess_risk(&graph, &scores, &BTreeMap::new()).ok()?;
    (graph.nodes.len() <= 20 && graph.topological_order().is_some()).then_some(graph)
}

#[test]
fn criterion_6_predictor_matches_full_joint() {
    let mut nets = 0usize;
    let mut queries = 0usize;
    let mut seed = 0u64;
    while nets < 25 {
        seed += 1;
        let mut rng = ChaCha8Rng::seed_from_u64(2000 + seed);
        let Some(graph) = random_attack_graph(&mut rng) else {
            continue;
        };
        let bn = build_bn(&graph).unwrap();
        nets += 1;

        // Evidence: flip one or two derived/rule nodes to true.
        let mut evidence = BTreeMap::new();
        let candidates: Vec<usize> = graph
            .nodes
            .iter()
            .filter(|n| n.kind != AgNodeKind::Fact)
            .map(|n| n.id)
            .collect();
        for _ in 0..rng.gen_range(0..=2) {
            if let Some(&node) = candidates.get(rng.gen_range(0..candidates.len().max(1))) {
                evidence.insert(node, true);
            }
        }

        for node in 0..bn.nodes.len() {
            if evidence.contains_key(&node) {
                continue;
            }
            let exact = posterior(&bn, &evidence, node);
            let oracle = joint_posterior(&bn, &evidence, node);
            match (exact, oracle) {
                (Ok(p), Some(q)) => {
                    assert!(
                        (p - q).abs() < 1e-9,
                        "seed {seed} node {node}: ve {p} vs joint {q}"
                    );
                    queries += 1;
                }
                (Err(_), None) => {} // both detected conflicting evidence
                (a, b) => panic!("seed {seed} node {node}: disagree on conflict: {a:?} vs {b:?}"),
            }
        }
    }

    // Case-study prediction lands on the harmful-commands step with the
    // published displayed probability.
    let artifacts = run_pipeline(&campaign_config()).unwrap();
    let next = artifacts.prediction.predicted_next.as_ref().unwrap();
    assert_eq!(next.label, "Sending Grid Harmful Control Commands");
    assert_eq!(format!("{:.2}", next.displayed_pr), "0.93");
    println!("criterion 6 (predictor exactness): PASS ({nets} nets, {queries} posteriors, next-step 0.93)");
}

// ---------------------------------------------------------------------------
// Criterion 7: scale and latency envelope

#[test]
fn criterion_7_scale_and_latency() {
    // Scale counts use the generic rule library over the bundled scenario.
    let mut generic = campaign_config();
    generic.rules = None;
    generic.pin_risks = false;
    let started = Instant::now();
    let artifacts = run_pipeline(&generic).unwrap();
    let generic_elapsed = started.elapsed();

    let counts = &artifacts.report.model_counts;
    assert_eq!(counts.kb_nodes, 232, "kb nodes");
    assert!(
        (688..=1032).contains(&counts.facts),
        "facts {} outside 860 +/- 20%",
        counts.facts
    );
    assert!(
        (159..=237).contains(&counts.hcpn_nodes),
        "hcpn nodes {} outside 198 +/- 20%",
        counts.hcpn_nodes
    );

    // Full campaign pipeline stays far inside the 10 s detection envelope.
    let started = Instant::now();
    let _ = run_pipeline(&campaign_config()).unwrap();
    let campaign_elapsed = started.elapsed();
    assert!(
        generic_elapsed.as_secs_f64() <= 10.0,
        "generic run {generic_elapsed:?}"
    );
    assert!(
        campaign_elapsed.as_secs_f64() <= 10.0,
        "campaign run {campaign_elapsed:?}"
    );
    println!(
        "criterion 7 (scale/latency): PASS (kb {} facts {} hcpn {}, runs {:.2}s/{:.2}s <= 10s)",
        counts.kb_nodes,
        counts.facts,
        counts.hcpn_nodes,
        generic_elapsed.as_secs_f64(),
        campaign_elapsed.as_secs_f64()
    );
}

// ---------------------------------------------------------------------------
// Criterion 8: robustness against unmatched alert streams

#[test]
fn criterion_8_unmatched_streams_decode_to_noise() {
    let events: Vec<AlertEvent> = (0..6)
        .map(|i| AlertEvent {
            timestamp: 1_755_600_000_000 + i * 1000,
            detector: "net-ids-dsr".to_string(),
            indicator_type: "dns_tunnel".to_string(),
            subject: "dsr-platform".to_string(),
            attributes: BTreeMap::new(),
        })
        .collect();
    let mut config = campaign_config();
    config.alerts = AlertSource::Events(events);
    let artifacts = run_pipeline(&config).unwrap();
    assert!(artifacts.correlation.fired_sequence.is_empty());
    assert_eq!(artifacts.correlation.noise_assignments.len(), 6);
    assert!(artifacts.report.rows.iter().all(|r| !r.fired));
    println!("criterion 8 (robustness): PASS (6 unmatched alerts, all noise, no fired steps)");
}
