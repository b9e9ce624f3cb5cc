use std::collections::BTreeMap;
use std::path::PathBuf;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use stagecraft_core::correlate::{correlate, AlertEvent, ObservationInstance};
use stagecraft_core::datalog::{evaluate, parse_rules, DEFAULT_RULES};
use stagecraft_core::facts::extract_facts;
use stagecraft_core::hcpn::{HcpnModel, ObservationNode, Place, Transition};
use stagecraft_core::pipeline::{load_inputs, run_pipeline, AlertSource, RunConfig};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/fixtures")
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

/// Capability chain with `m` steps: step t consumes condition t and
/// establishes condition t+1; every step carries one observation arc.
fn synthetic_model(m: usize, rng: &mut ChaCha8Rng) -> HcpnModel {
    let mut places = vec![Place {
        id: 0,
        label: "entry".into(),
        marked: true,
    }];
    let mut observations = Vec::new();
    for t in 0..m {
        places.push(Place {
            id: t + 1,
            label: format!("cond{t}"),
            marked: false,
        });
        observations.push(ObservationNode {
            id: observations.len(),
            indicator_type: format!("ind{}", t % 7),
            emission: rng.gen_range(0.6..0.95),
            transition: t,
            detector: "bench".into(),
        });
    }
    let mut transitions: Vec<Transition> = (0..m)
        .map(|t| Transition {
            id: t,
            label: format!("t{t}"),
            risk: rng.gen_range(0.1..0.95),
            inputs: vec![t],
            outputs: vec![t + 1],
            ag_node: t,
            target_host: Some("host".into()),
            emits: vec![format!("ind{}", t % 7)],
        })
        .collect();
    let noise = transitions.len();
    transitions.push(Transition {
        id: noise,
        label: "benign activity".into(),
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
        false_positive_rate: 0.05,
        miss_penalty: 0.3,
        source_revision: 0,
        unmapped_indicators: vec![],
    }
}

fn synthetic_observations(
    model: &HcpnModel,
    n: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<ObservationInstance> {
    (0..n)
        .map(|order_index| {
            let indicator = format!("ind{}", rng.gen_range(0..9));
            let candidates: Vec<usize> = model
                .observations
                .iter()
                .filter(|o| o.indicator_type == indicator)
                .map(|o| o.id)
                .collect();
            ObservationInstance {
                alert: AlertEvent {
                    timestamp: order_index as i64,
                    detector: "bench".into(),
                    indicator_type: indicator,
                    subject: "host".into(),
                    attributes: BTreeMap::new(),
                },
                candidates,
                order_index,
            }
        })
        .collect()
}

fn bench_datalog(c: &mut Criterion) {
    let (_, kg, _) = load_inputs(&fixture("case_study.toml"), None).unwrap();
    let facts = extract_facts(&kg).unwrap();
    let rules = parse_rules(DEFAULT_RULES).unwrap();
    c.bench_function("datalog_default_library_fixpoint", |b| {
        b.iter(|| evaluate(&rules, &facts).unwrap())
    });
}

fn bench_correlate(c: &mut Criterion) {
    let mut group = c.benchmark_group("correlate");
    for &(m, n) in &[(13usize, 5usize), (32, 24), (64, 48)] {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let model = synthetic_model(m, &mut rng);
        let observations = synthetic_observations(&model, n, &mut rng);
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("m{m}_n{n}")),
            &(model, observations),
            |b, (model, observations)| b.iter(|| correlate(model, observations).unwrap()),
        );
    }
    group.finish();
}

fn bench_pipeline(c: &mut Criterion) {
    let config = campaign_config();
    c.bench_function("full_pipeline_campaign", |b| {
        b.iter(|| run_pipeline(&config).unwrap())
    });
}

criterion_group!(benches, bench_datalog, bench_correlate, bench_pipeline);
criterion_main!(benches);
