//! End-to-end wiring: scenario -> facts -> derivation -> attack graph ->
//! correlation model -> alert decoding -> prediction -> report.
//!
//! Each phase is timed with a monotonic clock; the report mirrors the
//! per-step table (one row per attack-step transition with its risk, the
//! fired flag and the predicted-next flag) plus timings and model counts.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::attack_graph::{assess_risk, build_attack_graph, AttackGraph};
use crate::correlate::{
    correlate, map_alerts, parse_alert_stream, AlertEvent, CorrelationResult, ObservationInstance,
};
use crate::datalog::{evaluate, parse_rules, Evaluation, Rule, DEFAULT_RULES};
use crate::facts::{extract_facts, FactBase};
use crate::hcpn::{build_hcpn, HcpnConfig, HcpnModel};
use crate::kg::KnowledgeGraph;
use crate::predict::{build_bn, predict_next, BayesNet, Prediction, DEFAULT_ENABLING_THRESHOLD};
use crate::scenario::{load_scenario, ScenarioDoc};

#[derive(Debug, Clone, PartialEq)]
pub enum AlertSource {
    File(PathBuf),
    Events(Vec<AlertEvent>),
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub scenario: PathBuf,
    /// None uses the bundled default library.
    pub rules: Option<PathBuf>,
    pub alerts: AlertSource,
    /// Apply the scenario's pinned risk values.
    pub pin_risks: bool,
    pub false_positive_rate: f64,
    pub miss_penalty: f64,
    pub enabling_threshold: f64,
}

impl RunConfig {
    pub fn new(scenario: impl Into<PathBuf>, alerts: AlertSource) -> Self {
        RunConfig {
            scenario: scenario.into(),
            rules: None,
            alerts,
            pin_risks: true,
            false_positive_rate: crate::hcpn::DEFAULT_FALSE_POSITIVE_RATE,
            miss_penalty: crate::hcpn::DEFAULT_MISS_PENALTY,
            enabling_threshold: DEFAULT_ENABLING_THRESHOLD,
        }
    }
}

#[derive(Debug, Error)]
pub enum PipelineErrorKind {
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Model(String),
}

#[derive(Debug, Error)]
#[error("{phase}: {kind}")]
pub struct PipelineError {
    pub phase: &'static str,
    pub kind: PipelineErrorKind,
}

impl PipelineError {
    fn input(phase: &'static str, message: impl fmt::Display) -> Self {
        PipelineError {
            phase,
            kind: PipelineErrorKind::Input(message.to_string()),
        }
    }

    fn model(phase: &'static str, message: impl fmt::Display) -> Self {
        PipelineError {
            phase,
            kind: PipelineErrorKind::Model(message.to_string()),
        }
    }

    pub fn is_input_error(&self) -> bool {
        matches!(self.kind, PipelineErrorKind::Input(_))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub attack_step: String,
    pub pr: f64,
    /// A_a: fired during correlation.
    pub fired: bool,
    /// A_p: predicted next step.
    pub predicted: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub kb_population_ms: u64,
    pub attack_graph_generation_ms: u64,
    pub correlation_ms: u64,
    pub report_ms: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ModelCounts {
    pub kb_nodes: usize,
    pub facts: usize,
    pub hcpn_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub rows: Vec<ReportRow>,
    pub timings: Timings,
    pub model_counts: ModelCounts,
}

impl CorrelationReport {
    /// Copy with zeroed timings; the deterministic payload.
    pub fn canonicalized(&self) -> CorrelationReport {
        CorrelationReport {
            rows: self.rows.clone(),
            timings: Timings::default(),
            model_counts: self.model_counts.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Machine,
}

/// Renders the report. Text form prints one `step | pr | A_a | A_p` row per
/// transition with two-decimal probabilities and X/blank flags; machine form
/// is stable JSON.
pub fn render_report(report: &CorrelationReport, format: ReportFormat) -> String {
    match format {
        ReportFormat::Machine => {
            let mut out = serde_json::to_string_pretty(report).expect("report serializes");
            out.push('\n');
            out
        }
        ReportFormat::Text => {
            let mut out = String::from("Attack Step | Pr | A_a | A_p\n");
            for row in &report.rows {
                out.push_str(&format!(
                    "{} | {:.2} | {} | {}\n",
                    row.attack_step,
                    row.pr,
                    if row.fired { "X" } else { "" },
                    if row.predicted { "X" } else { "" },
                ));
            }
            out.push('\n');
            out.push_str(&format!(
                "timings_ms: kb_population={} attack_graph_generation={} correlation={} report={}\n",
                report.timings.kb_population_ms,
                report.timings.attack_graph_generation_ms,
                report.timings.correlation_ms,
                report.timings.report_ms,
            ));
            out.push_str(&format!(
                "counts: kb_nodes={} facts={} hcpn_nodes={}\n",
                report.model_counts.kb_nodes,
                report.model_counts.facts,
                report.model_counts.hcpn_nodes,
            ));
            out
        }
    }
}

pub fn parse_machine_report(text: &str) -> Result<CorrelationReport, serde_json::Error> {
    serde_json::from_str(text)
}

/// Everything the pipeline produced, for callers that need the
/// intermediates as well as the final report.
#[derive(Debug)]
pub struct PipelineArtifacts {
    pub doc: ScenarioDoc,
    pub kg: KnowledgeGraph,
    pub rules: Vec<Rule>,
    pub facts: FactBase,
    pub evaluation: Evaluation,
    pub graph: AttackGraph,
    pub model: HcpnModel,
    pub observations: Vec<ObservationInstance>,
    pub correlation: CorrelationResult,
    pub bayes_net: BayesNet,
    pub prediction: Prediction,
    pub report: CorrelationReport,
}

/// Scenario + rule loading shared by every subcommand.
pub fn load_inputs(
    scenario_path: &Path,
    rules_path: Option<&Path>,
) -> Result<(ScenarioDoc, KnowledgeGraph, Vec<Rule>), PipelineError> {
    let text = std::fs::read_to_string(scenario_path).map_err(|e| {
        PipelineError::input("kb_population", format!("{}: {e}", scenario_path.display()))
    })?;
    let doc = ScenarioDoc::parse(&text).map_err(|e| PipelineError::input("kb_population", e))?;
    let kg = load_scenario(&doc).map_err(|e| PipelineError::input("kb_population", e))?;

    let rules_text = match rules_path {
        Some(path) => std::fs::read_to_string(path).map_err(|e| {
            PipelineError::input(
                "attack_graph_generation",
                format!("{}: {e}", path.display()),
            )
        })?,
        None => DEFAULT_RULES.to_string(),
    };
    let mut rules =
        parse_rules(&rules_text).map_err(|e| PipelineError::input("attack_graph_generation", e))?;
    for rule in &mut rules {
        if let Some(&p) = doc.local_probabilities.get(&rule.label) {
            rule.local_probability = p;
        }
    }
    Ok((doc, kg, rules))
}

/// Builds facts, derivations, the assessed attack graph and the correlation
/// model for a loaded scenario.
pub fn build_model(
    doc: &ScenarioDoc,
    kg: &KnowledgeGraph,
    rules: &[Rule],
    pin_risks: bool,
    hcpn_config: &HcpnConfig,
) -> Result<(FactBase, Evaluation, AttackGraph, HcpnModel), PipelineError> {
    const PHASE: &str = "attack_graph_generation";
    let facts = extract_facts(kg).map_err(|e| PipelineError::input(PHASE, e))?;
    let evaluation = evaluate(rules, &facts).map_err(|e| PipelineError::model(PHASE, e))?;
    let graph = build_attack_graph(&evaluation.traces, &facts)
        .map_err(|e| PipelineError::model(PHASE, e))?;
    let pins = if pin_risks {
        doc.pinned_risk.clone()
    } else {
        Default::default()
    };
    let graph = assess_risk(&graph, &kg.vuln_scores(), &pins)
        .map_err(|e| PipelineError::model(PHASE, e))?;
    let model = build_hcpn(
        &graph,
        &kg.detector_bindings(),
        &kg.host_ids(),
        kg.revision(),
        hcpn_config,
    )
    .map_err(|e| PipelineError::model(PHASE, e))?;
    Ok((facts, evaluation, graph, model))
}

fn load_alerts(source: &AlertSource) -> Result<Vec<AlertEvent>, PipelineError> {
    match source {
        AlertSource::File(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                PipelineError::input("correlation", format!("{}: {e}", path.display()))
            })?;
            parse_alert_stream(&text).map_err(|e| PipelineError::input("correlation", e))
        }
        AlertSource::Events(events) => Ok(events.clone()),
    }
}

fn elapsed_ms(start: Instant) -> u64 {
    start.elapsed().as_millis() as u64
}

/// Model side of the pipeline, reusable across alert batches (the serving
/// path prepares once and decodes per report request).
#[derive(Debug)]
pub struct PreparedModel {
    pub doc: ScenarioDoc,
    pub kg: KnowledgeGraph,
    pub rules: Vec<Rule>,
    pub facts: FactBase,
    pub evaluation: Evaluation,
    pub graph: AttackGraph,
    pub model: HcpnModel,
    pub bayes_net: BayesNet,
    pub enabling_threshold: f64,
    kb_population_ms: u64,
    attack_graph_generation_ms: u64,
}

/// Loads the scenario and rule library and builds every model artifact.
pub fn prepare_model(config: &RunConfig) -> Result<PreparedModel, PipelineError> {
    let t0 = Instant::now();
    let (doc, kg, rules) = load_inputs(&config.scenario, config.rules.as_deref())?;
    let kb_population_ms = elapsed_ms(t0);

    let t1 = Instant::now();
    let hcpn_config = HcpnConfig {
        false_positive_rate: config.false_positive_rate,
        miss_penalty: config.miss_penalty,
    };
    let (facts, evaluation, graph, model) =
        build_model(&doc, &kg, &rules, config.pin_risks, &hcpn_config)?;
    let bayes_net =
        build_bn(&graph).map_err(|e| PipelineError::model("attack_graph_generation", e))?;
    let attack_graph_generation_ms = elapsed_ms(t1);

    Ok(PreparedModel {
        doc,
        kg,
        rules,
        facts,
        evaluation,
        graph,
        model,
        bayes_net,
        enabling_threshold: config.enabling_threshold,
        kb_population_ms,
        attack_graph_generation_ms,
    })
}

/// Decoded outcome of one alert batch against a prepared model.
#[derive(Debug)]
pub struct DecodeOutcome {
    pub observations: Vec<ObservationInstance>,
    pub correlation: CorrelationResult,
    pub prediction: Prediction,
    pub report: CorrelationReport,
}

/// Maps, decodes and predicts over a prepared model, assembling the report.
pub fn decode_alerts(
    prepared: &PreparedModel,
    alerts: &[AlertEvent],
) -> Result<DecodeOutcome, PipelineError> {
    let t2 = Instant::now();
    let observations = map_alerts(&prepared.kg, &prepared.model, alerts)
        .map_err(|e| PipelineError::input("correlation", e))?;
    let correlation = correlate(&prepared.model, &observations)
        .map_err(|e| PipelineError::model("correlation", e))?;
    let prediction = predict_next(
        &prepared.bayes_net,
        &correlation,
        prepared.enabling_threshold,
    )
    .map_err(|e| PipelineError::model("correlation", e))?;
    let correlation_ms = elapsed_ms(t2);

    let t3 = Instant::now();
    let predicted: BTreeSet<usize> = prediction
        .predicted_next
        .iter()
        .map(|p| p.transition)
        .collect();
    let rows: Vec<ReportRow> = correlation
        .steps
        .iter()
        .map(|step| ReportRow {
            attack_step: step.label.clone(),
            pr: step.risk,
            fired: step.fired,
            predicted: predicted.contains(&step.transition),
        })
        .collect();
    let mut report = CorrelationReport {
        rows,
        timings: Timings {
            kb_population_ms: prepared.kb_population_ms,
            attack_graph_generation_ms: prepared.attack_graph_generation_ms,
            correlation_ms,
            report_ms: 0,
        },
        model_counts: ModelCounts {
            kb_nodes: prepared.kg.node_count(),
            facts: prepared.facts.len(),
            hcpn_nodes: prepared.model.node_count(),
        },
    };
    // Time the serialization as the report phase.
    let _ = render_report(&report, ReportFormat::Machine);
    report.timings.report_ms = elapsed_ms(t3);
    Ok(DecodeOutcome {
        observations,
        correlation,
        prediction,
        report,
    })
}

/// Runs the whole pipeline: load, extract, derive, assess, convert, map,
/// decode, predict, and assemble the report.
pub fn run_pipeline(config: &RunConfig) -> Result<PipelineArtifacts, PipelineError> {
    let prepared = prepare_model(config)?;
    let alerts = load_alerts(&config.alerts)?;
    let outcome = decode_alerts(&prepared, &alerts)?;
    Ok(PipelineArtifacts {
        doc: prepared.doc,
        kg: prepared.kg,
        rules: prepared.rules,
        facts: prepared.facts,
        evaluation: prepared.evaluation,
        graph: prepared.graph,
        model: prepared.model,
        observations: outcome.observations,
        correlation: outcome.correlation,
        bayes_net: prepared.bayes_net,
        prediction: outcome.prediction,
        report: outcome.report,
    })
}
