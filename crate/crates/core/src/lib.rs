//! Reconstruction of multi-stage attack campaigns from heterogeneous detector
//! alerts.
//!
//! The pipeline: a typed infrastructure knowledge graph is loaded from a
//! scenario document, ground facts are extracted from it, a positive Datalog
//! program derives attacker capabilities, the derivation traces are assembled
//! into an AND/OR attack graph with per-step risk probabilities, the graph is
//! converted into an observation-emitting Petri net, detector alerts are
//! decoded into the most likely attack-action sequence by dynamic programming,
//! and a Bayesian network over the same structure ranks likely next steps.

pub mod attack_graph;
pub mod correlate;
pub mod datalog;
pub mod facts;
pub mod hcpn;
pub mod kg;
pub mod pipeline;
pub mod predict;
pub mod scenario;

pub use attack_graph::{AgNode, AgNodeKind, AttackGraph};
pub use correlate::{AlertEvent, CorrelationResult, ObservationInstance};
pub use datalog::{DerivationTrace, Rule};
pub use facts::{Fact, FactBase};
pub use hcpn::HcpnModel;
pub use kg::{KgEdge, KgNode, KnowledgeGraph, NodeKind, Relation};
pub use pipeline::{CorrelationReport, RunConfig};
pub use predict::{BayesNet, Prediction};
pub use scenario::ScenarioDoc;
