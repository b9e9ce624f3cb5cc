//! Command-line front end for the attack-campaign reconstruction pipeline.

mod serve;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use stagecraft_core::hcpn::{HcpnConfig, DEFAULT_FALSE_POSITIVE_RATE, DEFAULT_MISS_PENALTY};
use stagecraft_core::pipeline::{
    build_model, load_inputs, render_report, run_pipeline, AlertSource, PipelineError,
    ReportFormat, RunConfig,
};
use stagecraft_core::predict::DEFAULT_ENABLING_THRESHOLD;
use stagecraft_core::scenario::{load_scenario, ScenarioDoc};

const EXIT_INPUT: u8 = 2;
const EXIT_MODEL: u8 = 3;

#[derive(Parser)]
#[command(
    name = "stagecraft",
    about = "Reconstructs multi-stage attack campaigns from detector alerts",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelOpts {
    /// Scenario document (TOML).
    #[arg(long)]
    scenario: PathBuf,
    /// Rule library; the bundled default library when omitted.
    #[arg(long)]
    rules: Option<PathBuf>,
    /// Apply the scenario's pinned risk values (default).
    #[arg(long)]
    pin_risks: bool,
    /// Ignore the scenario's pinned risk values.
    #[arg(long, conflicts_with = "pin_risks")]
    no_pin_risks: bool,
    /// False-positive rate of the noise transition.
    #[arg(long, default_value_t = DEFAULT_FALSE_POSITIVE_RATE)]
    fp_rate: f64,
    /// Penalty probability for a fired but unobserved step.
    #[arg(long, default_value_t = DEFAULT_MISS_PENALTY)]
    miss_penalty: f64,
    /// Posterior threshold a step's preconditions need for prediction.
    #[arg(long, default_value_t = DEFAULT_ENABLING_THRESHOLD)]
    threshold: f64,
}

impl ModelOpts {
    fn pin(&self) -> bool {
        !self.no_pin_risks
    }

    fn hcpn_config(&self) -> HcpnConfig {
        HcpnConfig {
            false_positive_rate: self.fp_rate,
            miss_penalty: self.miss_penalty,
        }
    }

    fn run_config(&self, alerts: AlertSource) -> RunConfig {
        RunConfig {
            scenario: self.scenario.clone(),
            rules: self.rules.clone(),
            alerts,
            pin_risks: self.pin(),
            false_positive_rate: self.fp_rate,
            miss_penalty: self.miss_penalty,
            enabling_threshold: self.threshold,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Check a scenario document against the ontology schema.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the fact base extracted from a scenario.
    Facts {
        #[arg(long)]
        scenario: PathBuf,
    },
    /// Print the assessed attack graph.
    Graph {
        #[command(flatten)]
        opts: ModelOpts,
    },
    /// Print the correlation model (places, transitions, observation arcs).
    Hcpn {
        #[command(flatten)]
        opts: ModelOpts,
    },
    /// Decode an alert stream into the most likely attack sequence.
    Correlate {
        #[command(flatten)]
        opts: ModelOpts,
        /// Alert stream file.
        #[arg(long)]
        alerts: PathBuf,
    },
    /// Rank likely next attack steps given an alert stream.
    Predict {
        #[command(flatten)]
        opts: ModelOpts,
        #[arg(long)]
        alerts: PathBuf,
    },
    /// Run the full pipeline and render the correlation report.
    Run {
        #[command(flatten)]
        opts: ModelOpts,
        #[arg(long)]
        alerts: PathBuf,
        /// Report format.
        #[arg(long, default_value = "text", value_parser = ["text", "machine"])]
        format: String,
    },
    /// Accept alerts over a TCP line protocol and serve reports on demand.
    Serve {
        #[command(flatten)]
        opts: ModelOpts,
        /// Port to listen on (loopback).
        #[arg(long)]
        listen: u16,
    },
}

fn exit_for(err: &PipelineError) -> ExitCode {
    eprintln!("error: {err}");
    if err.is_input_error() {
        ExitCode::from(EXIT_INPUT)
    } else {
        ExitCode::from(EXIT_MODEL)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => code,
        Err(err) => exit_for(&err),
    }
}

fn dispatch(command: Command) -> Result<ExitCode, PipelineError> {
    match command {
        Command::Validate { scenario } => {
            let text = std::fs::read_to_string(&scenario).map_err(|e| {
                input_error("kb_population", format!("{}: {e}", scenario.display()))
            })?;
            let doc = match ScenarioDoc::parse(&text) {
                Ok(doc) => doc,
                Err(e) => {
                    println!("invalid: {e}");
                    return Ok(ExitCode::from(EXIT_INPUT));
                }
            };
            match load_scenario(&doc) {
                Ok(kg) => {
                    println!(
                        "ok: {} nodes, {} edges, 0 violations",
                        kg.node_count(),
                        kg.edge_count()
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(e) => {
                    println!("invalid: {e}");
                    Ok(ExitCode::from(EXIT_INPUT))
                }
            }
        }
        Command::Facts { scenario } => {
            let (_, kg, _) = load_inputs(&scenario, None)?;
            let facts = stagecraft_core::facts::extract_facts(&kg)
                .map_err(|e| input_error("attack_graph_generation", e))?;
            print!("{}", facts.dump());
            Ok(ExitCode::SUCCESS)
        }
        Command::Graph { opts } => {
            let (doc, kg, rules) = load_inputs(&opts.scenario, opts.rules.as_deref())?;
            let (_, _, graph, _) = build_model(&doc, &kg, &rules, opts.pin(), &opts.hcpn_config())?;
            print!("{}", graph.export());
            Ok(ExitCode::SUCCESS)
        }
        Command::Hcpn { opts } => {
            let (doc, kg, rules) = load_inputs(&opts.scenario, opts.rules.as_deref())?;
            let (_, _, _, model) = build_model(&doc, &kg, &rules, opts.pin(), &opts.hcpn_config())?;
            print!("{}", model.export());
            for (detector, indicator) in &model.unmapped_indicators {
                println!("unmapped-indicator {detector} {indicator}");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Correlate { opts, alerts } => {
            let artifacts = run_pipeline(&opts.run_config(AlertSource::File(alerts)))?;
            let correlation = &artifacts.correlation;
            println!("log_likelihood: {:.6}", correlation.log_likelihood);
            for step in &correlation.steps {
                println!(
                    "step {} | {:.2} | {} | support={:?}",
                    step.label,
                    step.risk,
                    if step.fired { "X" } else { "" },
                    step.support
                );
            }
            println!("noise: {:?}", correlation.noise_assignments);
            Ok(ExitCode::SUCCESS)
        }
        Command::Predict { opts, alerts } => {
            let artifacts = run_pipeline(&opts.run_config(AlertSource::File(alerts)))?;
            for ranked in &artifacts.prediction.ranking {
                println!("{:.4} {}", ranked.posterior, ranked.label);
            }
            match &artifacts.prediction.predicted_next {
                Some(next) => {
                    println!(
                        "predicted_next: {} (Pr {:.2})",
                        next.label, next.displayed_pr
                    )
                }
                None => println!("predicted_next: none"),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Run {
            opts,
            alerts,
            format,
        } => {
            let artifacts = run_pipeline(&opts.run_config(AlertSource::File(alerts)))?;
            let format = if format == "machine" {
                ReportFormat::Machine
            } else {
                ReportFormat::Text
            };
            print!("{}", render_report(&artifacts.report, format));
            Ok(ExitCode::SUCCESS)
        }
        Command::Serve { opts, listen } => {
            serve::serve(&opts.run_config(AlertSource::Events(Vec::new())), listen)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn input_error(phase: &'static str, message: impl std::fmt::Display) -> PipelineError {
    PipelineError {
        phase,
        kind: stagecraft_core::pipeline::PipelineErrorKind::Input(message.to_string()),
    }
}
