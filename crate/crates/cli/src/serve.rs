//! TCP line-protocol server: clients stream alert records (one per line,
//! `timestamp|detector|indicator_type|subject|key=value,...`) into a shared
//! append-only queue; the `REPORT` command decodes the accumulated stream
//! against the prepared model and answers with the machine-format report
//! terminated by a blank line.

use std::io::{BufRead, BufReader, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::{Arc, Mutex};
use std::thread;

use stagecraft_core::correlate::{parse_alert_line, AlertEvent};
use stagecraft_core::pipeline::{
    decode_alerts, prepare_model, render_report, PipelineError, PreparedModel, ReportFormat,
    RunConfig,
};

pub fn serve(config: &RunConfig, port: u16) -> Result<(), PipelineError> {
    let prepared = Arc::new(prepare_model(config)?);
    let queue: Arc<Mutex<Vec<AlertEvent>>> = Arc::new(Mutex::new(Vec::new()));

    let listener = TcpListener::bind(("127.0.0.1", port)).map_err(|e| PipelineError {
        phase: "serve",
        kind: stagecraft_core::pipeline::PipelineErrorKind::Input(format!(
            "cannot bind 127.0.0.1:{port}: {e}"
        )),
    })?;
    let local = listener.local_addr().map(|a| a.port()).unwrap_or(port);
    println!("listening on 127.0.0.1:{local}");

    for stream in listener.incoming() {
        let Ok(stream) = stream else { continue };
        let prepared = Arc::clone(&prepared);
        let queue = Arc::clone(&queue);
        thread::spawn(move || {
            if let Err(e) = handle_connection(stream, &prepared, &queue) {
                eprintln!("connection error: {e}");
            }
        });
    }
    Ok(())
}

fn handle_connection(
    stream: TcpStream,
    prepared: &PreparedModel,
    queue: &Mutex<Vec<AlertEvent>>,
) -> std::io::Result<()> {
    let mut writer = stream.try_clone()?;
    let reader = BufReader::new(stream);
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if line == "REPORT" {
            // Snapshot under the lock, decode outside it.
            let snapshot = queue.lock().expect("queue lock").clone();
            match decode_alerts(prepared, &snapshot) {
                Ok(outcome) => {
                    writer.write_all(
                        render_report(&outcome.report, ReportFormat::Machine).as_bytes(),
                    )?;
                    writer.write_all(b"\n")?;
                }
                Err(e) => {
                    writer.write_all(format!("ERR {e}\n\n").as_bytes())?;
                }
            }
            writer.flush()?;
            continue;
        }
        match parse_alert_line(line, idx + 1) {
            Ok(alert) => queue.lock().expect("queue lock").push(alert),
            Err(e) => {
                writer.write_all(format!("ERR {e}\n").as_bytes())?;
                writer.flush()?;
            }
        }
    }
    Ok(())
}
