//! Mean-predictor model speaking the subprocess protocol.
//!
//! Predicts the training-set mean energy per atom times the atom count, and
//! zero forces. The failure modes exist to exercise the harness's error
//! handling.

use std::io::{BufRead, Write};
use std::time::Duration;

use trajbench_core::protocol::{decode_line, encode_line, FitReportWire, Message, PROTOCOL_VERSION};

pub const MODEL_NAME: &str = "mean-predictor";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum FailureMode {
    None,
    /// Answers hello with protocol version "2".
    WrongVersion,
    /// Never answers hello.
    Silent,
    /// Exits with status 3 after receiving the training set.
    ExitDuringTrain,
    /// Reports a NaN force component.
    NanForce,
    /// Answers predictions with the wrong request id.
    WrongRequestId,
    /// Returns one energy too few.
    ShortPrediction,
    /// Sleeps instead of finishing training.
    Hang,
}

#[derive(Debug, Default)]
struct State {
    mean_energy_per_atom: Option<f64>,
}

/// Serves requests from `input` until `shutdown` or end of input.
pub fn serve(
    input: impl BufRead,
    mut output: impl Write,
    mut diagnostics: impl Write,
    mode: FailureMode,
) -> std::io::Result<()> {
    let mut state = State::default();
    let send = |out: &mut dyn Write, m: &Message| -> std::io::Result<()> {
        out.write_all(encode_line(m).as_bytes())?;
        out.flush()
    };
    for line in input.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let message = match decode_line(&line) {
            Ok(m) => m,
            Err(e) => {
                writeln!(diagnostics, "bad request: {e}")?;
                send(&mut output, &Message::Error { code: "bad_request".into(), message: e.to_string() })?;
                continue;
            }
        };
        match message {
            Message::Hello { .. } => {
                if mode == FailureMode::Silent {
                    continue;
                }
                let version = if mode == FailureMode::WrongVersion { "2" } else { PROTOCOL_VERSION };
                send(
                    &mut output,
                    &Message::Hello {
                        protocol_version: version.into(),
                        model_name: MODEL_NAME.into(),
                        capabilities: vec!["energy".into(), "forces".into()],
                    },
                )?;
            }
            Message::Train { train_frames, .. } => {
                match mode {
                    FailureMode::ExitDuringTrain => {
                        writeln!(diagnostics, "mean-predictor: simulated crash during training")?;
                        std::process::exit(3);
                    }
                    FailureMode::Hang => {
                        std::thread::sleep(Duration::from_secs(3600));
                    }
                    _ => {}
                }
                if train_frames.is_empty() {
                    send(
                        &mut output,
                        &Message::Error { code: "bad_request".into(), message: "no training frames".into() },
                    )?;
                    continue;
                }
                let mut per_atom = Vec::with_capacity(train_frames.len());
                for f in &train_frames {
                    match f.energy {
                        Some(e) => per_atom.push(e / f.species.len() as f64),
                        None => {
                            send(
                                &mut output,
                                &Message::Error {
                                    code: "bad_request".into(),
                                    message: "training frame without energy".into(),
                                },
                            )?;
                            per_atom.clear();
                            break;
                        }
                    }
                }
                if per_atom.is_empty() {
                    continue;
                }
                let mean = per_atom.iter().sum::<f64>() / per_atom.len() as f64;
                state.mean_energy_per_atom = Some(mean);
                send(&mut output, &Message::TrainProgress { fraction: Some(1.0), message: None })?;
                let mut extra = std::collections::BTreeMap::new();
                extra.insert("mean_energy_per_atom".to_string(), serde_json::json!(mean));
                send(
                    &mut output,
                    &Message::TrainDone { fit_report: FitReportWire { sample_count: train_frames.len(), extra } },
                )?;
            }
            Message::Predict { request_id, frames } => {
                let Some(mean) = state.mean_energy_per_atom else {
                    send(
                        &mut output,
                        &Message::Error { code: "not_trained".into(), message: "predict before train".into() },
                    )?;
                    continue;
                };
                let mut energies: Vec<Option<f64>> =
                    frames.iter().map(|f| Some(mean * f.species.len() as f64)).collect();
                let mut forces: Vec<Vec<[Option<f64>; 3]>> =
                    frames.iter().map(|f| vec![[Some(0.0); 3]; f.species.len()]).collect();
                let mut request_id = request_id;
                match mode {
                    FailureMode::NanForce => {
                        if let Some(row) = forces.first_mut().and_then(|b| b.first_mut()) {
                            row[0] = None;
                        }
                    }
                    FailureMode::WrongRequestId => request_id += 1000,
                    FailureMode::ShortPrediction => {
                        energies.pop();
                    }
                    _ => {}
                }
                send(&mut output, &Message::Prediction { request_id, energies, forces })?;
            }
            Message::Shutdown {} => return Ok(()),
            other => {
                send(
                    &mut output,
                    &Message::Error {
                        code: "bad_request".into(),
                        message: format!("unexpected `{}` message", other.kind()),
                    },
                )?;
            }
        }
    }
    Ok(())
}
