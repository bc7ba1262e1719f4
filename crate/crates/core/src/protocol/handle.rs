use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Read, Write};
use std::process::{Child, Command, Stdio};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use super::messages::{decode_line, encode_line, FitReportWire, Message, WireFrame, WireTrainConfig};
use super::{PredictedFrame, ProtocolError, MAX_LINE_BYTES, PROTOCOL_VERSION};
use crate::dataset::Frame;

/// Bytes of the model's standard error kept for diagnostics.
const STDERR_TAIL: usize = 16 * 1024;
/// Grace period for a clean exit after `shutdown`, and for collecting an
/// exit status after end of output.
const EXIT_GRACE: Duration = Duration::from_secs(2);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HandleState {
    Launched,
    Ready,
    Trained,
    Closed,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timeouts {
    pub handshake: Duration,
    pub train: Duration,
    pub predict: Duration,
}

impl Default for Timeouts {
    fn default() -> Self {
        Self { handshake: Duration::from_secs(30), train: Duration::from_secs(3600), predict: Duration::from_secs(600) }
    }
}

/// What the model announced in its `hello`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarnessHello {
    pub model_name: String,
    pub capabilities: Vec<String>,
}

enum ReaderEvent {
    Line(String),
    TooLong(usize),
    Eof,
    Failed(String),
}

/// One external model process driven through
/// `launched -> ready -> trained -> closed`. Any error closes the handle
/// and kills the process.
pub struct ModelHandle {
    command: Vec<String>,
    child: Child,
    writer: Option<Sender<Vec<u8>>>,
    lines: Receiver<ReaderEvent>,
    stderr: Arc<Mutex<VecDeque<u8>>>,
    state: HandleState,
    timeouts: Timeouts,
    max_line_bytes: usize,
    next_request: u64,
}

impl ModelHandle {
    /// Spawns `command` (program then arguments) with piped standard streams.
    pub fn launch(command: &[String], timeouts: Timeouts) -> Result<Self, ProtocolError> {
        let spawn_err = |reason: String| ProtocolError::Spawn { command: command.to_vec(), reason };
        let (program, args) = command.split_first().ok_or_else(|| spawn_err("empty command".into()))?;
        let mut child = Command::new(program)
            .args(args)
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| spawn_err(e.to_string()))?;
        let stdout = child.stdout.take().expect("piped stdout");
        let mut stdin = child.stdin.take().expect("piped stdin");
        let mut stderr = child.stderr.take().expect("piped stderr");
        let max_line_bytes = MAX_LINE_BYTES;

        let (line_tx, lines) = mpsc::channel();
        thread::spawn(move || read_lines(stdout, line_tx, max_line_bytes));

        let (writer, outgoing) = mpsc::channel::<Vec<u8>>();
        thread::spawn(move || {
            for bytes in outgoing {
                if stdin.write_all(&bytes).and_then(|_| stdin.flush()).is_err() {
                    break;
                }
            }
        });

        let tail = Arc::new(Mutex::new(VecDeque::new()));
        let sink = Arc::clone(&tail);
        thread::spawn(move || {
            let mut buf = [0u8; 4096];
            while let Ok(n) = stderr.read(&mut buf) {
                if n == 0 {
                    break;
                }
                let mut t = sink.lock().expect("stderr buffer");
                t.extend(&buf[..n]);
                let excess = t.len().saturating_sub(STDERR_TAIL);
                t.drain(..excess);
            }
        });

        Ok(Self {
            command: command.to_vec(),
            child,
            writer: Some(writer),
            lines,
            stderr: tail,
            state: HandleState::Launched,
            timeouts,
            max_line_bytes,
            next_request: 1,
        })
    }

    pub fn with_max_line_bytes(mut self, cap: usize) -> Self {
        self.max_line_bytes = cap;
        self
    }

    pub fn state(&self) -> HandleState {
        self.state
    }

    pub fn command(&self) -> &[String] {
        &self.command
    }

    /// Exchanges `hello` messages and checks the protocol version.
    pub fn handshake(&mut self) -> Result<HarnessHello, ProtocolError> {
        self.expect_state(HandleState::Launched)?;
        let hello = Message::Hello {
            protocol_version: PROTOCOL_VERSION.into(),
            model_name: "trajbench".into(),
            capabilities: vec![],
        };
        let result = self.send(&hello).and_then(|_| {
            let deadline = Instant::now() + self.timeouts.handshake;
            match self.receive("handshake", deadline, self.timeouts.handshake)? {
                Message::Hello { protocol_version, model_name, capabilities } => {
                    if protocol_version != PROTOCOL_VERSION {
                        return Err(ProtocolError::VersionMismatch { got: protocol_version });
                    }
                    Ok(HarnessHello { model_name, capabilities })
                }
                other => Err(unexpected("hello", other)),
            }
        });
        self.settle(result, HandleState::Ready)
    }

    /// Sends the training frames and waits for `train_done`.
    pub fn train(&mut self, frames: &[&Frame], config: &WireTrainConfig) -> Result<FitReportWire, ProtocolError> {
        self.expect_state(HandleState::Ready)?;
        if frames.is_empty() {
            return Err(ProtocolError::EmptyTrainingSet);
        }
        let message = Message::Train {
            train_frames: frames.iter().map(|f| WireFrame::labeled(f)).collect(),
            config: config.clone(),
        };
        let result = self.send(&message).and_then(|_| {
            let deadline = Instant::now() + self.timeouts.train;
            loop {
                match self.receive("training", deadline, self.timeouts.train)? {
                    Message::TrainProgress { fraction, message } => {
                        debug!("train progress {fraction:?} {}", message.unwrap_or_default());
                    }
                    Message::TrainDone { fit_report } => {
                        if fit_report.sample_count != frames.len() {
                            warn!(
                                "model reports {} training samples, {} were sent",
                                fit_report.sample_count,
                                frames.len()
                            );
                        }
                        return Ok(fit_report);
                    }
                    other => return Err(unexpected("train_done", other)),
                }
            }
        });
        self.settle(result, HandleState::Trained)
    }

    /// Energies and forces for `frames`, shape- and finiteness-checked.
    pub fn predict(&mut self, frames: &[&Frame]) -> Result<Vec<PredictedFrame>, ProtocolError> {
        self.expect_state(HandleState::Trained)?;
        let request_id = self.next_request;
        self.next_request += 1;
        let message = Message::Predict { request_id, frames: frames.iter().map(|f| WireFrame::unlabeled(f)).collect() };
        let result = self.send(&message).and_then(|_| {
            let deadline = Instant::now() + self.timeouts.predict;
            match self.receive("prediction", deadline, self.timeouts.predict)? {
                Message::Prediction { request_id: got, energies, forces } => {
                    if got != request_id {
                        return Err(ProtocolError::RequestIdMismatch { expected: request_id, got });
                    }
                    validate_prediction(frames, energies, forces)
                }
                other => Err(unexpected("prediction", other)),
            }
        });
        self.settle(result, HandleState::Trained)
    }

    /// Asks the model to exit, killing it if it does not within a grace period.
    pub fn shutdown(&mut self) {
        if self.state == HandleState::Closed {
            return;
        }
        let _ = self.send(&Message::Shutdown {});
        self.writer = None;
        let deadline = Instant::now() + EXIT_GRACE;
        while Instant::now() < deadline {
            if let Ok(Some(_)) = self.child.try_wait() {
                self.state = HandleState::Closed;
                return;
            }
            thread::sleep(Duration::from_millis(5));
        }
        self.close();
    }

    fn expect_state(&self, expected: HandleState) -> Result<(), ProtocolError> {
        if self.state != expected {
            return Err(ProtocolError::InvalidState { expected, actual: self.state });
        }
        Ok(())
    }

    fn settle<T>(&mut self, result: Result<T, ProtocolError>, next: HandleState) -> Result<T, ProtocolError> {
        match result {
            Ok(v) => {
                self.state = next;
                Ok(v)
            }
            Err(e) => {
                self.close();
                Err(e)
            }
        }
    }

    fn close(&mut self) {
        self.writer = None;
        let _ = self.child.kill();
        let _ = self.child.wait();
        self.state = HandleState::Closed;
    }

    fn send(&mut self, message: &Message) -> Result<(), ProtocolError> {
        let line = encode_line(message);
        if line.len() > self.max_line_bytes {
            return Err(ProtocolError::LineTooLong { bytes: line.len(), cap: self.max_line_bytes });
        }
        let writer = self.writer.as_ref().ok_or_else(|| ProtocolError::Io("model input is closed".into()))?;
        writer.send(line.into_bytes()).map_err(|_| ProtocolError::Io("model input is closed".into()))
    }

    fn receive(&mut self, phase: &'static str, deadline: Instant, timeout: Duration) -> Result<Message, ProtocolError> {
        let left = deadline.saturating_duration_since(Instant::now());
        match self.lines.recv_timeout(left) {
            Ok(ReaderEvent::Line(line)) => match decode_line(&line)? {
                Message::Error { code, message } => Err(ProtocolError::Model { code, message }),
                m => Ok(m),
            },
            Ok(ReaderEvent::TooLong(bytes)) => Err(ProtocolError::LineTooLong { bytes, cap: self.max_line_bytes }),
            Ok(ReaderEvent::Failed(e)) => Err(ProtocolError::Io(e)),
            Ok(ReaderEvent::Eof) | Err(RecvTimeoutError::Disconnected) => {
                let status = self.exit_status();
                Err(ProtocolError::ProcessExited { phase, status, diagnostics: self.stderr_tail() })
            }
            Err(RecvTimeoutError::Timeout) => Err(ProtocolError::Timeout { phase, timeout }),
        }
    }

    fn exit_status(&mut self) -> Option<i32> {
        let deadline = Instant::now() + EXIT_GRACE;
        while Instant::now() < deadline {
            match self.child.try_wait() {
                Ok(Some(status)) => return status.code(),
                Ok(None) => thread::sleep(Duration::from_millis(5)),
                Err(_) => return None,
            }
        }
        None
    }

    /// Last few kilobytes the model wrote to standard error.
    pub fn stderr_tail(&self) -> String {
        // Give the stderr reader a moment to drain after an exit.
        thread::sleep(Duration::from_millis(20));
        let t = self.stderr.lock().expect("stderr buffer");
        String::from_utf8_lossy(&t.iter().copied().collect::<Vec<u8>>()).into_owned()
    }
}

impl Drop for ModelHandle {
    fn drop(&mut self) {
        if self.state != HandleState::Closed {
            self.close();
        }
    }
}

fn read_lines(stdout: impl Read, tx: Sender<ReaderEvent>, cap: usize) {
    let mut reader = BufReader::new(stdout);
    loop {
        let mut buf = Vec::new();
        let read = (&mut reader).take(cap as u64 + 1).read_until(b'\n', &mut buf);
        let event = match read {
            Ok(0) => ReaderEvent::Eof,
            Ok(_) if buf.len() > cap => ReaderEvent::TooLong(buf.len()),
            Ok(_) if buf.last() != Some(&b'\n') => ReaderEvent::Eof,
            Ok(_) => match String::from_utf8(buf) {
                Ok(line) if line.trim().is_empty() => continue,
                Ok(line) => ReaderEvent::Line(line),
                Err(e) => ReaderEvent::Failed(format!("model output is not UTF-8: {e}")),
            },
            Err(e) => ReaderEvent::Failed(e.to_string()),
        };
        let stop = !matches!(event, ReaderEvent::Line(_));
        if tx.send(event).is_err() || stop {
            return;
        }
    }
}

fn unexpected(expected: &'static str, got: Message) -> ProtocolError {
    ProtocolError::Unexpected { expected, got: got.kind().to_string() }
}

fn validate_prediction(
    frames: &[&Frame],
    energies: Vec<Option<f64>>,
    forces: Vec<Vec<[Option<f64>; 3]>>,
) -> Result<Vec<PredictedFrame>, ProtocolError> {
    if energies.len() != frames.len() || forces.len() != frames.len() {
        return Err(ProtocolError::Shape(format!(
            "{} frames sent, {} energies and {} force blocks returned",
            frames.len(),
            energies.len(),
            forces.len()
        )));
    }
    let finite = |v: Option<f64>, what: &dyn Fn() -> String| match v {
        Some(x) if x.is_finite() => Ok(x),
        _ => Err(ProtocolError::NonFinite(what())),
    };
    let mut out = Vec::with_capacity(frames.len());
    for (i, ((frame, e), block)) in frames.iter().zip(energies).zip(forces).enumerate() {
        if block.len() != frame.len() {
            return Err(ProtocolError::Shape(format!(
                "frame {i} has {} atoms, force block has {} rows",
                frame.len(),
                block.len()
            )));
        }
        let energy = finite(e, &|| format!("energy of frame {i}"))?;
        let mut rows = Vec::with_capacity(block.len());
        for (a, row) in block.into_iter().enumerate() {
            let mut r = [0.0; 3];
            for u in 0..3 {
                r[u] = finite(row[u], &|| format!("force component {u} of atom {a} in frame {i}"))?;
            }
            rows.push(r);
        }
        out.push((energy, rows));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Species;

    fn frame(n: usize) -> Frame {
        Frame {
            species: vec![Species::H; n],
            positions: vec![[0.0; 3]; n],
            energy: 0.0,
            forces: vec![[0.0; 3]; n],
            source_index: 0,
        }
    }

    #[test]
    fn prediction_shapes() {
        let f2 = frame(2);
        let frames = [&f2, &f2, &f2];
        let ok = validate_prediction(&frames, vec![Some(1.0); 3], vec![vec![[Some(0.0); 3]; 2]; 3]).unwrap();
        assert_eq!(ok.len(), 3);
        assert!(matches!(
            validate_prediction(&frames, vec![Some(1.0); 2], vec![vec![[Some(0.0); 3]; 2]; 3]),
            Err(ProtocolError::Shape(_))
        ));
        assert!(matches!(
            validate_prediction(&frames, vec![Some(1.0); 3], vec![vec![[Some(0.0); 3]; 1]; 3]),
            Err(ProtocolError::Shape(_))
        ));
        let mut forces = vec![vec![[Some(0.0); 3]; 2]; 3];
        forces[1][0][2] = None;
        assert!(matches!(validate_prediction(&frames, vec![Some(1.0); 3], forces), Err(ProtocolError::NonFinite(_))));
    }

    #[test]
    fn empty_command_fails_to_launch() {
        assert!(matches!(ModelHandle::launch(&[], Timeouts::default()), Err(ProtocolError::Spawn { .. })));
        let missing = vec!["/nonexistent/adapter-binary".to_string()];
        assert!(matches!(ModelHandle::launch(&missing, Timeouts::default()), Err(ProtocolError::Spawn { .. })));
    }
}
