use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ProtocolError;
use crate::dataset::{Frame, Species};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireFrame {
    pub species: Vec<Species>,
    pub positions: Vec<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub forces: Option<Vec<[f64; 3]>>,
}

impl WireFrame {
    /// Positions, energy and forces.
    pub fn labeled(frame: &Frame) -> Self {
        Self {
            species: frame.species.clone(),
            positions: frame.positions.clone(),
            energy: Some(frame.energy),
            forces: Some(frame.forces.clone()),
        }
    }

    /// Positions only, for prediction requests.
    pub fn unlabeled(frame: &Frame) -> Self {
        Self { species: frame.species.clone(), positions: frame.positions.clone(), energy: None, forces: None }
    }
}

/// Training hints. External models honor the loss weights and seed and may
/// ignore `ridge_lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireTrainConfig {
    pub energy_weight: f64,
    pub force_weight: f64,
    pub seed: u64,
    pub ridge_lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReportWire {
    pub sample_count: usize,
    #[serde(flatten)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello {
        protocol_version: String,
        model_name: String,
        #[serde(default)]
        capabilities: Vec<String>,
    },
    Train {
        train_frames: Vec<WireFrame>,
        config: WireTrainConfig,
    },
    TrainProgress {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        fraction: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        message: Option<String>,
    },
    TrainDone {
        fit_report: FitReportWire,
    },
    Predict {
        request_id: u64,
        frames: Vec<WireFrame>,
    },
    /// `null` entries stand for non-finite values and are rejected.
    Prediction {
        request_id: u64,
        energies: Vec<Option<f64>>,
        forces: Vec<Vec<[Option<f64>; 3]>>,
    },
    Error {
        code: String,
        message: String,
    },
    Shutdown {},
}

impl Message {
    pub fn kind(&self) -> &'static str {
        match self {
            Message::Hello { .. } => "hello",
            Message::Train { .. } => "train",
            Message::TrainProgress { .. } => "train_progress",
            Message::TrainDone { .. } => "train_done",
            Message::Predict { .. } => "predict",
            Message::Prediction { .. } => "prediction",
            Message::Error { .. } => "error",
            Message::Shutdown {} => "shutdown",
        }
    }
}

/// One JSON document followed by `\n`.
pub fn encode_line(message: &Message) -> String {
    let mut line = serde_json::to_string(message).expect("protocol messages serialize");
    line.push('\n');
    line
}

/// Decodes one line, reading bare `NaN` and `Infinity` tokens as `null`.
pub fn decode_line(line: &str) -> Result<Message, ProtocolError> {
    let text = sanitize_non_finite(line.trim_end_matches(['\r', '\n']));
    serde_json::from_str(&text).map_err(|e| ProtocolError::Malformed { reason: e.to_string() })
}

/// Replaces the non-standard tokens `NaN`, `Infinity` and `-Infinity`
/// outside string literals with `null`.
pub fn sanitize_non_finite(line: &str) -> String {
    let bytes = line.as_bytes();
    let mut out = String::with_capacity(line.len());
    let mut in_string = false;
    let mut escaped = false;
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        if in_string {
            if escaped {
                escaped = false;
            } else if c == b'\\' {
                escaped = true;
            } else if c == b'"' {
                in_string = false;
            }
        } else if c == b'"' {
            in_string = true;
        } else {
            let rest = &line[i..];
            let token = ["-Infinity", "Infinity", "NaN"].into_iter().find(|t| rest.starts_with(t));
            if let Some(t) = token {
                out.push_str("null");
                i += t.len();
                continue;
            }
        }
        // Copy one whole UTF-8 sequence.
        let width = utf8_width(c);
        out.push_str(&line[i..i + width]);
        i += width;
    }
    out
}

fn utf8_width(first: u8) -> usize {
    match first {
        0x00..=0x7f => 1,
        0xc0..=0xdf => 2,
        0xe0..=0xef => 3,
        _ => 4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tagged_layout() {
        assert_eq!(encode_line(&Message::Shutdown {}), "{\"type\":\"shutdown\"}\n");
        let hello = Message::Hello { protocol_version: "1".into(), model_name: "m".into(), capabilities: vec![] };
        assert_eq!(
            encode_line(&hello),
            "{\"type\":\"hello\",\"protocol_version\":\"1\",\"model_name\":\"m\",\"capabilities\":[]}\n"
        );
        assert_eq!(decode_line(&encode_line(&hello)).unwrap(), hello);
    }

    #[test]
    fn nan_tokens_become_null() {
        let line = r#"{"type":"prediction","request_id":1,"energies":[NaN],"forces":[[[1.0,-Infinity,Infinity]]]}"#;
        match decode_line(line).unwrap() {
            Message::Prediction { energies, forces, .. } => {
                assert_eq!(energies, vec![None]);
                assert_eq!(forces, vec![vec![[Some(1.0), None, None]]]);
            }
            other => panic!("{other:?}"),
        }
        assert_eq!(sanitize_non_finite(r#"{"message":"NaN \"Infinity\" é"}"#), r#"{"message":"NaN \"Infinity\" é"}"#);
    }

    #[test]
    fn malformed_and_unknown() {
        assert!(matches!(decode_line("not json"), Err(ProtocolError::Malformed { .. })));
        assert!(matches!(decode_line(r#"{"type":"dance"}"#), Err(ProtocolError::Malformed { .. })));
    }

    #[test]
    fn floats_round_trip_bit_exactly() {
        let values = [0.1, -1.0 / 3.0, 1e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.30000000000000004];
        let frame = WireFrame {
            species: vec![Species::H; 2],
            positions: vec![[values[0], values[1], values[2]], [values[3], values[4], values[5]]],
            energy: Some(-1.0 / 7.0),
            forces: None,
        };
        let msg = Message::Predict { request_id: 9, frames: vec![frame] };
        let back = decode_line(&encode_line(&msg)).unwrap();
        assert_eq!(back, msg);
    }
}
