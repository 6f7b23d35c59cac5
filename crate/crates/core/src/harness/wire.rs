//! Newline-delimited JSON messages exchanged with a runner over stdio.

use serde::Serialize;
use serde_json::{Map, Value};

use super::HarnessError;

/// Orchestrator to runner.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "cmd", rename_all = "snake_case")]
pub enum Command {
    Load { model: String, input_shape: [u32; 3] },
    Predict { n: u32, data: String },
    Quit,
}

impl Command {
    /// One JSON line, without the trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("commands always serialize")
    }
}

/// Runner to orchestrator.
#[derive(Debug, Clone, PartialEq)]
pub enum Reply {
    Loaded { load_ms: f64 },
    Predicted { wall_ms: f64, outputs: Option<String> },
    Failed { error: String },
}

fn violation(line: &str, reason: impl Into<String>) -> HarnessError {
    HarnessError::ProtocolViolation {
        line: line.to_string(),
        reason: reason.into(),
    }
}

fn duration(line: &str, obj: &Map<String, Value>, key: &str) -> Result<f64, HarnessError> {
    match obj.get(key).and_then(Value::as_f64) {
        Some(ms) if ms.is_finite() && ms >= 0.0 => Ok(ms),
        Some(ms) => Err(violation(line, format!("{key} must be a non-negative number, got {ms}"))),
        None => Err(violation(line, format!("{key} is missing or not a number"))),
    }
}

/// Parses one reply line. Anything that is not one of the three reply
/// shapes is a protocol violation.
pub fn parse_reply(line: &str) -> Result<Reply, HarnessError> {
    let value: Value =
        serde_json::from_str(line).map_err(|e| violation(line, format!("not a JSON object: {e}")))?;
    let Value::Object(obj) = value else {
        return Err(violation(line, "not a JSON object"));
    };
    match obj.get("ok") {
        Some(Value::Bool(false)) => match obj.get("error") {
            Some(Value::String(error)) => Ok(Reply::Failed {
                error: error.clone(),
            }),
            _ => Err(violation(line, "error reply without an error string")),
        },
        Some(Value::Bool(true)) => match (obj.contains_key("load_ms"), obj.contains_key("wall_ms")) {
            (true, false) => Ok(Reply::Loaded {
                load_ms: duration(line, &obj, "load_ms")?,
            }),
            (false, true) => {
                let outputs = match obj.get("outputs") {
                    None | Some(Value::Null) => None,
                    Some(Value::String(p)) => Some(p.clone()),
                    Some(_) => return Err(violation(line, "outputs must be a string")),
                };
                Ok(Reply::Predicted {
                    wall_ms: duration(line, &obj, "wall_ms")?,
                    outputs,
                })
            }
            _ => Err(violation(line, "success reply needs exactly one of load_ms, wall_ms")),
        },
        _ => Err(violation(line, "missing boolean 'ok'")),
    }
}
