//! Message schemas. One JSON object per line, discriminated by `"type"`.

use std::collections::BTreeMap;

use base64::engine::general_purpose::STANDARD;
use base64::Engine as _;
use serde::{Deserialize, Serialize};

use crate::render::Frame;
use crate::sim::WorkspaceState;
use crate::tasks::{task_horizon, variant_applicable, TaskId, VariantKind};

pub const PROTOCOL_VERSION: u32 = 1;

/// Longest accepted message line, in bytes.
pub const MAX_LINE_BYTES: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Message {
    Hello(Hello),
    Reset(Reset),
    Step(Step),
    Keys(Keys),
    Obs(Obs),
    State(StateMsg),
    RecordStart(RecordStart),
    RecordStop(RecordStop),
    Recorded(Recorded),
    Error(ErrorMsg),
}

pub const MESSAGE_TYPES: [&str; 10] = [
    "hello",
    "reset",
    "step",
    "keys",
    "obs",
    "state",
    "record_start",
    "record_stop",
    "recorded",
    "error",
];

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub protocol_version: Option<u32>,
    /// Free-form peer identification.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tasks: Vec<TaskInfo>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskInfo {
    pub name: String,
    pub code: String,
    pub horizon: u32,
    pub variants: Vec<String>,
}

impl TaskInfo {
    pub fn catalogue() -> Vec<TaskInfo> {
        TaskId::ALL
            .into_iter()
            .map(|t| TaskInfo {
                name: t.name().to_string(),
                code: t.code().to_string(),
                horizon: task_horizon(t),
                variants: VariantKind::ALL
                    .into_iter()
                    .filter(|v| variant_applicable(t, *v))
                    .map(|v| v.name().to_string())
                    .collect(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// The client sends `step` messages; no clock.
    #[default]
    Agent,
    /// The server steps at 8 Hz from the latest held keys.
    Teleop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reset {
    pub task: String,
    #[serde(default = "default_variant")]
    pub variant: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_view")]
    pub view: String,
    #[serde(default)]
    pub mode: Mode,
    /// Also stream the other view in `obs.frames`.
    #[serde(default)]
    pub all_views: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<u32>,
}

fn default_variant() -> String {
    "Demo".into()
}

fn default_view() -> String {
    "ego".into()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Step {
    pub action: i64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Keys {
    #[serde(default)]
    pub held: Vec<String>,
    /// Resolved action, filled in by the server's acknowledgement.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obs {
    pub t: u32,
    pub horizon: u32,
    pub done: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score: Option<f64>,
    pub view: String,
    /// Base64 of the newest frame's raw RGB8 bytes (96×96×3, row-major).
    pub frame: String,
    /// Newest frame per view name, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<BTreeMap<String, String>>,
    /// All four stacked frames, oldest first.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stack: Option<Vec<String>>,
    /// Action applied on the step that produced this observation.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub action: Option<u8>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateMsg {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<WorkspaceState>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordStart {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t: Option<u32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RecordStop {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Recorded {
    /// Path relative to the data directory.
    pub path: String,
    pub score: f64,
    pub horizon: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorMsg {
    pub code: ErrorCode,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorCode {
    Malformed,
    UnknownType,
    LineTooLong,
    NotReset,
    EpisodeFinished,
    InvalidAction,
    InvalidParameter,
    UnsupportedVariant,
    WrongMode,
    NotRecording,
    IncompleteEpisode,
    Io,
    Internal,
}

impl Message {
    pub fn error(code: ErrorCode, message: impl Into<String>) -> Message {
        Message::Error(ErrorMsg {
            code,
            message: message.into(),
        })
    }

    pub fn type_name(&self) -> &'static str {
        match self {
            Message::Hello(_) => "hello",
            Message::Reset(_) => "reset",
            Message::Step(_) => "step",
            Message::Keys(_) => "keys",
            Message::Obs(_) => "obs",
            Message::State(_) => "state",
            Message::RecordStart(_) => "record_start",
            Message::RecordStop(_) => "record_stop",
            Message::Recorded(_) => "recorded",
            Message::Error(_) => "error",
        }
    }

    /// Serializes without a trailing newline.
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("messages serialize")
    }
}

/// Parses one line, classifying failures into wire error messages.
pub fn parse_message(line: &str) -> Result<Message, ErrorMsg> {
    let malformed = |m: String| ErrorMsg {
        code: ErrorCode::Malformed,
        message: m,
    };
    let value: serde_json::Value = serde_json::from_str(line).map_err(|e| malformed(format!("invalid JSON: {e}")))?;
    let ty = value
        .get("type")
        .and_then(|t| t.as_str())
        .map(str::to_owned)
        .ok_or_else(|| malformed("missing string field \"type\"".into()))?;
    if !MESSAGE_TYPES.contains(&ty.as_str()) {
        return Err(ErrorMsg {
            code: ErrorCode::UnknownType,
            message: format!("unknown message type '{ty}'"),
        });
    }
    serde_json::from_value(value).map_err(|e| malformed(format!("bad {ty} message: {e}")))
}

pub fn encode_frame(frame: &Frame) -> String {
    STANDARD.encode(frame.as_bytes())
}

pub fn decode_frame(b64: &str) -> crate::Result<Frame> {
    let bytes = STANDARD
        .decode(b64)
        .map_err(|e| crate::Error::Protocol(format!("frame payload: {e}")))?;
    Frame::from_raw(bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_each_type() {
        let msgs = vec![
            Message::Hello(Hello {
                protocol_version: Some(1),
                name: None,
                tasks: TaskInfo::catalogue(),
            }),
            Message::Reset(Reset {
                task: "MTR".into(),
                variant: "Demo".into(),
                seed: 3,
                view: "allo".into(),
                mode: Mode::Teleop,
                all_views: true,
                horizon: None,
            }),
            Message::Step(Step { action: 4 }),
            Message::Keys(Keys {
                held: vec!["Up".into()],
                action: Some(3),
            }),
            Message::RecordStart(RecordStart::default()),
            Message::RecordStop(RecordStop {}),
            Message::Recorded(Recorded {
                path: "a/b/0.traj".into(),
                score: 1.0,
                horizon: 40,
            }),
            Message::error(ErrorCode::InvalidAction, "x"),
            Message::State(StateMsg::default()),
        ];
        for m in msgs {
            let line = m.to_line();
            assert!(!line.contains('\n'));
            assert_eq!(parse_message(&line).unwrap(), m);
        }
    }

    #[test]
    fn defaults_and_classification() {
        let m = parse_message(r#"{"type":"reset","task":"MoveToRegion"}"#).unwrap();
        let Message::Reset(r) = m else { panic!() };
        assert_eq!((r.variant.as_str(), r.seed, r.view.as_str(), r.mode), ("Demo", 0, "ego", Mode::Agent));
        assert_eq!(parse_message("nope").unwrap_err().code, ErrorCode::Malformed);
        assert_eq!(parse_message(r#"{"type":7}"#).unwrap_err().code, ErrorCode::Malformed);
        assert_eq!(parse_message(r#"{"type":"dance"}"#).unwrap_err().code, ErrorCode::UnknownType);
        assert_eq!(parse_message(r#"{"type":"step"}"#).unwrap_err().code, ErrorCode::Malformed);
        assert_eq!(
            parse_message(r#"{"type":"keys"}"#).unwrap(),
            Message::Keys(Keys::default())
        );
    }

    #[test]
    fn error_codes_are_snake_case() {
        let line = Message::error(ErrorCode::EpisodeFinished, "done").to_line();
        assert!(line.contains(r#""code":"episode_finished""#), "{line}");
        assert!(line.contains(r#""type":"error""#));
    }
}
