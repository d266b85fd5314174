//! Newline-delimited JSON episode protocol.
//!
//! Requests, one per line:
//!
//! ```text
//! {"id": 1, "cmd": "reset", "task": "AllObs", "seed": 7, "gps_sigma": 0.0, "fused": false}
//! {"id": 2, "cmd": "step", "action": "FORWARD"}      action may also be its index 0..6
//! {"id": 3, "cmd": "close"}
//! ```
//!
//! Reset and step answer with `{id, obs, reward, done, info}`. Images are
//! base64 row-major 8-bit RGB with `shape` `[height, width, 3]`; the optional
//! fused tensor is base64 little-endian f32 with `shape` `[8, w, w]`. Any
//! failure yields `{id, error: {kind, message}}` and leaves the session as
//! it was.

use std::sync::Arc;

use base64::engine::general_purpose::STANDARD as B64;
use base64::Engine;
use serde_json::{json, Map, Value};

use crate::env::{Action, EpisodeState, StepResult, TaskConfig, TaskId};
use crate::error::Error;
use crate::observation::fuse_tensor;
use crate::panorama::Resolution;
use crate::world::World;

pub const FUSED_WIDTH: usize = 84;

#[derive(Debug)]
pub struct ProtocolError {
    pub kind: &'static str,
    pub message: String,
}

impl ProtocolError {
    fn new(kind: &'static str, message: impl Into<String>) -> ProtocolError {
        ProtocolError {
            kind,
            message: message.into(),
        }
    }
}

impl From<Error> for ProtocolError {
    fn from(e: Error) -> ProtocolError {
        let kind = match &e {
            Error::IllegalAction { .. } => "illegal_action",
            Error::EpisodeTerminated => "episode_terminated",
            Error::TaskUnavailable(..) => "task_unavailable",
            Error::InvalidWorld(_) => "bad_request",
            _ => "internal",
        };
        ProtocolError::new(kind, e.to_string())
    }
}

/// One client's episode state over a shared world.
pub struct Session {
    world: Arc<World>,
    episode: Option<EpisodeState>,
    fused: bool,
}

/// What the transport should do after answering a line.
#[derive(Debug, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Close,
}

impl Session {
    pub fn new(world: Arc<World>) -> Session {
        Session {
            world,
            episode: None,
            fused: false,
        }
    }

    pub fn episode(&self) -> Option<&EpisodeState> {
        self.episode.as_ref()
    }

    /// Handles one request line and returns the response line (without the
    /// trailing newline).
    pub fn handle_line(&mut self, line: &str) -> (String, Flow) {
        let request: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return (error_record(None, &ProtocolError::new("parse", e.to_string())), Flow::Continue),
        };
        let id = request.get("id").cloned();
        match self.dispatch(&request) {
            Ok((mut body, flow)) => {
                if let (Some(id), Value::Object(m)) = (id, &mut body) {
                    m.insert("id".into(), id);
                }
                (body.to_string(), flow)
            }
            Err(e) => (error_record(id, &e), Flow::Continue),
        }
    }

    fn dispatch(&mut self, request: &Value) -> Result<(Value, Flow), ProtocolError> {
        let Some(obj) = request.as_object() else {
            return Err(ProtocolError::new("bad_request", "request must be a JSON object"));
        };
        let cmd = obj
            .get("cmd")
            .and_then(Value::as_str)
            .ok_or_else(|| ProtocolError::new("bad_request", "missing string field \"cmd\""))?;
        match cmd {
            "reset" => self.reset(obj).map(|v| (v, Flow::Continue)),
            "step" => self.step(obj).map(|v| (v, Flow::Continue)),
            "close" => {
                self.episode = None;
                Ok((json!({"closed": true}), Flow::Close))
            }
            other => Err(ProtocolError::new("unknown_command", format!("unknown cmd {other:?}"))),
        }
    }

    fn reset(&mut self, obj: &Map<String, Value>) -> Result<Value, ProtocolError> {
        let task: TaskId = obj
            .get("task")
            .and_then(Value::as_str)
            .ok_or_else(|| ProtocolError::new("bad_request", "reset needs a string \"task\""))?
            .parse()
            .map_err(|e: String| ProtocolError::new("bad_request", e))?;
        let seed = obj
            .get("seed")
            .and_then(Value::as_u64)
            .ok_or_else(|| ProtocolError::new("bad_request", "reset needs a non-negative integer \"seed\""))?;
        let mut config = TaskConfig::new(task);
        match obj.get("gps_sigma") {
            None | Some(Value::Null) => {}
            Some(v) => {
                config.gps_sigma = v
                    .as_f64()
                    .filter(|s| *s >= 0.0)
                    .ok_or_else(|| ProtocolError::new("bad_request", "\"gps_sigma\" must be a non-negative number"))?
            }
        }
        if let Some(v) = obj.get("horizon").filter(|v| !v.is_null()) {
            let h = v
                .as_u64()
                .filter(|h| *h > 0 && *h <= u32::MAX as u64)
                .ok_or_else(|| ProtocolError::new("bad_request", "\"horizon\" must be a positive integer"))?;
            config.horizon = Some(h as u32);
        }
        if let Some(v) = obj.get("resolution").filter(|v| !v.is_null()) {
            config.resolution = match v.as_str() {
                Some("low") => Resolution::Low,
                Some("high") => Resolution::High,
                _ => return Err(ProtocolError::new("bad_request", "\"resolution\" must be \"low\" or \"high\"")),
            };
        }
        let fused = match obj.get("fused") {
            None | Some(Value::Null) => false,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| ProtocolError::new("bad_request", "\"fused\" must be a boolean"))?,
        };
        if fused && config.resolution != Resolution::Low {
            return Err(ProtocolError::new("bad_request", "fused tensors need low-resolution images"));
        }
        let (state, first) = EpisodeState::reset(&self.world, config, seed)?;
        self.episode = Some(state);
        self.fused = fused;
        step_record(&first, self.fused)
    }

    fn step(&mut self, obj: &Map<String, Value>) -> Result<Value, ProtocolError> {
        if self.episode.is_none() {
            return Err(ProtocolError::new("no_active_episode", "no active episode"));
        }
        let action = match obj.get("action") {
            Some(Value::String(s)) => s.parse().map_err(|e: String| ProtocolError::new("bad_request", e))?,
            Some(Value::Number(n)) => n
                .as_u64()
                .and_then(|i| Action::from_index(i as usize))
                .ok_or_else(|| ProtocolError::new("bad_request", format!("action index {n} out of range 0..6")))?,
            _ => return Err(ProtocolError::new("bad_request", "step needs an \"action\" name or index")),
        };
        let state = self.episode.as_mut().expect("checked above");
        let result = state.step(&self.world, action)?;
        step_record(&result, self.fused)
    }
}

fn error_record(id: Option<Value>, e: &ProtocolError) -> String {
    let mut m = Map::new();
    if let Some(id) = id {
        m.insert("id".into(), id);
    }
    m.insert("error".into(), json!({"kind": e.kind, "message": e.message}));
    Value::Object(m).to_string()
}

/// JSON body for a reset or step result.
pub fn step_record(result: &StepResult, fused: bool) -> Result<Value, ProtocolError> {
    let o = &result.observation;
    let mut obs = Map::new();
    if let Some(img) = &o.image {
        let s = img.shape();
        obs.insert(
            "image".into(),
            json!({"data": B64.encode(img.hwc_bytes()), "shape": [s[1], s[2], s[0]]}),
        );
    }
    if let Some(gps) = &o.gps {
        obs.insert("gps".into(), json!(gps.0));
    }
    if let Some(text) = &o.text {
        obs.insert("house_vec".into(), json!(text.house_numbers));
        obs.insert("street_vec".into(), json!(text.street_names));
    }
    if fused {
        let t = fuse_tensor(o, FUSED_WIDTH)?;
        let bytes: Vec<u8> = t.iter().flat_map(|v| v.to_le_bytes()).collect();
        obs.insert(
            "fused".into(),
            json!({"data": B64.encode(bytes), "shape": t.shape()}),
        );
    }
    let info = serde_json::to_value(&result.info).map_err(|e| ProtocolError::new("internal", e.to_string()))?;
    Ok(json!({
        "obs": obs,
        "reward": result.reward,
        "done": result.done,
        "info": info,
    }))
}
