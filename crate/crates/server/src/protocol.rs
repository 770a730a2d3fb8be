// SPDX-License-Identifier: Apache-2.0

//! Message envelope and payload encodings. `docs/protocol.md` is the
//! normative description.

use hgdbg_core::expr::Value;
use hgdbg_core::runtime::{FrameSnapshot, InsertedInfo, RuntimeCapabilities, StopEvent, StopReason, VarNode};
use hgdbg_core::simbackends::HierNode;
use hgdbg_core::symtab::SourceKey;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value as Json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Request,
    Response,
    Event,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Success,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    #[serde(rename = "type")]
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub token: Option<String>,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payload: Option<Json>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<Status>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reason: Option<String>,
}

impl Envelope {
    pub fn request(token: &str, command: &str, payload: Json) -> Self {
        Envelope {
            kind: Kind::Request,
            token: Some(token.to_string()),
            command: command.to_string(),
            payload: Some(payload),
            status: None,
            reason: None,
        }
    }

    pub fn success(token: Option<String>, command: &str, payload: Json) -> Self {
        Envelope {
            kind: Kind::Response,
            token,
            command: command.to_string(),
            payload: Some(payload),
            status: Some(Status::Success),
            reason: None,
        }
    }

    pub fn error(token: Option<String>, command: &str, reason: &str, message: impl Into<String>) -> Self {
        Envelope {
            kind: Kind::Response,
            token,
            command: command.to_string(),
            payload: Some(json!({ "message": message.into() })),
            status: Some(Status::Error),
            reason: Some(reason.to_string()),
        }
    }

    pub fn event(command: &str, payload: Json) -> Self {
        Envelope {
            kind: Kind::Event,
            token: None,
            command: command.to_string(),
            payload: Some(payload),
            status: None,
            reason: None,
        }
    }

    pub fn to_text(&self) -> String {
        serde_json::to_string(self).expect("envelopes always serialize")
    }

    pub fn is_success(&self) -> bool {
        self.status == Some(Status::Success)
    }

    /// Field of the payload, `Null` when absent.
    pub fn field(&self, name: &str) -> &Json {
        self.payload.as_ref().and_then(|p| p.get(name)).unwrap_or(&Json::Null)
    }
}

/// Error reasons carried in `reason`.
pub mod reason {
    pub const PARSE: &str = "parse";
    pub const UNKNOWN_COMMAND: &str = "unknown-command";
    pub const INVALID_PAYLOAD: &str = "invalid-payload";
    pub const CAPABILITY: &str = "capability";
    pub const NOT_FOUND: &str = "not-found";
    pub const EXPRESSION: &str = "expression";
    pub const TIME_RANGE: &str = "time-range";
    pub const RUNTIME: &str = "runtime";
}

pub fn value_json(v: &Value) -> Json {
    json!({ "value": v.to_string(), "width": v.width() })
}

fn var_json(name: &str, node: &VarNode) -> Json {
    let mut m = Map::new();
    m.insert("name".into(), json!(name));
    match node {
        VarNode::Leaf { value: Some(v) } => {
            m.insert("value".into(), json!(v.to_string()));
            m.insert("width".into(), json!(v.width()));
        }
        VarNode::Leaf { value: None } => {
            m.insert("value".into(), json!("unavailable"));
        }
        VarNode::Record { fields } => {
            m.insert("fields".into(), fields.iter().map(|(n, v)| var_json(n, v)).collect());
        }
        VarNode::Array { items } => {
            m.insert(
                "items".into(),
                items.iter().enumerate().map(|(i, v)| var_json(&format!("[{i}]"), v)).collect(),
            );
        }
    }
    Json::Object(m)
}

fn key_fields(m: &mut Map<String, Json>, key: Option<&SourceKey>) {
    match key {
        Some(k) => {
            m.insert("file".into(), json!(k.file));
            m.insert("line".into(), json!(k.line));
            m.insert("column".into(), json!(k.column));
            m.insert("ordinal".into(), json!(k.ordinal));
        }
        None => {
            for f in ["file", "line", "column", "ordinal"] {
                m.insert(f.into(), Json::Null);
            }
        }
    }
}

pub fn frame_json(f: &FrameSnapshot) -> Json {
    let mut m = Map::new();
    m.insert("thread".into(), json!(f.thread));
    m.insert("breakpoint".into(), json!(f.breakpoint_id));
    key_fields(&mut m, Some(&f.key));
    m.insert("time".into(), json!(f.time));
    m.insert("fired".into(), json!(f.fired));
    m.insert("locals".into(), f.locals.iter().map(|(n, v)| var_json(n, v)).collect());
    m.insert("instance".into(), f.instance_vars.iter().map(|(n, v)| var_json(n, v)).collect());
    Json::Object(m)
}

pub fn stop_json(s: &StopEvent) -> Json {
    let (reason, notice) = match &s.reason {
        StopReason::Breakpoint => ("breakpoint", None),
        StopReason::Step => ("step", None),
        StopReason::Pause => ("pause", None),
        StopReason::Boundary(n) => ("boundary", Some(n.as_str())),
    };
    let mut m = Map::new();
    m.insert("stop-id".into(), json!(s.id));
    m.insert("time".into(), json!(s.time));
    m.insert("reason".into(), json!(reason));
    m.insert("notice".into(), json!(notice));
    key_fields(&mut m, s.key.as_ref());
    m.insert("threads".into(), s.frames.iter().map(|f| json!(f.thread)).collect());
    m.insert("frames".into(), s.frames.iter().map(frame_json).collect());
    Json::Object(m)
}

pub fn breakpoint_json(b: &InsertedInfo) -> Json {
    let mut m = Map::new();
    m.insert("id".into(), json!(b.id));
    m.insert("thread".into(), json!(b.thread));
    key_fields(&mut m, Some(&b.key));
    m.insert("condition".into(), json!(b.condition));
    Json::Object(m)
}

pub fn hierarchy_json(h: &HierNode) -> Json {
    json!({
        "name": h.name,
        "signals": h.signals,
        "children": h.children.iter().map(hierarchy_json).collect::<Vec<_>>(),
    })
}

pub fn capabilities_json(c: &RuntimeCapabilities, backend: &str) -> Json {
    json!({
        "backend": backend,
        "can-set-value": c.backend.can_set_value,
        "can-set-time": c.backend.can_set_time,
        "reverse-across-edges": c.reverse_across_edges,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn envelope_field_names() {
        let e = Envelope::error(Some("7".into()), "set-value", reason::CAPABILITY, "no");
        assert_eq!(
            e.to_text(),
            r#"{"type":"response","token":"7","command":"set-value","payload":{"message":"no"},"status":"error","reason":"capability"}"#
        );
        let back: Envelope = serde_json::from_str(&e.to_text()).unwrap();
        assert_eq!(back, e);
    }

    #[test]
    fn values_are_decimal_strings() {
        assert_eq!(value_json(&Value::new(64, u64::MAX)), json!({"value": "18446744073709551615", "width": 64}));
        assert_eq!(value_json(&Value::unknown(4)), json!({"value": "x", "width": 4}));
    }

    #[test]
    fn grouped_variables() {
        let node = VarNode::Record {
            fields: vec![
                ("a".into(), VarNode::Leaf { value: Some(Value::new(8, 1)) }),
                ("b".into(), VarNode::Array { items: vec![VarNode::Leaf { value: None }] }),
            ],
        };
        assert_eq!(
            var_json("io", &node),
            json!({"name": "io", "fields": [
                {"name": "a", "value": "1", "width": 8},
                {"name": "b", "items": [{"name": "[0]", "value": "unavailable"}]}
            ]})
        );
    }
}
