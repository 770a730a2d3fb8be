// SPDX-License-Identifier: Apache-2.0

//! Request handling against one debugger core, independent of transport.

use std::path::PathBuf;

use hgdbg_core::runtime::{Command, Debugger, Outcome, RuntimeError};
use hgdbg_core::simbackends::SimError;
use serde_json::{json, Value as Json};

use crate::protocol::*;

/// Outcome of handling one request.
#[derive(Debug)]
pub enum Action {
    Reply(Envelope),
    /// Send `response`, announce the resume, then call [`Session::run`].
    Run { response: Envelope, command: Command },
}

pub struct Session {
    dbg: Debugger,
    backend: String,
    source_root: Option<PathBuf>,
}

fn runtime_reason(e: &RuntimeError) -> &'static str {
    match e {
        RuntimeError::Capability(_) | RuntimeError::Sim(SimError::Capability(_)) => reason::CAPABILITY,
        RuntimeError::Sim(SimError::TimeOutOfRange(_)) => reason::TIME_RANGE,
        RuntimeError::Sim(SimError::Width { .. }) => reason::INVALID_PAYLOAD,
        RuntimeError::Condition(_) => reason::EXPRESSION,
        RuntimeError::NoBreakpoint { .. }
        | RuntimeError::UnknownBreakpoint(_)
        | RuntimeError::UnknownThread(_)
        | RuntimeError::Unresolved(_)
        | RuntimeError::Sim(SimError::UnknownSignal(_)) => reason::NOT_FOUND,
        _ => reason::RUNTIME,
    }
}

struct Bad(&'static str, String);

impl From<RuntimeError> for Bad {
    fn from(e: RuntimeError) -> Self {
        Bad(runtime_reason(&e), e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Bad {
    Bad(reason::INVALID_PAYLOAD, msg.into())
}

fn str_field<'a>(p: &'a Json, name: &str) -> Result<Option<&'a str>, Bad> {
    match p.get(name) {
        None | Some(Json::Null) => Ok(None),
        Some(Json::String(s)) => Ok(Some(s)),
        Some(_) => Err(invalid(format!("`{name}` must be a string"))),
    }
}

/// Integers are accepted as JSON numbers or decimal / `0x` strings.
fn int_field(p: &Json, name: &str) -> Result<Option<u64>, Bad> {
    match p.get(name) {
        None | Some(Json::Null) => Ok(None),
        Some(Json::Number(n)) => n.as_u64().map(Some).ok_or_else(|| invalid(format!("`{name}` must be unsigned"))),
        Some(Json::String(s)) => hgdbg_core::expr::parse_number(s.trim())
            .map(Some)
            .ok_or_else(|| invalid(format!("`{name}` is not a number"))),
        Some(_) => Err(invalid(format!("`{name}` must be a number"))),
    }
}

fn required<T>(v: Option<T>, name: &str) -> Result<T, Bad> {
    v.ok_or_else(|| invalid(format!("missing `{name}`")))
}

fn small(v: u64, name: &str) -> Result<u32, Bad> {
    u32::try_from(v).map_err(|_| invalid(format!("`{name}` is out of range")))
}

impl Session {
    /// `backend` names the simulator kind reported by `info capabilities`.
    /// `info file` serves symbol-table source files from `source_root`.
    pub fn new(dbg: Debugger, backend: &str, source_root: Option<PathBuf>) -> Self {
        Session {
            dbg,
            backend: backend.to_string(),
            source_root,
        }
    }

    pub fn debugger(&self) -> &Debugger {
        &self.dbg
    }

    pub fn handle(&mut self, req: &Envelope) -> Action {
        let token = req.token.clone();
        let empty = json!({});
        let payload = req.payload.as_ref().unwrap_or(&empty);
        if req.kind != Kind::Request {
            return Action::Reply(Envelope::error(token, &req.command, reason::INVALID_PAYLOAD, "expected a request"));
        }
        if !payload.is_object() {
            return Action::Reply(Envelope::error(
                token,
                &req.command,
                reason::INVALID_PAYLOAD,
                "payload must be an object",
            ));
        }
        let run = match req.command.as_str() {
            "continue" => Some(Command::Continue),
            "step-over" => Some(Command::StepOver),
            "reverse-continue" => Some(Command::ReverseContinue),
            "reverse-step" => Some(Command::ReverseStep),
            _ => None,
        };
        if let Some(command) = run {
            return Action::Run {
                response: Envelope::success(token, &req.command, json!({})),
                command,
            };
        }
        let result = match req.command.as_str() {
            "set-breakpoint" => self.set_breakpoint(payload),
            "remove-breakpoint" => self.remove_breakpoint(payload),
            "list-breakpoints" => Ok(self.list()),
            "frames" => self.frames(payload),
            "evaluate" => self.evaluate(payload),
            "set-value" => self.set_value(payload),
            "set-time" => self.set_time(payload),
            "info" => self.info(payload),
            // Only reached when the core is idle; transports interrupt
            // running commands themselves.
            "pause" => Ok(json!({ "interrupted": false })),
            other => Err(Bad(reason::UNKNOWN_COMMAND, format!("unknown command `{other}`"))),
        };
        Action::Reply(match result {
            Ok(p) => Envelope::success(token, &req.command, p),
            Err(Bad(r, m)) => Envelope::error(token, &req.command, r, m),
        })
    }

    /// Run a resume command to its next stop; returns the event to
    /// broadcast.
    pub fn run(&mut self, command: Command) -> Envelope {
        match self.dbg.resume(command) {
            Ok(Outcome::Stopped(s)) => Envelope::event("stopped", stop_json(&s)),
            Ok(Outcome::Ended { time }) => Envelope::event("ended", json!({ "time": time })),
            Err(e) => Envelope::event(
                "error",
                json!({ "reason": runtime_reason(&e), "message": e.to_string() }),
            ),
        }
    }

    /// Payload of the `resumed` event for `command`.
    pub fn resumed(&self, command: &str) -> Envelope {
        let from = self.dbg.last_stop().map(|s| s.id);
        Envelope::event("resumed", json!({ "command": command, "from": from }))
    }

    pub fn interrupt_handle(&self) -> std::sync::Arc<std::sync::atomic::AtomicBool> {
        self.dbg.interrupt_handle()
    }

    fn list(&self) -> Json {
        json!({ "breakpoints": self.dbg.breakpoints().iter().map(breakpoint_json).collect::<Vec<_>>() })
    }

    fn set_breakpoint(&mut self, p: &Json) -> Result<Json, Bad> {
        let file = required(str_field(p, "file")?, "file")?;
        let line = small(required(int_field(p, "line")?, "line")?, "line")?;
        let column = int_field(p, "column")?.map(|c| small(c, "column")).transpose()?;
        let condition = str_field(p, "condition")?;
        let ids = self.dbg.insert_breakpoint(file, line, column, condition)?;
        let all = self.dbg.breakpoints();
        let rows: Vec<Json> = all.iter().filter(|b| ids.contains(&b.id)).map(breakpoint_json).collect();
        Ok(json!({ "ids": ids, "breakpoints": rows }))
    }

    fn remove_breakpoint(&mut self, p: &Json) -> Result<Json, Bad> {
        let removed = match int_field(p, "id")? {
            Some(id) => {
                let id = i64::try_from(id).map_err(|_| invalid("`id` is out of range"))?;
                self.dbg.remove_breakpoint(id)?;
                vec![id]
            }
            None => {
                let file = required(str_field(p, "file")?, "id` or `file")?;
                let line = small(required(int_field(p, "line")?, "line")?, "line")?;
                let ids = self.dbg.remove_at(file, line);
                if ids.is_empty() {
                    return Err(Bad(reason::NOT_FOUND, format!("no inserted breakpoint at {file}:{line}")));
                }
                ids
            }
        };
        Ok(json!({ "removed": removed }))
    }

    fn frames(&self, p: &Json) -> Result<Json, Bad> {
        let current = self.dbg.last_stop().map(|s| s.id);
        let id = int_field(p, "stop-id")?.or(current).ok_or_else(|| Bad(reason::NOT_FOUND, "not stopped".into()))?;
        let frames = self
            .dbg
            .frames(id)
            .ok_or_else(|| Bad(reason::NOT_FOUND, format!("stop {id} is not current")))?;
        Ok(json!({ "stop-id": id, "frames": frames.iter().map(frame_json).collect::<Vec<_>>() }))
    }

    fn evaluate(&self, p: &Json) -> Result<Json, Bad> {
        let text = required(str_field(p, "expr")?, "expr")?;
        let thread = str_field(p, "thread")?;
        Ok(value_json(&self.dbg.evaluate(text, thread)?))
    }

    fn set_value(&mut self, p: &Json) -> Result<Json, Bad> {
        let name = required(str_field(p, "name")?, "name")?;
        let value = required(int_field(p, "value")?, "value")?;
        self.dbg.set_value(name, value)?;
        Ok(json!({}))
    }

    fn set_time(&mut self, p: &Json) -> Result<Json, Bad> {
        let t = required(int_field(p, "t")?, "t")?;
        self.dbg.set_time(t)?;
        Ok(json!({ "time": self.dbg.time() }))
    }

    fn info(&self, p: &Json) -> Result<Json, Bad> {
        let what = required(str_field(p, "what")?, "what")?;
        Ok(match what {
            "hierarchy" => hierarchy_json(&self.dbg.sim().hierarchy()),
            "threads" => json!({ "threads": self.dbg.threads() }),
            "time" => {
                let state = match self.dbg.state() {
                    hgdbg_core::runtime::RunState::Idle => "idle",
                    hgdbg_core::runtime::RunState::Paused => "paused",
                    hgdbg_core::runtime::RunState::Ended => "ended",
                };
                json!({ "time": self.dbg.time(), "state": state })
            }
            "capabilities" => capabilities_json(&self.dbg.capabilities(), &self.backend),
            "file" => self.file(p)?,
            other => return Err(invalid(format!("unknown info topic `{other}`"))),
        })
    }

    /// Source text of a file named in the symbol table.
    fn file(&self, p: &Json) -> Result<Json, Bad> {
        let path = required(str_field(p, "path")?, "path")?;
        let known = self.dbg.table().files();
        let file = known
            .iter()
            .find(|f| *f == path)
            .ok_or_else(|| Bad(reason::NOT_FOUND, format!("`{path}` is not a source file of this design")))?;
        let full = match &self.source_root {
            Some(root) => root.join(file),
            None => PathBuf::from(file),
        };
        let text = std::fs::read_to_string(&full)
            .map_err(|e| Bad(reason::NOT_FOUND, format!("cannot read {}: {e}", full.display())))?;
        Ok(json!({ "path": file, "text": text }))
    }
}
