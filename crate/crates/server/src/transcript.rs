// SPDX-License-Identifier: Apache-2.0

//! The canned two-client session against the accumulator example, used
//! for the golden transcript. Lines are `<client> > <request>` and
//! `<client> < <response or event>`; tokens are replaced by `<token>`.

use serde_json::{json, Value as Json};

use crate::client::{Client, ClientError};
use crate::protocol::Envelope;

/// Source file name the session's breakpoints refer to.
pub const SOURCE: &str = "sum.mh";
/// Line of the accumulation statement in that file.
pub const ACCUMULATION_LINE: u32 = 9;

pub fn normalized(e: &Envelope) -> String {
    let mut e = e.clone();
    if e.token.is_some() {
        e.token = Some("<token>".into());
    }
    e.to_text()
}

struct Script {
    clients: Vec<Client>,
    lines: Vec<String>,
}

fn name(k: usize) -> &'static str {
    ["A", "B"][k]
}

impl Script {
    fn request(&mut self, who: usize, cmd: &str, payload: Json) -> Result<Envelope, ClientError> {
        let req = Envelope::request("<token>", cmd, payload.clone());
        self.lines.push(format!("{} > {}", name(who), req.to_text()));
        let r = self.clients[who].request(cmd, payload)?;
        self.lines.push(format!("{} < {}", name(who), normalized(&r)));
        Ok(r)
    }

    /// Resume from `who`, then record `resumed` and the outcome as seen by
    /// every client in turn.
    fn resume(&mut self, who: usize, cmd: &str) -> Result<(), ClientError> {
        self.request(who, cmd, json!({}))?;
        for k in 0..self.clients.len() {
            let resumed = self.clients[k].wait_event("resumed")?;
            self.lines.push(format!("{} < {}", name(k), normalized(&resumed)));
            let o = self.clients[k].wait_outcome()?;
            self.lines.push(format!("{} < {}", name(k), normalized(&o)));
        }
        Ok(())
    }
}

/// Run the session against a fresh server replaying the example trace.
pub fn two_client_session(url: &str) -> Result<String, ClientError> {
    let mut s = Script {
        clients: vec![Client::connect(url)?, Client::connect(url)?],
        lines: Vec::new(),
    };
    let at = json!({"file": SOURCE, "line": ACCUMULATION_LINE});
    s.request(0, "info", json!({"what": "capabilities"}))?;
    s.request(0, "set-breakpoint", at.clone())?;
    s.request(1, "list-breakpoints", json!({}))?;
    s.resume(0, "continue")?;
    s.request(1, "frames", json!({}))?;
    s.request(1, "evaluate", json!({"expr": "data[0] % 2"}))?;
    s.request(0, "evaluate", json!({"expr": "sum"}))?;
    s.request(0, "set-value", json!({"name": "data[0]", "value": 4}))?;
    s.request(1, "set-time", json!({"t": 100000}))?;
    s.resume(1, "step-over")?;
    s.resume(0, "reverse-step")?;
    s.resume(1, "reverse-continue")?;
    s.request(1, "info", json!({"what": "threads"}))?;
    s.request(0, "remove-breakpoint", at)?;
    s.resume(0, "continue")?;
    s.request(1, "info", json!({"what": "time"}))?;
    s.request(0, "info", json!({"what": "hierarchy"}))?;
    s.request(1, "info", json!({"what": "file", "path": SOURCE}))?;
    s.request(0, "step", json!({}))?;
    for c in s.clients.drain(..) {
        c.close();
    }
    Ok(s.lines.join("\n") + "\n")
}
