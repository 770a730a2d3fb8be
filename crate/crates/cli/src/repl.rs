// SPDX-License-Identifier: Apache-2.0

//! gdb-style command interpreter over the protocol client. Every command
//! produces plain text lines; scripts print `(hgdbg) <command>` before
//! each command's output.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use hgdbg_server::protocol::Envelope;
use hgdbg_server::Client;
use serde_json::{json, Value as Json};

pub const PROMPT: &str = "(hgdbg) ";

pub struct Repl {
    client: Client,
    /// Source text by file, fetched on first use.
    sources: BTreeMap<String, Option<Vec<String>>>,
}

pub enum Step {
    Output(Vec<String>),
    Quit,
}

const HELP: &[&str] = &[
    "b <file>:<line> [if <expr>]   insert breakpoints",
    "d <id>                        delete a breakpoint",
    "c | n | rc | rn               continue, step over, reverse continue, reverse step",
    "p <expr>                      evaluate in the current frame",
    "info threads|breakpoints|time|locals",
    "set <name> <value>            drive a signal",
    "time <t>                      jump to time t",
    "q                             quit",
];

fn as_str(v: &Json) -> &str {
    v.as_str().unwrap_or("")
}

fn location(v: &Json) -> String {
    format!("{}:{}:{}", as_str(&v["file"]), v["line"], v["column"])
}

fn error_line(r: &Envelope) -> String {
    format!(
        "error ({}): {}",
        r.reason.as_deref().unwrap_or("unknown"),
        as_str(r.field("message"))
    )
}

/// `data = [3, 2]`, `io = {a: 1, b: 2}`.
pub fn render_var(v: &Json) -> String {
    if let Some(items) = v["items"].as_array() {
        format!("[{}]", items.iter().map(render_var).collect::<Vec<_>>().join(", "))
    } else if let Some(fields) = v["fields"].as_array() {
        let inner: Vec<String> = fields
            .iter()
            .map(|f| format!("{}: {}", as_str(&f["name"]), render_var(f)))
            .collect();
        format!("{{{}}}", inner.join(", "))
    } else {
        as_str(&v["value"]).to_string()
    }
}

impl Repl {
    pub fn new(client: Client) -> Self {
        Repl {
            client,
            sources: BTreeMap::new(),
        }
    }

    fn request(&mut self, cmd: &str, payload: Json) -> Result<Envelope, String> {
        self.client.request(cmd, payload).map_err(|e| e.to_string())
    }

    fn source_line(&mut self, file: &str, line: u64) -> Option<String> {
        if !self.sources.contains_key(file) {
            let text = self
                .request("info", json!({"what": "file", "path": file}))
                .ok()
                .filter(|r| r.is_success())
                .and_then(|r| r.field("text").as_str().map(|t| t.lines().map(str::to_string).collect()));
            self.sources.insert(file.to_string(), text);
        }
        let lines = self.sources.get(file)?.as_ref()?;
        let text = lines.get(usize::try_from(line).ok()?.checked_sub(1)?)?;
        Some(format!("{line}\t{text}"))
    }

    fn resume(&mut self, cmd: &str) -> Result<Vec<String>, String> {
        let r = self.request(cmd, json!({}))?;
        if !r.is_success() {
            return Ok(vec![error_line(&r)]);
        }
        let ev = self.client.wait_outcome().map_err(|e| e.to_string())?;
        let p = ev.payload.clone().unwrap_or(Json::Null);
        let mut out = Vec::new();
        match ev.command.as_str() {
            "ended" => out.push(format!("Simulation ended at time {}.", p["time"])),
            "error" => out.push(format!("error ({}): {}", as_str(&p["reason"]), as_str(&p["message"]))),
            _ => match as_str(&p["reason"]) {
                "boundary" => out.push(format!("Notice: {} (time {}).", as_str(&p["notice"]), p["time"])),
                "pause" => out.push(format!("Paused at time {}.", p["time"])),
                reason => {
                    let what = if reason == "step" { "Step" } else { "Breakpoint" };
                    out.push(format!("{what} at {}, time {}", location(&p), p["time"]));
                    if let Some(l) = self.source_line(as_str(&p["file"]), p["line"].as_u64().unwrap_or(0)) {
                        out.push(l);
                    }
                    let threads: Vec<&str> = p["threads"].as_array().into_iter().flatten().map(as_str).collect();
                    out.push(format!("threads: {}", threads.join(", ")));
                }
            },
        }
        Ok(out)
    }

    fn breakpoint(&mut self, rest: &str) -> Result<Vec<String>, String> {
        let (loc, cond) = match rest.split_once(" if ") {
            Some((l, c)) => (l.trim(), Some(c.trim())),
            None => (rest.trim(), None),
        };
        let Some((file, line)) = loc.rsplit_once(':') else {
            return Ok(vec!["usage: b <file>:<line> [if <expr>]".into()]);
        };
        let Ok(line) = line.trim().parse::<u32>() else {
            return Ok(vec![format!("invalid line number `{line}`")]);
        };
        let mut payload = json!({"file": file, "line": line});
        if let Some(c) = cond {
            payload["condition"] = json!(c);
        }
        let r = self.request("set-breakpoint", payload)?;
        if !r.is_success() {
            return Ok(vec![error_line(&r)]);
        }
        Ok(r.field("breakpoints")
            .as_array()
            .into_iter()
            .flatten()
            .map(|b| {
                format!(
                    "Breakpoint {} at {} (thread {}, ordinal {})",
                    b["id"],
                    location(b),
                    as_str(&b["thread"]),
                    b["ordinal"]
                )
            })
            .collect())
    }

    fn info(&mut self, what: &str) -> Result<Vec<String>, String> {
        match what {
            "threads" => {
                let r = self.request("frames", json!({}))?;
                let frames = r.field("frames").as_array().cloned().unwrap_or_default();
                if !r.is_success() || frames.is_empty() {
                    return Ok(vec!["No threads.".into()]);
                }
                Ok(frames
                    .iter()
                    .enumerate()
                    .map(|(i, f)| {
                        let mark = if i == 0 { '*' } else { ' ' };
                        format!("{mark} {} {} {}", i + 1, as_str(&f["thread"]), location(f))
                    })
                    .collect())
            }
            "breakpoints" => {
                let r = self.request("list-breakpoints", json!({}))?;
                let rows = r.field("breakpoints").as_array().cloned().unwrap_or_default();
                if rows.is_empty() {
                    return Ok(vec!["No breakpoints.".into()]);
                }
                Ok(rows
                    .iter()
                    .map(|b| {
                        let mut s = format!("{} {} {}", b["id"], location(b), as_str(&b["thread"]));
                        if let Some(c) = b["condition"].as_str() {
                            s.push_str(&format!(" if {c}"));
                        }
                        s
                    })
                    .collect())
            }
            "time" => {
                let r = self.request("info", json!({"what": "time"}))?;
                Ok(vec![format!("time {} ({})", r.field("time"), as_str(r.field("state")))])
            }
            "locals" => {
                let r = self.request("frames", json!({}))?;
                let Some(f) = r.field("frames").get(0).cloned() else {
                    return Ok(vec!["No frame.".into()]);
                };
                Ok(f["locals"]
                    .as_array()
                    .into_iter()
                    .flatten()
                    .map(|v| format!("{} = {}", as_str(&v["name"]), render_var(v)))
                    .collect())
            }
            _ => Ok(vec!["usage: info threads|breakpoints|time|locals".into()]),
        }
    }

    /// Execute one command line.
    pub fn execute(&mut self, line: &str) -> Result<Step, String> {
        let line = line.trim();
        let (cmd, rest) = line.split_once(char::is_whitespace).unwrap_or((line, ""));
        let rest = rest.trim();
        let out = match cmd {
            "" => Vec::new(),
            "q" | "quit" => return Ok(Step::Quit),
            "help" | "h" => HELP.iter().map(|s| s.to_string()).collect(),
            "b" | "break" => self.breakpoint(rest)?,
            "d" | "delete" => match rest.parse::<u64>() {
                Ok(id) => {
                    let r = self.request("remove-breakpoint", json!({"id": id}))?;
                    if r.is_success() {
                        vec![format!("Deleted breakpoint {id}.")]
                    } else {
                        vec![error_line(&r)]
                    }
                }
                Err(_) => vec!["usage: d <id>".into()],
            },
            "c" | "continue" => self.resume("continue")?,
            "n" | "next" => self.resume("step-over")?,
            "rc" => self.resume("reverse-continue")?,
            "rn" => self.resume("reverse-step")?,
            "p" | "print" => {
                if rest.is_empty() {
                    vec!["usage: p <expr>".into()]
                } else {
                    let r = self.request("evaluate", json!({"expr": rest}))?;
                    if r.is_success() {
                        vec![format!("{rest} = {}", as_str(r.field("value")))]
                    } else {
                        vec![error_line(&r)]
                    }
                }
            }
            "info" | "i" => self.info(rest)?,
            "set" => {
                let mut parts = rest.split_whitespace();
                match (parts.next(), parts.next(), parts.next()) {
                    (Some(name), Some(value), None) => {
                        let r = self.request("set-value", json!({"name": name, "value": value}))?;
                        if r.is_success() {
                            vec![format!("{name} = {value}")]
                        } else {
                            vec![error_line(&r)]
                        }
                    }
                    _ => vec!["usage: set <name> <value>".into()],
                }
            }
            "time" => {
                if rest.is_empty() {
                    vec!["usage: time <t>".into()]
                } else {
                    let r = self.request("set-time", json!({"t": rest}))?;
                    if r.is_success() {
                        vec![format!("time {}", r.field("time"))]
                    } else {
                        vec![error_line(&r)]
                    }
                }
            }
            other => vec![format!("Unknown command `{other}`. Try `help`.")],
        };
        Ok(Step::Output(out))
    }

    /// Run the commands of a script (one per line, or `;`-separated),
    /// writing the transcript. Stops at `q`.
    pub fn run_script(&mut self, script: &str, out: &mut impl Write) -> std::io::Result<()> {
        let commands = script
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split(';'))
            .map(str::trim)
            .filter(|c| !c.is_empty());
        for c in commands {
            writeln!(out, "{PROMPT}{c}")?;
            match self.execute(c) {
                Ok(Step::Quit) => break,
                Ok(Step::Output(lines)) => {
                    for l in lines {
                        writeln!(out, "{l}")?;
                    }
                }
                Err(e) => {
                    writeln!(out, "connection error: {e}")?;
                    break;
                }
            }
        }
        Ok(())
    }

    /// Read commands from `input` until end of input or `q`.
    pub fn interactive(&mut self, input: impl BufRead, out: &mut impl Write) -> std::io::Result<()> {
        write!(out, "{PROMPT}")?;
        out.flush()?;
        for line in input.lines() {
            match self.execute(&line?) {
                Ok(Step::Quit) => return Ok(()),
                Ok(Step::Output(lines)) => {
                    for l in lines {
                        writeln!(out, "{l}")?;
                    }
                }
                Err(e) => {
                    writeln!(out, "connection error: {e}")?;
                    return Ok(());
                }
            }
            write!(out, "{PROMPT}")?;
            out.flush()?;
        }
        writeln!(out)
    }

    pub fn close(self) {
        self.client.close();
    }
}
