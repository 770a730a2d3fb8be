// SPDX-License-Identifier: Apache-2.0

//! The debugger core. Breakpoints are emulated at rising clock edges: at
//! each edge the inserted breakpoints are visited group by group (one group
//! per source location), every member's enable condition and user
//! condition is evaluated against the backend, and the debugger pauses at
//! the first group with a firing member.
//!
//! The core is driven by the caller. [`Debugger::resume`] runs the backend
//! until the next stop or the end of the run and returns; between calls the
//! backend holds still, which is the pause.

use std::collections::{BTreeMap, HashMap};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;

use thiserror::Error;

use crate::expr::{eval, parse_expr, truthy, EvalError, ExprAst, ParseError, Value};
use crate::simbackends::{map_hierarchy, Capabilities, HierarchyMap, MapError, SignalId, SimError, Simulator};
use crate::symtab::{BreakpointRow, SourceKey, SymbolTable};

mod frame;

pub use frame::{regroup, FrameSnapshot, VarNode};

#[derive(Debug, Error)]
pub enum RuntimeError {
    #[error("the backend reports no clock signal")]
    NoClock,
    #[error(transparent)]
    Map(#[from] MapError),
    #[error("no breakpoint at {file}:{line}")]
    NoBreakpoint { file: String, line: u32 },
    #[error("invalid condition: {0}")]
    Condition(#[from] ParseError),
    #[error("not supported by the backend: {0}")]
    Capability(&'static str),
    #[error("unknown breakpoint id {0}")]
    UnknownBreakpoint(i64),
    #[error("unknown thread `{0}`")]
    UnknownThread(String),
    #[error("cannot resolve `{0}`")]
    Unresolved(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

impl From<EvalError> for RuntimeError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::Unresolved(n) => RuntimeError::Unresolved(n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Continue,
    StepOver,
    ReverseContinue,
    ReverseStep,
}

impl Command {
    fn reverse(self) -> bool {
        matches!(self, Command::ReverseContinue | Command::ReverseStep)
    }

    fn step(self) -> bool {
        matches!(self, Command::StepOver | Command::ReverseStep)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StopReason {
    Breakpoint,
    Step,
    /// Interrupted by [`Debugger::interrupt_handle`].
    Pause,
    /// Reverse execution reached the earliest reachable point.
    Boundary(String),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StopEvent {
    pub id: u64,
    pub time: u64,
    /// Source location of the group; `None` for pauses and boundaries.
    pub key: Option<SourceKey>,
    pub reason: StopReason,
    /// Sorted by thread.
    pub frames: Vec<FrameSnapshot>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Outcome {
    Stopped(StopEvent),
    /// The backend has no more edges.
    Ended { time: u64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunState {
    /// Not started.
    Idle,
    Paused,
    Ended,
}

/// Where the scan stands within one edge.
#[derive(Clone, Debug, PartialEq, Eq)]
enum GroupPos {
    BeforeFirst,
    At(SourceKey),
    AfterLast,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Cursor {
    Start,
    Edge { time: u64, pos: GroupPos },
    /// After a time jump to a point that need not be an edge.
    Between { time: u64 },
    Ended { last_edge: Option<u64> },
}

/// How a source name resolves in a breakpoint's scope.
#[derive(Clone, Debug)]
enum Src {
    Const(u64),
    Signal(SignalId),
    Missing,
}

#[derive(Clone, Debug)]
struct Member {
    row: BreakpointRow,
    thread: String,
    enable: ExprAst,
    /// Identifier of the enable condition to backend signal.
    enable_ids: Vec<(String, Src)>,
    condition: Option<(String, ExprAst)>,
    cond_ids: Vec<(String, Src)>,
    /// Scope in stored order: (source name, resolution).
    locals: Vec<(String, Src)>,
}

#[derive(Clone, Debug)]
struct Group {
    key: SourceKey,
    members: Vec<Member>,
}

/// Inserted breakpoint as reported to clients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InsertedInfo {
    pub id: i64,
    pub thread: String,
    pub key: SourceKey,
    pub condition: Option<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuntimeCapabilities {
    pub backend: Capabilities,
    /// Reverse execution can cross clock edges (backend can set time);
    /// otherwise it is limited to the current edge.
    pub reverse_across_edges: bool,
}

pub struct Debugger {
    sim: Box<dyn Simulator + Send>,
    table: SymbolTable,
    map: HierarchyMap,
    map_warning: Option<String>,
    inserted: BTreeMap<i64, Member>,
    groups: Vec<Group>,
    cursor: Cursor,
    last_stop: Option<StopEvent>,
    next_stop_id: u64,
    interrupt: Arc<AtomicBool>,
    diagnostics: Vec<String>,
    /// Per instance id: (source name, resolution).
    instance_vars: HashMap<i64, Vec<(String, Src)>>,
}

const MAX_DIAGNOSTICS: usize = 100;

impl Debugger {
    /// Attach to a backend. Without an explicit map the design is located in
    /// the backend hierarchy by name matching.
    pub fn attach(
        sim: Box<dyn Simulator + Send>,
        table: SymbolTable,
        map: Option<HierarchyMap>,
    ) -> Result<Self, RuntimeError> {
        if sim.clocks().is_empty() {
            return Err(RuntimeError::NoClock);
        }
        let (map, map_warning) = match map {
            Some(m) => (m, None),
            None => {
                let r = map_hierarchy(&expected_hierarchy(&table), &sim.hierarchy())?;
                (r.map, r.warning)
            }
        };
        let mut dbg = Debugger {
            sim,
            table,
            map,
            map_warning,
            inserted: BTreeMap::new(),
            groups: Vec::new(),
            cursor: Cursor::Start,
            last_stop: None,
            next_stop_id: 1,
            interrupt: Arc::new(AtomicBool::new(false)),
            diagnostics: Vec::new(),
            instance_vars: HashMap::new(),
        };
        let ids: Vec<i64> = dbg.table.instances.iter().map(|i| i.id).collect();
        for id in ids {
            let vars: Vec<(String, String)> = dbg
                .table
                .variables
                .iter()
                .filter(|v| v.is_instance_var && v.instance_id == id)
                .map(|v| (v.source_name.clone(), v.rtl_name.clone()))
                .collect();
            let resolved = vars.into_iter().map(|(s, rtl)| (s, dbg.resolve_rtl(&rtl))).collect();
            dbg.instance_vars.insert(id, resolved);
        }
        Ok(dbg)
    }

    pub fn hierarchy_map(&self) -> &HierarchyMap {
        &self.map
    }

    pub fn map_warning(&self) -> Option<&str> {
        self.map_warning.as_deref()
    }

    pub fn table(&self) -> &SymbolTable {
        &self.table
    }

    pub fn sim(&self) -> &dyn Simulator {
        &*self.sim
    }

    pub fn capabilities(&self) -> RuntimeCapabilities {
        let backend = self.sim.capabilities();
        RuntimeCapabilities {
            backend,
            reverse_across_edges: backend.can_set_time,
        }
    }

    pub fn state(&self) -> RunState {
        match self.cursor {
            Cursor::Start => RunState::Idle,
            Cursor::Ended { .. } => RunState::Ended,
            _ => RunState::Paused,
        }
    }

    pub fn time(&self) -> u64 {
        self.sim.time()
    }

    pub fn last_stop(&self) -> Option<&StopEvent> {
        self.last_stop.as_ref()
    }

    /// Set from any thread to stop a running `resume` at the next edge.
    pub fn interrupt_handle(&self) -> Arc<AtomicBool> {
        self.interrupt.clone()
    }

    /// Evaluation problems seen so far (unresolvable names in conditions).
    pub fn diagnostics(&self) -> &[String] {
        &self.diagnostics
    }

    fn resolve_rtl(&self, rtl: &str) -> Src {
        if let Some(c) = crate::expr::parse_number(rtl) {
            return Src::Const(c);
        }
        match self.sim.resolve(&self.map.map(rtl)) {
            Some(id) => Src::Signal(id),
            None => Src::Missing,
        }
    }

    fn read(&self, src: &Src) -> Option<Value> {
        match src {
            Src::Const(c) => Some(Value::literal(*c)),
            Src::Signal(id) => Some(self.sim.value_of(*id)),
            Src::Missing => None,
        }
    }

    /// Resolve a source-level name at a breakpoint: scope first, then the
    /// instance's variables, then a full net name.
    fn resolve_source(&self, row: &BreakpointRow, locals: &[(String, Src)], name: &str) -> Src {
        if let Some((_, s)) = locals.iter().find(|(n, _)| n == name) {
            return s.clone();
        }
        if let Some((_, s)) = self
            .instance_vars
            .get(&row.instance_id)
            .and_then(|v| v.iter().find(|(n, _)| n == name))
        {
            return s.clone();
        }
        self.resolve_rtl(name)
    }

    fn build_member(&self, row: &BreakpointRow, condition: Option<(String, ExprAst)>) -> Member {
        let locals: Vec<(String, Src)> = self
            .table
            .scope_variables
            .iter()
            .filter(|s| s.breakpoint_id == row.id)
            .filter_map(|s| {
                let v = self.table.variable(s.variable_id)?;
                Some((s.source_name.clone(), self.resolve_rtl(&v.rtl_name)))
            })
            .collect();
        let enable = parse_expr(&row.enable).unwrap_or(ExprAst::Literal(0));
        let enable_ids = enable.identifiers().into_iter().map(|n| (n.clone(), self.resolve_rtl(&n))).collect();
        let cond_ids = condition
            .as_ref()
            .map(|(_, c)| {
                c.identifiers()
                    .into_iter()
                    .map(|n| (n.clone(), self.resolve_source(row, &locals, &n)))
                    .collect()
            })
            .unwrap_or_default();
        let thread = self
            .table
            .instance(row.instance_id)
            .map(|i| i.name.clone())
            .unwrap_or_default();
        Member {
            row: row.clone(),
            thread,
            enable,
            enable_ids,
            condition,
            cond_ids,
            locals,
        }
    }

    /// Insert every breakpoint at `file:line` (and `column`), across all
    /// instances and unrolled copies. Nothing is inserted on error.
    pub fn insert_breakpoint(
        &mut self,
        file: &str,
        line: u32,
        column: Option<u32>,
        condition: Option<&str>,
    ) -> Result<Vec<i64>, RuntimeError> {
        use crate::symtab::SymbolSource;
        let condition = match condition.map(str::trim).filter(|c| !c.is_empty()) {
            Some(text) => Some((text.to_string(), parse_expr(text)?)),
            None => None,
        };
        let rows = self
            .table
            .breakpoints_at(file, line, column)
            .map_err(|_| RuntimeError::NoBreakpoint {
                file: file.to_string(),
                line,
            })?;
        if rows.is_empty() {
            return Err(RuntimeError::NoBreakpoint {
                file: file.to_string(),
                line,
            });
        }
        let mut ids = Vec::new();
        for row in &rows {
            let m = self.build_member(row, condition.clone());
            self.inserted.insert(row.id, m);
            ids.push(row.id);
        }
        self.regroup();
        Ok(ids)
    }

    pub fn remove_breakpoint(&mut self, id: i64) -> Result<(), RuntimeError> {
        self.inserted.remove(&id).ok_or(RuntimeError::UnknownBreakpoint(id))?;
        self.regroup();
        Ok(())
    }

    /// Remove every inserted breakpoint at a location; returns their ids.
    pub fn remove_at(&mut self, file: &str, line: u32) -> Vec<i64> {
        let ids: Vec<i64> = self
            .inserted
            .values()
            .filter(|m| m.row.line == line && crate::symtab::file_matches(&m.row.file, file))
            .map(|m| m.row.id)
            .collect();
        for id in &ids {
            self.inserted.remove(id);
        }
        self.regroup();
        ids
    }

    pub fn breakpoints(&self) -> Vec<InsertedInfo> {
        self.inserted
            .values()
            .map(|m| InsertedInfo {
                id: m.row.id,
                thread: m.thread.clone(),
                key: m.row.key(),
                condition: m.condition.as_ref().map(|(t, _)| t.clone()),
            })
            .collect()
    }

    fn regroup(&mut self) {
        let mut by_key: BTreeMap<SourceKey, Vec<Member>> = BTreeMap::new();
        for m in self.inserted.values() {
            by_key.entry(m.row.key()).or_default().push(m.clone());
        }
        self.groups = by_key
            .into_iter()
            .map(|(key, mut members)| {
                members.sort_by(|a, b| a.thread.cmp(&b.thread));
                Group { key, members }
            })
            .collect();
    }

    /// Source-key order of the inserted groups.
    pub fn group_keys(&self) -> Vec<SourceKey> {
        self.groups.iter().map(|g| g.key.clone()).collect()
    }

    fn note(&mut self, msg: String) {
        if self.diagnostics.len() < MAX_DIAGNOSTICS && !self.diagnostics.contains(&msg) {
            log::debug!("{msg}");
            self.diagnostics.push(msg);
        }
    }

    fn eval_with(&self, ast: &ExprAst, ids: &[(String, Src)]) -> Result<Value, EvalError> {
        eval(ast, &mut |name| {
            let (_, src) = ids.iter().find(|(n, _)| n == name)?;
            self.read(src)
        })
    }

    /// Enable AND user condition. Evaluation failures count as not firing
    /// and are reported through `notes`.
    fn fires(&self, m: &Member, notes: &mut Vec<String>) -> bool {
        let enable = match self.eval_with(&m.enable, &m.enable_ids) {
            Ok(v) => v,
            Err(e) => {
                notes.push(format!("breakpoint {}: enable condition: {e}", m.row.id));
                return false;
            }
        };
        if !truthy(&enable) {
            return false;
        }
        match &m.condition {
            None => true,
            Some((_, c)) => match self.eval_with(c, &m.cond_ids) {
                Ok(v) => truthy(&v),
                Err(e) => {
                    notes.push(format!("breakpoint {}: condition: {e}", m.row.id));
                    false
                }
            },
        }
    }

    fn frame(&self, m: &Member, fired: bool) -> FrameSnapshot {
        let locals: Vec<(String, Option<Value>)> = m.locals.iter().map(|(n, s)| (n.clone(), self.read(s))).collect();
        let inst: Vec<(String, Option<Value>)> = self
            .instance_vars
            .get(&m.row.instance_id)
            .map(|v| v.iter().map(|(n, s)| (n.clone(), self.read(s))).collect())
            .unwrap_or_default();
        FrameSnapshot {
            thread: m.thread.clone(),
            breakpoint_id: m.row.id,
            key: m.row.key(),
            time: self.sim.time(),
            fired,
            locals: regroup(&locals),
            instance_vars: regroup(&inst),
        }
    }

    /// Visit group `g` at the current edge. Returns the frames if the scan
    /// should stop here.
    fn visit(&mut self, g: usize, step: bool) -> Option<Vec<FrameSnapshot>> {
        let mut notes = Vec::new();
        let members = &self.groups[g].members;
        let frames: Vec<FrameSnapshot> = if step {
            members
                .iter()
                .map(|m| {
                    let f = self.fires(m, &mut notes);
                    self.frame(m, f)
                })
                .collect()
        } else {
            members
                .iter()
                .filter(|m| self.fires(m, &mut notes))
                .map(|m| self.frame(m, true))
                .collect()
        };
        for n in notes {
            self.note(n);
        }
        (step || !frames.is_empty()).then_some(frames)
    }

    /// Group indices still to visit at this edge, in key order; reverse
    /// scans walk the range backwards.
    fn pending(&self, pos: &GroupPos, reverse: bool) -> std::ops::Range<usize> {
        let n = self.groups.len();
        match (pos, reverse) {
            (GroupPos::BeforeFirst, false) | (GroupPos::AfterLast, true) => 0..n,
            (GroupPos::BeforeFirst, true) | (GroupPos::AfterLast, false) => 0..0,
            (GroupPos::At(k), false) => self.groups.partition_point(|g| g.key <= *k)..n,
            (GroupPos::At(k), true) => 0..self.groups.partition_point(|g| g.key < *k),
        }
    }

    fn stop(&mut self, time: u64, key: Option<SourceKey>, reason: StopReason, frames: Vec<FrameSnapshot>) -> Outcome {
        let ev = StopEvent {
            id: self.next_stop_id,
            time,
            key,
            reason,
            frames,
        };
        self.next_stop_id += 1;
        self.last_stop = Some(ev.clone());
        Outcome::Stopped(ev)
    }

    /// Run until the next stop according to `cmd`, or the end of the run.
    pub fn resume(&mut self, cmd: Command) -> Result<Outcome, RuntimeError> {
        self.interrupt.store(false, Ordering::Relaxed);
        self.last_stop = None;
        if cmd.reverse() {
            self.run_reverse(cmd.step())
        } else {
            self.run_forward(cmd.step())
        }
    }

    fn interrupted(&self) -> bool {
        // A plain load first keeps the common case free of a locked swap.
        self.interrupt.load(Ordering::Relaxed) && self.interrupt.swap(false, Ordering::Relaxed)
    }

    fn advance(&mut self) -> Result<Option<u64>, RuntimeError> {
        match self.sim.advance_to_next_edge()? {
            Some(t) => {
                self.cursor = Cursor::Edge {
                    time: t,
                    pos: GroupPos::BeforeFirst,
                };
                Ok(Some(t))
            }
            None => {
                self.finish();
                Ok(None)
            }
        }
    }

    /// The backend has no further edges.
    fn finish(&mut self) {
        let last_edge = match &self.cursor {
            Cursor::Edge { time, .. } => Some(*time),
            Cursor::Between { time } => self.sim.edge_at_or_before(*time),
            Cursor::Ended { last_edge } => *last_edge,
            Cursor::Start => None,
        };
        self.cursor = Cursor::Ended { last_edge };
    }

    fn run_forward(&mut self, step: bool) -> Result<Outcome, RuntimeError> {
        if let Cursor::Ended { .. } = self.cursor {
            return Ok(Outcome::Ended { time: self.sim.time() });
        }
        if self.groups.is_empty() {
            // Nothing to check: let the backend run, tracking only the last
            // edge seen.
            let mut last = None;
            loop {
                match self.sim.advance_to_next_edge()? {
                    Some(t) => {
                        last = Some(t);
                        if self.interrupted() {
                            self.cursor = Cursor::Edge {
                                time: t,
                                pos: GroupPos::BeforeFirst,
                            };
                            return Ok(self.stop(t, None, StopReason::Pause, Vec::new()));
                        }
                    }
                    None => {
                        if let Some(t) = last {
                            self.cursor = Cursor::Edge {
                                time: t,
                                pos: GroupPos::BeforeFirst,
                            };
                        }
                        self.finish();
                        return Ok(Outcome::Ended { time: self.sim.time() });
                    }
                }
            }
        }
        loop {
            let (time, pos) = match &self.cursor {
                Cursor::Edge { time, pos } => (*time, pos.clone()),
                Cursor::Start | Cursor::Between { .. } => {
                    if self.advance()?.is_none() {
                        return Ok(Outcome::Ended { time: self.sim.time() });
                    }
                    continue;
                }
                Cursor::Ended { .. } => return Ok(Outcome::Ended { time: self.sim.time() }),
            };
            for g in self.pending(&pos, false) {
                if let Some(frames) = self.visit(g, step) {
                    let key = self.groups[g].key.clone();
                    self.cursor = Cursor::Edge {
                        time,
                        pos: GroupPos::At(key.clone()),
                    };
                    let reason = if step { StopReason::Step } else { StopReason::Breakpoint };
                    return Ok(self.stop(time, Some(key), reason, frames));
                }
            }
            match self.advance()? {
                None => return Ok(Outcome::Ended { time: self.sim.time() }),
                Some(t) => {
                    if self.interrupted() {
                        return Ok(self.stop(t, None, StopReason::Pause, Vec::new()));
                    }
                }
            }
        }
    }

    /// Move to the edge at `t` (which must be an edge) with the scan
    /// positioned after its last group.
    fn rewind_to(&mut self, t: u64) -> Result<(), RuntimeError> {
        self.sim.set_time(t)?;
        self.cursor = Cursor::Edge {
            time: t,
            pos: GroupPos::AfterLast,
        };
        Ok(())
    }

    fn boundary(&mut self, time: u64, notice: &str) -> Outcome {
        self.cursor = Cursor::Edge {
            time,
            pos: GroupPos::BeforeFirst,
        };
        self.stop(time, None, StopReason::Boundary(notice.to_string()), Vec::new())
    }

    fn run_reverse(&mut self, step: bool) -> Result<Outcome, RuntimeError> {
        let can_set_time = self.sim.capabilities().can_set_time;
        match self.cursor.clone() {
            Cursor::Start => {
                return Ok(self.stop(self.sim.time(), None, StopReason::Boundary(NOTICE_START.into()), Vec::new()));
            }
            Cursor::Ended { last_edge } => match last_edge {
                Some(e) if can_set_time => self.rewind_to(e)?,
                _ => {
                    return Ok(self.stop(
                        self.sim.time(),
                        None,
                        StopReason::Boundary(NOTICE_ENDED.into()),
                        Vec::new(),
                    ))
                }
            },
            Cursor::Between { time } => match self.sim.edge_at_or_before(time) {
                Some(e) => self.rewind_to(e)?,
                None => {
                    return Ok(self.stop(time, None, StopReason::Boundary(NOTICE_START.into()), Vec::new()));
                }
            },
            Cursor::Edge { .. } => {}
        }
        loop {
            let Cursor::Edge { time, pos } = self.cursor.clone() else {
                unreachable!("reverse scan always runs at an edge");
            };
            for g in self.pending(&pos, true).rev() {
                if let Some(frames) = self.visit(g, step) {
                    let key = self.groups[g].key.clone();
                    self.cursor = Cursor::Edge {
                        time,
                        pos: GroupPos::At(key.clone()),
                    };
                    let reason = if step { StopReason::Step } else { StopReason::Breakpoint };
                    return Ok(self.stop(time, Some(key), reason, frames));
                }
            }
            if !can_set_time {
                return Ok(self.boundary(time, NOTICE_INTRA));
            }
            let prev = time.checked_sub(1).and_then(|t| self.sim.edge_at_or_before(t));
            match prev {
                None => return Ok(self.boundary(time, NOTICE_START)),
                Some(e) => {
                    self.rewind_to(e)?;
                    if self.interrupted() {
                        return Ok(self.stop(e, None, StopReason::Pause, Vec::new()));
                    }
                }
            }
        }
    }

    /// Jump to time `t`. The next forward run continues with the first edge
    /// after `t`.
    pub fn set_time(&mut self, t: u64) -> Result<(), RuntimeError> {
        if !self.sim.capabilities().can_set_time {
            return Err(RuntimeError::Capability("set_time"));
        }
        self.sim.set_time(t)?;
        self.last_stop = None;
        self.cursor = Cursor::Between { time: t };
        Ok(())
    }

    /// Force a value. `name` is a source name in the current stop's scope,
    /// an instance variable of the top, or a net name.
    pub fn set_value(&mut self, name: &str, value: u64) -> Result<(), RuntimeError> {
        if !self.sim.capabilities().can_set_value {
            return Err(RuntimeError::Capability("set_value"));
        }
        let rtl = self.rtl_for(name, None)?;
        self.sim.set_value(&self.map.map(&rtl), value)?;
        Ok(())
    }

    fn rtl_for(&self, name: &str, thread: Option<&str>) -> Result<String, RuntimeError> {
        if let Some(m) = self.stop_member(thread)? {
            let scoped = self
                .table
                .scope_variables
                .iter()
                .filter(|s| s.breakpoint_id == m.row.id && s.source_name == name)
                .find_map(|s| self.table.variable(s.variable_id));
            if let Some(v) = scoped {
                if v.constant().is_none() {
                    return Ok(v.rtl_name.clone());
                }
            }
        }
        let inst = match self.stop_member(thread)? {
            Some(m) => m.row.instance_id,
            None => self.table.instances.first().map(|i| i.id).unwrap_or(0),
        };
        let iv = self
            .table
            .variables
            .iter()
            .find(|v| v.is_instance_var && v.instance_id == inst && v.source_name == name);
        match iv {
            Some(v) => Ok(v.rtl_name.clone()),
            None if self.sim.resolve(&self.map.map(name)).is_some() => Ok(name.to_string()),
            None => Err(RuntimeError::Unresolved(name.to_string())),
        }
    }

    /// Member of the current stop for `thread` (first frame by default).
    fn stop_member(&self, thread: Option<&str>) -> Result<Option<&Member>, RuntimeError> {
        let Some(stop) = &self.last_stop else {
            if let Some(t) = thread {
                return Err(RuntimeError::UnknownThread(t.to_string()));
            }
            return Ok(None);
        };
        let frame = match thread {
            Some(t) => stop
                .frames
                .iter()
                .find(|f| f.thread == t)
                .ok_or_else(|| RuntimeError::UnknownThread(t.to_string()))?,
            None => match stop.frames.first() {
                Some(f) => f,
                None => return Ok(None),
            },
        };
        Ok(self.inserted.get(&frame.breakpoint_id))
    }

    /// Evaluate an expression over source names of the current stop (or
    /// net names when not stopped at a breakpoint).
    pub fn evaluate(&self, text: &str, thread: Option<&str>) -> Result<Value, RuntimeError> {
        let ast = parse_expr(text)?;
        let ids: Vec<(String, Src)> = match self.stop_member(thread)? {
            Some(m) => ast
                .identifiers()
                .into_iter()
                .map(|n| (n.clone(), self.resolve_source(&m.row, &m.locals, &n)))
                .collect(),
            None => {
                let top = self.table.instances.first().map(|i| i.id).unwrap_or(0);
                let locals = self.instance_vars.get(&top).cloned().unwrap_or_default();
                ast.identifiers()
                    .into_iter()
                    .map(|n| {
                        let s = locals
                            .iter()
                            .find(|(x, _)| *x == n)
                            .map(|(_, s)| s.clone())
                            .unwrap_or_else(|| self.resolve_rtl(&n));
                        (n, s)
                    })
                    .collect()
            }
        };
        if let Some((n, _)) = ids.iter().find(|(_, s)| matches!(s, Src::Missing)) {
            return Err(RuntimeError::Unresolved(n.clone()));
        }
        Ok(self.eval_with(&ast, &ids)?)
    }

    /// Frames of the current stop, if `stop_id` is still current.
    pub fn frames(&self, stop_id: u64) -> Option<&[FrameSnapshot]> {
        self.last_stop.as_ref().filter(|s| s.id == stop_id).map(|s| s.frames.as_slice())
    }

    /// Threads (instance paths) at the current stop.
    pub fn threads(&self) -> Vec<String> {
        self.last_stop
            .as_ref()
            .map(|s| s.frames.iter().map(|f| f.thread.clone()).collect())
            .unwrap_or_default()
    }

    pub fn close(&mut self) {
        self.sim.close();
    }
}

pub const NOTICE_START: &str = "reached the beginning of the run";
pub const NOTICE_INTRA: &str = "reached the first breakpoint of this clock edge; the backend cannot go back in time";
pub const NOTICE_ENDED: &str = "the run has ended and the backend cannot go back in time";

/// Instance paths with the leaf signal names expected under each, for
/// hierarchy mapping.
pub fn expected_hierarchy(table: &SymbolTable) -> Vec<(String, Vec<String>)> {
    table
        .instances
        .iter()
        .map(|i| {
            let prefix = format!("{}.", i.name);
            let mut leaves: Vec<String> = table
                .variables
                .iter()
                .filter(|v| v.instance_id == i.id)
                .filter_map(|v| v.rtl_name.strip_prefix(&prefix))
                .filter(|l| !l.contains('.'))
                .map(str::to_string)
                .collect();
            leaves.sort();
            leaves.dedup();
            (i.name.clone(), leaves)
        })
        .collect()
}
