// SPDX-License-Identifier: Apache-2.0

//! Reference interpreter. Executes the source program directly, one clock
//! cycle at a time, and logs every assignment it executes together with
//! the source-level values visible before and after it.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use super::validate::const_eval;
use super::*;
use crate::expr::{apply_binary, apply_unary, mask, min_width};

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LogEntry {
    /// Hierarchical instance path, e.g. `top.u`.
    pub instance: String,
    pub loc: SourceLoc,
    /// Unrolled copy of the statement, counted over the static unrolling.
    pub ordinal: u32,
    /// Source-level values visible before the statement, keyed by source
    /// element name (`sum`, `data[0]`, `io.a`) and loop variable.
    pub pre: BTreeMap<String, u64>,
    pub post: BTreeMap<String, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CycleTrace {
    pub cycle: usize,
    /// Settled value of every variable at the rising edge, keyed by
    /// hierarchical flattened name (`top.data_0`). Registers hold their
    /// pre-edge state.
    pub values: BTreeMap<String, u64>,
    /// Register values committed at the edge.
    pub next_state: BTreeMap<String, u64>,
    pub log: Vec<LogEntry>,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct ExecutionTrace {
    pub cycles: Vec<CycleTrace>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InterpError {
    #[error("unknown input `{0}`")]
    UnknownInput(String),
    #[error("cycle {cycle}: input `{name}` is not assigned")]
    MissingInput { cycle: usize, name: String },
    #[error("value {value} does not fit input `{name}` of width {width}")]
    WidthMismatch { name: String, value: u64, width: u32 },
    #[error("cycle {cycle}: combinational logic does not settle")]
    NoFixedPoint { cycle: usize },
}

/// Run `program` for `stimulus.len()` cycles. Each stimulus entry must
/// assign every non-clock top-level input; keys may use source (`data[0]`)
/// or flattened (`data_0`) element names.
pub fn interpret(
    program: &SourceProgram,
    stimulus: &[BTreeMap<String, u64>],
) -> Result<ExecutionTrace, InterpError> {
    let mut m = Machine::new(program);
    let inputs = m.top_inputs();
    let mut by_key: HashMap<String, (String, u32)> = HashMap::new();
    for (e, w) in &inputs {
        by_key.insert(e.clone(), (e.clone(), *w));
        by_key.insert(flat_name(e), (e.clone(), *w));
    }
    let clocks = program.top_module().clock_inputs(program);
    let mut trace = ExecutionTrace::default();
    for (cycle, cycle_inputs) in stimulus.iter().enumerate() {
        let mut assigned = BTreeSet::new();
        for (k, v) in cycle_inputs {
            if clocks.contains(k) {
                continue;
            }
            let (element, width) = by_key
                .get(k)
                .ok_or_else(|| InterpError::UnknownInput(k.clone()))?;
            if *v > mask(*width) {
                return Err(InterpError::WidthMismatch {
                    name: k.clone(),
                    value: *v,
                    width: *width,
                });
            }
            m.insts[0].values.insert(element.clone(), *v);
            assigned.insert(element.clone());
        }
        if let Some((name, _)) = inputs.iter().find(|(e, _)| !assigned.contains(e)) {
            return Err(InterpError::MissingInput {
                cycle,
                name: name.clone(),
            });
        }
        trace.cycles.push(m.cycle(cycle)?);
    }
    Ok(trace)
}

struct Inst<'a> {
    path: String,
    module: &'a ModuleDef,
    parent: Option<(usize, &'a super::Instance)>,
    children: HashMap<&'a str, usize>,
    /// Current value of every element (ports, wires, register state).
    values: HashMap<String, u64>,
    widths: HashMap<String, u32>,
    clocks: Vec<String>,
    comb_targets: Vec<BTreeSet<String>>,
}

struct Machine<'a> {
    program: &'a SourceProgram,
    insts: Vec<Inst<'a>>,
}

/// Read context for one block execution.
struct Scope<'s> {
    inst: usize,
    /// Own-block targets assigned so far (comb) or pending next values (seq).
    local: BTreeMap<String, u64>,
    /// Comb blocks read their own assignments; seq blocks read state.
    read_local: bool,
    /// Elements the current comb block assigns.
    targets: Option<&'s BTreeSet<String>>,
    loops: Vec<(String, u64)>,
    ordinals: &'s mut HashMap<SourceLoc, u32>,
    log: Option<&'s mut Vec<LogEntry>>,
}

impl<'a> Machine<'a> {
    fn new(program: &'a SourceProgram) -> Self {
        let mut m = Machine {
            program,
            insts: Vec::new(),
        };
        let top = program.top_module();
        m.elaborate(top, top.name.clone(), None);
        m
    }

    fn elaborate(&mut self, module: &'a ModuleDef, path: String, parent: Option<(usize, &'a super::Instance)>) -> usize {
        let idx = self.insts.len();
        let mut values = HashMap::new();
        let mut widths = HashMap::new();
        for v in module.vars() {
            let reset = module.register(&v.name).and_then(|r| r.reset).unwrap_or(0);
            for e in v.elements() {
                let init = if v.kind == VarKind::Reg { reset } else { 0 };
                values.insert(e.clone(), init);
                widths.insert(e, v.width);
            }
        }
        let clocks = module.clock_inputs(self.program);
        for c in &clocks {
            values.insert(c.clone(), 1);
        }
        let comb_targets = module
            .comb_blocks
            .iter()
            .map(|b| {
                let mut t = BTreeSet::new();
                collect_targets(&b.body, &mut Vec::new(), &mut t);
                t
            })
            .collect();
        self.insts.push(Inst {
            comb_targets,
            path: path.clone(),
            module,
            parent,
            children: HashMap::new(),
            values,
            widths,
            clocks,
        });
        for inst in &module.instances {
            let child = self.program.module(&inst.module).expect("validated");
            let c = self.elaborate(child, format!("{path}.{}", inst.name), Some((idx, inst)));
            self.insts[idx].children.insert(&inst.name, c);
        }
        idx
    }

    fn top_inputs(&self) -> Vec<(String, u32)> {
        let top = &self.insts[0];
        let mut out = Vec::new();
        for p in &top.module.ports {
            if p.dir == Direction::In && !top.clocks.contains(&p.name) {
                let d = VarDecl {
                    name: p.name.clone(),
                    kind: VarKind::Input,
                    width: p.width,
                    len: p.len,
                };
                out.extend(d.elements().into_iter().map(|e| (e, p.width)));
            }
        }
        out
    }

    fn cycle(&mut self, cycle: usize) -> Result<CycleTrace, InterpError> {
        let blocks: usize = self
            .insts
            .iter()
            .map(|i| i.module.comb_blocks.len() + i.module.instances.len() + 1)
            .sum();
        let mut log = Vec::new();
        let mut settled = false;
        for _ in 0..blocks + 2 {
            log.clear();
            if !self.comb_pass(&mut log) {
                settled = true;
                break;
            }
        }
        if !settled {
            return Err(InterpError::NoFixedPoint { cycle });
        }
        let mut values = BTreeMap::new();
        for inst in &self.insts {
            for (e, v) in &inst.values {
                values.insert(format!("{}.{}", inst.path, flat_name(e)), *v);
            }
        }
        // Sequential blocks see settled values and register state.
        let mut next_state = BTreeMap::new();
        let mut commits = Vec::new();
        for i in 0..self.insts.len() {
            let module = self.insts[i].module;
            let mut pending: BTreeMap<String, u64> = BTreeMap::new();
            for r in &module.registers {
                let d = module.var(&r.name).expect("reg");
                for e in d.elements() {
                    pending.insert(e.clone(), self.insts[i].values[&e]);
                }
            }
            for b in &module.seq_blocks {
                let mut ordinals = HashMap::new();
                let mut scope = Scope {
                    inst: i,
                    local: pending,
                    read_local: false,
                        targets: None,
                    loops: Vec::new(),
                    ordinals: &mut ordinals,
                    log: Some(&mut log),
                };
                self.exec(&b.body, &mut scope);
                pending = scope.local;
            }
            let in_reset = self.reset_active(i);
            for r in &module.registers {
                let d = module.var(&r.name).expect("reg");
                for e in d.elements() {
                    let v = match (in_reset, r.reset) {
                        (true, Some(rv)) => rv,
                        _ => pending[&e],
                    };
                    next_state.insert(format!("{}.{}", self.insts[i].path, flat_name(&e)), v);
                    commits.push((i, e, v));
                }
            }
        }
        for (i, e, v) in commits {
            self.insts[i].values.insert(e, v);
        }
        Ok(CycleTrace {
            cycle,
            values,
            next_state,
            log,
        })
    }

    fn reset_active(&self, i: usize) -> bool {
        let inst = &self.insts[i];
        match inst.module.port("rst") {
            Some(p) if p.dir == Direction::In && p.width == 1 && p.len.is_none() && !inst.clocks.contains(&p.name) => {
                inst.values.get("rst").copied().unwrap_or(0) != 0
            }
            _ => false,
        }
    }

    /// One pass over every instance; returns whether anything changed.
    fn comb_pass(&mut self, log: &mut Vec<LogEntry>) -> bool {
        let mut changed = false;
        for i in 0..self.insts.len() {
            if let Some((p, inst)) = self.insts[i].parent {
                let child_clocks = self.insts[i].clocks.clone();
                for b in &inst.bindings {
                    if child_clocks.contains(&b.port) {
                        continue;
                    }
                    let mut ordinals = HashMap::new();
                    let scope = Scope {
                        inst: p,
                        local: BTreeMap::new(),
                        read_local: false,
                        targets: None,
                        loops: Vec::new(),
                        ordinals: &mut ordinals,
                        log: None,
                    };
                    let element = match b.index {
                        Some(ix) => format!("{}[{}]", b.port, ix),
                        None => b.port.clone(),
                    };
                    let (v, _) = self.eval(&b.value, &scope);
                    let v = v & mask(self.insts[i].widths[&element]);
                    if self.insts[i].values.insert(element, v) != Some(v) {
                        changed = true;
                    }
                }
            }
            let module = self.insts[i].module;
            for (bi, b) in module.comb_blocks.iter().enumerate() {
                let mut ordinals = HashMap::new();
                let mut scope = Scope {
                    inst: i,
                    local: BTreeMap::new(),
                    read_local: true,
                    targets: Some(&self.insts[i].comb_targets[bi]),
                    loops: Vec::new(),
                    ordinals: &mut ordinals,
                    log: Some(&mut *log),
                };
                self.exec(&b.body, &mut scope);
                let local = scope.local;
                for (e, v) in local {
                    if self.insts[i].values.insert(e, v) != Some(v) {
                        changed = true;
                    }
                }
            }
        }
        changed
    }

    fn visible(&self, scope: &Scope) -> BTreeMap<String, u64> {
        let inst = &self.insts[scope.inst];
        let mut out = BTreeMap::new();
        for v in inst.module.vars() {
            for e in v.elements() {
                let val = if scope.read_local {
                    match scope.local.get(&e) {
                        Some(x) => Some(*x),
                        // Own-block targets that are not yet assigned are not visible.
                        None if scope.targets.is_some_and(|t| t.contains(&e)) => None,
                        None => Some(inst.values[&e]),
                    }
                } else {
                    Some(inst.values[&e])
                };
                if let Some(x) = val {
                    out.insert(e, x);
                }
            }
        }
        for (n, v) in &scope.loops {
            out.insert(n.clone(), *v);
        }
        out
    }

    fn exec(&self, body: &[Stmt], scope: &mut Scope) {
        for s in body {
            self.exec_stmt(s, scope);
        }
    }

    fn bump(scope: &mut Scope, loc: &SourceLoc) -> u32 {
        let c = scope.ordinals.entry(loc.clone()).or_insert(0);
        *c += 1;
        *c - 1
    }

    fn exec_stmt(&self, s: &Stmt, scope: &mut Scope) {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let ordinal = Self::bump(scope, &s.loc);
                let pre = scope.log.is_some().then(|| self.visible(scope));
                let (v, _) = self.eval(value, scope);
                let element = match &target.index {
                    Some(ix) => format!("{}[{}]", target.name, const_eval(ix, &scope.loops).expect("validated").0),
                    None => target.name.clone(),
                };
                let width = self.insts[scope.inst].widths[&element];
                scope.local.insert(element, v & mask(width));
                if let Some(pre) = pre {
                    let post = self.visible(scope);
                    let instance = self.insts[scope.inst].path.clone();
                    scope.log.as_mut().unwrap().push(LogEntry {
                        instance,
                        loc: s.loc.clone(),
                        ordinal,
                        pre,
                        post,
                    });
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let (c, _) = self.eval(cond, scope);
                if c != 0 {
                    self.exec(then_body, scope);
                    skip(else_body, scope);
                } else {
                    skip(then_body, scope);
                    self.exec(else_body, scope);
                }
            }
            StmtKind::For {
                var,
                start,
                end,
                body,
            } => {
                let lo = const_eval(start, &scope.loops).expect("validated").0;
                let hi = const_eval(end, &scope.loops).expect("validated").0;
                for i in lo..hi.max(lo) {
                    scope.loops.push((var.clone(), i));
                    self.exec(body, scope);
                    scope.loops.pop();
                }
            }
            StmtKind::Block(body) => self.exec(body, scope),
        }
    }

    fn read(&self, name: &str, index: Option<&Expr>, scope: &Scope) -> (u64, u32) {
        if let Some((_, v)) = scope.loops.iter().rev().find(|(n, _)| n == name) {
            return (*v, min_width(*v));
        }
        let element = |base: &str| match index {
            Some(ix) => format!("{base}[{}]", const_eval(ix, &scope.loops).expect("validated").0),
            None => base.to_string(),
        };
        let inst = &self.insts[scope.inst];
        if let Some(w) = inst.widths.get(&element(name)) {
            let e = element(name);
            if scope.read_local {
                if let Some(v) = scope.local.get(&e) {
                    return (*v, *w);
                }
            }
            return (inst.values[&e], *w);
        }
        let (child, port) = name.split_once('.').expect("validated");
        let c = &self.insts[inst.children[child]];
        let e = element(port);
        (c.values[&e], c.widths[&e])
    }

    fn eval(&self, e: &Expr, scope: &Scope) -> (u64, u32) {
        match e {
            Expr::Lit(v) => (*v, min_width(*v)),
            Expr::Var { name, index } => self.read(name, index.as_deref(), scope),
            Expr::Unary(op, a) => {
                let (a, w) = self.eval(a, scope);
                apply_unary(*op, a, w)
            }
            Expr::Binary(op, a, b) => {
                let (x, wa) = self.eval(a, scope);
                let (y, wb) = self.eval(b, scope);
                // Two-state: division by zero yields zero.
                (apply_binary(*op, x, wa, y, wb).unwrap_or(0), op.result_width(wa, wb))
            }
            Expr::Ternary(c, a, b) => {
                let (c, _) = self.eval(c, scope);
                let (x, wa) = self.eval(a, scope);
                let (y, wb) = self.eval(b, scope);
                (if c != 0 { x } else { y }, wa.max(wb))
            }
        }
    }
}

/// Advance ordinal counters over statements that are not executed.
fn skip(body: &[Stmt], scope: &mut Scope) {
    for s in body {
        match &s.kind {
            StmtKind::Assign { .. } => {
                Machine::bump(scope, &s.loc);
            }
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                skip(then_body, scope);
                skip(else_body, scope);
            }
            StmtKind::For {
                var,
                start,
                end,
                body,
            } => {
                let lo = const_eval(start, &scope.loops).expect("validated").0;
                let hi = const_eval(end, &scope.loops).expect("validated").0;
                for i in lo..hi.max(lo) {
                    scope.loops.push((var.clone(), i));
                    skip(body, scope);
                    scope.loops.pop();
                }
            }
            StmtKind::Block(b) => skip(b, scope),
        }
    }
}

/// Every element a block may assign, over the static unrolling.
pub(crate) fn collect_targets(body: &[Stmt], loops: &mut Vec<(String, u64)>, out: &mut BTreeSet<String>) {
    for s in body {
        match &s.kind {
            StmtKind::Assign { target, .. } => {
                out.insert(match &target.index {
                    Some(ix) => format!("{}[{}]", target.name, const_eval(ix, loops).expect("validated").0),
                    None => target.name.clone(),
                });
            }
            StmtKind::If {
                then_body,
                else_body,
                ..
            } => {
                collect_targets(then_body, loops, out);
                collect_targets(else_body, loops, out);
            }
            StmtKind::For {
                var,
                start,
                end,
                body,
            } => {
                let lo = const_eval(start, loops).expect("validated").0;
                let hi = const_eval(end, loops).expect("validated").0;
                for i in lo..hi.max(lo) {
                    loops.push((var.clone(), i));
                    collect_targets(body, loops, out);
                    loops.pop();
                }
            }
            StmtKind::Block(b) => collect_targets(b, loops, out),
        }
    }
}
