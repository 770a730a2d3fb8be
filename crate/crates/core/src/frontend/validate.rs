// SPDX-License-Identifier: Apache-2.0

//! Static checks run after parsing. Everything downstream (interpreter,
//! lowering) assumes a program that passed these.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use super::*;
use crate::expr::{apply_binary, apply_unary, min_width, MAX_WIDTH};

/// Longest single loop.
pub const MAX_LOOP_TRIP: u64 = 1024;
/// Unrolled statements per module.
pub const MAX_UNROLLED: usize = 100_000;
/// Instances in the elaborated tree.
pub const MAX_INSTANCES: usize = 4096;
pub const MAX_ARRAY_LEN: u32 = 4096;

pub(super) fn validate(p: &SourceProgram) -> Result<(), FrontendError> {
    let mut seen = HashMap::new();
    for m in &p.modules {
        if seen.insert(m.name.as_str(), ()).is_some() {
            return Err(FrontendError::DuplicateName {
                loc: m.loc.clone(),
                name: m.name.clone(),
            });
        }
    }
    for m in &p.modules {
        check_names(m)?;
        for inst in &m.instances {
            if p.module(&inst.module).is_none() {
                return Err(FrontendError::UnknownModule {
                    loc: inst.loc.clone(),
                    name: inst.module.clone(),
                });
            }
        }
    }
    check_acyclic(p)?;
    for m in &p.modules {
        check_module(p, m)?;
    }
    Ok(())
}

fn invalid<T>(loc: &SourceLoc, message: impl Into<String>) -> Result<T, FrontendError> {
    Err(FrontendError::Invalid {
        loc: loc.clone(),
        message: message.into(),
    })
}

fn check_names(m: &ModuleDef) -> Result<(), FrontendError> {
    let mut decls: Vec<(&str, &SourceLoc, u32, Option<u32>)> = Vec::new();
    decls.extend(m.ports.iter().map(|x| (x.name.as_str(), &x.loc, x.width, x.len)));
    decls.extend(m.registers.iter().map(|x| (x.name.as_str(), &x.loc, x.width, x.len)));
    decls.extend(m.wires.iter().map(|x| (x.name.as_str(), &x.loc, x.width, x.len)));
    let mut names: HashMap<String, ()> = HashMap::new();
    let mut flats: HashMap<String, ()> = HashMap::new();
    for inst in &m.instances {
        if names.insert(inst.name.clone(), ()).is_some() {
            return Err(FrontendError::DuplicateName {
                loc: inst.loc.clone(),
                name: inst.name.clone(),
            });
        }
    }
    for (name, loc, width, len) in decls {
        if name.contains("__") || name.starts_with('_') {
            return invalid(loc, format!("`{name}`: leading `_` and `__` are reserved"));
        }
        let first = name.split('.').next().unwrap_or(name);
        let clash_inst = first != name && m.instance(first).is_some();
        if names.insert(name.to_string(), ()).is_some() || clash_inst {
            return Err(FrontendError::DuplicateName {
                loc: loc.clone(),
                name: name.to_string(),
            });
        }
        if width == 0 || width > MAX_WIDTH {
            return invalid(loc, format!("width of `{name}` must be between 1 and {MAX_WIDTH}"));
        }
        if let Some(n) = len {
            if n == 0 || n > MAX_ARRAY_LEN {
                return invalid(loc, format!("array length of `{name}` must be between 1 and {MAX_ARRAY_LEN}"));
            }
        }
        let decl = VarDecl {
            name: name.to_string(),
            kind: VarKind::Wire,
            width,
            len,
        };
        for e in decl.elements() {
            if flats.insert(flat_name(&e), ()).is_some() {
                return Err(FrontendError::DuplicateName {
                    loc: loc.clone(),
                    name: e,
                });
            }
        }
    }
    Ok(())
}

fn check_acyclic(p: &SourceProgram) -> Result<(), FrontendError> {
    // 0 = unvisited, 1 = on stack, 2 = done; also counts elaborated instances.
    fn visit<'a>(
        p: &'a SourceProgram,
        m: &'a ModuleDef,
        state: &mut HashMap<&'a str, u8>,
        count: &mut HashMap<&'a str, usize>,
    ) -> Result<usize, FrontendError> {
        match state.get(m.name.as_str()) {
            Some(1) => return invalid(&m.loc, format!("module `{}` instantiates itself", m.name)),
            Some(_) => return Ok(count[m.name.as_str()]),
            None => {}
        }
        state.insert(&m.name, 1);
        let mut total = 1usize;
        for inst in &m.instances {
            let child = p.module(&inst.module).expect("checked");
            total = total.saturating_add(visit(p, child, state, count)?);
        }
        if total > MAX_INSTANCES {
            return invalid(&m.loc, format!("more than {MAX_INSTANCES} instances after elaboration"));
        }
        state.insert(&m.name, 2);
        count.insert(&m.name, total);
        Ok(total)
    }
    let mut state = HashMap::new();
    let mut count = HashMap::new();
    for m in &p.modules {
        visit(p, m, &mut state, &mut count)?;
    }
    Ok(())
}

fn scalar_clock_input(m: &ModuleDef, name: &str) -> bool {
    matches!(m.port(name), Some(p) if p.dir == Direction::In && p.width == 1 && p.len.is_none())
}

fn check_module(p: &SourceProgram, m: &ModuleDef) -> Result<(), FrontendError> {
    for r in &m.registers {
        if !scalar_clock_input(m, &r.clock) {
            return invalid(&r.loc, format!("clock `{}` of `{}` is not a 1-bit input", r.clock, r.name));
        }
        if let Some(v) = r.reset {
            if v > crate::expr::mask(r.width) {
                return invalid(&r.loc, format!("reset value of `{}` does not fit in {} bits", r.name, r.width));
            }
        }
    }
    for b in &m.seq_blocks {
        let c = b.clock.as_deref().unwrap_or("");
        if !scalar_clock_input(m, c) {
            return invalid(&b.loc, format!("clock `{c}` is not a 1-bit input"));
        }
    }
    let clocks = m.clock_inputs(p);

    for inst in &m.instances {
        check_bindings(p, m, inst, &clocks)?;
    }

    let mut drivers: BTreeMap<String, usize> = BTreeMap::new();
    let mut driven: BTreeSet<String> = BTreeSet::new();
    let mut budget = MAX_UNROLLED;
    let blocks: Vec<&Block> = m.comb_blocks.iter().chain(&m.seq_blocks).collect();
    for (bi, b) in blocks.iter().enumerate() {
        let mut w = Walk {
            p,
            m,
            clocks: &clocks,
            block: b,
            loops: Vec::new(),
            collect: true,
            targets: BTreeSet::new(),
            defined: BTreeSet::new(),
            cond_depth: 0,
            budget: &mut budget,
        };
        w.stmts(&b.body)?;
        let targets = std::mem::take(&mut w.targets);
        let before = *w.budget;
        w.collect = false;
        w.targets = targets.clone();
        w.stmts(&b.body)?;
        // The second pass revisits the same statements; count them once.
        *w.budget = before;
        if b.clock.is_none() {
            if let Some(missing) = targets.iter().find(|t| !w.defined.contains(*t)) {
                return invalid(&b.loc, format!("`{missing}` is not assigned on every path through the block"));
            }
        }
        for t in &targets {
            let var = base_name(t);
            match drivers.get(var) {
                Some(other) if *other != bi => {
                    return invalid(&b.loc, format!("`{var}` is assigned in more than one block"))
                }
                _ => {
                    drivers.insert(var.to_string(), bi);
                }
            }
            driven.insert(t.clone());
        }
    }
    for v in m.vars() {
        if matches!(v.kind, VarKind::Output | VarKind::Wire) {
            for e in v.elements() {
                if !driven.contains(&e) {
                    let loc = m
                        .ports
                        .iter()
                        .map(|x| (&x.name, &x.loc))
                        .chain(m.wires.iter().map(|x| (&x.name, &x.loc)))
                        .find(|(n, _)| **n == v.name)
                        .map(|(_, l)| l.clone())
                        .unwrap_or_else(|| m.loc.clone());
                    return invalid(&loc, format!("`{e}` is never assigned"));
                }
            }
        }
    }
    Ok(())
}

fn base_name(element: &str) -> &str {
    element.split('[').next().unwrap_or(element)
}

fn check_bindings(
    p: &SourceProgram,
    m: &ModuleDef,
    inst: &Instance,
    clocks: &[String],
) -> Result<(), FrontendError> {
    let child = p.module(&inst.module).expect("checked");
    let child_clocks = child.clock_inputs(p);
    let mut bound = BTreeSet::new();
    for b in &inst.bindings {
        let port = match child.port(&b.port) {
            Some(port) if port.dir == Direction::In => port,
            _ => {
                return invalid(&b.loc, format!("`{}` is not an input of `{}`", b.port, child.name))
            }
        };
        let element = match (port.len, b.index) {
            (None, None) => b.port.clone(),
            (Some(n), Some(i)) if i < n => format!("{}[{}]", b.port, i),
            (Some(_), Some(i)) => return invalid(&b.loc, format!("index {i} out of range for `{}`", b.port)),
            (Some(_), None) => return invalid(&b.loc, format!("array port `{}` must be bound element-wise", b.port)),
            (None, Some(_)) => return invalid(&b.loc, format!("`{}` is not an array", b.port)),
        };
        if !bound.insert(element.clone()) {
            return Err(FrontendError::DuplicateName {
                loc: b.loc.clone(),
                name: element,
            });
        }
        if child_clocks.contains(&b.port) {
            match &b.value {
                Expr::Var { name, index: None } if scalar_clock_input(m, name) => {}
                _ => {
                    return invalid(&b.loc, format!("clock port `{}` must be bound to a clock input", b.port))
                }
            }
        } else {
            let mut budget = MAX_UNROLLED;
            let block = Block {
                clock: None,
                body: vec![],
                loc: b.loc.clone(),
            };
            let w = Walk {
                p,
                m,
                clocks,
                block: &block,
                loops: Vec::new(),
                collect: false,
                targets: BTreeSet::new(),
                defined: BTreeSet::new(),
                cond_depth: 0,
                budget: &mut budget,
            };
            w.expr(&b.value, &b.loc)?;
        }
    }
    for port in child.ports.iter().filter(|x| x.dir == Direction::In) {
        let d = VarDecl {
            name: port.name.clone(),
            kind: VarKind::Input,
            width: port.width,
            len: port.len,
        };
        for e in d.elements() {
            if !bound.contains(&e) {
                return invalid(&inst.loc, format!("input `{e}` of `{}` is not bound", inst.name));
            }
        }
    }
    Ok(())
}

/// Constant value of an expression over literals and loop variables.
pub(crate) fn const_eval(e: &Expr, loops: &[(String, u64)]) -> Option<(u64, u32)> {
    Some(match e {
        Expr::Lit(v) => (*v, min_width(*v)),
        Expr::Var { name, index: None } => {
            let v = loops.iter().rev().find(|(n, _)| n == name)?.1;
            (v, min_width(v))
        }
        Expr::Var { .. } => return None,
        Expr::Unary(op, a) => {
            let (a, w) = const_eval(a, loops)?;
            apply_unary(*op, a, w)
        }
        Expr::Binary(op, a, b) => {
            let (x, wa) = const_eval(a, loops)?;
            let (y, wb) = const_eval(b, loops)?;
            (apply_binary(*op, x, wa, y, wb).unwrap_or(0), op.result_width(wa, wb))
        }
        Expr::Ternary(c, a, b) => {
            let (c, _) = const_eval(c, loops)?;
            let (x, wa) = const_eval(a, loops)?;
            let (y, wb) = const_eval(b, loops)?;
            (if c != 0 { x } else { y }, wa.max(wb))
        }
    })
}

struct Walk<'a> {
    p: &'a SourceProgram,
    m: &'a ModuleDef,
    clocks: &'a [String],
    block: &'a Block,
    loops: Vec<(String, u64)>,
    /// First pass only gathers assignment targets.
    collect: bool,
    targets: BTreeSet<String>,
    defined: BTreeSet<String>,
    /// Number of enclosing `if` statements.
    cond_depth: usize,
    budget: &'a mut usize,
}

impl Walk<'_> {
    fn is_comb(&self) -> bool {
        self.block.clock.is_none()
    }

    fn stmts(&mut self, stmts: &[Stmt]) -> Result<(), FrontendError> {
        for s in stmts {
            self.stmt(s)?;
        }
        Ok(())
    }

    fn stmt(&mut self, s: &Stmt) -> Result<(), FrontendError> {
        if *self.budget == 0 {
            return invalid(&s.loc, format!("more than {MAX_UNROLLED} statements after unrolling"));
        }
        *self.budget -= 1;
        match &s.kind {
            StmtKind::Assign { target, value } => {
                self.expr(value, &s.loc)?;
                let element = self.lvalue(target, &s.loc)?;
                if self.collect {
                    self.targets.insert(element);
                } else {
                    if self.is_comb() && self.cond_depth > 0 && !self.defined.contains(&element) {
                        return invalid(
                            &s.loc,
                            format!("conditional assignment to `{element}` before it is assigned unconditionally"),
                        );
                    }
                    self.defined.insert(element);
                }
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                self.expr(cond, &s.loc)?;
                self.cond_depth += 1;
                let before = self.defined.clone();
                self.stmts(then_body)?;
                let after_then = std::mem::replace(&mut self.defined, before);
                self.stmts(else_body)?;
                self.defined = self.defined.intersection(&after_then).cloned().collect();
                self.cond_depth -= 1;
            }
            StmtKind::For {
                var,
                start,
                end,
                body,
            } => {
                if self.m.var(var).is_some()
                    || self.m.instance(var).is_some()
                    || self.loops.iter().any(|(n, _)| n == var)
                {
                    return Err(FrontendError::DuplicateName {
                        loc: s.loc.clone(),
                        name: var.clone(),
                    });
                }
                let bound = |e: &Expr| {
                    const_eval(e, &self.loops).ok_or_else(|| FrontendError::NonConstantLoopBound {
                        loc: s.loc.clone(),
                    })
                };
                let (lo, _) = bound(start)?;
                let (hi, _) = bound(end)?;
                if hi.saturating_sub(lo) > MAX_LOOP_TRIP {
                    return invalid(&s.loc, format!("loop runs more than {MAX_LOOP_TRIP} iterations"));
                }
                for i in lo..hi.max(lo) {
                    self.loops.push((var.clone(), i));
                    let r = self.stmts(body);
                    self.loops.pop();
                    r?;
                }
            }
            StmtKind::Block(body) => self.stmts(body)?,
        }
        Ok(())
    }

    fn index(&self, name: &str, len: Option<u32>, index: Option<&Expr>, loc: &SourceLoc) -> Result<String, FrontendError> {
        match (len, index) {
            (None, None) => Ok(name.to_string()),
            (None, Some(_)) => invalid(loc, format!("`{name}` is not an array")),
            (Some(_), None) => invalid(loc, format!("array `{name}` must be indexed")),
            (Some(n), Some(e)) => {
                let (i, _) = const_eval(e, &self.loops)
                    .ok_or_else(|| FrontendError::Invalid {
                        loc: loc.clone(),
                        message: format!("index of `{name}` is not a compile-time constant"),
                    })?;
                if i >= n as u64 {
                    return invalid(loc, format!("index {i} out of range for `{name}`"));
                }
                Ok(format!("{name}[{i}]"))
            }
        }
    }

    fn lvalue(&self, t: &LValue, loc: &SourceLoc) -> Result<String, FrontendError> {
        if self.loops.iter().any(|(n, _)| *n == t.name) {
            return invalid(loc, format!("cannot assign loop variable `{}`", t.name));
        }
        let Some(v) = self.m.var(&t.name) else {
            return invalid(loc, format!("unknown variable `{}`", t.name));
        };
        match (&self.block.clock, v.kind) {
            (None, VarKind::Output | VarKind::Wire) => {}
            (None, _) => {
                return invalid(loc, format!("`{}` cannot be assigned in a comb block", t.name))
            }
            (Some(c), VarKind::Reg) => {
                let r = self.m.register(&t.name).expect("reg");
                if &r.clock != c {
                    return invalid(loc, format!("`{}` is clocked by `{}`, not `{c}`", t.name, r.clock));
                }
            }
            (Some(_), _) => {
                return invalid(loc, format!("only registers can be assigned in a seq block, not `{}`", t.name))
            }
        }
        self.index(&t.name, v.len, t.index.as_ref(), loc)
    }

    fn expr(&self, e: &Expr, loc: &SourceLoc) -> Result<(), FrontendError> {
        match e {
            Expr::Lit(_) => Ok(()),
            Expr::Var { name, index } => self.read(name, index.as_deref(), loc),
            Expr::Unary(_, a) => self.expr(a, loc),
            Expr::Binary(_, a, b) => {
                self.expr(a, loc)?;
                self.expr(b, loc)
            }
            Expr::Ternary(c, a, b) => {
                self.expr(c, loc)?;
                self.expr(a, loc)?;
                self.expr(b, loc)
            }
        }
    }

    fn read(&self, name: &str, index: Option<&Expr>, loc: &SourceLoc) -> Result<(), FrontendError> {
        if let Some(e) = index {
            self.expr(e, loc)?;
        }
        if self.loops.iter().any(|(n, _)| n == name) {
            if index.is_some() {
                return invalid(loc, format!("loop variable `{name}` is not an array"));
            }
            return Ok(());
        }
        if let Some(v) = self.m.var(name) {
            if self.clocks.iter().any(|c| c == name) {
                return invalid(loc, format!("clock `{name}` cannot be read as data"));
            }
            let element = self.index(name, v.len, index, loc)?;
            if !self.collect && self.is_comb() && self.targets.contains(&element) && !self.defined.contains(&element) {
                return Err(FrontendError::CombinationalCycle {
                    loc: loc.clone(),
                    name: element,
                });
            }
            return Ok(());
        }
        if let Some((inst, port)) = name.split_once('.') {
            if let Some(i) = self.m.instance(inst) {
                let child = self.p.module(&i.module).expect("checked");
                return match child.port(port) {
                    Some(pd) if pd.dir == Direction::Out => self.index(name, pd.len, index, loc).map(|_| ()),
                    _ => invalid(loc, format!("`{port}` is not an output of `{}`", child.name)),
                };
            }
        }
        invalid(loc, format!("unknown name `{name}`"))
    }
}

#[cfg(test)]
mod tests {
    use crate::frontend::{parse, FrontendError};

    fn err(src: &str) -> String {
        parse(src, "t.mh").unwrap_err().to_string()
    }

    #[test]
    fn latch_is_rejected() {
        let e = err("module m { input a: 1; output y: 4; comb { if a { y = 1; } } }");
        assert!(e.contains("unconditionally"), "{e}");
    }

    #[test]
    fn conditional_first_assignment_is_rejected() {
        let e = err("module m { input a: 1; output y: 4; comb { if a { y = 1; } y = 2; } }");
        assert!(e.contains("before it is assigned unconditionally"), "{e}");
    }

    #[test]
    fn clocks_are_not_data() {
        let e = err("module m { input clk: 1; output y: 1; comb { y = clk; } }");
        assert!(e.contains("cannot be read"), "{e}");
    }

    #[test]
    fn register_clock_must_match_block() {
        let e = err("module m { input clk: 1; input c2: 1; reg r: 2 @clk; seq c2 { r = 1; } }");
        assert!(e.contains("clocked by"), "{e}");
    }

    #[test]
    fn undriven_output() {
        let e = err("module m { output y: 2[2]; comb { y[0] = 1; } }");
        assert!(e.contains("`y[1]` is never assigned"), "{e}");
    }

    #[test]
    fn index_bounds_follow_loop_values() {
        let e = err("module m { input d: 4[2]; output y: 4; comb { y = 0; for i in 0..3 { y = y + d[i]; } } }");
        assert!(e.contains("index 2 out of range"), "{e}");
    }

    #[test]
    fn child_bindings() {
        let child = "module c { input clk: 1; input a: 4; output b: 4; comb { b = a; } }";
        let ok = format!("{child} module t {{ input clk: 1; input x: 4; output y: 4; inst u: c(clk = clk, a = x); comb {{ y = u.b; }} }}");
        assert!(parse(&ok, "t.mh").is_ok());
        let missing = format!("{child} module t {{ input clk: 1; output y: 4; inst u: c(clk = clk); comb {{ y = u.b; }} }}");
        assert!(err(&missing).contains("not bound"));
        let bad_clock = format!("{child} module t {{ input clk: 1; input x: 4; output y: 4; inst u: c(clk = x, a = x); comb {{ y = u.b; }} }}");
        assert!(err(&bad_clock).contains("clock"));
    }

    #[test]
    fn recursive_instantiation() {
        let e = parse("module a { inst u: b(); } module b { inst v: a(); }", "r.mh").unwrap_err();
        assert!(matches!(e, FrontendError::Invalid { .. }), "{e}");
    }

    #[test]
    fn flattened_collision() {
        let e = parse("module m { input io.a: 1; input io_a: 1; }", "f.mh").unwrap_err();
        assert!(matches!(e, FrontendError::DuplicateName { .. }), "{e}");
    }
}
