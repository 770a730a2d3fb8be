// SPDX-License-Identifier: Apache-2.0

//! Lowering of a validated [`SourceProgram`] to a flat SSA netlist.
//!
//! Loops are unrolled and conditionals become multiplexers: an assignment
//! `v = e` under conditions `c1..ck` defines a fresh net
//! `v__n = select(c1 && .. && ck, e, v__{n-1})`. Alongside the netlist an
//! [`Annotation`] is recorded for every unrolled assignment with its source
//! location, enable condition and the nets holding each visible variable
//! just before the statement. [`collect_symbols`] turns the annotations that
//! survive optimization into a symbol table.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use thiserror::Error;

use crate::expr::{min_width, BinaryOp, ExprAst, UnaryOp};
use crate::frontend::{collect_targets, const_eval};
use crate::frontend::{
    flat_name, Direction, Expr, ModuleDef, SourceLoc, SourceProgram, Stmt, StmtKind, VarDecl, VarKind,
};

mod collect;
mod emit;
mod optimize;

pub use collect::{collect_symbols, CollectReport};
pub use emit::emit_verilog_like;
pub use optimize::{optimize, OptLevel};

pub type NetId = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NExpr {
    Const { value: u64, width: u32 },
    Net(NetId),
    Unary(UnaryOp, Box<NExpr>),
    Binary(BinaryOp, Box<NExpr>, Box<NExpr>),
    /// `cond ? a : b`
    Select(Box<NExpr>, Box<NExpr>, Box<NExpr>),
}

impl NExpr {
    pub fn literal(v: u64) -> Self {
        NExpr::Const {
            value: v,
            width: min_width(v),
        }
    }

    pub fn width(&self, nets: &[Net]) -> u32 {
        match self {
            NExpr::Const { width, .. } => *width,
            NExpr::Net(n) => nets[*n].width,
            NExpr::Unary(UnaryOp::LogicalNot, _) => 1,
            NExpr::Unary(_, a) => a.width(nets),
            NExpr::Binary(op, a, b) => op.result_width(a.width(nets), b.width(nets)),
            NExpr::Select(_, a, b) => a.width(nets).max(b.width(nets)),
        }
    }

    pub fn for_each_net(&self, f: &mut impl FnMut(NetId)) {
        match self {
            NExpr::Const { .. } => {}
            NExpr::Net(n) => f(*n),
            NExpr::Unary(_, a) => a.for_each_net(f),
            NExpr::Binary(_, a, b) => {
                a.for_each_net(f);
                b.for_each_net(f);
            }
            NExpr::Select(c, a, b) => {
                c.for_each_net(f);
                a.for_each_net(f);
                b.for_each_net(f);
            }
        }
    }

    fn map_nets(&mut self, f: &impl Fn(NetId) -> NetId) {
        match self {
            NExpr::Const { .. } => {}
            NExpr::Net(n) => *n = f(*n),
            NExpr::Unary(_, a) => a.map_nets(f),
            NExpr::Binary(_, a, b) => {
                a.map_nets(f);
                b.map_nets(f);
            }
            NExpr::Select(c, a, b) => {
                c.map_nets(f);
                a.map_nets(f);
                b.map_nets(f);
            }
        }
    }

    /// Expression-language form over net names. Constants must have their
    /// minimal width to be representable as literals.
    pub fn to_ast(&self, nets: &[Net]) -> Option<ExprAst> {
        Some(match self {
            NExpr::Const { value, width } => {
                if *width != min_width(*value) {
                    return None;
                }
                ExprAst::Literal(*value)
            }
            NExpr::Net(n) => ExprAst::ident(nets[*n].name.clone()),
            NExpr::Unary(op, a) => ExprAst::Unary(*op, Box::new(a.to_ast(nets)?)),
            NExpr::Binary(op, a, b) => ExprAst::binary(*op, a.to_ast(nets)?, b.to_ast(nets)?),
            NExpr::Select(c, a, b) => ExprAst::Ternary(
                Box::new(c.to_ast(nets)?),
                Box::new(a.to_ast(nets)?),
                Box::new(b.to_ast(nets)?),
            ),
        })
    }

    fn has_variable_divisor(&self) -> bool {
        match self {
            NExpr::Const { .. } | NExpr::Net(_) => false,
            NExpr::Unary(_, a) => a.has_variable_divisor(),
            NExpr::Binary(op, a, b) => {
                (matches!(op, BinaryOp::Div | BinaryOp::Mod) && !matches!(**b, NExpr::Const { value, .. } if value != 0))
                    || a.has_variable_divisor()
                    || b.has_variable_divisor()
            }
            NExpr::Select(c, a, b) => c.has_variable_divisor() || a.has_variable_divisor() || b.has_variable_divisor(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Driver {
    /// Top-level input, set by the simulator.
    Input,
    /// Register state, committed at the clock edge.
    Register,
    Expr(NExpr),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Net {
    /// Hierarchical name, `top.u.sum__1`.
    pub name: String,
    pub width: u32,
    pub driver: Driver,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RegisterInfo {
    pub state: NetId,
    pub next: NetId,
    pub clock: NetId,
    pub reset: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceVar {
    /// Source element name, `data[0]` or `io.a`.
    pub source: String,
    pub net: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InstanceInfo {
    pub path: String,
    pub module: String,
    pub vars: Vec<InstanceVar>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Netlist {
    pub top: String,
    pub nets: Vec<Net>,
    /// Top-level inputs, clocks included.
    pub inputs: Vec<NetId>,
    pub outputs: Vec<NetId>,
    pub clocks: Vec<NetId>,
    pub registers: Vec<RegisterInfo>,
    /// Instance tree in pre-order; the first entry is the top.
    pub instances: Vec<InstanceInfo>,
    index: HashMap<String, NetId>,
}

impl Netlist {
    pub fn net_id(&self, name: &str) -> Option<NetId> {
        self.index.get(name).copied()
    }

    pub fn net(&self, name: &str) -> Option<&Net> {
        self.net_id(name).map(|i| &self.nets[i])
    }

    fn reindex(&mut self) {
        self.index = self.nets.iter().enumerate().map(|(i, n)| (n.name.clone(), i)).collect();
    }

    /// Expression nets in dependency order. Fails with the nets on a cycle.
    pub fn topo_order(&self) -> Result<Vec<NetId>, LowerError> {
        // 0 = new, 1 = visiting, 2 = done
        let mut state = vec![0u8; self.nets.len()];
        let mut order = Vec::new();
        for root in 0..self.nets.len() {
            if state[root] != 0 {
                continue;
            }
            let mut stack: Vec<(NetId, Vec<NetId>)> = vec![(root, self.deps(root))];
            state[root] = 1;
            while let Some((n, deps)) = stack.last_mut() {
                if let Some(d) = deps.pop() {
                    match state[d] {
                        0 => {
                            state[d] = 1;
                            let dd = self.deps(d);
                            stack.push((d, dd));
                        }
                        1 => {
                            let start = stack.iter().position(|(x, _)| *x == d).unwrap_or(0);
                            let mut cycle: Vec<String> =
                                stack[start..].iter().map(|(x, _)| self.nets[*x].name.clone()).collect();
                            cycle.sort();
                            return Err(LowerError::CombinationalCycle { nets: cycle });
                        }
                        _ => {}
                    }
                } else {
                    let n = *n;
                    state[n] = 2;
                    if matches!(self.nets[n].driver, Driver::Expr(_)) {
                        order.push(n);
                    }
                    stack.pop();
                }
            }
        }
        Ok(order)
    }

    fn deps(&self, n: NetId) -> Vec<NetId> {
        let mut out = Vec::new();
        if let Driver::Expr(e) = &self.nets[n].driver {
            e.for_each_net(&mut |d| out.push(d));
        }
        out.reverse();
        out
    }
}

/// Value of a visible variable just before an annotated statement.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum VarRef {
    Net(String),
    Const(u64),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Annotation {
    pub instance: String,
    pub loc: SourceLoc,
    pub ordinal: u32,
    /// AND-reduction of the enclosing conditions, over net names.
    pub enable: ExprAst,
    /// The net defined by this statement.
    pub target: String,
    pub var_map: Vec<(String, VarRef)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LowerError {
    #[error("combinational cycle through {}", nets.join(", "))]
    CombinationalCycle { nets: Vec<String> },
    #[error("{loc}: `{name}` is used before it is defined")]
    UseBeforeDef { loc: SourceLoc, name: String },
}

/// Unroll loops, flatten conditionals and convert to SSA.
pub fn unroll_and_ssa(program: &SourceProgram) -> Result<(Netlist, Vec<Annotation>), LowerError> {
    let mut l = Lowerer {
        program,
        nets: Vec::new(),
        index: HashMap::new(),
        insts: Vec::new(),
        annotations: Vec::new(),
        cond_count: 0,
    };
    let top = program.top_module();
    l.allocate(top, top.name.clone(), None);
    for i in 0..l.insts.len() {
        l.lower_instance(i)?;
    }
    let mut netlist = Netlist {
        top: top.name.clone(),
        inputs: Vec::new(),
        outputs: Vec::new(),
        clocks: Vec::new(),
        registers: Vec::new(),
        instances: Vec::new(),
        nets: l.nets,
        index: l.index,
    };
    let root = &l.insts[0];
    for p in &top.ports {
        let d = decl_of_port(p);
        for e in d.elements() {
            let id = root.element_net[&e];
            match p.dir {
                Direction::In => netlist.inputs.push(id),
                Direction::Out => netlist.outputs.push(id),
            }
        }
    }
    netlist.clocks = root.clocks.iter().map(|c| root.element_net[c]).collect();
    for inst in &l.insts {
        netlist.registers.extend(inst.registers.iter().cloned());
        let mut vars = Vec::new();
        for v in inst.module.vars() {
            for e in v.elements() {
                vars.push(InstanceVar {
                    net: netlist.nets[inst.element_net[&e]].name.clone(),
                    source: e,
                });
            }
        }
        netlist.instances.push(InstanceInfo {
            path: inst.path.clone(),
            module: inst.module.name.clone(),
            vars,
        });
    }
    netlist.topo_order()?;
    Ok((netlist, l.annotations))
}

fn decl_of_port(p: &crate::frontend::Port) -> VarDecl {
    VarDecl {
        name: p.name.clone(),
        kind: if p.dir == Direction::In { VarKind::Input } else { VarKind::Output },
        width: p.width,
        len: p.len,
    }
}

struct LInst<'a> {
    path: String,
    module: &'a ModuleDef,
    parent: Option<(usize, &'a crate::frontend::Instance)>,
    children: HashMap<&'a str, usize>,
    /// Declared element -> its final (or state) net.
    element_net: HashMap<String, NetId>,
    widths: HashMap<String, u32>,
    clocks: Vec<String>,
    registers: Vec<RegisterInfo>,
}

struct Lowerer<'a> {
    program: &'a SourceProgram,
    nets: Vec<Net>,
    index: HashMap<String, NetId>,
    insts: Vec<LInst<'a>>,
    annotations: Vec<Annotation>,
    cond_count: usize,
}

/// Per-block lowering state.
struct BlockCx {
    inst: usize,
    is_comb: bool,
    /// Element -> latest SSA version defined in this block.
    current: BTreeMap<String, NetId>,
    /// Element -> number of versions defined so far.
    versions: HashMap<String, u32>,
    conds: Vec<NExpr>,
    loops: Vec<(String, u64)>,
    ordinals: HashMap<SourceLoc, u32>,
    /// Elements this comb block assigns; not visible until defined.
    targets: BTreeSet<String>,
}

impl<'a> Lowerer<'a> {
    fn add_net(&mut self, name: String, width: u32, driver: Driver) -> NetId {
        let id = self.nets.len();
        self.index.insert(name.clone(), id);
        self.nets.push(Net { name, width, driver });
        id
    }

    /// Create the declared nets of every instance before any driver is
    /// lowered, so that blocks may reference each other in any order.
    fn allocate(&mut self, module: &'a ModuleDef, path: String, parent: Option<(usize, &'a crate::frontend::Instance)>) {
        let idx = self.insts.len();
        let clocks = module.clock_inputs(self.program);
        let mut element_net = HashMap::new();
        let mut widths = HashMap::new();
        for v in module.vars() {
            for e in v.elements() {
                let driver = match (v.kind, parent.is_none()) {
                    (VarKind::Input, true) => Driver::Input,
                    (VarKind::Reg, _) => Driver::Register,
                    // Filled in by lower_instance.
                    _ => Driver::Expr(NExpr::literal(0)),
                };
                let id = self.add_net(format!("{path}.{}", flat_name(&e)), v.width, driver);
                element_net.insert(e.clone(), id);
                widths.insert(e, v.width);
            }
        }
        self.insts.push(LInst {
            path: path.clone(),
            module,
            parent,
            children: HashMap::new(),
            element_net,
            widths,
            clocks,
            registers: Vec::new(),
        });
        for inst in &module.instances {
            let child = self.program.module(&inst.module).expect("validated");
            let c = self.insts.len();
            self.insts[idx].children.insert(&inst.name, c);
            self.allocate(child, format!("{path}.{}", inst.name), Some((idx, inst)));
        }
    }

    fn lower_instance(&mut self, i: usize) -> Result<(), LowerError> {
        let module = self.insts[i].module;
        // Child input ports are driven from the parent's bindings.
        if let Some((p, inst)) = self.insts[i].parent {
            for b in &inst.bindings {
                let element = match b.index {
                    Some(ix) => format!("{}[{}]", b.port, ix),
                    None => b.port.clone(),
                };
                let mut cx = BlockCx::new(p, false);
                let e = self.lower_expr(&b.value, &mut cx);
                let id = self.insts[i].element_net[&element];
                self.nets[id].driver = Driver::Expr(e);
            }
        }
        for b in &module.comb_blocks {
            let mut cx = BlockCx::new(i, true);
            collect_targets(&b.body, &mut Vec::new(), &mut cx.targets);
            self.lower_stmts(&b.body, &mut cx)?;
            for (e, v) in &cx.current {
                let id = self.insts[i].element_net[e];
                self.nets[id].driver = Driver::Expr(NExpr::Net(*v));
            }
        }
        let mut pending: BTreeMap<String, NetId> = BTreeMap::new();
        for b in &module.seq_blocks {
            let mut cx = BlockCx::new(i, false);
            self.lower_stmts(&b.body, &mut cx)?;
            pending.extend(cx.current);
        }
        let rst = match module.port("rst") {
            Some(p) if p.dir == Direction::In && p.width == 1 && p.len.is_none() && !self.insts[i].clocks.contains(&p.name) => {
                Some(self.insts[i].element_net["rst"])
            }
            _ => None,
        };
        for r in &module.registers {
            let d = module.var(&r.name).expect("reg");
            for e in d.elements() {
                let state = self.insts[i].element_net[&e];
                let last = NExpr::Net(*pending.get(&e).unwrap_or(&state));
                let driver = match (rst, r.reset) {
                    (Some(rst), Some(rv)) => NExpr::Select(
                        Box::new(NExpr::Net(rst)),
                        Box::new(NExpr::Const { value: rv, width: r.width }),
                        Box::new(last),
                    ),
                    _ => last,
                };
                let name = format!("{}__next", self.nets[state].name);
                let next = self.add_net(name, r.width, Driver::Expr(driver));
                let clock = self.insts[i].element_net[&r.clock];
                self.insts[i].registers.push(RegisterInfo {
                    state,
                    next,
                    clock,
                    reset: r.reset,
                });
            }
        }
        Ok(())
    }

    fn lower_stmts(&mut self, body: &[Stmt], cx: &mut BlockCx) -> Result<(), LowerError> {
        for s in body {
            self.lower_stmt(s, cx)?;
        }
        Ok(())
    }

    fn lower_stmt(&mut self, s: &Stmt, cx: &mut BlockCx) -> Result<(), LowerError> {
        match &s.kind {
            StmtKind::Assign { target, value } => {
                let ordinal = {
                    let c = cx.ordinals.entry(s.loc.clone()).or_insert(0);
                    *c += 1;
                    *c - 1
                };
                let var_map = self.var_map(cx);
                let rhs = self.lower_expr(value, cx);
                let element = match &target.index {
                    Some(ix) => format!("{}[{}]", target.name, const_eval(ix, &cx.loops).expect("validated").0),
                    None => target.name.clone(),
                };
                let inst = &self.insts[cx.inst];
                let width = inst.widths[&element];
                let prev = match cx.current.get(&element) {
                    Some(v) => Some(*v),
                    None if !cx.is_comb => Some(inst.element_net[&element]),
                    None => None,
                };
                let enable = and_all(&cx.conds);
                let driver = match (&enable, prev) {
                    (None, _) => rhs,
                    (Some(c), Some(p)) => NExpr::Select(Box::new(c.clone()), Box::new(rhs), Box::new(NExpr::Net(p))),
                    (Some(_), None) => {
                        return Err(LowerError::UseBeforeDef {
                            loc: s.loc.clone(),
                            name: element,
                        })
                    }
                };
                let k = cx.versions.entry(element.clone()).or_insert(0);
                let name = format!("{}.{}__{}", inst.path, flat_name(&element), k);
                *k += 1;
                let instance = inst.path.clone();
                let id = self.add_net(name.clone(), width, Driver::Expr(driver));
                cx.current.insert(element, id);
                let enable = match enable {
                    None => ExprAst::Literal(1),
                    Some(e) => e.to_ast(&self.nets).expect("lowered conditions use minimal-width constants"),
                };
                self.annotations.push(Annotation {
                    instance,
                    loc: s.loc.clone(),
                    ordinal,
                    enable,
                    target: name,
                    var_map,
                });
            }
            StmtKind::If {
                cond,
                then_body,
                else_body,
            } => {
                let c = self.lower_expr(cond, cx);
                let c = self.condition_operand(c, cx);
                cx.conds.push(c.clone());
                self.lower_stmts(then_body, cx)?;
                cx.conds.pop();
                if !else_body.is_empty() {
                    cx.conds.push(NExpr::Unary(UnaryOp::LogicalNot, Box::new(c)));
                    self.lower_stmts(else_body, cx)?;
                    cx.conds.pop();
                }
            }
            StmtKind::For {
                var,
                start,
                end,
                body,
            } => {
                let lo = const_eval(start, &cx.loops).expect("validated").0;
                let hi = const_eval(end, &cx.loops).expect("validated").0;
                for i in lo..hi.max(lo) {
                    cx.loops.push((var.clone(), i));
                    let r = self.lower_stmts(body, cx);
                    cx.loops.pop();
                    r?;
                }
            }
            StmtKind::Block(body) => self.lower_stmts(body, cx)?,
        }
        Ok(())
    }

    /// Conditions dividing by a signal are evaluated by a dedicated net:
    /// the expression language treats division by zero as unknown, while
    /// hardware yields zero, so the condition cannot be re-evaluated
    /// textually.
    fn condition_operand(&mut self, c: NExpr, cx: &BlockCx) -> NExpr {
        if !c.has_variable_divisor() {
            return c;
        }
        let width = c.width(&self.nets);
        let name = format!("{}.__cond{}", self.insts[cx.inst].path, self.cond_count);
        self.cond_count += 1;
        NExpr::Net(self.add_net(name, width, Driver::Expr(c)))
    }

    fn var_map(&self, cx: &BlockCx) -> Vec<(String, VarRef)> {
        let inst = &self.insts[cx.inst];
        let mut out = Vec::new();
        for v in inst.module.vars() {
            for e in v.elements() {
                let net = if cx.is_comb {
                    match cx.current.get(&e) {
                        Some(n) => Some(*n),
                        None if cx.targets.contains(&e) => None,
                        None => Some(inst.element_net[&e]),
                    }
                } else {
                    Some(inst.element_net[&e])
                };
                if let Some(n) = net {
                    out.push((e, VarRef::Net(self.nets[n].name.clone())));
                }
            }
        }
        for (n, v) in &cx.loops {
            out.push((n.clone(), VarRef::Const(*v)));
        }
        out
    }

    fn lower_expr(&self, e: &Expr, cx: &mut BlockCx) -> NExpr {
        match e {
            Expr::Lit(v) => NExpr::literal(*v),
            Expr::Var { name, index } => {
                if let Some((_, v)) = cx.loops.iter().rev().find(|(n, _)| n == name) {
                    return NExpr::literal(*v);
                }
                let element = |base: &str| match index {
                    Some(ix) => format!("{base}[{}]", const_eval(ix, &cx.loops).expect("validated").0),
                    None => base.to_string(),
                };
                let inst = &self.insts[cx.inst];
                let own = element(name);
                if let Some(id) = inst.element_net.get(&own) {
                    if cx.is_comb {
                        if let Some(v) = cx.current.get(&own) {
                            return NExpr::Net(*v);
                        }
                    }
                    return NExpr::Net(*id);
                }
                let (child, port) = name.split_once('.').expect("validated");
                let c = &self.insts[inst.children[child]];
                NExpr::Net(c.element_net[&element(port)])
            }
            Expr::Unary(op, a) => NExpr::Unary(*op, Box::new(self.lower_expr(a, cx))),
            Expr::Binary(op, a, b) => {
                NExpr::Binary(*op, Box::new(self.lower_expr(a, cx)), Box::new(self.lower_expr(b, cx)))
            }
            Expr::Ternary(c, a, b) => NExpr::Select(
                Box::new(self.lower_expr(c, cx)),
                Box::new(self.lower_expr(a, cx)),
                Box::new(self.lower_expr(b, cx)),
            ),
        }
    }
}

fn and_all(conds: &[NExpr]) -> Option<NExpr> {
    let mut it = conds.iter().cloned();
    let first = it.next()?;
    Some(it.fold(first, |acc, c| NExpr::Binary(BinaryOp::LogicalAnd, Box::new(acc), Box::new(c))))
}

impl BlockCx {
    fn new(inst: usize, is_comb: bool) -> Self {
        BlockCx {
            targets: BTreeSet::new(),
            inst,
            is_comb,
            current: BTreeMap::new(),
            versions: HashMap::new(),
            conds: Vec::new(),
            loops: Vec::new(),
            ordinals: HashMap::new(),
        }
    }
}
