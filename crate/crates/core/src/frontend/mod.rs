// SPDX-License-Identifier: Apache-2.0

//! Mini-HDL frontend: source-located IR, parser, validation and the
//! reference interpreter used as ground truth by the rest of the toolchain.
//!
//! The grammar is documented in `docs/grammar.md`.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use crate::expr::{BinaryOp, UnaryOp};

mod interp;
mod lexer;
mod parser;
mod pretty;
mod validate;

pub use interp::{interpret, CycleTrace, ExecutionTrace, InterpError, LogEntry};
pub use parser::parse;
pub(crate) use interp::collect_targets;
pub(crate) use validate::const_eval;
pub use pretty::pretty_print;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceLoc {
    pub file: String,
    pub line: u32,
    pub column: u32,
}

impl SourceLoc {
    pub fn new(file: impl Into<String>, line: u32, column: u32) -> Self {
        SourceLoc {
            file: normalize_path(&file.into()),
            line: line.max(1),
            column: column.max(1),
        }
    }
}

impl fmt::Display for SourceLoc {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.file, self.line, self.column)
    }
}

pub fn normalize_path(p: &str) -> String {
    p.replace('\\', "/")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Port {
    pub name: String,
    pub dir: Direction,
    pub width: u32,
    /// Element count for one-dimensional arrays.
    pub len: Option<u32>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Register {
    pub name: String,
    pub width: u32,
    pub len: Option<u32>,
    pub clock: String,
    pub reset: Option<u64>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Wire {
    pub name: String,
    pub width: u32,
    pub len: Option<u32>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PortBinding {
    pub port: String,
    pub index: Option<u32>,
    pub value: Expr,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub name: String,
    pub module: String,
    pub bindings: Vec<PortBinding>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Block {
    /// Clock input for sequential blocks.
    pub clock: Option<String>,
    pub body: Vec<Stmt>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModuleDef {
    pub name: String,
    pub ports: Vec<Port>,
    pub registers: Vec<Register>,
    pub wires: Vec<Wire>,
    pub instances: Vec<Instance>,
    pub comb_blocks: Vec<Block>,
    pub seq_blocks: Vec<Block>,
    pub loc: SourceLoc,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SourceProgram {
    pub modules: Vec<ModuleDef>,
    pub top: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Expr {
    Lit(u64),
    /// Possibly dotted name (`sum`, `io.a`, `child.out`) with an optional
    /// element index.
    Var {
        name: String,
        index: Option<Box<Expr>>,
    },
    Unary(UnaryOp, Box<Expr>),
    Binary(BinaryOp, Box<Expr>, Box<Expr>),
    Ternary(Box<Expr>, Box<Expr>, Box<Expr>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LValue {
    pub name: String,
    pub index: Option<Expr>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StmtKind {
    Assign {
        target: LValue,
        value: Expr,
    },
    If {
        cond: Expr,
        then_body: Vec<Stmt>,
        else_body: Vec<Stmt>,
    },
    For {
        var: String,
        start: Expr,
        end: Expr,
        body: Vec<Stmt>,
    },
    Block(Vec<Stmt>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stmt {
    pub loc: SourceLoc,
    pub kind: StmtKind,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VarKind {
    Input,
    Output,
    Wire,
    Reg,
}

/// Declared variable of a module, as seen by name resolution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VarDecl {
    pub name: String,
    pub kind: VarKind,
    pub width: u32,
    pub len: Option<u32>,
}

impl VarDecl {
    /// Flattened element names: `x` or `x[0]`, `x[1]`, ...
    pub fn elements(&self) -> Vec<String> {
        match self.len {
            None => vec![self.name.clone()],
            Some(n) => (0..n).map(|i| format!("{}[{}]", self.name, i)).collect(),
        }
    }
}

impl ModuleDef {
    /// All declared variables in declaration order: ports, registers, wires.
    pub fn vars(&self) -> Vec<VarDecl> {
        let mut out = Vec::new();
        for p in &self.ports {
            out.push(VarDecl {
                name: p.name.clone(),
                kind: if p.dir == Direction::In {
                    VarKind::Input
                } else {
                    VarKind::Output
                },
                width: p.width,
                len: p.len,
            });
        }
        for r in &self.registers {
            out.push(VarDecl {
                name: r.name.clone(),
                kind: VarKind::Reg,
                width: r.width,
                len: r.len,
            });
        }
        for w in &self.wires {
            out.push(VarDecl {
                name: w.name.clone(),
                kind: VarKind::Wire,
                width: w.width,
                len: w.len,
            });
        }
        out
    }

    pub fn var(&self, name: &str) -> Option<VarDecl> {
        self.vars().into_iter().find(|v| v.name == name)
    }

    pub fn port(&self, name: &str) -> Option<&Port> {
        self.ports.iter().find(|p| p.name == name)
    }

    pub fn register(&self, name: &str) -> Option<&Register> {
        self.registers.iter().find(|r| r.name == name)
    }

    pub fn instance(&self, name: &str) -> Option<&Instance> {
        self.instances.iter().find(|i| i.name == name)
    }

    /// Inputs that act as clocks: named by a sequential block or a register,
    /// bound to a child clock, or a 1-bit input called `clk`/`clock`.
    pub fn clock_inputs(&self, program: &SourceProgram) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        let mut add = |n: &str| {
            if !out.iter().any(|o| o == n) {
                out.push(n.to_string());
            }
        };
        for b in &self.seq_blocks {
            if let Some(c) = &b.clock {
                add(c);
            }
        }
        for r in &self.registers {
            add(&r.clock);
        }
        for inst in &self.instances {
            if let Some(child) = program.module(&inst.module) {
                let child_clocks = child.clock_inputs(program);
                for b in &inst.bindings {
                    if child_clocks.contains(&b.port) {
                        if let Expr::Var { name, index: None } = &b.value {
                            add(name);
                        }
                    }
                }
            }
        }
        for p in &self.ports {
            if p.dir == Direction::In && p.width == 1 && p.len.is_none() && is_clock_name(&p.name)
            {
                add(&p.name);
            }
        }
        let ports: Vec<&str> = self.ports.iter().map(|p| p.name.as_str()).collect();
        out.retain(|c| ports.contains(&c.as_str()));
        out.sort_by_key(|c| ports.iter().position(|p| p == c));
        out
    }

    /// Number of statements across all blocks (recursively).
    pub fn statement_count(&self) -> usize {
        fn count(stmts: &[Stmt]) -> usize {
            stmts
                .iter()
                .map(|s| {
                    1 + match &s.kind {
                        StmtKind::Assign { .. } => 0,
                        StmtKind::If {
                            then_body,
                            else_body,
                            ..
                        } => count(then_body) + count(else_body),
                        StmtKind::For { body, .. } | StmtKind::Block(body) => count(body),
                    }
                })
                .sum()
        }
        self.comb_blocks
            .iter()
            .chain(&self.seq_blocks)
            .map(|b| count(&b.body))
            .sum()
    }
}

pub fn is_clock_name(name: &str) -> bool {
    name == "clk" || name == "clock"
}

impl SourceProgram {
    pub fn module(&self, name: &str) -> Option<&ModuleDef> {
        self.modules.iter().find(|m| m.name == name)
    }

    pub fn top_module(&self) -> &ModuleDef {
        self.module(&self.top).expect("validated program has a top module")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrontendError {
    #[error("{loc}: syntax error: {message}")]
    Syntax { loc: SourceLoc, message: String },
    #[error("{loc}: duplicate name `{name}`")]
    DuplicateName { loc: SourceLoc, name: String },
    #[error("{loc}: unknown module `{name}`")]
    UnknownModule { loc: SourceLoc, name: String },
    #[error("{loc}: loop bound is not a compile-time constant")]
    NonConstantLoopBound { loc: SourceLoc },
    #[error("{loc}: combinational cycle: `{name}` is read before it is assigned in this block")]
    CombinationalCycle { loc: SourceLoc, name: String },
    #[error("{loc}: {message}")]
    Invalid { loc: SourceLoc, message: String },
}

impl FrontendError {
    pub fn loc(&self) -> &SourceLoc {
        match self {
            FrontendError::Syntax { loc, .. }
            | FrontendError::DuplicateName { loc, .. }
            | FrontendError::UnknownModule { loc, .. }
            | FrontendError::NonConstantLoopBound { loc }
            | FrontendError::CombinationalCycle { loc, .. }
            | FrontendError::Invalid { loc, .. } => loc,
        }
    }
}

/// Flattened RTL leaf name of a source element: `io.a` -> `io_a`,
/// `data[1]` -> `data_1`.
pub fn flat_name(element: &str) -> String {
    element.replace('.', "_").replace('[', "_").replace(']', "")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flat_names() {
        assert_eq!(flat_name("io.a"), "io_a");
        assert_eq!(flat_name("data[1]"), "data_1");
        assert_eq!(flat_name("sum"), "sum");
    }

    #[test]
    fn loc_normalizes_slashes() {
        let l = SourceLoc::new("a\\b\\c.mh", 3, 4);
        assert_eq!(l.to_string(), "a/b/c.mh:3:4");
    }
}
