// SPDX-License-Identifier: Apache-2.0

//! Source to netlist and symbol table in one call.

use thiserror::Error;

use crate::frontend::{parse, FrontendError, SourceProgram};
use crate::lowering::{collect_symbols, optimize, unroll_and_ssa, CollectReport, LowerError, Netlist, OptLevel};
use crate::symtab::SymbolTable;

#[derive(Debug, Error)]
pub enum CompileError {
    #[error(transparent)]
    Frontend(#[from] FrontendError),
    #[error(transparent)]
    Lower(#[from] LowerError),
}

pub struct Compiled {
    pub program: SourceProgram,
    pub netlist: Netlist,
    pub table: SymbolTable,
    pub report: CollectReport,
}

pub fn compile(source: &str, file: &str, level: OptLevel) -> Result<Compiled, CompileError> {
    let program = parse(source, file)?;
    compile_program(program, level)
}

pub fn compile_program(program: SourceProgram, level: OptLevel) -> Result<Compiled, CompileError> {
    let (netlist, annotations) = unroll_and_ssa(&program)?;
    let (netlist, annotations) = optimize(netlist, annotations, level);
    let (table, report) = collect_symbols(&netlist, &annotations);
    Ok(Compiled {
        program,
        netlist,
        table,
        report,
    })
}
