// SPDX-License-Identifier: Apache-2.0

//! Core of the hardware source-level debugger.
//!
//! * [`frontend`] parses mini-HDL and interprets it directly.
//! * [`lowering`] unrolls and flattens a program into an SSA netlist and
//!   produces the symbol table.
//! * [`symtab`] stores and queries symbol tables.
//! * [`expr`] is the condition/expression language.
//! * [`simbackends`] holds the simulator interface with a cycle simulator
//!   and a VCD replay engine.
//! * [`runtime`] emulates breakpoints on top of a simulator.
//! * [`pipeline`] chains parsing, lowering and symbol collection.
//! * [`testgen`] generates random programs and stimulus.
//! * [`conformance`] cross-checks the interpreter, backends and runtime.

pub mod conformance;
pub mod expr;
pub mod frontend;
pub mod lowering;
pub mod pipeline;
pub mod runtime;
pub mod simbackends;
pub mod stimulus;
pub mod symtab;

pub mod testgen;
