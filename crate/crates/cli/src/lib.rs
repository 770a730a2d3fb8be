// SPDX-License-Identifier: Apache-2.0

//! Command-line front ends: the `mhc` compiler driver and the `hgdbg`
//! debugger client with its self-hosting and benchmark modes.

pub mod bench;
pub mod host;
pub mod mhc;
pub mod repl;
