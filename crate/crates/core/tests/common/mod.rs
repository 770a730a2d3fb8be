// SPDX-License-Identifier: Apache-2.0
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::sync::Arc;

use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::{compile, Compiled};
use hgdbg_core::runtime::Debugger;
use hgdbg_core::simbackends::{parse_vcd, CycleSim, VcdReplay};

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../fixtures/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

pub fn build(name: &str, level: OptLevel) -> Compiled {
    compile(&fixture(name), name, level).unwrap()
}

pub fn stim(cycles: &[&[(&str, u64)]]) -> Vec<BTreeMap<String, u64>> {
    cycles
        .iter()
        .map(|c| c.iter().map(|(k, v)| (k.to_string(), *v)).collect())
        .collect()
}

pub fn cycle_debugger(c: &Compiled, stimulus: &[BTreeMap<String, u64>]) -> Debugger {
    let sim = CycleSim::new(c.netlist.clone(), stimulus).unwrap();
    Debugger::attach(Box::new(sim), c.table.clone(), None).unwrap()
}

/// Simulate, dump and reparse; the replay runs over the VCD text.
pub fn vcd_text(c: &Compiled, stimulus: &[BTreeMap<String, u64>]) -> String {
    let mut sim = CycleSim::new(c.netlist.clone(), stimulus).unwrap();
    sim.enable_recording();
    sim.run_to_end().unwrap();
    let mut buf = Vec::new();
    sim.write_vcd(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

pub fn replay_debugger(c: &Compiled, stimulus: &[BTreeMap<String, u64>]) -> Debugger {
    let store = parse_vcd(&vcd_text(c, stimulus)).unwrap();
    let sim = VcdReplay::new(Arc::new(store));
    Debugger::attach(Box::new(sim), c.table.clone(), None).unwrap()
}
