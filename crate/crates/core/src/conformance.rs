// SPDX-License-Identifier: Apache-2.0

//! Differential checks between the reference interpreter, the compiled
//! netlist, both simulator backends and the debugger runtime. Each check
//! reports how many comparisons it made and the mismatches it found.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use crate::frontend::interpret;
use crate::lowering::Driver;
use crate::pipeline::Compiled;
use crate::runtime::{Command, Debugger, Outcome, StopEvent, StopReason, NOTICE_START};
use crate::simbackends::{parse_vcd, CycleSim, SimRead, Simulator, VcdReplay, CYCLE_TICKS};
use crate::symtab::SourceKey;

pub type Stimulus = [BTreeMap<String, u64>];

/// One hardware thread executing one statement occurrence at one edge.
pub type Occurrence = (u64, SourceKey, String);

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Report {
    pub compared: usize,
    pub mismatches: Vec<String>,
}

impl Report {
    pub fn ok(&self) -> bool {
        self.mismatches.is_empty()
    }

    fn fail(&mut self, msg: String) {
        if self.mismatches.len() < 20 {
            self.mismatches.push(msg);
        }
    }
}

/// Cycle-sim run dumped to VCD text.
pub fn dump(c: &Compiled, stimulus: &Stimulus) -> Result<String, String> {
    let mut sim = CycleSim::new(c.netlist.clone(), stimulus).map_err(|e| e.to_string())?;
    sim.enable_recording();
    sim.run_to_end().map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    sim.write_vcd(&mut buf).map_err(|e| e.to_string())?;
    String::from_utf8(buf).map_err(|e| e.to_string())
}

pub fn replay(c: &Compiled, stimulus: &Stimulus) -> Result<VcdReplay, String> {
    let store = parse_vcd(&dump(c, stimulus)?).map_err(|e| e.to_string())?;
    Ok(VcdReplay::new(Arc::new(store)))
}

fn attach_all(sim: Box<dyn Simulator + Send>, c: &Compiled) -> Result<Debugger, String> {
    let mut d = Debugger::attach(sim, c.table.clone(), None).map_err(|e| e.to_string())?;
    let lines: BTreeSet<(String, u32)> = c.table.breakpoints.iter().map(|b| (b.file.clone(), b.line)).collect();
    for (file, line) in lines {
        d.insert_breakpoint(&file, line, None, None).map_err(|e| e.to_string())?;
    }
    Ok(d)
}

/// Breakpoint stops under `continue` against the interpreter's statement
/// log, with every breakpoint of the design inserted. Also checks that
/// frame variables hold the interpreter's pre-statement values.
pub fn oracle_check(c: &Compiled, stimulus: &Stimulus) -> Result<Report, String> {
    let trace = interpret(&c.program, stimulus).map_err(|e| e.to_string())?;
    let sim = CycleSim::new(c.netlist.clone(), stimulus).map_err(|e| e.to_string())?;
    let mut d = attach_all(Box::new(sim), c)?;

    let mut expected: BTreeMap<Occurrence, &BTreeMap<String, u64>> = BTreeMap::new();
    let mut out = Report::default();
    for cyc in &trace.cycles {
        for e in &cyc.log {
            let key = SourceKey {
                file: e.loc.file.clone(),
                line: e.loc.line,
                column: e.loc.column,
                ordinal: e.ordinal,
            };
            let occ = (cyc.cycle as u64 * CYCLE_TICKS, key, e.instance.clone());
            if expected.insert(occ.clone(), &e.pre).is_some() {
                out.fail(format!("interpreter logged {occ:?} twice"));
            }
        }
    }
    let mut seen = BTreeSet::new();
    loop {
        let stop = match d.resume(Command::Continue).map_err(|e| e.to_string())? {
            Outcome::Stopped(s) => s,
            Outcome::Ended { .. } => break,
        };
        for f in &stop.frames {
            let occ = (stop.time, f.key.clone(), f.thread.clone());
            let Some(pre) = expected.get(&occ) else {
                out.fail(format!("unexpected stop {occ:?}"));
                continue;
            };
            if !seen.insert(occ.clone()) {
                out.fail(format!("duplicate stop {occ:?}"));
            }
            out.compared += 1;
            for (name, want) in pre.iter() {
                out.compared += 1;
                let got = f.local(name).or_else(|| f.instance_var(name)).and_then(|v| v.value()).and_then(|v| v.bits());
                if got != Some(*want) {
                    out.fail(format!("{occ:?}: `{name}` is {got:?}, interpreter has {want}"));
                }
            }
        }
    }
    for occ in expected.keys().filter(|o| !seen.contains(*o)) {
        out.fail(format!("missed stop {occ:?}"));
    }
    for m in d.diagnostics().iter().take(5) {
        out.fail(format!("diagnostic: {m}"));
    }
    Ok(out)
}

/// Settled values at every rising edge of the cycle simulator against the
/// interpreter, for every interpreter value the netlist still carries.
/// Registers and outputs must always be present.
pub fn semantic_check(c: &Compiled, stimulus: &Stimulus) -> Result<Report, String> {
    let trace = interpret(&c.program, stimulus).map_err(|e| e.to_string())?;
    let mut sim = CycleSim::new(c.netlist.clone(), stimulus).map_err(|e| e.to_string())?;
    let mut out = Report::default();
    let must: BTreeSet<&str> = c
        .netlist
        .nets
        .iter()
        .enumerate()
        .filter(|(i, n)| matches!(n.driver, Driver::Register) || c.netlist.outputs.contains(i))
        .map(|(_, n)| n.name.as_str())
        .collect();
    for cyc in &trace.cycles {
        let Some(t) = sim.advance_to_next_edge().map_err(|e| e.to_string())? else {
            out.fail(format!("simulation ended before cycle {}", cyc.cycle));
            break;
        };
        for (name, want) in &cyc.values {
            out.compared += 1;
            match sim.get_value(name) {
                Ok(v) if v.bits() == Some(*want) => {}
                Ok(v) => out.fail(format!("t={t} `{name}`: netlist {v}, interpreter {want}")),
                Err(_) if must.contains(name.as_str()) => out.fail(format!("`{name}` missing from netlist")),
                Err(_) => {}
            }
        }
    }
    Ok(out)
}

/// Every net at every rising edge: cycle simulator against the replay of
/// its own dump.
pub fn backend_check(c: &Compiled, stimulus: &Stimulus) -> Result<Report, String> {
    let mut live = CycleSim::new(c.netlist.clone(), stimulus).map_err(|e| e.to_string())?;
    let mut rep = replay(c, stimulus)?;
    let mut out = Report::default();
    loop {
        let a = live.advance_to_next_edge().map_err(|e| e.to_string())?;
        let b = rep.advance_to_next_edge().map_err(|e| e.to_string())?;
        if a != b {
            out.fail(format!("edge times differ: {a:?} vs {b:?}"));
            break;
        }
        let Some(t) = a else { break };
        for n in &c.netlist.nets {
            out.compared += 1;
            let x = live.get_value(&n.name).map_err(|e| e.to_string())?;
            match rep.get_value(&n.name) {
                Ok(y) if y == x => {}
                Ok(y) => out.fail(format!("t={t} `{}`: cycle-sim {x}, replay {y}", n.name)),
                Err(e) => out.fail(format!("t={t} `{}`: {e}", n.name)),
            }
        }
    }
    Ok(out)
}

fn collect(d: &mut Debugger, cmd: Command) -> Result<Vec<StopEvent>, String> {
    let mut stops = Vec::new();
    loop {
        match d.resume(cmd).map_err(|e| e.to_string())? {
            Outcome::Stopped(s) => {
                if let StopReason::Boundary(n) = &s.reason {
                    if n != NOTICE_START {
                        return Err(format!("unexpected boundary: {n}"));
                    }
                    break;
                }
                stops.push(s);
            }
            Outcome::Ended { .. } => break,
        }
    }
    Ok(stops)
}

fn visit(s: &StopEvent) -> (u64, Option<SourceKey>) {
    (s.time, s.key.clone())
}

/// On the replay backend: the forward stop sequence, walked back to the
/// start and forward again, must reproduce identical frames; stepping
/// backwards must visit groups in exactly the reverse forward order.
pub fn reverse_check(c: &Compiled, stimulus: &Stimulus) -> Result<Report, String> {
    let mut out = Report::default();
    let mut d = attach_all(Box::new(replay(c, stimulus)?), c)?;
    let forward = collect(&mut d, Command::Continue)?;
    let mut backward = collect(&mut d, Command::ReverseContinue)?;
    backward.reverse();
    let again = collect(&mut d, Command::Continue)?;
    let frames = |v: &[StopEvent]| v.iter().map(|s| (s.time, s.key.clone(), s.frames.clone())).collect::<Vec<_>>();
    out.compared += forward.len();
    if frames(&backward) != frames(&forward) {
        out.fail(format!("reverse-continue visited {} stops, forward {}", backward.len(), forward.len()));
    }
    if frames(&again) != frames(&forward) {
        out.fail("second forward pass differs from the first".into());
    }

    let mut d = attach_all(Box::new(replay(c, stimulus)?), c)?;
    let steps: Vec<_> = collect(&mut d, Command::StepOver)?.iter().map(visit).collect();
    let mut back: Vec<_> = collect(&mut d, Command::ReverseStep)?.iter().map(visit).collect();
    back.reverse();
    out.compared += steps.len();
    if back != steps {
        out.fail(format!("reverse stepping visited {} groups, forward {}", back.len(), steps.len()));
    }
    Ok(out)
}

/// Source variable names known to a symbol table, per instance.
pub fn variable_set(c: &Compiled) -> BTreeSet<(String, String)> {
    let mut set = BTreeSet::new();
    for v in &c.table.variables {
        let inst = c.table.instance(v.instance_id).map(|i| i.name.clone()).unwrap_or_default();
        set.insert((inst, v.source_name.clone()));
    }
    set
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lowering::OptLevel;
    use crate::pipeline::compile;

    const SUM: &str = "module top {
  input clk: 1;
  input data: 8[2];
  output sum: 8;
  comb {
    sum = 0;
    for i in 0..2 {
      if data[i] % 2 {
        sum = sum + data[i];
      }
    }
  }
}
";

    #[test]
    fn accumulator_agrees_everywhere() {
        let c = compile(SUM, "sum.mh", OptLevel::Debug).unwrap();
        let stim: Vec<BTreeMap<String, u64>> = [(3, 2), (1, 1), (0, 0), (255, 7)]
            .iter()
            .map(|(a, b)| [("data[0]".to_string(), *a), ("data[1]".to_string(), *b)].into())
            .collect();
        for r in [
            oracle_check(&c, &stim).unwrap(),
            semantic_check(&c, &stim).unwrap(),
            backend_check(&c, &stim).unwrap(),
            reverse_check(&c, &stim).unwrap(),
        ] {
            assert!(r.ok(), "{:?}", r.mismatches);
            assert!(r.compared > 0);
        }
    }
}
