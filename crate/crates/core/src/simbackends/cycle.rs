// SPDX-License-Identifier: Apache-2.0

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use crate::expr::{apply_binary, apply_unary, mask, Value};
use crate::frontend::flat_name;
use crate::lowering::{Driver, LowerError, NExpr, NetId, Netlist};

use super::vcd::{write_vcd, TraceSignal};
use super::*;

/// Two-state cycle simulator over a netlist. Inputs come from a per-cycle
/// stimulus; cycle `k` has its rising edge at `k * CYCLE_TICKS`.
///
/// Input and register values can be forced at an edge with
/// [`Simulator::set_value`]; a forced input is replaced by the stimulus of
/// the next cycle.
pub struct CycleSim {
    netlist: Netlist,
    order: Vec<NetId>,
    values: Vec<u64>,
    /// Per cycle, input net and value.
    stimulus: Vec<Vec<(NetId, u64)>>,
    /// Cycle whose edge we are at; `None` before the first edge.
    cycle: Option<usize>,
    finished: bool,
    time: u64,
    closed: bool,
    recorder: Option<Recorder>,
}

#[derive(Default)]
struct Recorder {
    last: Vec<Option<u64>>,
    /// Changes per timestamp in time order.
    changes: Vec<(u64, Vec<(NetId, u64)>)>,
}

impl CycleSim {
    /// `stimulus[k]` maps input names (source form `data[0]` or flattened
    /// `data_0`) to values for cycle `k`. Inputs absent from a cycle keep
    /// their previous value; clock entries are ignored.
    pub fn new(netlist: Netlist, stimulus: &[BTreeMap<String, u64>]) -> Result<Self, SimError> {
        let order = netlist.topo_order().map_err(|e| match e {
            LowerError::CombinationalCycle { nets } => SimError::DerivedNet(nets.join(", ")),
            LowerError::UseBeforeDef { name, .. } => SimError::UnknownSignal(name),
        })?;
        let prefix = format!("{}.", netlist.top);
        let mut inputs: HashMap<String, NetId> = HashMap::new();
        for &i in &netlist.inputs {
            if netlist.clocks.contains(&i) {
                continue;
            }
            let name = &netlist.nets[i].name;
            inputs.insert(name.strip_prefix(&prefix).unwrap_or(name).to_string(), i);
        }
        let mut per_cycle = Vec::with_capacity(stimulus.len());
        for cycle in stimulus {
            let mut row = Vec::new();
            for (k, &v) in cycle {
                let Some(&id) = inputs.get(&flat_name(k)) else {
                    if netlist.clocks.iter().any(|&c| netlist.nets[c].name == format!("{prefix}{k}")) {
                        continue;
                    }
                    return Err(SimError::UnknownSignal(k.clone()));
                };
                let width = netlist.nets[id].width;
                if v > mask(width) {
                    return Err(SimError::Width {
                        name: k.clone(),
                        value: v,
                        width,
                    });
                }
                row.push((id, v));
            }
            per_cycle.push(row);
        }
        let mut values = vec![0; netlist.nets.len()];
        for r in &netlist.registers {
            values[r.state] = r.reset.unwrap_or(0);
        }
        Ok(CycleSim {
            netlist,
            order,
            values,
            stimulus: per_cycle,
            cycle: None,
            finished: false,
            time: 0,
            closed: false,
            recorder: None,
        })
    }

    pub fn netlist(&self) -> &Netlist {
        &self.netlist
    }

    pub fn cycles(&self) -> usize {
        self.stimulus.len()
    }

    /// Keep every net change for [`CycleSim::dump_vcd`]. Must be enabled
    /// before the first edge.
    pub fn enable_recording(&mut self) {
        if self.cycle.is_none() && !self.finished {
            self.recorder = Some(Recorder {
                last: vec![None; self.netlist.nets.len()],
                changes: Vec::new(),
            });
        }
    }

    /// Run all remaining cycles without stopping.
    pub fn run_to_end(&mut self) -> Result<u64, SimError> {
        let mut n = 0;
        while self.advance_to_next_edge()?.is_some() {
            n += 1;
        }
        Ok(n)
    }

    /// Recorded change set: per timestamp, (net name, value).
    pub fn recorded_changes(&self) -> Vec<(u64, Vec<(String, u64)>)> {
        let Some(rec) = &self.recorder else {
            return Vec::new();
        };
        rec.changes
            .iter()
            .map(|(t, ch)| (*t, ch.iter().map(|(n, v)| (self.netlist.nets[*n].name.clone(), *v)).collect()))
            .collect()
    }

    /// Write the recorded run as VCD.
    pub fn write_vcd(&self, out: &mut impl Write) -> std::io::Result<()> {
        let signals: Vec<TraceSignal> = self
            .netlist
            .nets
            .iter()
            .map(|n| TraceSignal {
                name: n.name.clone(),
                width: n.width,
            })
            .collect();
        let empty = Vec::new();
        let changes = self.recorder.as_ref().map(|r| &r.changes).unwrap_or(&empty);
        write_vcd(out, &signals, changes)
    }

    pub fn dump_vcd(&self, path: &std::path::Path) -> Result<(), SimError> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_vcd(&mut f)?;
        f.flush()?;
        Ok(())
    }

    fn set_clocks(&mut self, level: u64) {
        for i in 0..self.netlist.clocks.len() {
            let c = self.netlist.clocks[i];
            self.values[c] = level;
        }
    }

    fn settle(&mut self) {
        for &n in &self.order {
            let net = &self.netlist.nets[n];
            if let Driver::Expr(e) = &net.driver {
                let (v, _) = eval(e, &self.netlist, &self.values);
                self.values[n] = v & mask(net.width);
            }
        }
    }

    fn apply_stimulus(&mut self, cycle: usize) {
        for &(id, v) in &self.stimulus[cycle] {
            self.values[id] = v;
        }
    }

    fn commit(&mut self) {
        let next: Vec<(NetId, u64)> = self
            .netlist
            .registers
            .iter()
            .map(|r| (r.state, self.values[r.next]))
            .collect();
        for (s, v) in next {
            self.values[s] = v;
        }
    }

    fn record(&mut self, t: u64) {
        let Some(rec) = &mut self.recorder else {
            return;
        };
        let mut ch = Vec::new();
        for (i, &v) in self.values.iter().enumerate() {
            if rec.last[i] != Some(v) {
                rec.last[i] = Some(v);
                ch.push((i, v));
            }
        }
        if ch.is_empty() {
            return;
        }
        match rec.changes.last_mut() {
            Some((lt, prev)) if *lt == t => {
                for (i, v) in ch {
                    match prev.iter_mut().find(|(n, _)| *n == i) {
                        Some(slot) => slot.1 = v,
                        None => prev.push((i, v)),
                    }
                }
                prev.sort_unstable_by_key(|(n, _)| *n);
            }
            _ => rec.changes.push((t, ch)),
        }
    }
}

/// Two-state evaluation; division by zero yields 0.
fn eval(e: &NExpr, nl: &Netlist, values: &[u64]) -> (u64, u32) {
    match e {
        NExpr::Const { value, width } => (*value, *width),
        NExpr::Net(n) => (values[*n], nl.nets[*n].width),
        NExpr::Unary(op, a) => {
            let (a, w) = eval(a, nl, values);
            apply_unary(*op, a, w)
        }
        NExpr::Binary(op, a, b) => {
            let (a, wa) = eval(a, nl, values);
            let (b, wb) = eval(b, nl, values);
            (apply_binary(*op, a, wa, b, wb).unwrap_or(0), op.result_width(wa, wb))
        }
        NExpr::Select(c, a, b) => {
            let (c, _) = eval(c, nl, values);
            let (a, wa) = eval(a, nl, values);
            let (b, wb) = eval(b, nl, values);
            (if c != 0 { a } else { b }, wa.max(wb))
        }
    }
}

impl SimRead for CycleSim {
    fn time(&self) -> u64 {
        self.time
    }

    fn resolve(&self, name: &str) -> Option<SignalId> {
        self.netlist.net_id(name)
    }

    fn value_of(&self, id: SignalId) -> Value {
        Value::new(self.netlist.nets[id].width, self.values[id])
    }
}

impl Simulator for CycleSim {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            can_set_value: true,
            can_set_time: false,
        }
    }

    fn hierarchy(&self) -> HierNode {
        HierNode::from_signals(self.netlist.nets.iter().map(|n| n.name.as_str()))
    }

    fn clocks(&self) -> Vec<String> {
        self.netlist.clocks.iter().map(|&c| self.netlist.nets[c].name.clone()).collect()
    }

    fn advance_to_next_edge(&mut self) -> Result<Option<u64>, SimError> {
        if self.closed {
            return Err(SimError::Closed);
        }
        if self.finished {
            return Ok(None);
        }
        let next = match self.cycle {
            None => 0,
            Some(k) => {
                // Falling edge half-way: registers take their new values and
                // the next cycle's inputs are applied.
                self.commit();
                self.set_clocks(0);
                if k + 1 < self.stimulus.len() {
                    self.apply_stimulus(k + 1);
                }
                self.settle();
                self.time = k as u64 * CYCLE_TICKS + CYCLE_TICKS / 2;
                self.record(self.time);
                k + 1
            }
        };
        if next >= self.stimulus.len() {
            self.finished = true;
            return Ok(None);
        }
        if next == 0 {
            self.apply_stimulus(0);
        }
        self.set_clocks(1);
        self.settle();
        self.cycle = Some(next);
        self.time = next as u64 * CYCLE_TICKS;
        self.record(self.time);
        Ok(Some(self.time))
    }

    fn set_value(&mut self, name: &str, value: u64) -> Result<(), SimError> {
        if self.closed {
            return Err(SimError::Closed);
        }
        let id = self
            .netlist
            .net_id(name)
            .ok_or_else(|| SimError::UnknownSignal(name.to_string()))?;
        let net = &self.netlist.nets[id];
        if matches!(net.driver, Driver::Expr(_)) || self.netlist.clocks.contains(&id) {
            return Err(SimError::DerivedNet(name.to_string()));
        }
        if value > mask(net.width) {
            return Err(SimError::Width {
                name: name.to_string(),
                value,
                width: net.width,
            });
        }
        self.values[id] = value;
        self.settle();
        let t = self.time;
        self.record(t);
        Ok(())
    }

    fn close(&mut self) {
        self.closed = true;
    }

    fn is_closed(&self) -> bool {
        self.closed
    }

    fn as_read(&self) -> &dyn SimRead {
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use crate::lowering::unroll_and_ssa;

    fn sim(src: &str, stim: &[&[(&str, u64)]]) -> CycleSim {
        let p = parse(src, "t.mh").unwrap();
        let (nl, _) = unroll_and_ssa(&p).unwrap();
        let stim: Vec<BTreeMap<String, u64>> = stim
            .iter()
            .map(|c| c.iter().map(|(k, v)| (k.to_string(), *v)).collect())
            .collect();
        CycleSim::new(nl, &stim).unwrap()
    }

    const ACC: &str = "module m {
        input clk: 1;
        input x: 4;
        output y: 4;
        reg r: 4 @clk = 2;
        comb { y = r + x; }
        seq clk { r = r + x; }
    }";

    #[test]
    fn registers_update_between_edges() {
        let mut s = sim(ACC, &[&[("x", 1)], &[("x", 3)], &[]]);
        let mut seen = Vec::new();
        while let Some(t) = s.advance_to_next_edge().unwrap() {
            seen.push((t, s.get_value("m.r").unwrap().bits(), s.get_value("m.y").unwrap().bits()));
        }
        assert_eq!(seen, vec![(0, Some(2), Some(3)), (10, Some(3), Some(6)), (20, Some(6), Some(9))]);
        assert_eq!(s.get_value("m.r").unwrap().bits(), Some(9));
        assert!(s.advance_to_next_edge().unwrap().is_none());
    }

    #[test]
    fn constant_net_reads_back() {
        let mut s = sim(
            "module m { input clk: 1; output y: 4; comb { y = 5; } }",
            &[&[], &[]],
        );
        s.advance_to_next_edge().unwrap();
        assert_eq!(s.get_value("m.y").unwrap(), Value::new(4, 5));
    }

    #[test]
    fn forcing_recomputes_fanout() {
        let mut s = sim(ACC, &[&[("x", 1)], &[("x", 1)]]);
        s.advance_to_next_edge().unwrap();
        s.set_value("m.x", 7).unwrap();
        assert_eq!(s.get_value("m.y").unwrap().bits(), Some(9));
        assert!(matches!(s.set_value("m.y", 1), Err(SimError::DerivedNet(_))));
        assert!(matches!(s.set_value("m.clk", 0), Err(SimError::DerivedNet(_))));
        assert!(matches!(s.set_value("m.x", 99), Err(SimError::Width { .. })));
        assert!(matches!(s.set_time(0), Err(SimError::Capability(_))));
        s.set_value("m.r", 0).unwrap();
        assert_eq!(s.get_value("m.y").unwrap().bits(), Some(7));
    }

    #[test]
    fn callback_per_cycle() {
        let mut s = sim(ACC, &vec![&[][..]; 10]);
        let mut times = Vec::new();
        let n = s
            .on_clock_edge(&mut |r, t| {
                assert_eq!(r.time(), t);
                times.push(t);
                EdgeControl::Continue
            })
            .unwrap();
        assert_eq!(n, 10);
        assert!(times.windows(2).all(|w| w[0] < w[1]));
        s.close();
        assert!(matches!(s.on_clock_edge(&mut |_, _| EdgeControl::Stop), Err(SimError::Closed)));
    }

    #[test]
    fn rejects_unknown_or_wide_inputs() {
        let p = parse(ACC, "t.mh").unwrap();
        let (nl, _) = unroll_and_ssa(&p).unwrap();
        let bad: BTreeMap<String, u64> = [("nope".to_string(), 1)].into();
        assert!(matches!(CycleSim::new(nl.clone(), &[bad]), Err(SimError::UnknownSignal(_))));
        let wide: BTreeMap<String, u64> = [("x".to_string(), 16)].into();
        assert!(matches!(CycleSim::new(nl, &[wide]), Err(SimError::Width { .. })));
    }

    #[test]
    fn hierarchy_and_clocks() {
        let s = sim(ACC, &[]);
        assert_eq!(s.clocks(), vec!["m.clk"]);
        let h = s.hierarchy();
        assert_eq!(h.children[0].name, "m");
        assert!(h.children[0].signals.contains(&"r".to_string()));
    }
}
