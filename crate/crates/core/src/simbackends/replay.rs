// SPDX-License-Identifier: Apache-2.0

use std::sync::Arc;

use super::vcd::TraceStore;
use super::*;

/// Read-only replay of a parsed trace. Time can be moved freely; values
/// cannot be forced.
pub struct VcdReplay {
    store: Arc<TraceStore>,
    clocks: Vec<usize>,
    edges: Vec<u64>,
    /// Index into `edges` of the edge the next advance returns.
    next_edge: usize,
    time: u64,
    /// All changes in time order: (time, list).
    events: Vec<(u64, u32)>,
    /// Events applied so far.
    applied: usize,
    /// Per list, number of its changes applied.
    ptr: Vec<usize>,
    snapshot: Vec<Value>,
    closed: bool,
}

/// Leaf names treated as clocks when none are given explicitly.
pub const DEFAULT_CLOCK_NAMES: [&str; 2] = ["clk", "clock"];

impl VcdReplay {
    /// Clocks are the signals whose leaf name is `clk` or `clock`.
    pub fn new(store: Arc<TraceStore>) -> Self {
        let clocks = (0..store.signals.len())
            .filter(|&i| {
                let leaf = store.signals[i].name.rsplit('.').next().unwrap_or("");
                DEFAULT_CLOCK_NAMES.iter().any(|c| leaf.eq_ignore_ascii_case(c))
            })
            .collect();
        Self::build(store, clocks)
    }

    /// Use the named signals as clocks.
    pub fn with_clocks(store: Arc<TraceStore>, clocks: &[String]) -> Result<Self, SimError> {
        let ids = clocks
            .iter()
            .map(|c| store.signal(c).ok_or_else(|| SimError::UnknownSignal(c.clone())))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self::build(store, ids))
    }

    fn build(store: Arc<TraceStore>, clocks: Vec<usize>) -> Self {
        let mut edges = Vec::new();
        let mut lists: Vec<usize> = clocks.iter().map(|&c| store.list_of(c)).collect();
        lists.sort_unstable();
        lists.dedup();
        for l in lists {
            let mut prev_high = false;
            for (t, v) in store.list(l) {
                let high = v.bits().is_some_and(|b| b & 1 == 1);
                if high && !prev_high {
                    edges.push(*t);
                }
                prev_high = high;
            }
        }
        edges.sort_unstable();
        edges.dedup();

        let mut events: Vec<(u64, u32)> = (0..store.list_count())
            .flat_map(|l| store.list(l).iter().map(move |(t, _)| (*t, l as u32)))
            .collect();
        events.sort_by_key(|e| e.0);

        let snapshot = Self::unknown_snapshot(&store);
        let mut r = VcdReplay {
            ptr: vec![0; store.list_count()],
            store,
            clocks,
            edges,
            next_edge: 0,
            time: 0,
            events,
            applied: 0,
            snapshot,
            closed: false,
        };
        r.seek(0);
        r
    }

    fn unknown_snapshot(store: &TraceStore) -> Vec<Value> {
        let mut widths = vec![1; store.list_count()];
        for (s, sig) in store.signals.iter().enumerate() {
            widths[store.list_of(s)] = sig.width;
        }
        widths.into_iter().map(Value::unknown).collect()
    }

    pub fn store(&self) -> &Arc<TraceStore> {
        &self.store
    }

    /// All rising edge times.
    pub fn edges(&self) -> &[u64] {
        &self.edges
    }

    fn seek(&mut self, t: u64) {
        // Undo changes after `t`, then apply those up to it.
        while self.applied > 0 && self.events[self.applied - 1].0 > t {
            self.applied -= 1;
            let l = self.events[self.applied].1 as usize;
            self.ptr[l] -= 1;
            self.snapshot[l] = match self.ptr[l] {
                0 => Value::unknown(self.snapshot[l].width()),
                p => self.store.list(l)[p - 1].1,
            };
        }
        while let Some(&(et, l)) = self.events.get(self.applied) {
            if et > t {
                break;
            }
            let l = l as usize;
            self.snapshot[l] = self.store.list(l)[self.ptr[l]].1;
            self.ptr[l] += 1;
            self.applied += 1;
        }
        self.time = t;
    }
}

impl SimRead for VcdReplay {
    fn time(&self) -> u64 {
        self.time
    }

    fn resolve(&self, name: &str) -> Option<SignalId> {
        self.store.signal(name)
    }

    fn value_of(&self, id: SignalId) -> Value {
        self.snapshot[self.store.list_of(id)]
    }
}

impl Simulator for VcdReplay {
    fn capabilities(&self) -> Capabilities {
        Capabilities {
            can_set_value: false,
            can_set_time: true,
        }
    }

    fn hierarchy(&self) -> HierNode {
        self.store.hierarchy()
    }

    fn clocks(&self) -> Vec<String> {
        self.clocks.iter().map(|&c| self.store.signals[c].name.clone()).collect()
    }

    fn advance_to_next_edge(&mut self) -> Result<Option<u64>, SimError> {
        if self.closed {
            return Err(SimError::Closed);
        }
        let Some(&t) = self.edges.get(self.next_edge) else {
            return Ok(None);
        };
        self.next_edge += 1;
        self.seek(t);
        Ok(Some(t))
    }

    fn edge_at_or_before(&self, t: u64) -> Option<u64> {
        let n = self.edges.partition_point(|&e| e <= t);
        n.checked_sub(1).map(|i| self.edges[i])
    }

    fn set_time(&mut self, t: u64) -> Result<(), SimError> {
        if self.closed {
            return Err(SimError::Closed);
        }
        if t > self.store.end_time {
            return Err(SimError::TimeOutOfRange(t));
        }
        self.seek(t);
        self.next_edge = self.edges.partition_point(|&e| e <= t);
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
    use crate::simbackends::parse_vcd;

    const TWO_CLOCKS: &str = "$scope module tb $end
$var wire 1 ! clk $end
$var wire 1 \" clock $end
$var wire 4 # d $end
$upscope $end
$enddefinitions $end
#0 x! 0\" b1 #
#5 1! 1\"
#10 0! 0\" b10 #
#15 1!
#20 0! bx #
#25 1! 1\"
";

    fn replay(text: &str) -> VcdReplay {
        VcdReplay::new(Arc::new(parse_vcd(text).unwrap()))
    }

    fn edges(r: &mut VcdReplay) -> Vec<(u64, Value)> {
        let mut out = Vec::new();
        r.on_clock_edge(&mut |s, t| {
            out.push((t, s.get_value("tb.d").unwrap()));
            EdgeControl::Continue
        })
        .unwrap();
        out
    }

    #[test]
    fn edges_are_deduplicated() {
        let mut r = replay(TWO_CLOCKS);
        assert_eq!(r.clocks(), vec!["tb.clk", "tb.clock"]);
        assert_eq!(r.edges(), &[5, 15, 25]);
        let e = edges(&mut r);
        assert_eq!(e[0], (5, Value::new(4, 1)));
        assert_eq!(e[1], (15, Value::new(4, 2)));
        assert!(!e[2].1.is_known());
    }

    #[test]
    fn set_time_resumes_strictly_after() {
        let mut r = replay(TWO_CLOCKS);
        let full = edges(&mut r);
        r.set_time(15).unwrap();
        assert_eq!(r.get_value("tb.d").unwrap(), Value::new(4, 2));
        assert_eq!(r.edge_at_or_before(14), Some(5));
        assert_eq!(r.edge_at_or_before(15), Some(15));
        assert_eq!(r.edge_at_or_before(4), None);
        let rest = edges(&mut r);
        assert_eq!(rest, full[2..]);
        r.set_time(0).unwrap();
        assert_eq!(r.get_value("tb.d").unwrap(), Value::new(4, 1));
        assert!(!r.get_value("tb.clk").unwrap().is_known());
        assert_eq!(edges(&mut r), full);
        assert!(matches!(r.set_time(26), Err(SimError::TimeOutOfRange(26))));
        assert!(matches!(r.set_value("tb.d", 1), Err(SimError::Capability(_))));
    }

    #[test]
    fn explicit_clock_and_no_clock() {
        let store = Arc::new(parse_vcd(TWO_CLOCKS).unwrap());
        let r = VcdReplay::with_clocks(store.clone(), &["tb.clock".into()]).unwrap();
        assert_eq!(r.edges(), &[5, 25]);
        assert!(VcdReplay::with_clocks(store, &["tb.nope".into()]).is_err());
        let mut r = replay("$var wire 1 ! a $end $enddefinitions $end #0 1!");
        assert!(r.clocks().is_empty());
        assert!(matches!(r.on_clock_edge(&mut |_, _| EdgeControl::Stop), Err(SimError::NoClock)));
    }
}
