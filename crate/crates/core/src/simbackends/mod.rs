// SPDX-License-Identifier: Apache-2.0

//! Uniform simulator interface and its two implementations: a cycle
//! simulator over a [`Netlist`](crate::lowering::Netlist) and a VCD trace
//! replay engine.
//!
//! Both backends are driven the same way: the caller pulls rising clock
//! edges with [`Simulator::advance_to_next_edge`] (or registers a callback
//! with [`Simulator::on_clock_edge`]) and reads values while the backend
//! holds still at the edge.

use thiserror::Error;

use crate::expr::Value;

mod cycle;
mod hierarchy;
mod replay;
mod vcd;

pub use cycle::CycleSim;
pub use hierarchy::{map_hierarchy, HierarchyMap, MapError, MapResult};
pub use replay::VcdReplay;
pub use vcd::{parse_vcd, parse_vcd_file, write_vcd, TraceSignal, TraceStore, VcdError};

/// Ticks per clock period of the cycle simulator. Rising edges are at
/// multiples of this, falling edges half-way.
pub const CYCLE_TICKS: u64 = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct Capabilities {
    pub can_set_value: bool,
    pub can_set_time: bool,
}

/// Scope tree. `name` is the full dotted path; the root of a backend
/// hierarchy has an empty name.
#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct HierNode {
    pub name: String,
    /// Leaf signal names in this scope.
    pub signals: Vec<String>,
    pub children: Vec<HierNode>,
}

impl HierNode {
    /// Build a tree from full dotted signal names.
    pub fn from_signals<'a>(names: impl IntoIterator<Item = &'a str>) -> HierNode {
        let mut root = HierNode::default();
        for name in names {
            let parts: Vec<&str> = name.split('.').collect();
            let (leaf, scopes) = parts.split_last().expect("split yields one part");
            let mut node = &mut root;
            for s in scopes {
                let path = if node.name.is_empty() {
                    s.to_string()
                } else {
                    format!("{}.{}", node.name, s)
                };
                let pos = match node.children.iter().position(|c| c.name == path) {
                    Some(p) => p,
                    None => {
                        node.children.push(HierNode {
                            name: path,
                            ..Default::default()
                        });
                        node.children.len() - 1
                    }
                };
                node = &mut node.children[pos];
            }
            if !node.signals.iter().any(|x| x == leaf) {
                node.signals.push(leaf.to_string());
            }
        }
        root
    }

    pub fn find(&self, path: &str) -> Option<&HierNode> {
        if self.name == path {
            return Some(self);
        }
        self.children.iter().find_map(|c| {
            if path == c.name || path.starts_with(&format!("{}.", c.name)) {
                c.find(path)
            } else {
                None
            }
        })
    }

    /// Every scope in pre-order.
    pub fn walk(&self) -> Vec<&HierNode> {
        let mut out = vec![self];
        for c in &self.children {
            out.extend(c.walk());
        }
        out
    }

    /// Last path segment.
    pub fn leaf_name(&self) -> &str {
        self.name.rsplit('.').next().unwrap_or("")
    }
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unknown signal `{0}`")]
    UnknownSignal(String),
    #[error("operation not supported by this backend: {0}")]
    Capability(&'static str),
    #[error("`{0}` is driven by logic and cannot be set")]
    DerivedNet(String),
    #[error("time {0} is beyond the end of the trace")]
    TimeOutOfRange(u64),
    #[error("simulation handle is closed")]
    Closed,
    #[error("no clock signal found")]
    NoClock,
    #[error("value {value} does not fit `{name}` ({width} bits)")]
    Width { name: String, value: u64, width: u32 },
    #[error(transparent)]
    Vcd(#[from] VcdError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type SignalId = usize;

/// Read access at the current time. Within an edge callback, repeated reads
/// return identical values.
pub trait SimRead {
    fn time(&self) -> u64;

    /// Id for fast repeated lookups.
    fn resolve(&self, name: &str) -> Option<SignalId>;

    fn value_of(&self, id: SignalId) -> Value;

    fn get_value(&self, name: &str) -> Result<Value, SimError> {
        self.resolve(name)
            .map(|id| self.value_of(id))
            .ok_or_else(|| SimError::UnknownSignal(name.to_string()))
    }
}

/// Result of an edge callback.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeControl {
    Continue,
    Stop,
}

pub trait Simulator: SimRead {
    fn capabilities(&self) -> Capabilities;

    fn hierarchy(&self) -> HierNode;

    /// Full names of clock signals.
    fn clocks(&self) -> Vec<String>;

    /// Move to the next rising clock edge and return its time, or `None`
    /// once the run or trace is over.
    fn advance_to_next_edge(&mut self) -> Result<Option<u64>, SimError>;

    /// Latest rising edge at or before `t`. Only backends that can set time
    /// need to answer.
    fn edge_at_or_before(&self, t: u64) -> Option<u64> {
        let _ = t;
        None
    }

    /// Reposition to time `t`. The next [`advance_to_next_edge`] returns the
    /// first edge strictly after `t`.
    ///
    /// [`advance_to_next_edge`]: Simulator::advance_to_next_edge
    fn set_time(&mut self, t: u64) -> Result<(), SimError> {
        let _ = t;
        Err(SimError::Capability("set_time"))
    }

    fn set_value(&mut self, name: &str, value: u64) -> Result<(), SimError> {
        let _ = (name, value);
        Err(SimError::Capability("set_value"))
    }

    fn close(&mut self);

    fn is_closed(&self) -> bool;

    fn as_read(&self) -> &dyn SimRead;

    /// Run forward, invoking `callback` once per rising edge until it asks
    /// to stop or the simulation ends. Returns the number of edges visited.
    fn on_clock_edge(&mut self, callback: &mut dyn FnMut(&dyn SimRead, u64) -> EdgeControl) -> Result<u64, SimError> {
        if self.is_closed() {
            return Err(SimError::Closed);
        }
        if self.clocks().is_empty() {
            return Err(SimError::NoClock);
        }
        let mut n = 0;
        while let Some(t) = self.advance_to_next_edge()? {
            n += 1;
            if callback(self.as_read(), t) == EdgeControl::Stop {
                break;
            }
        }
        Ok(n)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tree_from_names() {
        let t = HierNode::from_signals(["tb.clk", "tb.dut.a", "tb.dut.b", "tb.dut.child.c"]);
        assert_eq!(t.children.len(), 1);
        let dut = t.find("tb.dut").unwrap();
        assert_eq!(dut.signals, vec!["a", "b"]);
        assert_eq!(dut.children[0].name, "tb.dut.child");
        assert_eq!(dut.children[0].leaf_name(), "child");
        assert!(t.find("tb.du").is_none());
    }
}
