// SPDX-License-Identifier: Apache-2.0

//! Random mini-HDL programs and stimulus for property tests and benchmark
//! workloads.
//!
//! Generated programs always pass frontend validation: every combinational
//! target is first assigned unconditionally, reads only see targets that are
//! already defined, and array indices stay in bounds after unrolling.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::expr::mask;

#[derive(Clone, Debug)]
pub struct GenConfig {
    /// Maximum nesting of `if`/`for` statements.
    pub max_depth: usize,
    /// Maximum iterations of one loop.
    pub max_trip: u64,
    /// Maximum declared variables per module, clock excluded.
    pub max_vars: usize,
    pub max_width: u32,
    /// Probability of adding a child module instantiated twice.
    pub child_probability: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            max_depth: 3,
            max_trip: 4,
            max_vars: 6,
            max_width: 8,
            child_probability: 0.3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Generated {
    pub source: String,
    /// Non-clock top-level input elements with their widths.
    pub inputs: Vec<(String, u32)>,
}

#[derive(Clone, Debug)]
struct Var {
    name: String,
    width: u32,
    len: Option<u32>,
}

struct ModGen<'a, R: Rng> {
    rng: &'a mut R,
    cfg: &'a GenConfig,
    out: String,
    readable: Vec<Var>,
    loops: Vec<(String, u64, u64)>,
}

/// Indentation of statements directly inside a block.
const BODY_INDENT: usize = 2;

const UNARY: [&str; 3] = ["~", "!", "-"];
const BINARY: [&str; 18] = [
    "+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>", "==", "!=", "<", "<=", ">", ">=", "&&", "||",
];

impl<R: Rng> ModGen<'_, R> {
    fn line(&mut self, depth: usize, text: &str) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn width(&mut self) -> u32 {
        self.rng.gen_range(1..=self.cfg.max_width)
    }

    fn operand(&mut self) -> String {
        let loops = self.loops.clone();
        if !loops.is_empty() && self.rng.gen_bool(0.25) {
            return loops.choose(self.rng).unwrap().0.clone();
        }
        if self.readable.is_empty() || self.rng.gen_bool(0.2) {
            return self.rng.gen_range(0..=mask(self.cfg.max_width)).to_string();
        }
        let v = self.readable.choose(self.rng).unwrap().clone();
        match v.len {
            None => v.name,
            Some(len) => {
                let fits: Vec<&(String, u64, u64)> = loops.iter().filter(|(_, _, end)| *end <= len as u64).collect();
                if !fits.is_empty() && self.rng.gen_bool(0.7) {
                    format!("{}[{}]", v.name, fits.choose(self.rng).unwrap().0)
                } else {
                    format!("{}[{}]", v.name, self.rng.gen_range(0..len))
                }
            }
        }
    }

    fn expr(&mut self, depth: u32) -> String {
        if depth == 0 || self.rng.gen_bool(0.35) {
            return self.operand();
        }
        match self.rng.gen_range(0..10) {
            0 => format!("{}({})", UNARY.choose(self.rng).unwrap(), self.expr(depth - 1)),
            1 => format!("({} ? {} : {})", self.expr(depth - 1), self.expr(depth - 1), self.expr(depth - 1)),
            _ => {
                let op = *BINARY.choose(self.rng).unwrap();
                // Keep most divisors constant so both paths are exercised.
                let rhs = if matches!(op, "/" | "%") && self.rng.gen_bool(0.7) {
                    self.rng.gen_range(1..=7).to_string()
                } else if matches!(op, "<<" | ">>") {
                    self.rng.gen_range(0..=3).to_string()
                } else {
                    self.expr(depth - 1)
                };
                format!("({} {op} {rhs})", self.expr(depth - 1))
            }
        }
    }

    /// Random statements assigning elements of `targets`.
    fn stmts(&mut self, targets: &[Var], depth: usize, count: usize) {
        for _ in 0..count {
            let nest = depth - BODY_INDENT < self.cfg.max_depth;
            match self.rng.gen_range(0..6) {
                0 | 1 if nest => {
                    let c = self.expr(2);
                    self.line(depth, &format!("if {c} {{"));
                    let n = self.rng.gen_range(1..=2);
                    self.stmts(targets, depth + 1, n);
                    if self.rng.gen_bool(0.4) {
                        self.line(depth, "} else {");
                        let n = self.rng.gen_range(1..=2);
                        self.stmts(targets, depth + 1, n);
                    }
                    self.line(depth, "}");
                }
                2 if nest => {
                    let var = ["i", "j", "k"][self.loops.len().min(2)];
                    if self.loops.iter().any(|(n, _, _)| n == var) {
                        continue;
                    }
                    let start = self.rng.gen_range(0..=1);
                    let end = start + self.rng.gen_range(1..=self.cfg.max_trip);
                    self.line(depth, &format!("for {var} in {start}..{end} {{"));
                    self.loops.push((var.to_string(), start, end));
                    let n = self.rng.gen_range(1..=2);
                    self.stmts(targets, depth + 1, n);
                    self.loops.pop();
                    self.line(depth, "}");
                }
                _ => self.assign(targets, depth),
            }
        }
    }

    fn assign(&mut self, targets: &[Var], depth: usize) {
        let Some(t) = targets.choose(self.rng).cloned() else {
            return;
        };
        let lhs = match t.len {
            None => t.name.clone(),
            Some(len) => {
                let fits: Vec<String> = self
                    .loops
                    .iter()
                    .filter(|(_, _, end)| *end <= len as u64)
                    .map(|(n, _, _)| n.clone())
                    .collect();
                match fits.choose(self.rng) {
                    Some(l) if self.rng.gen_bool(0.7) => format!("{}[{l}]", t.name),
                    _ => format!("{}[{}]", t.name, self.rng.gen_range(0..len)),
                }
            }
        };
        let rhs = self.expr(2);
        self.line(depth, &format!("{lhs} = {rhs};"));
    }
}

struct ModuleShape {
    text: String,
    inputs: Vec<Var>,
    outputs: Vec<Var>,
}

fn gen_module<R: Rng>(
    rng: &mut R,
    cfg: &GenConfig,
    name: &str,
    prefix: &str,
    child: Option<&ModuleShape>,
) -> ModuleShape {
    let mut budget = cfg.max_vars.max(4);
    let has_rst = rng.gen_bool(0.4);
    if has_rst {
        budget -= 1;
    }
    let n_in = rng.gen_range(1..=2.min(budget - 2));
    budget -= n_in;
    let n_out = rng.gen_range(1..=2.min(budget));
    budget -= n_out;
    let n_reg = rng.gen_range(0..=budget.min(2));
    budget -= n_reg;
    let n_wire = rng.gen_range(0..=budget.min(1));

    let mut g = ModGen {
        rng,
        cfg,
        out: String::new(),
        readable: Vec::new(),
        loops: Vec::new(),
    };
    let mut inputs = Vec::new();
    for k in 0..n_in {
        let len = g.rng.gen_bool(0.35).then(|| g.rng.gen_range(2..=4));
        let width = g.width();
        inputs.push(Var {
            name: format!("{prefix}in{k}"),
            width,
            len,
        });
    }
    let mut regs = Vec::new();
    for k in 0..n_reg {
        let len = g.rng.gen_bool(0.2).then(|| g.rng.gen_range(2..=3));
        let width = g.width();
        regs.push(Var {
            name: format!("r{k}"),
            width,
            len,
        });
    }
    let outputs: Vec<Var> = (0..n_out)
        .map(|k| Var {
            name: format!("{prefix}out{k}"),
            width: g.width(),
            len: None,
        })
        .collect();
    let wires: Vec<Var> = (0..n_wire)
        .map(|k| Var {
            name: format!("w{k}"),
            width: g.width(),
            len: None,
        })
        .collect();

    g.line(0, &format!("module {name} {{"));
    g.line(1, "input clk: 1;");
    if has_rst {
        g.line(1, "input rst: 1;");
    }
    let shape = |v: &Var| match v.len {
        Some(l) => format!("{}[{l}]", v.width),
        None => v.width.to_string(),
    };
    for v in &inputs {
        g.line(1, &format!("input {}: {};", v.name, shape(v)));
    }
    for v in &outputs {
        g.line(1, &format!("output {}: {};", v.name, shape(v)));
    }
    for v in &wires {
        g.line(1, &format!("wire {}: {};", v.name, shape(v)));
    }
    for v in &regs {
        let reset = if g.rng.gen_bool(0.5) {
            format!(" = {}", g.rng.gen_range(0..=mask(v.width)))
        } else {
            String::new()
        };
        g.line(1, &format!("reg {}: {} @clk{reset};", v.name, shape(v)));
    }
    g.readable.extend(inputs.iter().cloned());
    g.readable.extend(regs.iter().cloned());
    if has_rst {
        g.readable.push(Var {
            name: "rst".into(),
            width: 1,
            len: None,
        });
    }
    if let Some(c) = child {
        for inst in ["u0", "u1"] {
            let mut binds = vec!["clk = clk".to_string()];
            if c.text.contains("input rst: 1;") {
                binds.push(format!("rst = {}", if has_rst { "rst" } else { "0" }));
            }
            for v in &c.inputs {
                match v.len {
                    None => binds.push(format!("{} = {}", v.name, g.expr(1))),
                    Some(l) => {
                        for i in 0..l {
                            binds.push(format!("{}[{i}] = {}", v.name, g.expr(1)));
                        }
                    }
                }
            }
            g.line(1, &format!("inst {inst}: {}({});", "sub", binds.join(", ")));
        }
        for inst in ["u0", "u1"] {
            for v in &c.outputs {
                g.readable.push(Var {
                    name: format!("{inst}.{}", v.name),
                    width: v.width,
                    len: v.len,
                });
            }
        }
    }

    let comb_targets: Vec<Var> = outputs.iter().chain(wires.iter()).cloned().collect();
    g.line(1, "comb {");
    let mut defined = Vec::new();
    for t in &comb_targets {
        let rhs = g.expr(2);
        g.line(2, &format!("{} = {rhs};", t.name));
        defined.push(t.clone());
        g.readable.push(t.clone());
        let n = g.rng.gen_range(0..=2);
        g.stmts(&defined, 2, n);
    }
    g.line(1, "}");
    if !regs.is_empty() {
        g.line(1, "seq clk {");
        let n = g.rng.gen_range(1..=3);
        g.stmts(&regs, 2, n);
        g.line(1, "}");
    }
    g.line(0, "}");
    ModuleShape {
        text: g.out,
        inputs,
        outputs,
    }
}

/// Generate one random program whose top module is `top`.
pub fn random_program<R: Rng>(rng: &mut R, cfg: &GenConfig) -> Generated {
    let mut source = String::new();
    let child = if rng.gen_bool(cfg.child_probability) {
        let c = gen_module(rng, cfg, "sub", "io.", None);
        source.push_str(&c.text);
        source.push('\n');
        Some(c)
    } else {
        None
    };
    let top = gen_module(rng, cfg, "top", "", child.as_ref());
    source.push_str(&top.text);
    let mut inputs = Vec::new();
    if top.text.contains("input rst: 1;") {
        inputs.push(("rst".to_string(), 1));
    }
    for v in &top.inputs {
        match v.len {
            None => inputs.push((v.name.clone(), v.width)),
            Some(l) => inputs.extend((0..l).map(|i| (format!("{}[{i}]", v.name), v.width))),
        }
    }
    Generated { source, inputs }
}

/// Per-cycle maps assigning every input. `rst` is held high in cycle 0 and
/// pulsed rarely afterwards.
pub fn random_stimulus<R: Rng>(rng: &mut R, inputs: &[(String, u32)], cycles: usize) -> Vec<BTreeMap<String, u64>> {
    (0..cycles)
        .map(|c| {
            inputs
                .iter()
                .map(|(n, w)| {
                    let v = if n == "rst" {
                        u64::from(c == 0 || rng.gen_bool(0.05))
                    } else {
                        rng.gen_range(0..=mask(*w))
                    };
                    (n.clone(), v)
                })
                .collect()
        })
        .collect()
}

/// Text listing for a stimulus, in the stimulus-file format.
pub fn stimulus_text(stimulus: &[BTreeMap<String, u64>]) -> String {
    let mut out = String::new();
    for (c, m) in stimulus.iter().enumerate() {
        let _ = write!(out, "{c}");
        for (k, v) in m {
            let _ = write!(out, ",{k}={v}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;
    use rand::SeedableRng;

    #[test]
    fn generated_programs_validate() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for _ in 0..300 {
            let g = random_program(&mut rng, &GenConfig::default());
            let p = parse(&g.source, "gen.mh").unwrap_or_else(|e| panic!("{e}\n{}", g.source));
            for m in &p.modules {
                assert!(m.vars().iter().filter(|v| v.name != "clk").count() <= 6, "{}", g.source);
            }
        }
    }
}
