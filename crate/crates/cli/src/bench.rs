// SPDX-License-Identifier: Apache-2.0

//! Runtime overhead microbenchmark over VCD replay: (a) the bare backend
//! advancing edge by edge, (b) the debugger attached with no breakpoints,
//! (c) the debugger with never-firing conditional breakpoints.

use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{bail, ensure, Result};
use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::compile;
use hgdbg_core::runtime::{Command, Debugger, Outcome};
use hgdbg_core::simbackends::{parse_vcd, CycleSim, Simulator, TraceStore, VcdReplay};
use hgdbg_core::symtab::SymbolTable;

/// Shorter workloads are dominated by timer noise.
pub const MIN_EDGES: usize = 10_000;

const LANES: usize = 4;

/// `LANES` instances of a small accumulator with an unrolled loop.
fn workload_source() -> String {
    let mut s = String::from(
        "module lane {
  input clk: 1;
  input io.x: 8;
  input io.y: 8;
  output io.out: 16;
  reg acc: 16 @clk = 0;
  wire t: 16;
  comb {
    t = 0;
    for i in 0..4 {
      if (io.x + i) % 3 == 0 {
        t = t + io.y;
      }
    }
    io.out = acc;
  }
  seq clk {
    acc = acc + t;
  }
}

module top {
  input clk: 1;
  input a: 8[4];
  output total: 16;
",
    );
    for k in 0..LANES {
        s.push_str(&format!(
            "  inst l{k}: lane(clk = clk, io.x = a[{}], io.y = a[{}] + {k});\n",
            k % 4,
            (k + 1) % 4
        ));
    }
    let sum: Vec<String> = (0..LANES).map(|k| format!("l{k}.io.out")).collect();
    s.push_str(&format!("  comb {{\n    total = {};\n  }}\n}}\n", sum.join(" + ")));
    s
}

pub struct Workload {
    pub store: Arc<TraceStore>,
    pub table: SymbolTable,
    pub clocks: Vec<String>,
}

impl Workload {
    pub fn replay(&self) -> Result<VcdReplay> {
        Ok(if self.clocks.is_empty() {
            VcdReplay::new(self.store.clone())
        } else {
            VcdReplay::with_clocks(self.store.clone(), &self.clocks)?
        })
    }

    pub fn edges(&self) -> Result<usize> {
        Ok(self.replay()?.edges().len())
    }
}

/// A built-in design simulated for `edges` cycles with deterministic
/// pseudo-random inputs, dumped and parsed back.
pub fn synthetic(edges: usize) -> Result<Workload> {
    let c = compile(&workload_source(), "bench.mh", OptLevel::Debug)?;
    let mut state: u64 = 0x9E37_79B9_7F4A_7C15;
    let stimulus: Vec<BTreeMap<String, u64>> = (0..edges)
        .map(|_| {
            (0..4)
                .map(|i| {
                    state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                    (format!("a[{i}]"), state >> 56)
                })
                .collect()
        })
        .collect();
    let mut sim = CycleSim::new(c.netlist.clone(), &stimulus)?;
    sim.enable_recording();
    sim.run_to_end()?;
    let mut buf = Vec::new();
    sim.write_vcd(&mut buf)?;
    let store = parse_vcd(std::str::from_utf8(&buf)?)?;
    Ok(Workload {
        store: Arc::new(store),
        table: c.table,
        clocks: Vec::new(),
    })
}

#[derive(Clone, Copy, Debug)]
pub struct BenchConfig {
    pub runs: usize,
    /// Conditional breakpoints for mode (c), at least this many when the
    /// design has enough locations.
    pub breakpoints: usize,
}

impl Default for BenchConfig {
    fn default() -> Self {
        BenchConfig { runs: 5, breakpoints: 16 }
    }
}

#[derive(Clone, Debug)]
pub struct BenchReport {
    pub edges: usize,
    pub bare: Vec<Duration>,
    pub attached: Vec<Duration>,
    pub conditional: Vec<Duration>,
    pub breakpoints: usize,
    pub conditional_stops: usize,
}

pub fn median(samples: &[Duration]) -> Duration {
    let mut v = samples.to_vec();
    v.sort_unstable();
    match v.len() {
        0 => Duration::ZERO,
        n if n % 2 == 1 => v[n / 2],
        n => (v[n / 2 - 1] + v[n / 2]) / 2,
    }
}

impl BenchReport {
    pub fn attached_ratio(&self) -> f64 {
        median(&self.attached).as_secs_f64() / median(&self.bare).as_secs_f64()
    }

    /// Median over runs of attached / bare, each pair measured back to
    /// back. Less sensitive to machine drift than the ratio of medians.
    pub fn paired_ratio(&self) -> f64 {
        let mut r: Vec<f64> = self
            .bare
            .iter()
            .zip(&self.attached)
            .map(|(a, b)| b.as_secs_f64() / a.as_secs_f64())
            .collect();
        r.sort_by(f64::total_cmp);
        match r.len() {
            0 => f64::NAN,
            n if n % 2 == 1 => r[n / 2],
            n => (r[n / 2 - 1] + r[n / 2]) / 2.0,
        }
    }

    pub fn conditional_ratio(&self) -> f64 {
        median(&self.conditional).as_secs_f64() / median(&self.bare).as_secs_f64()
    }

    pub fn render(&self) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        format!(
            "edges: {}\nruns: {}\n(a) bare replay:            {:10.3} ms\n(b) attached, 0 breakpoints: {:10.3} ms  ratio {:.4}  paired {:.4}\n(c) {} never-firing:       {:10.3} ms  ratio {:.4}  stops {}\n",
            self.edges,
            self.bare.len(),
            ms(median(&self.bare)),
            ms(median(&self.attached)),
            self.attached_ratio(),
            self.paired_ratio(),
            self.breakpoints,
            ms(median(&self.conditional)),
            self.conditional_ratio(),
            self.conditional_stops,
        )
    }

    /// Every sample, in milliseconds, per mode.
    pub fn render_samples(&self) -> String {
        let row = |v: &[Duration]| v.iter().map(|d| format!("{:.3}", d.as_secs_f64() * 1e3)).collect::<Vec<_>>().join(" ");
        format!("(a) {}\n(b) {}\n(c) {}\n", row(&self.bare), row(&self.attached), row(&self.conditional))
    }
}

/// Through the same trait object the debugger drives.
fn bare(w: &Workload) -> Result<Duration> {
    let mut sim: Box<dyn Simulator + Send> = Box::new(w.replay()?);
    let start = Instant::now();
    while sim.advance_to_next_edge()?.is_some() {}
    Ok(start.elapsed())
}

fn attach(w: &Workload) -> Result<Debugger> {
    Ok(Debugger::attach(Box::new(w.replay()?), w.table.clone(), None)?)
}

/// Runs to the end; returns the time taken and the stops seen.
fn run_debugger(mut d: Debugger) -> Result<(Duration, usize)> {
    let mut stops = 0;
    let start = Instant::now();
    loop {
        match d.resume(Command::Continue)? {
            Outcome::Stopped(_) => stops += 1,
            Outcome::Ended { .. } => break,
        }
    }
    Ok((start.elapsed(), stops))
}

fn with_never_firing(w: &Workload, want: usize) -> Result<(Debugger, usize)> {
    let mut d = attach(w)?;
    let mut lines: Vec<(String, u32)> = Vec::new();
    let mut seen = BTreeSet::new();
    for b in &w.table.breakpoints {
        if seen.insert((b.file.clone(), b.line)) {
            lines.push((b.file.clone(), b.line));
        }
    }
    let mut inserted = 0;
    for (file, line) in lines {
        if inserted >= want {
            break;
        }
        inserted += d.insert_breakpoint(&file, line, None, Some("0"))?.len();
    }
    Ok((d, inserted))
}

pub fn run(w: &Workload, cfg: BenchConfig) -> Result<BenchReport> {
    let edges = w.edges()?;
    if edges < MIN_EDGES {
        bail!("workload has {edges} rising edges; at least {MIN_EDGES} are needed for a meaningful measurement");
    }
    ensure!(cfg.runs > 0, "at least one run is needed");
    // Warm caches and the allocator once before measuring.
    bare(w)?;
    run_debugger(attach(w)?)?;

    let mut report = BenchReport {
        edges,
        bare: Vec::new(),
        attached: Vec::new(),
        conditional: Vec::new(),
        breakpoints: 0,
        conditional_stops: 0,
    };
    // Modes are interleaved so slow drift affects them alike; (a) and (b)
    // always run back to back, in alternating order, so each run gives one
    // paired ratio.
    for run in 0..cfg.runs {
        let order: [u8; 3] = if run % 2 == 0 { [0, 1, 2] } else { [2, 1, 0] };
        for mode in order {
            match mode {
                0 => report.bare.push(bare(w)?),
                1 => {
                    let (t, stops) = run_debugger(attach(w)?)?;
                    ensure!(stops == 0, "debugger without breakpoints stopped");
                    report.attached.push(t);
                }
                _ => {
                    let (d, n) = with_never_firing(w, cfg.breakpoints)?;
                    let (t, stops) = run_debugger(d)?;
                    report.breakpoints = n;
                    report.conditional_stops += stops;
                    report.conditional.push(t);
                }
            }
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_of_even_and_odd() {
        let ms = Duration::from_millis;
        assert_eq!(median(&[ms(3), ms(1), ms(2)]), ms(2));
        assert_eq!(median(&[ms(4), ms(1), ms(2), ms(3)]), Duration::from_micros(2500));
    }

    #[test]
    fn short_workloads_are_rejected() {
        let w = synthetic(100).unwrap();
        let e = run(&w, BenchConfig::default()).unwrap_err();
        assert!(e.to_string().contains("at least"));
    }
}
