// SPDX-License-Identifier: Apache-2.0

//! In-process backends for `hgdbg --vcd` and `hgdbg --run`.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use hgdbg_core::frontend::normalize_path;
use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::compile;
use hgdbg_core::runtime::Debugger;
use hgdbg_core::simbackends::{parse_vcd_file, CycleSim, Simulator, VcdReplay};
use hgdbg_core::stimulus::parse_stimulus;
use hgdbg_core::symtab::{self, SymbolTable};
use hgdbg_server::Session;

/// Cycles simulated by `--run` without a stimulus file or `--cycles`.
pub const DEFAULT_CYCLES: usize = 16;

#[derive(Clone, Debug, Default)]
pub struct HostOptions {
    pub vcd: Option<PathBuf>,
    /// `.db`, `.json` or a `.mh` source compiled in debug mode.
    pub symtab: Option<PathBuf>,
    pub run: Option<PathBuf>,
    pub stimulus: Option<PathBuf>,
    pub cycles: Option<usize>,
    pub optimized: bool,
    pub clocks: Vec<String>,
    pub source_root: Option<PathBuf>,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn compile_file(path: &Path, level: OptLevel) -> Result<hgdbg_core::pipeline::Compiled> {
    let name = normalize_path(&path.to_string_lossy());
    compile(&read(path)?, &name, level).map_err(|e| anyhow::anyhow!("{e}"))
}

pub fn load_symtab(path: &Path) -> Result<SymbolTable> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("json") => SymbolTable::from_json(&read(path)?).with_context(|| format!("{}", path.display())),
        Some("mh") => Ok(compile_file(path, OptLevel::Debug)?.table),
        _ => symtab::load(path).with_context(|| format!("{}", path.display())),
    }
}

/// Build the debugger session the options describe.
pub fn session(o: &HostOptions) -> Result<Session> {
    let level = if o.optimized { OptLevel::Optimized } else { OptLevel::Debug };
    let (sim, table, backend): (Box<dyn Simulator + Send>, SymbolTable, &str) = match (&o.vcd, &o.run) {
        (Some(_), Some(_)) => bail!("--vcd and --run are exclusive"),
        (Some(vcd), None) => {
            let Some(st) = &o.symtab else {
                bail!("--vcd needs --symtab");
            };
            let store = Arc::new(parse_vcd_file(vcd).with_context(|| format!("{}", vcd.display()))?);
            let replay = if o.clocks.is_empty() {
                VcdReplay::new(store)
            } else {
                VcdReplay::with_clocks(store, &o.clocks)?
            };
            (Box::new(replay), load_symtab(st)?, "vcd-replay")
        }
        (None, Some(src)) => {
            let c = compile_file(src, level)?;
            let stimulus = match &o.stimulus {
                Some(p) => Some(parse_stimulus(&read(p)?).with_context(|| format!("{}", p.display()))?),
                None => None,
            };
            let cycles = o.cycles.unwrap_or_else(|| {
                stimulus
                    .as_ref()
                    .and_then(|s| s.changes.keys().next_back().map(|c| c + 1))
                    .unwrap_or(DEFAULT_CYCLES)
            });
            let per_cycle = stimulus.unwrap_or_default().expand(&[], cycles);
            let sim = CycleSim::new(c.netlist, &per_cycle)?;
            (Box::new(sim), c.table, "cycle-sim")
        }
        (None, None) => bail!("nothing to debug: give --vcd or --run"),
    };
    let dbg = Debugger::attach(sim, table, None)?;
    if let Some(w) = dbg.map_warning() {
        log::warn!("{w}");
    }
    Ok(Session::new(dbg, backend, o.source_root.clone()))
}
