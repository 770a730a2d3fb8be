// SPDX-License-Identifier: Apache-2.0

//! Compiler driver: mini-HDL to netlist text, symbol table and VCD.

use std::path::{Path, PathBuf};

use clap::{Parser, ValueEnum};
use hgdbg_core::frontend::normalize_path;
use hgdbg_core::lowering::{emit_verilog_like, OptLevel};
use hgdbg_core::pipeline::{compile, Compiled};
use hgdbg_core::simbackends::CycleSim;
use hgdbg_core::stimulus::parse_stimulus;
use hgdbg_core::symtab;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Emit {
    /// `<stem>.v`
    Netlist,
    /// `<stem>.db` (SQLite)
    Symtab,
    /// `<stem>.symtab.json`
    SymtabJson,
    /// `<stem>.vcd`, needs `--stimulus`
    Vcd,
}

#[derive(Debug, Parser)]
#[command(name = "mhc", version, about = "Compile mini-HDL to a netlist and a debug symbol table")]
pub struct MhcArgs {
    /// Source file.
    pub input: PathBuf,
    /// Output directory.
    #[arg(short = 'o', long = "out-dir", default_value = ".")]
    pub out_dir: PathBuf,
    /// Keep every intermediate value (the default).
    #[arg(long, conflicts_with = "optimized")]
    pub debug: bool,
    /// Fold constants and remove dead nets.
    #[arg(long)]
    pub optimized: bool,
    /// Artifacts to write; netlist and symtab when omitted.
    #[arg(long, value_enum)]
    pub emit: Vec<Emit>,
    /// Stimulus file for `--emit vcd`.
    #[arg(long)]
    pub stimulus: Option<PathBuf>,
    /// Cycles to simulate; defaults to one past the last stimulus cycle.
    #[arg(long)]
    pub cycles: Option<usize>,
}

/// Exit status 1 for `User`, 2 for `Internal`.
#[derive(Debug)]
pub enum MhcError {
    User(String),
    Internal(String),
}

impl MhcError {
    pub fn exit_code(&self) -> i32 {
        match self {
            MhcError::User(_) => 1,
            MhcError::Internal(_) => 2,
        }
    }
}

impl std::fmt::Display for MhcError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MhcError::User(m) => write!(f, "error: {m}"),
            MhcError::Internal(m) => write!(f, "internal error: {m}"),
        }
    }
}

fn user(m: impl std::fmt::Display) -> MhcError {
    MhcError::User(m.to_string())
}

fn internal(m: impl std::fmt::Display) -> MhcError {
    MhcError::Internal(m.to_string())
}

fn write_file(path: &Path, data: &[u8]) -> Result<(), MhcError> {
    std::fs::write(path, data).map_err(|e| internal(format!("cannot write {}: {e}", path.display())))
}

/// Runs the driver; returns the paths written.
pub fn run(args: &MhcArgs) -> Result<Vec<PathBuf>, MhcError> {
    let source = std::fs::read_to_string(&args.input)
        .map_err(|e| user(format!("cannot read {}: {e}", args.input.display())))?;
    let name = normalize_path(&args.input.to_string_lossy());
    let level = if args.optimized { OptLevel::Optimized } else { OptLevel::Debug };
    let compiled = compile(&source, &name, level).map_err(user)?;

    let mut emit = args.emit.clone();
    if emit.is_empty() {
        emit = vec![Emit::Netlist, Emit::Symtab];
    }
    emit.sort();
    emit.dedup();
    if emit.contains(&Emit::Vcd) && args.stimulus.is_none() {
        return Err(user("--emit vcd needs --stimulus"));
    }
    let stimulus = match &args.stimulus {
        Some(p) => {
            let text =
                std::fs::read_to_string(p).map_err(|e| user(format!("cannot read {}: {e}", p.display())))?;
            Some(parse_stimulus(&text).map_err(|e| user(format!("{}: {e}", p.display())))?)
        }
        None => None,
    };

    std::fs::create_dir_all(&args.out_dir)
        .map_err(|e| user(format!("cannot create {}: {e}", args.out_dir.display())))?;
    let stem = args.input.file_stem().unwrap_or_default().to_string_lossy().into_owned();
    let out = |ext: &str| args.out_dir.join(format!("{stem}.{ext}"));
    let mut written = Vec::new();
    for e in emit {
        let path = match e {
            Emit::Netlist => {
                let p = out("v");
                write_file(&p, emit_verilog_like(&compiled.netlist).as_bytes())?;
                p
            }
            Emit::Symtab => {
                let p = out("db");
                symtab::store(&compiled.table, &p).map_err(internal)?;
                p
            }
            Emit::SymtabJson => {
                let p = out("symtab.json");
                write_file(&p, compiled.table.to_json().as_bytes())?;
                p
            }
            Emit::Vcd => {
                let stim = stimulus.as_ref().expect("checked above");
                let cycles = args
                    .cycles
                    .unwrap_or_else(|| stim.changes.keys().next_back().map_or(1, |c| c + 1));
                let p = out("vcd");
                simulate(&compiled, &stim.expand(&[], cycles), &p)?;
                p
            }
        };
        written.push(path);
    }
    if compiled.report.dropped > 0 {
        log::info!("{} statements have no remaining logic", compiled.report.dropped);
    }
    Ok(written)
}

fn simulate(
    c: &Compiled,
    stimulus: &[std::collections::BTreeMap<String, u64>],
    path: &Path,
) -> Result<(), MhcError> {
    let mut sim = CycleSim::new(c.netlist.clone(), stimulus).map_err(user)?;
    sim.enable_recording();
    sim.run_to_end().map_err(internal)?;
    sim.dump_vcd(path).map_err(internal)
}
