// SPDX-License-Identifier: Apache-2.0

use std::io::Write;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hgdbg_cli::bench::{self, BenchConfig};
use hgdbg_cli::host::{self, HostOptions};
use hgdbg_cli::repl::Repl;
use hgdbg_server::{default_port, serve, Client};

#[derive(Debug, Parser)]
#[command(name = "hgdbg", version, about = "Source-level hardware debugger")]
struct Cli {
    #[command(subcommand)]
    mode: Option<Mode>,
    /// Server to connect to; defaults to 127.0.0.1 on $HGDB_PORT or 8888.
    #[arg(long)]
    connect: Option<String>,
    #[command(flatten)]
    host: HostArgs,
    /// Serve the self-hosted backend instead of starting a prompt.
    #[arg(long)]
    listen: bool,
    /// Port for `--listen`.
    #[arg(long)]
    port: Option<u16>,
    /// Run commands from a file and print the transcript.
    #[arg(long)]
    script: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct HostArgs {
    /// Replay a VCD trace (needs --symtab).
    #[arg(long)]
    vcd: Option<PathBuf>,
    /// Symbol table: `.db`, `.json`, or mini-HDL source compiled on the fly.
    #[arg(long)]
    symtab: Option<PathBuf>,
    /// Simulate mini-HDL source in-process.
    #[arg(long)]
    run: Option<PathBuf>,
    /// Stimulus for --run.
    #[arg(long)]
    stimulus: Option<PathBuf>,
    /// Cycles for --run.
    #[arg(long)]
    cycles: Option<usize>,
    /// Compile --run sources with optimization.
    #[arg(long)]
    optimized: bool,
    /// Clock signal in the trace (repeatable); detected when omitted.
    #[arg(long = "clock")]
    clocks: Vec<String>,
    /// Directory source paths in the symbol table are relative to.
    #[arg(long)]
    source_root: Option<PathBuf>,
}

impl HostArgs {
    fn options(&self) -> HostOptions {
        HostOptions {
            vcd: self.vcd.clone(),
            symtab: self.symtab.clone(),
            run: self.run.clone(),
            stimulus: self.stimulus.clone(),
            cycles: self.cycles,
            optimized: self.optimized,
            clocks: self.clocks.clone(),
            source_root: self.source_root.clone(),
        }
    }

    fn self_hosted(&self) -> bool {
        self.vcd.is_some() || self.run.is_some()
    }
}

#[derive(Debug, Subcommand)]
enum Mode {
    /// Measure runtime overhead over bare VCD replay.
    Bench {
        /// Rising edges of the built-in synthetic workload.
        #[arg(long, default_value_t = 100_000)]
        edges: usize,
        #[arg(long, default_value_t = 5)]
        runs: usize,
        /// Never-firing conditional breakpoints for the third mode.
        #[arg(long, default_value_t = 16)]
        breakpoints: usize,
        /// Use this trace instead of the synthetic workload (needs --symtab).
        #[arg(long)]
        vcd: Option<PathBuf>,
        #[arg(long)]
        symtab: Option<PathBuf>,
        #[arg(long = "clock")]
        clocks: Vec<String>,
        /// Print every sample, not only medians.
        #[arg(long)]
        samples: bool,
    },
}

fn run_bench(mode: Mode) -> Result<()> {
    let Mode::Bench {
        edges,
        runs,
        breakpoints,
        vcd,
        symtab,
        clocks,
        samples,
    } = mode;
    let workload = match vcd {
        Some(vcd) => {
            let symtab = symtab.context("--vcd needs --symtab")?;
            bench::Workload {
                store: std::sync::Arc::new(hgdbg_core::simbackends::parse_vcd_file(&vcd)?),
                table: host::load_symtab(&symtab)?,
                clocks,
            }
        }
        None => bench::synthetic(edges)?,
    };
    let report = bench::run(&workload, BenchConfig { runs, breakpoints })?;
    print!("{}", report.render());
    if samples {
        print!("{}", report.render_samples());
    }
    Ok(())
}

fn main_inner(cli: Cli) -> Result<()> {
    if let Some(mode) = cli.mode {
        return run_bench(mode);
    }
    let mut server = None;
    let url = if cli.host.self_hosted() {
        let session = host::session(&cli.host.options())?;
        let addr = if cli.listen {
            format!("127.0.0.1:{}", cli.port.unwrap_or_else(default_port))
        } else {
            "127.0.0.1:0".to_string()
        };
        let s = serve(session, addr)?;
        let url = s.url();
        if cli.listen {
            eprintln!("listening on {url}");
            s.wait();
            return Ok(());
        }
        server = Some(s);
        url
    } else {
        cli.connect.unwrap_or_else(|| format!("127.0.0.1:{}", default_port()))
    };
    let client = Client::connect(&url).with_context(|| format!("cannot connect to {url}"))?;
    let mut repl = Repl::new(client);
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    match &cli.script {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
            repl.run_script(&text, &mut out)?;
        }
        None => repl.interactive(std::io::stdin().lock(), &mut out)?,
    }
    out.flush()?;
    repl.close();
    if let Some(s) = server {
        s.shutdown();
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = main_inner(cli) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
