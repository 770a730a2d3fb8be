// SPDX-License-Identifier: Apache-2.0

use clap::Parser;
use hgdbg_cli::mhc::{run, MhcArgs};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let args = match MhcArgs::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    match std::panic::catch_unwind(|| run(&args)) {
        Ok(Ok(paths)) => {
            for p in paths {
                println!("{}", p.display());
            }
        }
        Ok(Err(e)) => {
            eprintln!("{e}");
            std::process::exit(e.exit_code());
        }
        Err(_) => std::process::exit(2),
    }
}
