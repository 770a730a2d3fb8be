// SPDX-License-Identifier: Apache-2.0

//! The checked-in fuzz seeds are well-formed inputs for their targets.

use std::path::PathBuf;

use hgdbg_core::expr::parse_expr;
use hgdbg_core::frontend::parse;
use hgdbg_core::simbackends::parse_vcd;
use hgdbg_core::stimulus::parse_stimulus;
use hgdbg_core::symtab::SymbolTable;

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            (p.display().to_string(), std::fs::read_to_string(&p).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds in {}", dir.display());
    out
}

#[test]
fn frontend_seeds_parse() {
    for (name, text) in seeds("frontend_parse") {
        parse(&text, "seed.mh").unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn expr_seeds_parse() {
    for (name, text) in seeds("expr_parse") {
        parse_expr(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn vcd_seeds_parse() {
    for (name, text) in seeds("vcd_parse") {
        parse_vcd(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn stimulus_seeds_parse() {
    for (name, text) in seeds("stimulus_parse") {
        parse_stimulus(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn symtab_seeds_parse() {
    for (name, text) in seeds("symtab_json") {
        SymbolTable::from_json(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
