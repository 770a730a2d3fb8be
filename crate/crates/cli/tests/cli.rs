// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use hgdbg_core::symtab::{self, SymbolSource};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

fn mhc(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mhc")).args(args).current_dir(dir).output().unwrap()
}

fn hgdbg(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hgdbg")).args(args).current_dir(dir).output().unwrap()
}

fn text(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// Compiles sum.mh with a trace into `dir` and runs `script` against it.
fn session(dir: &Path, script: &str) -> String {
    let src = fixture("sum.mh");
    let stim = fixture("sum.stim");
    let o = mhc(
        &[src.to_str().unwrap(), "--emit", "symtab", "--emit", "vcd", "--stimulus", stim.to_str().unwrap()],
        dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    std::fs::write(dir.join("script.txt"), script).unwrap();
    let root = fixture("");
    let o = hgdbg(
        &[
            "--vcd",
            "sum.vcd",
            "--symtab",
            "sum.db",
            "--source-root",
            root.to_str().unwrap(),
            "--script",
            "script.txt",
        ],
        dir,
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    text(&o)
}

#[test]
fn debug_symtab_has_both_unrolled_breakpoints() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhc(&[fixture("sum.mh").to_str().unwrap(), "--debug", "--emit", "symtab"], dir.path());
    assert!(o.status.success());
    let table = symtab::load(&dir.path().join("sum.db")).unwrap();
    let rows = table.breakpoints_at("sum.mh", 9, None).unwrap();
    assert_eq!(rows.len(), 2);
}

#[test]
fn optimized_build_drops_dead_temporary() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixture("dead_temp.mh");
    let has_scratch = |mode: &str| {
        let o = mhc(&[src.to_str().unwrap(), mode, "--emit", "symtab"], dir.path());
        assert!(o.status.success());
        let table = symtab::load(&dir.path().join("dead_temp.db")).unwrap();
        table.variables.iter().any(|v| v.source_name == "scratch")
    };
    assert!(has_scratch("--debug"));
    assert!(!has_scratch("--optimized"));
}

#[test]
fn user_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = mhc(&[fixture("sum.mh").to_str().unwrap(), "--emit", "vcd"], dir.path());
    assert_eq!(o.status.code(), Some(1));

    std::fs::write(dir.path().join("bad.mh"), "module top { input clk: 1; comb { y = 1; } }\n").unwrap();
    let o = mhc(&["bad.mh"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(!o.stderr.is_empty());
}

#[test]
fn artifacts_are_deterministic() {
    let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
    let src = fixture("sum.mh");
    let stim = fixture("sum.stim");
    for d in &dirs {
        let o = mhc(
            &[
                src.to_str().unwrap(),
                "--emit",
                "netlist",
                "--emit",
                "symtab-json",
                "--emit",
                "vcd",
                "--stimulus",
                stim.to_str().unwrap(),
            ],
            d.path(),
        );
        assert!(o.status.success());
    }
    for f in ["sum.v", "sum.symtab.json", "sum.vcd"] {
        let a = std::fs::read(dirs[0].path().join(f)).unwrap();
        let b = std::fs::read(dirs[1].path().join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn scripted_session_stops_on_first_odd_element() {
    let dir = tempfile::tempdir().unwrap();
    let out = session(dir.path(), "b sum.mh:9; c; p sum; info threads\n");
    assert!(out.contains("Breakpoint 2 at"), "{out}");
    assert!(out.contains("Breakpoint 3 at"), "{out}");
    assert!(out.contains("9\t        sum = sum + data[i];"), "{out}");
    assert!(out.contains("sum = 0\n"), "{out}");
    let threads: Vec<&str> = out.lines().filter(|l| l.starts_with("* ") || l.starts_with("  ")).collect();
    assert_eq!(threads.len(), 1, "{out}");
}

#[test]
fn reverse_at_first_stop_reports_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let out = session(dir.path(), "b sum.mh:9\nc\nrc\n");
    assert!(out.contains("Notice: reached the beginning of the run"), "{out}");
}

#[test]
fn replay_rejects_set_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = session(dir.path(), "set data[0] 1\n");
    assert!(out.contains("error (capability)"), "{out}");
}

#[test]
fn transcript_is_deterministic() {
    let script = "b sum.mh:9\nc\nn\np data[0] % 2\nrn\ninfo breakpoints\nd 2\nc\nc\nc\ninfo time\nq\n";
    let a = session(tempfile::tempdir().unwrap().path(), script);
    let b = session(tempfile::tempdir().unwrap().path(), script);
    assert_eq!(a, b);
    assert!(a.contains("Simulation ended at time"), "{a}");
}

#[test]
fn bench_rejects_short_workloads() {
    let dir = tempfile::tempdir().unwrap();
    let o = hgdbg(&["bench", "--edges", "100"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least"));
}
