// SPDX-License-Identifier: Apache-2.0

mod common;

use common::*;
use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::compile;
use hgdbg_core::symtab::{load, store, SqliteSymbols, SymbolSource, SymbolTable, SymtabError};
use hgdbg_core::testgen::{random_program, GenConfig};
use proptest::prelude::*;
use rand::SeedableRng;

fn stored(t: &SymbolTable) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("design.hgdb");
    store(t, &path).unwrap();
    (dir, path)
}

#[test]
fn accumulator_round_trips() {
    let c = build("sum.mh", OptLevel::Debug);
    let (_dir, path) = stored(&c.table);
    assert_eq!(load(&path).unwrap(), c.table);
    assert_eq!(SymbolTable::from_json(&c.table.to_json()).unwrap(), c.table);
}

#[test]
fn empty_table_round_trips() {
    let c = compile("module top {\n}\n", "empty.mh", OptLevel::Debug).unwrap();
    assert_eq!(c.table.instances.len(), 1);
    assert!(c.table.breakpoints.is_empty());
    let (_dir, path) = stored(&c.table);
    assert_eq!(load(&path).unwrap(), c.table);
}

#[test]
fn truncated_file_is_malformed() {
    let c = build("sum.mh", OptLevel::Debug);
    let (_dir, path) = stored(&c.table);
    let bytes = std::fs::read(&path).unwrap();
    for keep in [bytes.len() / 2, 100, 0] {
        std::fs::write(&path, &bytes[..keep]).unwrap();
        match load(&path) {
            Err(SymtabError::Malformed(_)) => {}
            other => panic!("truncated to {keep} bytes: {other:?}"),
        }
    }
}

#[test]
fn schema_version_is_checked() {
    let c = build("sum.mh", OptLevel::Debug);
    let (_dir, path) = stored(&c.table);
    let conn = rusqlite::Connection::open(&path).unwrap();
    conn.pragma_update(None, "user_version", 99).unwrap();
    drop(conn);
    assert!(matches!(load(&path), Err(SymtabError::SchemaVersion { found: 99, .. })));
}

#[test]
fn accumulator_queries() {
    let c = build("sum.mh", OptLevel::Debug);
    let (_dir, path) = stored(&c.table);
    let sql = SqliteSymbols::open(&path).unwrap();
    for src in [&c.table as &dyn SymbolSource, &sql] {
        let rows = src.breakpoints_at("sum.mh", 9, None).unwrap();
        assert_eq!(rows.iter().map(|r| r.ordinal).collect::<Vec<_>>(), vec![0, 1]);
        assert!(src.breakpoints_at("sum.mh", 7, None).unwrap().is_empty());
        assert!(src.breakpoints_at("sum.mh", 9, Some(3)).unwrap().is_empty());
        // `sum` before the first accumulation is the initialization; before
        // the second it is the first partial sum.
        assert_eq!(src.resolve_scoped(rows[0].id, "sum").unwrap(), "top.sum__0");
        assert_eq!(src.resolve_scoped(rows[1].id, "sum").unwrap(), "top.sum__1");
        assert_eq!(src.resolve_scoped(rows[0].id, "i").unwrap(), "0");
        assert_eq!(src.resolve_scoped(rows[1].id, "i").unwrap(), "1");
        assert!(matches!(src.resolve_scoped(rows[0].id, "nope"), Err(SymtabError::UnknownName(_))));
        assert!(matches!(src.scope_of(12345), Err(SymtabError::UnknownBreakpoint(12345))));
        assert_eq!(src.resolve_instance("top", "sum").unwrap(), "top.sum");
    }
}

#[test]
fn twin_instances_double_the_rows() {
    let c = build("sum_twice.mh", OptLevel::Debug);
    let rows = c.table.breakpoints_at("sum_twice.mh", 10, None).unwrap();
    assert_eq!(rows.len(), 4);
    let c = build("pipeline.mh", OptLevel::Debug);
    assert_eq!(c.table.resolve_instance("top.l1", "io.a").unwrap(), "top.l1.io_a");
}

fn random_table(seed: u64, level: OptLevel) -> SymbolTable {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let g = random_program(&mut rng, &GenConfig::default());
    compile(&g.source, "gen.mh", level).unwrap().table
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn sql_and_memory_agree(seed in any::<u64>()) {
        let t = random_table(seed, OptLevel::Debug);
        t.check_integrity().unwrap();
        let (_dir, path) = stored(&t);
        prop_assert_eq!(&load(&path).unwrap(), &t);
        let sql = SqliteSymbols::open(&path).unwrap();
        prop_assert_eq!(sql.instance_rows().unwrap(), t.instance_rows().unwrap());
        for b in &t.breakpoints {
            prop_assert_eq!(sql.breakpoint_row(b.id).unwrap(), t.breakpoint_row(b.id).unwrap());
            prop_assert_eq!(
                sql.breakpoints_at(&b.file, b.line, None).unwrap(),
                t.breakpoints_at(&b.file, b.line, None).unwrap()
            );
            prop_assert_eq!(
                sql.breakpoints_at(&b.file, b.line, Some(b.column)).unwrap(),
                t.breakpoints_at(&b.file, b.line, Some(b.column)).unwrap()
            );
            prop_assert_eq!(sql.scope_of(b.id).unwrap(), t.scope_of(b.id).unwrap());
        }
        for i in &t.instances {
            prop_assert_eq!(sql.instance_variables(i.id).unwrap(), t.instance_variables(i.id).unwrap());
        }
    }
}
