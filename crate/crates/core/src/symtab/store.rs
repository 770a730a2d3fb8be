// SPDX-License-Identifier: Apache-2.0

use std::path::{Path, PathBuf};

use rusqlite::{params, Connection, OpenFlags, OptionalExtension, Row};

use super::query::file_matches;
use super::*;

/// Stored in `PRAGMA user_version`.
pub const SCHEMA_VERSION: i64 = 1;

const SCHEMA: &str = "
CREATE TABLE instance (
    id INTEGER PRIMARY KEY,
    name TEXT NOT NULL UNIQUE,
    module_name TEXT NOT NULL
);
CREATE TABLE breakpoint (
    id INTEGER PRIMARY KEY,
    instance_id INTEGER NOT NULL REFERENCES instance(id),
    file TEXT NOT NULL,
    line INTEGER NOT NULL,
    column_num INTEGER NOT NULL,
    ordinal INTEGER NOT NULL,
    enable TEXT NOT NULL,
    order_index INTEGER NOT NULL,
    UNIQUE (instance_id, file, line, column_num, ordinal)
);
CREATE INDEX breakpoint_line ON breakpoint (line, file);
CREATE TABLE variable (
    id INTEGER PRIMARY KEY,
    rtl_name TEXT NOT NULL,
    source_name TEXT NOT NULL,
    is_instance_var INTEGER NOT NULL,
    instance_id INTEGER NOT NULL REFERENCES instance(id)
);
CREATE TABLE scope_variable (
    breakpoint_id INTEGER NOT NULL REFERENCES breakpoint(id),
    variable_id INTEGER NOT NULL REFERENCES variable(id),
    source_name TEXT NOT NULL,
    UNIQUE (breakpoint_id, source_name)
);
";

fn tmp_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(format!(".tmp{}", std::process::id()));
    path.with_file_name(name)
}

/// Write `table` to `path` atomically: the file is built next to the
/// destination and renamed into place.
pub fn store(table: &SymbolTable, path: &Path) -> Result<(), SymtabError> {
    table.check_integrity()?;
    let tmp = tmp_path(path);
    let _ = std::fs::remove_file(&tmp);
    let result = (|| -> Result<(), SymtabError> {
        let mut conn = Connection::open(&tmp)?;
        conn.execute_batch("PRAGMA foreign_keys = ON; PRAGMA journal_mode = DELETE;")?;
        conn.execute_batch(SCHEMA)?;
        conn.pragma_update(None, "user_version", SCHEMA_VERSION)?;
        let tx = conn.transaction()?;
        {
            let mut st = tx.prepare("INSERT INTO instance (id, name, module_name) VALUES (?1, ?2, ?3)")?;
            for i in &table.instances {
                st.execute(params![i.id, i.name, i.module_name])?;
            }
            let mut st = tx.prepare(
                "INSERT INTO breakpoint (id, instance_id, file, line, column_num, ordinal, enable, order_index)
                 VALUES (?1, ?2, ?3, ?4, ?5, ?6, ?7, ?8)",
            )?;
            for b in &table.breakpoints {
                st.execute(params![b.id, b.instance_id, b.file, b.line, b.column, b.ordinal, b.enable, b.order_index])?;
            }
            let mut st = tx.prepare(
                "INSERT INTO variable (id, rtl_name, source_name, is_instance_var, instance_id) VALUES (?1, ?2, ?3, ?4, ?5)",
            )?;
            for v in &table.variables {
                st.execute(params![v.id, v.rtl_name, v.source_name, v.is_instance_var, v.instance_id])?;
            }
            let mut st = tx.prepare(
                "INSERT INTO scope_variable (breakpoint_id, variable_id, source_name) VALUES (?1, ?2, ?3)",
            )?;
            for s in &table.scope_variables {
                st.execute(params![s.breakpoint_id, s.variable_id, s.source_name])?;
            }
        }
        tx.commit()?;
        conn.close().map_err(|(_, e)| e)?;
        Ok(())
    })();
    match result {
        Ok(()) => {
            std::fs::rename(&tmp, path)?;
            Ok(())
        }
        Err(e) => {
            let _ = std::fs::remove_file(&tmp);
            Err(e)
        }
    }
}

fn open_checked(path: &Path) -> Result<Connection, SymtabError> {
    if !path.is_file() {
        return Err(SymtabError::Io(std::io::Error::new(
            std::io::ErrorKind::NotFound,
            format!("{} not found", path.display()),
        )));
    }
    // SQLite treats an empty file as an empty database.
    let mut header = [0u8; 100];
    let complete = std::fs::File::open(path).and_then(|mut f| std::io::Read::read_exact(&mut f, &mut header));
    if complete.is_err() || !header.starts_with(b"SQLite format 3\0") {
        return Err(SymtabError::Malformed("missing SQLite header".into()));
    }
    let conn = Connection::open_with_flags(path, OpenFlags::SQLITE_OPEN_READ_ONLY | OpenFlags::SQLITE_OPEN_NO_MUTEX)
        .map_err(malformed)?;
    let version: i64 = conn
        .pragma_query_value(None, "user_version", |r| r.get(0))
        .map_err(malformed)?;
    if version != SCHEMA_VERSION {
        return Err(SymtabError::SchemaVersion {
            found: version,
            expected: SCHEMA_VERSION,
        });
    }
    let check: String = conn
        .pragma_query_value(None, "quick_check", |r| r.get(0))
        .map_err(malformed)?;
    if check != "ok" {
        return Err(SymtabError::Malformed(check));
    }
    Ok(conn)
}

fn malformed(e: rusqlite::Error) -> SymtabError {
    SymtabError::Malformed(e.to_string())
}

fn instance_row(r: &Row) -> rusqlite::Result<InstanceRow> {
    Ok(InstanceRow {
        id: r.get(0)?,
        name: r.get(1)?,
        module_name: r.get(2)?,
    })
}

fn breakpoint_row(r: &Row) -> rusqlite::Result<BreakpointRow> {
    Ok(BreakpointRow {
        id: r.get(0)?,
        instance_id: r.get(1)?,
        file: r.get(2)?,
        line: r.get(3)?,
        column: r.get(4)?,
        ordinal: r.get(5)?,
        enable: r.get(6)?,
        order_index: r.get(7)?,
    })
}

fn variable_row(r: &Row, at: usize) -> rusqlite::Result<VariableRow> {
    Ok(VariableRow {
        id: r.get(at)?,
        rtl_name: r.get(at + 1)?,
        source_name: r.get(at + 2)?,
        is_instance_var: r.get(at + 3)?,
        instance_id: r.get(at + 4)?,
    })
}

const BP_COLS: &str = "id, instance_id, file, line, column_num, ordinal, enable, order_index";
const VAR_COLS: &str = "id, rtl_name, source_name, is_instance_var, instance_id";

/// Read a whole table. Any inconsistency is reported as malformed and no
/// partial table is returned.
pub fn load(path: &Path) -> Result<SymbolTable, SymtabError> {
    let conn = open_checked(path)?;
    let read = || -> rusqlite::Result<SymbolTable> {
        let instances = conn
            .prepare("SELECT id, name, module_name FROM instance ORDER BY id")?
            .query_map([], instance_row)?
            .collect::<Result<_, _>>()?;
        let breakpoints = conn
            .prepare(&format!("SELECT {BP_COLS} FROM breakpoint ORDER BY id"))?
            .query_map([], breakpoint_row)?
            .collect::<Result<_, _>>()?;
        let variables = conn
            .prepare(&format!("SELECT {VAR_COLS} FROM variable ORDER BY id"))?
            .query_map([], |r| variable_row(r, 0))?
            .collect::<Result<_, _>>()?;
        let scope_variables = conn
            .prepare("SELECT breakpoint_id, variable_id, source_name FROM scope_variable ORDER BY rowid")?
            .query_map([], |r| {
                Ok(ScopeVariableRow {
                    breakpoint_id: r.get(0)?,
                    variable_id: r.get(1)?,
                    source_name: r.get(2)?,
                })
            })?
            .collect::<Result<_, _>>()?;
        Ok(SymbolTable {
            instances,
            breakpoints,
            variables,
            scope_variables,
        })
    };
    let table = read().map_err(malformed)?;
    table.check_integrity()?;
    Ok(table)
}

/// Queries answered directly by SQL against a stored table.
pub struct SqliteSymbols {
    conn: Connection,
}

impl SqliteSymbols {
    pub fn open(path: &Path) -> Result<Self, SymtabError> {
        Ok(SqliteSymbols {
            conn: open_checked(path)?,
        })
    }
}

impl SymbolSource for SqliteSymbols {
    fn breakpoints_at(&self, file: &str, line: u32, column: Option<u32>) -> Result<Vec<BreakpointRow>, SymtabError> {
        let mut st = self.conn.prepare_cached(&format!(
            "SELECT {BP_COLS} FROM breakpoint WHERE line = ?1 AND (?2 IS NULL OR column_num = ?2)
             ORDER BY file, order_index"
        ))?;
        let rows = st
            .query_map(params![line, column], breakpoint_row)?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows.into_iter().filter(|b| file_matches(&b.file, file)).collect())
    }

    fn scope_of(&self, breakpoint_id: i64) -> Result<Vec<(String, VariableRow)>, SymtabError> {
        self.breakpoint_row(breakpoint_id)?;
        let mut st = self.conn.prepare_cached(
            "SELECT s.source_name, v.id, v.rtl_name, v.source_name, v.is_instance_var, v.instance_id
             FROM scope_variable s JOIN variable v ON v.id = s.variable_id
             WHERE s.breakpoint_id = ?1 ORDER BY s.rowid",
        )?;
        let rows = st
            .query_map([breakpoint_id], |r| Ok((r.get::<_, String>(0)?, variable_row(r, 1)?)))?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    fn instance_variables(&self, instance_id: i64) -> Result<Vec<VariableRow>, SymtabError> {
        let mut st = self.conn.prepare_cached(&format!(
            "SELECT {VAR_COLS} FROM variable WHERE instance_id = ?1 AND is_instance_var = 1 ORDER BY id"
        ))?;
        let rows = st
            .query_map([instance_id], |r| variable_row(r, 0))?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    fn instance_rows(&self) -> Result<Vec<InstanceRow>, SymtabError> {
        let mut st = self.conn.prepare_cached("SELECT id, name, module_name FROM instance ORDER BY id")?;
        let rows = st.query_map([], instance_row)?.collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    fn breakpoint_row(&self, id: i64) -> Result<BreakpointRow, SymtabError> {
        let mut st = self
            .conn
            .prepare_cached(&format!("SELECT {BP_COLS} FROM breakpoint WHERE id = ?1"))?;
        st.query_row([id], breakpoint_row)
            .optional()?
            .ok_or(SymtabError::UnknownBreakpoint(id))
    }

    fn resolve_instance(&self, instance: &str, source_name: &str) -> Result<String, SymtabError> {
        let mut st = self.conn.prepare_cached(
            "SELECT v.rtl_name FROM variable v JOIN instance i ON i.id = v.instance_id
             WHERE i.name = ?1 AND v.source_name = ?2 AND v.is_instance_var = 1 ORDER BY v.id LIMIT 1",
        )?;
        if let Some(name) = st.query_row(params![instance, source_name], |r| r.get(0)).optional()? {
            return Ok(name);
        }
        let exists: Option<i64> = self
            .conn
            .query_row("SELECT id FROM instance WHERE name = ?1", [instance], |r| r.get(0))
            .optional()?;
        match exists {
            None => Err(SymtabError::UnknownInstance(instance.to_string())),
            Some(_) => Err(SymtabError::UnknownName(source_name.to_string())),
        }
    }
}
