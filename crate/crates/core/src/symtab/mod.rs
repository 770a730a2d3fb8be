// SPDX-License-Identifier: Apache-2.0

//! Relational symbol table: instances, breakpoints, variables and the
//! per-breakpoint scope mapping, with an SQLite store and a JSON export.
//!
//! Every query is available on two routes that must agree: the in-memory
//! [`SymbolTable`] (plain filter-joins over the row vectors) and
//! [`SqliteSymbols`] (SQL against the store).

use serde::{Deserialize, Serialize};
use thiserror::Error;

mod query;
mod store;

pub(crate) use query::file_matches;
pub use query::SymbolSource;
pub use store::{load, store, SqliteSymbols, SCHEMA_VERSION};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceRow {
    pub id: i64,
    /// Hierarchical path including the generated top, e.g. `top.u`.
    pub name: String,
    pub module_name: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BreakpointRow {
    pub id: i64,
    pub instance_id: i64,
    pub file: String,
    pub line: u32,
    pub column: u32,
    /// Unrolled copy of the statement.
    pub ordinal: u32,
    /// Enable condition over hierarchical net names; `1` is always enabled.
    pub enable: String,
    /// Evaluation order within `file`, dense from 0.
    pub order_index: u32,
}

impl BreakpointRow {
    pub fn key(&self) -> SourceKey {
        SourceKey {
            file: self.file.clone(),
            line: self.line,
            column: self.column,
            ordinal: self.ordinal,
        }
    }
}

/// Source identity shared by all instances of one unrolled statement.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SourceKey {
    pub file: String,
    pub line: u32,
    pub column: u32,
    pub ordinal: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableRow {
    pub id: i64,
    /// Hierarchical net name (`top.sum__0`) or a decimal constant for
    /// unrolled loop variables.
    pub rtl_name: String,
    pub source_name: String,
    pub is_instance_var: bool,
    pub instance_id: i64,
}

impl VariableRow {
    /// Constant value when the variable is a literal rather than a net.
    pub fn constant(&self) -> Option<u64> {
        crate::expr::parse_number(&self.rtl_name)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScopeVariableRow {
    pub breakpoint_id: i64,
    pub variable_id: i64,
    /// Name of the variable at this breakpoint.
    pub source_name: String,
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolTable {
    pub instances: Vec<InstanceRow>,
    pub breakpoints: Vec<BreakpointRow>,
    pub variables: Vec<VariableRow>,
    pub scope_variables: Vec<ScopeVariableRow>,
}

#[derive(Debug, Error)]
pub enum SymtabError {
    #[error("malformed symbol table: {0}")]
    Malformed(String),
    #[error("symbol table schema version {found}, expected {expected}")]
    SchemaVersion { found: i64, expected: i64 },
    #[error("unknown breakpoint id {0}")]
    UnknownBreakpoint(i64),
    #[error("unknown instance `{0}`")]
    UnknownInstance(String),
    #[error("unknown name `{0}` in scope")]
    UnknownName(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("database error: {0}")]
    Sql(#[from] rusqlite::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

impl SymbolTable {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("rows serialize")
    }

    pub fn from_json(text: &str) -> Result<Self, SymtabError> {
        let t: SymbolTable = serde_json::from_str(text)?;
        t.check_integrity()?;
        Ok(t)
    }

    pub fn instance(&self, id: i64) -> Option<&InstanceRow> {
        self.instances.iter().find(|i| i.id == id)
    }

    pub fn instance_by_name(&self, name: &str) -> Option<&InstanceRow> {
        self.instances.iter().find(|i| i.name == name)
    }

    pub fn breakpoint(&self, id: i64) -> Option<&BreakpointRow> {
        self.breakpoints.iter().find(|b| b.id == id)
    }

    pub fn variable(&self, id: i64) -> Option<&VariableRow> {
        self.variables.iter().find(|v| v.id == id)
    }

    /// Source files that have at least one breakpoint.
    pub fn files(&self) -> Vec<String> {
        let mut f: Vec<String> = self.breakpoints.iter().map(|b| b.file.clone()).collect();
        f.sort();
        f.dedup();
        f
    }

    /// Keys and referential integrity, plus dense per-file order indices.
    pub fn check_integrity(&self) -> Result<(), SymtabError> {
        use std::collections::{BTreeMap, HashSet};
        let bad = |m: String| Err(SymtabError::Malformed(m));
        let mut ids = HashSet::new();
        let mut paths = HashSet::new();
        for i in &self.instances {
            if !ids.insert(i.id) || !paths.insert(i.name.as_str()) {
                return bad(format!("duplicate instance {} `{}`", i.id, i.name));
            }
        }
        for i in &self.instances {
            if let Some((parent, _)) = i.name.rsplit_once('.') {
                if !paths.contains(parent) {
                    return bad(format!("instance `{}` has no parent", i.name));
                }
            }
        }
        let mut bp_ids = HashSet::new();
        let mut keys = HashSet::new();
        let mut per_file: BTreeMap<&str, Vec<u32>> = BTreeMap::new();
        for b in &self.breakpoints {
            if !ids.contains(&b.instance_id) {
                return bad(format!("breakpoint {} references instance {}", b.id, b.instance_id));
            }
            if !bp_ids.insert(b.id) {
                return bad(format!("duplicate breakpoint id {}", b.id));
            }
            if !keys.insert((b.instance_id, &b.file, b.line, b.column, b.ordinal)) {
                return bad(format!("duplicate breakpoint location {}:{}", b.file, b.line));
            }
            if b.line == 0 || b.column == 0 {
                return bad(format!("breakpoint {} has a zero line or column", b.id));
            }
            if crate::expr::parse_expr(&b.enable).is_err() {
                return bad(format!("breakpoint {} has an unparsable enable condition", b.id));
            }
            per_file.entry(&b.file).or_default().push(b.order_index);
        }
        for (file, mut idx) in per_file {
            idx.sort_unstable();
            if idx.iter().enumerate().any(|(i, v)| i as u32 != *v) {
                return bad(format!("order_index of `{file}` is not dense"));
            }
        }
        // Order must agree with (line, column, ordinal) inside a file.
        let mut sorted: Vec<&BreakpointRow> = self.breakpoints.iter().collect();
        sorted.sort_by(|a, b| (&a.file, a.order_index).cmp(&(&b.file, b.order_index)));
        for w in sorted.windows(2) {
            let (a, b) = (w[0], w[1]);
            if a.file == b.file && (a.line, a.column, a.ordinal) > (b.line, b.column, b.ordinal) {
                return bad(format!("breakpoints {} and {} are out of order", a.id, b.id));
            }
        }
        let mut var_ids = HashSet::new();
        for v in &self.variables {
            if !var_ids.insert(v.id) || !ids.contains(&v.instance_id) {
                return bad(format!("bad variable row {}", v.id));
            }
        }
        let mut scope_names = HashSet::new();
        for s in &self.scope_variables {
            if !bp_ids.contains(&s.breakpoint_id) || !var_ids.contains(&s.variable_id) {
                return bad(format!("scope row references {} / {}", s.breakpoint_id, s.variable_id));
            }
            if !scope_names.insert((s.breakpoint_id, s.source_name.as_str())) {
                return bad(format!("duplicate scope name `{}` at breakpoint {}", s.source_name, s.breakpoint_id));
            }
        }
        Ok(())
    }
}
