// SPDX-License-Identifier: Apache-2.0

use super::*;

/// Query primitives over a symbol table.
pub trait SymbolSource {
    /// Breakpoints at `file:line` (and `column` when given) across all
    /// instances, sorted by evaluation order. `file` matches exactly or as
    /// a path suffix in either direction.
    fn breakpoints_at(&self, file: &str, line: u32, column: Option<u32>) -> Result<Vec<BreakpointRow>, SymtabError>;

    /// Frame-local variables of a breakpoint, in stored order.
    fn scope_of(&self, breakpoint_id: i64) -> Result<Vec<(String, VariableRow)>, SymtabError>;

    /// Variables of an instance (ports, registers, wires), in stored order.
    fn instance_variables(&self, instance_id: i64) -> Result<Vec<VariableRow>, SymtabError>;

    fn instance_rows(&self) -> Result<Vec<InstanceRow>, SymtabError>;

    fn breakpoint_row(&self, id: i64) -> Result<BreakpointRow, SymtabError>;

    fn resolve_scoped(&self, breakpoint_id: i64, source_name: &str) -> Result<String, SymtabError> {
        self.scope_of(breakpoint_id)?
            .into_iter()
            .find(|(n, _)| n == source_name)
            .map(|(_, v)| v.rtl_name)
            .ok_or_else(|| SymtabError::UnknownName(source_name.to_string()))
    }

    fn resolve_instance(&self, instance: &str, source_name: &str) -> Result<String, SymtabError> {
        let inst = self
            .instance_rows()?
            .into_iter()
            .find(|i| i.name == instance)
            .ok_or_else(|| SymtabError::UnknownInstance(instance.to_string()))?;
        self.instance_variables(inst.id)?
            .into_iter()
            .find(|v| v.source_name == source_name)
            .map(|v| v.rtl_name)
            .ok_or_else(|| SymtabError::UnknownName(source_name.to_string()))
    }
}

pub(crate) fn file_matches(stored: &str, requested: &str) -> bool {
    let requested = requested.replace('\\', "/");
    stored == requested
        || stored.ends_with(&format!("/{requested}"))
        || requested.ends_with(&format!("/{stored}"))
}

impl SymbolSource for SymbolTable {
    fn breakpoints_at(&self, file: &str, line: u32, column: Option<u32>) -> Result<Vec<BreakpointRow>, SymtabError> {
        let mut out: Vec<BreakpointRow> = self
            .breakpoints
            .iter()
            .filter(|b| b.line == line && column.is_none_or(|c| b.column == c) && file_matches(&b.file, file))
            .cloned()
            .collect();
        out.sort_by(|a, b| (&a.file, a.order_index).cmp(&(&b.file, b.order_index)));
        Ok(out)
    }

    fn scope_of(&self, breakpoint_id: i64) -> Result<Vec<(String, VariableRow)>, SymtabError> {
        if self.breakpoint(breakpoint_id).is_none() {
            return Err(SymtabError::UnknownBreakpoint(breakpoint_id));
        }
        self.scope_variables
            .iter()
            .filter(|s| s.breakpoint_id == breakpoint_id)
            .map(|s| {
                let v = self
                    .variable(s.variable_id)
                    .ok_or_else(|| SymtabError::Malformed(format!("dangling variable {}", s.variable_id)))?;
                Ok((s.source_name.clone(), v.clone()))
            })
            .collect()
    }

    fn instance_variables(&self, instance_id: i64) -> Result<Vec<VariableRow>, SymtabError> {
        Ok(self
            .variables
            .iter()
            .filter(|v| v.is_instance_var && v.instance_id == instance_id)
            .cloned()
            .collect())
    }

    fn instance_rows(&self) -> Result<Vec<InstanceRow>, SymtabError> {
        Ok(self.instances.clone())
    }

    fn breakpoint_row(&self, id: i64) -> Result<BreakpointRow, SymtabError> {
        self.breakpoint(id).cloned().ok_or(SymtabError::UnknownBreakpoint(id))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffix_file_match() {
        assert!(file_matches("examples/sum.mh", "sum.mh"));
        assert!(file_matches("sum.mh", "/home/u/sum.mh"));
        assert!(file_matches("sum.mh", "sum.mh"));
        assert!(!file_matches("examples/xsum.mh", "sum.mh"));
        assert!(file_matches("a/b.mh", "a\\b.mh"));
    }
}
