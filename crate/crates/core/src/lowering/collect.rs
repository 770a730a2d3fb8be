// SPDX-License-Identifier: Apache-2.0

use std::collections::HashMap;

use super::*;
use crate::symtab::{BreakpointRow, InstanceRow, ScopeVariableRow, SymbolTable, VariableRow};

#[derive(Clone, Debug, Default, PartialEq, Eq, serde::Serialize)]
pub struct CollectReport {
    /// Annotations whose statement no longer exists in the netlist.
    pub dropped: usize,
}

/// Build the symbol table from a netlist and the annotations recorded while
/// lowering it (possibly before optimization).
pub fn collect_symbols(netlist: &Netlist, annotations: &[Annotation]) -> (SymbolTable, CollectReport) {
    let mut table = SymbolTable::default();
    let mut inst_ids: HashMap<&str, i64> = HashMap::new();
    for (i, inst) in netlist.instances.iter().enumerate() {
        let id = i as i64 + 1;
        inst_ids.insert(&inst.path, id);
        table.instances.push(InstanceRow {
            id,
            name: inst.path.clone(),
            module_name: inst.module.clone(),
        });
    }
    let mut report = CollectReport::default();
    let mut alive: Vec<&Annotation> = Vec::new();
    for a in annotations {
        let present = netlist.net_id(&a.target).is_some()
            && a.enable.identifiers().iter().all(|n| netlist.net_id(n).is_some())
            && inst_ids.contains_key(a.instance.as_str());
        if present {
            alive.push(a);
        } else {
            report.dropped += 1;
        }
    }
    alive.sort_by(|a, b| {
        (&a.loc.file, a.loc.line, a.loc.column, a.ordinal, &a.instance).cmp(&(
            &b.loc.file,
            b.loc.line,
            b.loc.column,
            b.ordinal,
            &b.instance,
        ))
    });

    let mut var_ids: HashMap<(i64, String, String, bool), i64> = HashMap::new();
    let mut variables = Vec::new();
    let mut intern = |instance_id: i64, rtl: String, source: &str, is_instance_var: bool| -> i64 {
        let key = (instance_id, rtl.clone(), source.to_string(), is_instance_var);
        if let Some(id) = var_ids.get(&key) {
            return *id;
        }
        let id = variables.len() as i64 + 1;
        variables.push(VariableRow {
            id,
            rtl_name: rtl,
            source_name: source.to_string(),
            is_instance_var,
            instance_id,
        });
        var_ids.insert(key, id);
        id
    };
    for inst in &netlist.instances {
        let iid = inst_ids[inst.path.as_str()];
        for v in &inst.vars {
            intern(iid, v.net.clone(), &v.source, true);
        }
    }

    let mut next_order: HashMap<&str, u32> = HashMap::new();
    for (k, a) in alive.iter().enumerate() {
        let id = k as i64 + 1;
        let iid = inst_ids[a.instance.as_str()];
        let order = next_order.entry(&a.loc.file).or_insert(0);
        table.breakpoints.push(BreakpointRow {
            id,
            instance_id: iid,
            file: a.loc.file.clone(),
            line: a.loc.line,
            column: a.loc.column,
            ordinal: a.ordinal,
            enable: a.enable.to_string(),
            order_index: *order,
        });
        *order += 1;
        for (source, r) in &a.var_map {
            let rtl = match r {
                VarRef::Net(n) if netlist.net_id(n).is_some() => n.clone(),
                VarRef::Net(_) => continue,
                VarRef::Const(v) => v.to_string(),
            };
            let variable_id = intern(iid, rtl, source, false);
            table.scope_variables.push(ScopeVariableRow {
                breakpoint_id: id,
                variable_id,
                source_name: source.clone(),
            });
        }
    }
    table.variables = variables;
    (table, report)
}
