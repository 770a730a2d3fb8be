// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::*;

fn range(width: u32) -> String {
    if width == 1 {
        String::new()
    } else {
        format!("[{}:0] ", width - 1)
    }
}

fn expr(e: &NExpr, nets: &[Net]) -> String {
    match e {
        NExpr::Const { value, width } => format!("{width}'d{value}"),
        NExpr::Net(n) => nets[*n].name.clone(),
        NExpr::Unary(op, a) => format!("{}{}", op.symbol(), paren(a, nets)),
        NExpr::Binary(op, a, b) => format!("{} {} {}", paren(a, nets), op.symbol(), paren(b, nets)),
        NExpr::Select(c, a, b) => format!("{} ? {} : {}", paren(c, nets), paren(a, nets), paren(b, nets)),
    }
}

fn paren(e: &NExpr, nets: &[Net]) -> String {
    match e {
        NExpr::Const { .. } | NExpr::Net(_) => expr(e, nets),
        _ => format!("({})", expr(e, nets)),
    }
}

/// Flat Verilog-flavoured text of a netlist. Hierarchical names are kept
/// verbatim; the output is for reading, not for other tools.
pub fn emit_verilog_like(netlist: &Netlist) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "module {};", netlist.top);
    for &i in &netlist.inputs {
        let n = &netlist.nets[i];
        let _ = writeln!(out, "  input {}{};", range(n.width), n.name);
    }
    for &o in &netlist.outputs {
        let n = &netlist.nets[o];
        let _ = writeln!(out, "  output {}{};", range(n.width), n.name);
    }
    for r in &netlist.registers {
        let n = &netlist.nets[r.state];
        let _ = write!(out, "  reg {}{}", range(n.width), n.name);
        if let Some(v) = r.reset {
            let _ = write!(out, " = {}'d{}", n.width, v);
        }
        out.push_str(";\n");
    }
    for n in &netlist.nets {
        if let Driver::Expr(e) = &n.driver {
            let _ = writeln!(out, "  wire {}{} = {};", range(n.width), n.name, expr(e, &netlist.nets));
        }
    }
    for r in &netlist.registers {
        let _ = writeln!(
            out,
            "  always @(posedge {}) {} <= {};",
            netlist.nets[r.clock].name, netlist.nets[r.state].name, netlist.nets[r.next].name
        );
    }
    out.push_str("endmodule\n");
    out
}
