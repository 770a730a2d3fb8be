// SPDX-License-Identifier: Apache-2.0

use std::fmt::Write;

use super::*;

/// Render a program back to mini-HDL source. The output reparses to the
/// same IR apart from source locations.
pub fn pretty_print(p: &SourceProgram) -> String {
    let mut out = String::new();
    for (i, m) in p.modules.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        module(&mut out, m);
    }
    out
}

fn shape(width: u32, len: Option<u32>) -> String {
    match len {
        Some(n) => format!("{width}[{n}]"),
        None => width.to_string(),
    }
}

fn module(out: &mut String, m: &ModuleDef) {
    let _ = writeln!(out, "module {} {{", m.name);
    for p in &m.ports {
        let dir = if p.dir == Direction::In { "input" } else { "output" };
        let _ = writeln!(out, "  {dir} {}: {};", p.name, shape(p.width, p.len));
    }
    for r in &m.registers {
        let _ = write!(out, "  reg {}: {} @{}", r.name, shape(r.width, r.len), r.clock);
        if let Some(v) = r.reset {
            let _ = write!(out, " = {v}");
        }
        out.push_str(";\n");
    }
    for w in &m.wires {
        let _ = writeln!(out, "  wire {}: {};", w.name, shape(w.width, w.len));
    }
    for inst in &m.instances {
        let binds: Vec<String> = inst
            .bindings
            .iter()
            .map(|b| match b.index {
                Some(i) => format!("{}[{}] = {}", b.port, i, expr(&b.value)),
                None => format!("{} = {}", b.port, expr(&b.value)),
            })
            .collect();
        let _ = writeln!(out, "  inst {}: {}({});", inst.name, inst.module, binds.join(", "));
    }
    for b in &m.comb_blocks {
        out.push_str("  comb {\n");
        stmts(out, &b.body, 2);
        out.push_str("  }\n");
    }
    for b in &m.seq_blocks {
        let _ = writeln!(out, "  seq {} {{", b.clock.as_deref().unwrap_or(""));
        stmts(out, &b.body, 2);
        out.push_str("  }\n");
    }
    out.push_str("}\n");
}

fn stmts(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        stmt(out, s, depth);
    }
}

fn stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    match &s.kind {
        StmtKind::Assign { target, value } => {
            let _ = write!(out, "{pad}{}", target.name);
            if let Some(i) = &target.index {
                let _ = write!(out, "[{}]", expr(i));
            }
            let _ = writeln!(out, " = {};", expr(value));
        }
        StmtKind::If { .. } => {
            out.push_str(&pad);
            if_chain(out, s, depth);
            out.push('\n');
        }
        StmtKind::For {
            var,
            start,
            end,
            body,
        } => {
            let _ = writeln!(out, "{pad}for {var} in {}..{} {{", expr(start), expr(end));
            stmts(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
        StmtKind::Block(body) => {
            let _ = writeln!(out, "{pad}{{");
            stmts(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

fn if_chain(out: &mut String, s: &Stmt, depth: usize) {
    let pad = "  ".repeat(depth);
    let StmtKind::If {
        cond,
        then_body,
        else_body,
    } = &s.kind
    else {
        unreachable!()
    };
    let _ = writeln!(out, "if {} {{", expr(cond));
    stmts(out, then_body, depth + 1);
    let _ = write!(out, "{pad}}}");
    match else_body.as_slice() {
        [] => {}
        [only] if matches!(only.kind, StmtKind::If { .. }) => {
            out.push_str(" else ");
            if_chain(out, only, depth);
        }
        _ => {
            out.push_str(" else {\n");
            stmts(out, else_body, depth + 1);
            let _ = write!(out, "{pad}}}");
        }
    }
}

/// Fully parenthesized expression text.
pub(crate) fn expr(e: &Expr) -> String {
    match e {
        Expr::Lit(v) => v.to_string(),
        Expr::Var { name, index: None } => name.clone(),
        Expr::Var {
            name,
            index: Some(i),
        } => format!("{name}[{}]", expr(i)),
        Expr::Unary(op, a) => match **a {
            Expr::Unary(..) => format!("{}({})", op.symbol(), expr(a)),
            _ => format!("{}{}", op.symbol(), expr(a)),
        },
        Expr::Binary(op, a, b) => format!("({} {} {})", expr(a), op.symbol(), expr(b)),
        Expr::Ternary(c, a, b) => format!("({} ? {} : {})", expr(c), expr(a), expr(b)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nested_else_if_round_trips() {
        let src = "module m { input a: 2; output y: 2; comb { y = 0; if a == 1 { y = 1; } else if a == 2 { y = -~a; } else { { y = (a > 1 ? 3 : 0); } } } }";
        let p = parse(src, "m.mh").unwrap();
        let text = pretty_print(&p);
        let q = parse(&text, "m.mh").unwrap();
        assert_eq!(pretty_print(&q), text);
        assert!(text.contains("} else if (a == 2) {"), "{text}");
    }
}
