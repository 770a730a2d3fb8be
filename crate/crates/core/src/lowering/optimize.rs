// SPDX-License-Identifier: Apache-2.0

use std::collections::HashSet;

use super::*;
use crate::expr::{apply_binary, apply_unary, mask};

#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub enum OptLevel {
    /// Keep every net.
    Debug,
    /// Constant folding and propagation, then dead-net elimination.
    Optimized,
}

/// Optimize a netlist. Annotation variable mappings that point at removed
/// nets are dropped; annotations whose own net is removed are left for
/// [`collect_symbols`](super::collect_symbols) to discard and count.
pub fn optimize(mut netlist: Netlist, mut annotations: Vec<Annotation>, level: OptLevel) -> (Netlist, Vec<Annotation>) {
    if level == OptLevel::Debug {
        return (netlist, annotations);
    }
    let order = netlist.topo_order().expect("lowered netlists are acyclic");
    for n in order {
        let Driver::Expr(e) = &netlist.nets[n].driver else {
            continue;
        };
        let mut e = fold(e, &netlist.nets);
        if let NExpr::Const { value, .. } = e {
            let w = netlist.nets[n].width;
            e = NExpr::Const {
                value: value & mask(w),
                width: w,
            };
        }
        netlist.nets[n].driver = Driver::Expr(e);
    }
    let live = live_nets(&netlist, &annotations);
    let mut remap = vec![usize::MAX; netlist.nets.len()];
    let mut nets = Vec::new();
    for (i, net) in netlist.nets.iter().enumerate() {
        if live.contains(&i) {
            remap[i] = nets.len();
            nets.push(net.clone());
        }
    }
    let f = |i: NetId| remap[i];
    for net in &mut nets {
        if let Driver::Expr(e) = &mut net.driver {
            e.map_nets(&f);
        }
    }
    netlist.nets = nets;
    for ids in [&mut netlist.inputs, &mut netlist.outputs, &mut netlist.clocks] {
        for id in ids.iter_mut() {
            *id = remap[*id];
        }
    }
    for r in &mut netlist.registers {
        r.state = remap[r.state];
        r.next = remap[r.next];
        r.clock = remap[r.clock];
    }
    netlist.reindex();
    for inst in &mut netlist.instances {
        inst.vars.retain(|v| netlist.index.contains_key(&v.net));
    }
    for a in &mut annotations {
        a.var_map.retain(|(_, r)| match r {
            VarRef::Net(n) => netlist.index.contains_key(n),
            VarRef::Const(_) => true,
        });
    }
    (netlist, annotations)
}

fn live_nets(netlist: &Netlist, annotations: &[Annotation]) -> HashSet<NetId> {
    let mut live = HashSet::new();
    let mut work: Vec<NetId> = Vec::new();
    work.extend(netlist.inputs.iter().chain(&netlist.outputs).chain(&netlist.clocks));
    for r in &netlist.registers {
        work.extend([r.state, r.next, r.clock]);
    }
    loop {
        while let Some(n) = work.pop() {
            if live.insert(n) {
                if let Driver::Expr(e) = &netlist.nets[n].driver {
                    e.for_each_net(&mut |d| work.push(d));
                }
            }
        }
        // A surviving breakpoint keeps the nets its enable condition reads.
        for a in annotations {
            if netlist.net_id(&a.target).is_some_and(|t| live.contains(&t)) {
                for name in a.enable.identifiers() {
                    if let Some(id) = netlist.net_id(&name) {
                        if !live.contains(&id) {
                            work.push(id);
                        }
                    }
                }
            }
        }
        if work.is_empty() {
            return live;
        }
    }
}

fn konst(e: &NExpr) -> Option<(u64, u32)> {
    match e {
        NExpr::Const { value, width } => Some((*value, *width)),
        _ => None,
    }
}

/// Width-preserving constant folding with constant nets substituted.
fn fold(e: &NExpr, nets: &[Net]) -> NExpr {
    match e {
        NExpr::Const { .. } => e.clone(),
        NExpr::Net(n) => match &nets[*n].driver {
            Driver::Expr(NExpr::Const { value, .. }) => NExpr::Const {
                value: value & mask(nets[*n].width),
                width: nets[*n].width,
            },
            _ => e.clone(),
        },
        NExpr::Unary(op, a) => {
            let a = fold(a, nets);
            match konst(&a) {
                Some((v, w)) => {
                    let (value, width) = apply_unary(*op, v, w);
                    NExpr::Const { value, width }
                }
                None => NExpr::Unary(*op, Box::new(a)),
            }
        }
        NExpr::Binary(op, a, b) => {
            use BinaryOp::*;
            let a = fold(a, nets);
            let b = fold(b, nets);
            let (wa, wb) = (a.width(nets), b.width(nets));
            let w = op.result_width(wa, wb);
            match (konst(&a), konst(&b)) {
                (Some((x, _)), Some((y, _))) => {
                    return NExpr::Const {
                        value: apply_binary(*op, x, wa, y, wb).unwrap_or(0),
                        width: w,
                    }
                }
                (_, Some((0, _))) if matches!(op, Add | Sub | Or | Xor | Shl | Shr) && w == wa => return a,
                (Some((0, _)), _) if matches!(op, Add | Or | Xor) && w == wb => return b,
                (_, Some((1, _))) if matches!(op, Mul | Div) && w == wa => return a,
                (Some((1, _)), _) if *op == Mul && w == wb => return b,
                (Some((0, _)), _) | (_, Some((0, _))) if matches!(op, And | Mul | LogicalAnd) => {
                    return NExpr::Const { value: 0, width: w }
                }
                _ => {}
            }
            NExpr::Binary(*op, Box::new(a), Box::new(b))
        }
        NExpr::Select(c, a, b) => {
            let c = fold(c, nets);
            let a = fold(a, nets);
            let b = fold(b, nets);
            let w = a.width(nets).max(b.width(nets));
            if let Some((cv, _)) = konst(&c) {
                let chosen = if cv != 0 { a.clone() } else { b.clone() };
                if chosen.width(nets) == w {
                    return chosen;
                }
            }
            if a == b {
                return a;
            }
            NExpr::Select(Box::new(c), Box::new(a), Box::new(b))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frontend::parse;

    fn lower(src: &str) -> (Netlist, Vec<Annotation>) {
        unroll_and_ssa(&parse(src, "t.mh").unwrap()).unwrap()
    }

    #[test]
    fn identity_add_folds_to_operand() {
        let (n, a) = lower("module m { input x: 4; output t: 4; comb { t = 0 + x; } }");
        let (n, _) = optimize(n, a, OptLevel::Optimized);
        let x = n.net_id("m.x").unwrap();
        assert_eq!(n.net("m.t__0").unwrap().driver, Driver::Expr(NExpr::Net(x)));
    }

    #[test]
    fn dead_wire_removed_only_when_optimizing() {
        let src = "module m { input x: 4; output y: 4; wire t: 4; comb { t = x + 1; y = x; } }";
        let (n, a) = lower(src);
        assert!(n.net("m.t").is_some());
        let (d, _) = optimize(n.clone(), a.clone(), OptLevel::Debug);
        assert_eq!(d, n);
        let (o, oa) = optimize(n, a, OptLevel::Optimized);
        assert!(o.net("m.t").is_none() && o.net("m.t__0").is_none());
        assert!(oa.iter().all(|a| a.var_map.iter().all(|(name, _)| name != "t")));
    }

    #[test]
    fn constants_propagate_through_selects() {
        let src = "module m { input x: 4; output y: 4; wire k: 4; comb { k = 3; y = x; if k > 2 { y = x + k; } } }";
        let (n, a) = lower(src);
        let (o, _) = optimize(n, a, OptLevel::Optimized);
        let x = o.net_id("m.x").unwrap();
        let expect = NExpr::Binary(BinaryOp::Add, Box::new(NExpr::Net(x)), Box::new(NExpr::Const { value: 3, width: 4 }));
        assert_eq!(o.net("m.y__1").unwrap().driver, Driver::Expr(expect));
    }
}
