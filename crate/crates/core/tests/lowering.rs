// SPDX-License-Identifier: Apache-2.0

mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::*;
use hgdbg_core::expr::{eval, parse_expr, truthy, ExprAst, Value};
use hgdbg_core::frontend::parse;
use hgdbg_core::lowering::{emit_verilog_like, unroll_and_ssa, OptLevel};
use hgdbg_core::pipeline::compile;
use hgdbg_core::testgen::{random_program, GenConfig};
use proptest::prelude::*;
use rand::SeedableRng;

fn holds(enable: &ExprAst, env: &BTreeMap<&str, Value>) -> bool {
    truthy(&eval(enable, &mut |n: &str| env.get(n).copied()).unwrap())
}

#[test]
fn accumulator_enables_follow_parity() {
    let p = parse(&fixture("sum.mh"), "sum.mh").unwrap();
    let (_, ann) = unroll_and_ssa(&p).unwrap();
    let acc: Vec<_> = ann.iter().filter(|a| a.loc.line == 9).collect();
    assert_eq!(acc.len(), 2);
    for (d0, d1) in [(2, 4), (3, 4), (2, 5), (3, 5)] {
        let env = BTreeMap::from([("top.data_0", Value::new(8, d0)), ("top.data_1", Value::new(8, d1))]);
        assert_eq!(holds(&acc[0].enable, &env), d0 % 2 == 1);
        assert_eq!(holds(&acc[1].enable, &env), d1 % 2 == 1);
    }
    let init = ann.iter().find(|a| a.loc.line == 6).unwrap();
    assert_eq!(init.enable, parse_expr("1").unwrap());
}

#[test]
fn nested_conditions_and_together() {
    let src = "module top {
  input clk: 1;
  input a: 1;
  input b: 1;
  output x: 2;
  comb {
    x = 0;
    if a {
      if b {
        x = 1;
      }
    }
  }
}
";
    let (_, ann) = unroll_and_ssa(&parse(src, "n.mh").unwrap()).unwrap();
    let inner = ann.iter().find(|a| a.loc.line == 10).unwrap();
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let env = BTreeMap::from([("top.a", Value::new(1, a)), ("top.b", Value::new(1, b))]);
        assert_eq!(holds(&inner.enable, &env), a == 1 && b == 1);
    }
}

#[test]
fn emitted_text() {
    let c = build("sum.mh", OptLevel::Debug);
    let text = emit_verilog_like(&c.netlist);
    assert!(text.contains(" ? "), "{text}");
    assert_eq!(text, emit_verilog_like(&build("sum.mh", OptLevel::Debug).netlist));
    let empty = compile("module top {\n}\n", "e.mh", OptLevel::Debug).unwrap();
    assert_eq!(emit_verilog_like(&empty.netlist), "module top;\nendmodule\n");
}

#[test]
fn dead_temporary_only_in_debug_tables() {
    let has = |level| {
        build("dead_temp.mh", level)
            .table
            .variables
            .iter()
            .any(|v| v.source_name == "scratch")
    };
    assert!(has(OptLevel::Debug));
    assert!(!has(OptLevel::Optimized));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn ssa_and_ordering(seed in any::<u64>()) {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        let g = random_program(&mut rng, &GenConfig::default());
        for level in [OptLevel::Debug, OptLevel::Optimized] {
            let c = compile(&g.source, "gen.mh", level).unwrap();
            let mut names = BTreeSet::new();
            for n in &c.netlist.nets {
                prop_assert!(names.insert(n.name.clone()), "{} defined twice", n.name);
            }
            prop_assert!(c.netlist.topo_order().is_ok());
            let mut keys = BTreeSet::new();
            for b in &c.table.breakpoints {
                prop_assert!(keys.insert((b.instance_id, b.line, b.column, b.ordinal)));
            }
            c.table.check_integrity().unwrap();
        }
    }
}
