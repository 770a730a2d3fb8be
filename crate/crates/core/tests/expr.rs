// SPDX-License-Identifier: Apache-2.0

//! The condition evaluator against the interpreter's expression semantics.

use std::collections::BTreeMap;

use hgdbg_core::expr::{eval, mask, parse_expr, Value};
use hgdbg_core::frontend::{interpret, parse};
use proptest::prelude::*;

const OPS: [&str; 18] = [
    "+", "-", "*", "/", "%", "&", "|", "^", "<<", ">>", "==", "!=", "<", "<=", ">", ">=", "&&", "||",
];

fn expr_text() -> impl Strategy<Value = String> {
    let leaf = prop_oneof![
        Just("a".to_string()),
        Just("b".to_string()),
        Just("c".to_string()),
        (0u64..300).prop_map(|v| v.to_string()),
        (0u64..0xffff).prop_map(|v| format!("0x{v:x}")),
    ];
    leaf.prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (prop::sample::select(vec!["~", "!", "-"]), inner.clone()).prop_map(|(op, e)| format!("{op}({e})")),
            (inner.clone(), prop::sample::select(OPS.to_vec()), inner.clone())
                .prop_map(|(l, op, r)| format!("({l} {op} {r})")),
            (inner.clone(), inner.clone(), inner).prop_map(|(c, t, e)| format!("({c} ? {t} : {e})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(400))]

    #[test]
    fn evaluator_matches_interpreter(
        text in expr_text(),
        widths in (1u32..=16, 1u32..=16, 1u32..=16),
        seed in any::<(u64, u64, u64)>(),
    ) {
        let (wa, wb, wc) = widths;
        let (va, vb, vc) = (seed.0 & mask(wa), seed.1 & mask(wb), seed.2 & mask(wc));
        let src = format!(
            "module top {{\n  input clk: 1;\n  input a: {wa};\n  input b: {wb};\n  input c: {wc};\n  output y: 64;\n  comb {{\n    y = {text};\n  }}\n}}\n"
        );
        let p = parse(&src, "e.mh").unwrap();
        let stim = vec![BTreeMap::from([("a".to_string(), va), ("b".to_string(), vb), ("c".to_string(), vc)])];
        let want = interpret(&p, &stim).unwrap().cycles[0].values["top.y"];
        let env = BTreeMap::from([("a", Value::new(wa, va)), ("b", Value::new(wb, vb)), ("c", Value::new(wc, vc))]);
        let got = eval(&parse_expr(&text).unwrap(), &mut |n: &str| env.get(n).copied()).unwrap();
        // Division by zero is unknown to the evaluator and 0 in two-state hardware.
        if let Some(bits) = got.bits() {
            prop_assert_eq!(bits, want, "{}", text);
        }
    }
}
