// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;

use hgdbg_core::expr::{eval, parse_expr, Value};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(ast) = parse_expr(text) {
            // Every name resolves so evaluation reaches the operators.
            let _ = eval(&ast, &mut |name: &str| Some(Value::new(8, name.len() as u64)));
        }
    }
});
