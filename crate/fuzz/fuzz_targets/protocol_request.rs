// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;

use hgdbg_core::conformance::replay;
use hgdbg_core::lowering::OptLevel;
use hgdbg_core::pipeline::compile;
use hgdbg_core::runtime::Debugger;
use hgdbg_core::stimulus::parse_stimulus;
use hgdbg_server::session::{Action, Session};
use hgdbg_server::Envelope;

const SOURCE: &str = include_str!("../../fixtures/sum.mh");
const STIMULUS: &str = include_str!("../../fixtures/sum.stim");

// One request per line, applied in order to a fresh session over a replay
// of the accumulator fixture.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let c = compile(SOURCE, "sum.mh", OptLevel::Debug).unwrap();
    let stim = parse_stimulus(STIMULUS).unwrap().expand(&[], 4);
    let dbg = Debugger::attach(Box::new(replay(&c, &stim).unwrap()), c.table.clone(), None).unwrap();
    let mut session = Session::new(dbg, "vcd-replay", None);
    for line in text.lines() {
        let Ok(req) = serde_json::from_str::<Envelope>(line) else {
            continue;
        };
        match session.handle(&req) {
            Action::Reply(r) => {
                let _ = r.to_text();
            }
            Action::Run { command, .. } => {
                let _ = session.run(command).to_text();
            }
        }
    }
});
