// SPDX-License-Identifier: Apache-2.0

use std::path::PathBuf;

use hgdbg_server::Envelope;

#[test]
fn protocol_seeds_are_requests() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus/protocol_request");
    let mut lines = 0;
    for entry in std::fs::read_dir(&dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        for line in text.lines() {
            let e: Envelope = serde_json::from_str(line).unwrap_or_else(|err| panic!("{line}: {err}"));
            assert!(!e.command.is_empty());
            lines += 1;
        }
    }
    assert!(lines > 0);
}
