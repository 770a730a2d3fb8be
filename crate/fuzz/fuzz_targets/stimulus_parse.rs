// SPDX-License-Identifier: Apache-2.0

#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(s) = hgdbg_core::stimulus::parse_stimulus(text) {
            let _ = s.expand(&[], 8);
        }
    }
});
