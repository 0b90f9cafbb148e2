// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::format::{parse_rule, rule_to_toml};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = parse_rule(src) {
        let again = parse_rule(&rule_to_toml(&r)).expect("printed rule parses");
        assert!(r.same_structure(&again));
    }
});
