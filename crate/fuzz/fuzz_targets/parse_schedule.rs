// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::format::{parse_schedule, schedule_to_toml};
use rewire::typecheck;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = parse_schedule(src) {
        let _ = typecheck(&s);
        if let Ok(out) = schedule_to_toml(&s) {
            parse_schedule(&out).expect("printed schedule parses");
        }
    }
});
