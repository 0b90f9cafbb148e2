// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::report::parse_report;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(r) = parse_report(src) {
        let again = parse_report(&r.to_toml()).expect("printed report parses");
        assert_eq!(r, again);
    }
});
