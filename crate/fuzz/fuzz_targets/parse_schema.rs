// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::format::{parse_schema, schema_to_toml};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(s) = parse_schema(src) {
        let again = parse_schema(&schema_to_toml(&s)).expect("printed schema parses");
        assert_eq!(*s, *again);
    }
});
