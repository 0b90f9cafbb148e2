// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::format::{instance_to_toml, parse_instance};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(x) = parse_instance(src) {
        x.validate().expect("parsed instances are valid");
        let again = parse_instance(&instance_to_toml(&x)).expect("printed instance parses");
        assert_eq!(*x, *again);
    }
});
