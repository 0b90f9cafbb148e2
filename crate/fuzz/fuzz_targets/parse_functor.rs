// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::format::{functor_to_toml, parse_functor};

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(f) = parse_functor(src) {
        parse_functor(&functor_to_toml(&f)).expect("printed functor parses");
    }
});
