// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::format::{morphism_to_toml, parse_morphism};
use rewire::is_natural;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(f) = parse_morphism(src) {
        assert_eq!(is_natural(&f), Ok(true));
        let again = parse_morphism(&morphism_to_toml(&f)).expect("printed morphism parses");
        assert_eq!(f.components(), again.components());
    }
});
