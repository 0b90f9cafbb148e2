// SPDX-License-Identifier: Apache-2.0
#![no_main]

use libfuzzer_sys::fuzz_target;
use rewire::expr::parse_attr_expr;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else {
        return;
    };
    if src.len() > 4096 {
        return;
    }
    if let Ok(e) = parse_attr_expr(src) {
        let printed = e.to_string();
        assert_eq!(parse_attr_expr(&printed).as_ref(), Ok(&e), "{printed}");
    }
});
