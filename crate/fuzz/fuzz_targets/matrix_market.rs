#![no_main]

use libfuzzer_sys::fuzz_target;
use wrask::io::{parse_matrix_market_with_limit, write_matrix_market};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    // keep allocations small; the size check runs before any dense storage
    let Ok(a) = parse_matrix_market_with_limit(text, 1 << 16) else { return };
    let mut out = Vec::new();
    write_matrix_market(&a, &mut out).unwrap();
    let back = parse_matrix_market_with_limit(std::str::from_utf8(&out).unwrap(), 1 << 16).unwrap();
    assert_eq!(back, a);
});
