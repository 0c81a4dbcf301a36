#![no_main]

use libfuzzer_sys::fuzz_target;
use wrask::io::{parse_vector, write_vector};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(v) = parse_vector(text) else { return };
    let mut out = Vec::new();
    write_vector(v.as_slice(), &mut out).unwrap();
    let back = parse_vector(std::str::from_utf8(&out).unwrap()).unwrap();
    assert_eq!(back, v);
});
