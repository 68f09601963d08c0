#![no_main]

use globinj::expr::parse_map;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(src) = std::str::from_utf8(data) else { return };
    let Ok(map) = parse_map(src) else { return };
    // whatever parses must print back into something that parses again
    let printed = map.to_string();
    let back = globinj::expr::parse_map_in(&printed, map.n_in()).expect("printed map parses");
    assert_eq!(back.n_out(), map.n_out());
});
