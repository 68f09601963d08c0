#![no_main]

use globinj::scan::RadialScan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = RadialScan::from_json(text) {
        RadialScan::from_json(&s.to_json()).expect("written scan reads back");
    }
});
