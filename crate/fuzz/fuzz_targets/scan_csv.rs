#![no_main]

use globinj::scan::RadialScan;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(s) = RadialScan::from_csv(text) {
        RadialScan::from_csv(&s.to_csv()).expect("written scan reads back");
    }
});
