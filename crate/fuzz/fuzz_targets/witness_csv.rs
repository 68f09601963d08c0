#![no_main]

use globinj::scan::Witness;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(w) = Witness::from_csv(text) {
        Witness::from_csv(&w.to_csv()).expect("written witness reads back");
    }
});
