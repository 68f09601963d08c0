#![no_main]

use globinj_cli::AnalysisConfig;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = AnalysisConfig::from_toml(text) {
        let _ = cfg.validate();
    }
});
