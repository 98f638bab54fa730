#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(config) = qkr::config::PipelineConfig::from_json_str(text) {
            let _ = config.feature_map_spec();
            let _ = config.to_json();
        }
    }
});
