#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(records) = qkr::preprocess::read_records(data) {
        for r in &records {
            let _ = qkr::preprocess::encode_record(r);
        }
    }
});
