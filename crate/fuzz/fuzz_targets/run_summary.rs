#![no_main]

use libfuzzer_sys::fuzz_target;
use pnrhd::formats::RunSummary;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = RunSummary::from_json(text);
    }
});
