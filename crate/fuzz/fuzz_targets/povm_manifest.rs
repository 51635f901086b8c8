#![no_main]

use libfuzzer_sys::fuzz_target;
use pnrhd::formats::PovmManifest;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = PovmManifest::from_json(text);
    }
});
