#![no_main]

use libfuzzer_sys::fuzz_target;
use pnrhd::formats::PovmSetFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = PovmSetFile::from_json(text) {
            let _ = file.to_povm_set();
        }
    }
});
