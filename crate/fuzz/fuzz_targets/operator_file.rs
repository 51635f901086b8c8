#![no_main]

use libfuzzer_sys::fuzz_target;
use pnrhd::formats::OperatorFile;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(file) = OperatorFile::from_json(text) {
            let m = file.matrix().expect("accepted file has a matrix");
            let _ = file.to_density();
            let again =
                OperatorFile::from_json(&file.to_json().expect("writes")).expect("round trip");
            assert_eq!(again.matrix().expect("matrix"), m);
        }
    }
});
