#![no_main]

use libfuzzer_sys::fuzz_target;
use pnrhd::fock::HilbertDim;
use pnrhd::formats::StateSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = text.parse::<StateSpec>() {
            let _ = spec.density(HilbertDim::new(8));
        }
    }
});
