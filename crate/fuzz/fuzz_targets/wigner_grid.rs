#![no_main]

use libfuzzer_sys::fuzz_target;
use pnrhd::formats;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((map, prov)) = formats::parse_wigner(text) {
            let again = formats::write_wigner(&map, &prov);
            let (back, _) = formats::parse_wigner(&again).expect("written grid parses");
            assert_eq!(back.values, map.values);
        }
    }
});
