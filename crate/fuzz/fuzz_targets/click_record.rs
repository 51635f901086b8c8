#![no_main]

use libfuzzer_sys::fuzz_target;
use pnrhd::formats;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok((record, prov)) = formats::parse_click_record(text) {
            // Anything accepted must survive a write/parse round trip.
            let again =
                formats::write_click_record(&record, &prov).expect("accepted record writes");
            let (back, _) = formats::parse_click_record(&again).expect("written record parses");
            assert_eq!(back, record);
        }
    }
});
