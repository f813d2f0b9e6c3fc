#![no_main]

use libfuzzer_sys::fuzz_target;

use gcsl_nf::env::dump::{parse_dump, write_dump};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((spec, episodes)) = parse_dump(text) else { return };
    let printed = write_dump(&spec, &episodes);
    let (spec2, episodes2) = parse_dump(&printed).expect("written dump parses");
    assert_eq!(printed, write_dump(&spec2, &episodes2));
});
