#![no_main]

use libfuzzer_sys::fuzz_target;

use gcsl_nf::harness::{parse_heatmap, write_heatmap};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(grid) = parse_heatmap(text) else { return };
    let printed = write_heatmap(&grid);
    let again = parse_heatmap(&printed).expect("written heatmap parses");
    assert_eq!(printed, write_heatmap(&again));
});
