#![no_main]

use libfuzzer_sys::fuzz_target;

use gcsl_nf::harness::{parse_metrics, write_metrics};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok((names, rows)) = parse_metrics(text) else { return };
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let printed = write_metrics(&names, &rows);
    let (names2, rows2) = parse_metrics(&printed).expect("written metrics parse");
    let names2: Vec<&str> = names2.iter().map(String::as_str).collect();
    assert_eq!(printed, write_metrics(&names2, &rows2));
});
