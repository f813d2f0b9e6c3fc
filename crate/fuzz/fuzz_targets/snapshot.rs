#![no_main]

use libfuzzer_sys::fuzz_target;

use gcsl_nf::nn::{read_snapshot, write_snapshot};

fuzz_target!(|data: &[u8]| {
    let Ok(net) = read_snapshot(data) else { return };
    let bytes = write_snapshot(&net);
    let again = read_snapshot(&bytes).expect("written snapshot reads back");
    assert_eq!(bytes, write_snapshot(&again));
});
