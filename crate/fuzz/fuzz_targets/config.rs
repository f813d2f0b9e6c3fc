#![no_main]

use libfuzzer_sys::fuzz_target;

use gcsl_nf::harness::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(cfg) = RunConfig::parse(text) else { return };
    let printed = cfg.to_text();
    let again = RunConfig::parse(&printed).expect("printed config parses");
    assert_eq!(printed, again.to_text());
});
