#![no_main]

use libfuzzer_sys::fuzz_target;
use lrsim::output::{curve_csv, parse_curve_csv};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(points) = parse_curve_csv(text) else { return };
    if points.is_empty() {
        return;
    }
    // re-emitting is stable after one round of rounding
    let once = curve_csv(&points).expect("non-empty");
    let again = curve_csv(&parse_curve_csv(&once).expect("own output parses")).expect("non-empty");
    assert_eq!(once, again);
});
