#![no_main]

use libfuzzer_sys::fuzz_target;
use lrsim::causality::{readout_signature, CausalScenario};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(scenario) = text.parse::<CausalScenario>() else { return };
    if let Ok(sig) = readout_signature(&scenario) {
        for r in &sig.readouts {
            assert_eq!(r.variables.len(), 1 << r.influencing.len());
        }
    }
});
