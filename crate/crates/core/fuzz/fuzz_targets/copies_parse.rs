#![no_main]

use libfuzzer_sys::fuzz_target;
use lrsim::models::{Copies, ModelKind};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(copies) = text.parse::<Copies>() {
        assert_eq!(copies.to_string().parse::<Copies>().unwrap(), copies);
    }
    if let Ok(kind) = text.parse::<ModelKind>() {
        assert_eq!(kind.to_string(), text);
    }
});
