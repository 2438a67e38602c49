#![no_main]

use libfuzzer_sys::fuzz_target;
use skyroute::fabric::{load_fabric, write_fabric};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = load_fabric(text) {
            let _ = load_fabric(&write_fabric(&spec));
        }
    }
});
