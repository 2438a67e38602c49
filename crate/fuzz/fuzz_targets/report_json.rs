#![no_main]

use libfuzzer_sys::fuzz_target;
use skyroute::metrics::{emit_report, parse_report_json, ReportFormat};

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(rows) = parse_report_json(text) {
            let _ = emit_report(&rows, ReportFormat::Csv);
        }
    }
});
