#![no_main]

use libfuzzer_sys::fuzz_target;
use skyroute::netlist::{generate_synthetic, SynthesisParams};
use skyroute::placement::{parse_placement_meta, read_placement, Die};

// Input is a meta file and a placement CSV separated by a NUL byte.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let (meta, csv) = text.split_once('\0').unwrap_or((text, ""));
    let die = match parse_placement_meta(meta, "meta") {
        Ok(m) => m.die,
        Err(_) => Die {
            width: 64,
            height: 16,
            site_nm: 200.0,
            utilization: 0.6,
        },
    };
    let netlist = generate_synthetic(&SynthesisParams {
        num_cells: 8,
        ..SynthesisParams::default()
    })
    .expect("fixed netlist");
    let _ = read_placement(csv, "csv", die, &netlist);
});
