#![no_main]

use libfuzzer_sys::fuzz_target;
use skyroute::netlist::{parse_netlist, write_netlist};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(nl) = parse_netlist(text) {
        let again = parse_netlist(&write_netlist(&nl)).expect("written netlist reparses");
        assert_eq!(again, nl);
    }
});
