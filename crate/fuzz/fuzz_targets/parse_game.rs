#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(net) = gnet::format::parse_game(text) {
        let _ = gnet::model::validate(&net);
        // Anything that parses must survive a print/parse round trip.
        let printed = gnet::format::print_game(&net);
        let back = gnet::format::parse_game(&printed).expect("printed game reparses");
        assert_eq!(gnet::format::print_game(&back), printed);
    }
});
