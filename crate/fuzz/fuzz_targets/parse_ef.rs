#![no_main]

use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(tree) = gnet::format::parse_ef(text) {
        if tree.validate().is_ok() {
            let _ = gnet::extensive_form::ef_to_gframe(&tree);
        }
    }
});
