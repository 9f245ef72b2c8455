#![no_main]

use libfuzzer_sys::fuzz_target;

// Filter-coefficient JSON decoder plus cheap evaluation paths.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(text) {
            if let Ok(m) = fracspec::filters::filter_from_json(&value) {
                let x = vec![0.375f64; m.dim()];
                let _ = m.eval(&x);
                let _ = m.mod_squared();
                let _ = fracspec::filters::filter_to_json(&m);
            }
        }
    }
});
