#![no_main]

use libfuzzer_sys::fuzz_target;

// System-description JSON decoder: parsing and every accessor must return
// structured errors, never panic or allocate unboundedly.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(spec) = fracspec::ifs::IfsSpec::from_json(text) {
            let _ = spec.matrix();
            let _ = spec.digits_b();
            let _ = spec.digits_l();
            if let Ok(ifs) = spec.forward_ifs() {
                let x = vec![0.25f64; ifs.dim()];
                let _ = ifs.apply_f64(0, &x);
            }
        }
    }
});
