#![no_main]

use libfuzzer_sys::fuzz_target;
use num_complex::Complex64;

// Lacunary-expansion JSON decoder; valid inputs must split, merge back,
// and evaluate without panicking.
fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(value) = serde_json::from_str::<serde_json::Value>(text) {
            if let Ok(f) = fracspec::cdyn::LacunaryExpansion::from_json(&value) {
                let (f0, f1) = fracspec::cdyn::k2_split(&f);
                if let Ok(back) = fracspec::cdyn::k2_merge(&f0, &f1) {
                    assert_eq!(back, f);
                }
                let _ = fracspec::cdyn::evaluate_ff(&f, Complex64::new(0.2, 0.1));
            }
        }
    }
});
