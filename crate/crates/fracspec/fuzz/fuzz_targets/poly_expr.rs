#![no_main]

use libfuzzer_sys::fuzz_target;
use num_complex::Complex64;

// Polynomial expression parser; on success, exercise evaluation and the
// preimage solver, whose residual check must reject rather than panic.
fuzz_target!(|data: &[u8]| {
    if let Ok(expr) = std::str::from_utf8(data) {
        if let Ok(p) = fracspec::cdyn::ComplexPolynomial::parse(expr) {
            let z = Complex64::new(0.3, -0.4);
            let _ = p.eval(z);
            let _ = p.escape_radius();
            if p.degree() <= 8 {
                let _ = p.preimages(z);
            }
        }
    }
});
