#![no_main]

use libfuzzer_sys::fuzz_target;
use tunnel_lab::enhanced_2d::Barrier2D;
use tunnel_lab::fields::Drive;
use tunnel_lab::semiclassical_1d::Potential1D;

// First byte picks the type, the rest is JSON.
fuzz_target!(|data: &[u8]| {
    let Some((&tag, rest)) = data.split_first() else {
        return;
    };
    match tag % 3 {
        0 => {
            if let Ok(d) = serde_json::from_slice::<Drive>(rest) {
                if d.validate().is_ok() {
                    let _ = d.h_real(0.5);
                    let _ = d.drive_integral(0.5 * d.imag_domain_edge().min(1.0));
                }
            }
        }
        1 => {
            if let Ok(b) = serde_json::from_slice::<Barrier2D>(rest) {
                if b.validate().is_ok() {
                    let _ = b.potential(b.x0, 0.0);
                    let _ = b.project_to_level((b.x0 + 0.5, 0.0));
                }
            }
        }
        _ => {
            if let Ok(p) = serde_json::from_slice::<Potential1D>(rest) {
                if p.validate().is_ok() {
                    let _ = p.value(0.3);
                }
            }
        }
    }
});
