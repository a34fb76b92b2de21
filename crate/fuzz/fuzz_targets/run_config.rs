#![no_main]

use libfuzzer_sys::fuzz_target;
use tunnel_lab::cli::RunConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(cfg) = RunConfig::from_json(text) {
        // A validated config must expand and serialize without panicking.
        let _ = cfg.grid();
        let _ = cfg.path_options();
        let _ = serde_json::to_string(&cfg).unwrap();
    }
});
