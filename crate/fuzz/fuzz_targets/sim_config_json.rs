#![no_main]

use libfuzzer_sys::fuzz_target;

use atomlink::sim::SimConfig;

// Simulation config parser/validator: arbitrary bytes must never panic, and
// accepted documents must re-serialize into documents that are accepted
// again.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(config) = SimConfig::from_json(text) {
        let json = config.to_json().unwrap();
        SimConfig::from_json(&json).expect("validated config must re-parse");
    }
});
