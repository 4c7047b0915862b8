#![no_main]

use libfuzzer_sys::fuzz_target;

use atomlink::topology::{ChipLayout, Endpoint};

// Layout importer: no panics on arbitrary bytes; validated layouts answer
// geometry queries and re-serialize.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    let Ok(layout) = ChipLayout::from_json(text) else {
        return;
    };
    let _ = layout.to_json();
    let _ = layout.ion_csv();
    for zone in layout.zones.iter().take(8) {
        let _ = layout.edge_ions(zone.id);
        let here = Endpoint::Ion {
            zone: zone.id,
            ion: 0,
        };
        let d = layout.distance(here, here).unwrap();
        assert_eq!(d, 0.0);
    }
    // out-of-range queries must error, not panic
    let _ = layout.edge_ions(usize::MAX);
    let _ = layout.position(Endpoint::Idle { idle: usize::MAX });
});
