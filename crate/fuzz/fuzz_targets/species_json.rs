#![no_main]

use libfuzzer_sys::fuzz_target;

// Species table importer: arbitrary bytes must never panic, and any table
// that passes validation must survive an export/import round trip.
fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(records) = atomlink::species::import_species_json(text) {
        let json = atomlink::species::export_species_json(&records).unwrap();
        let back = atomlink::species::import_species_json(&json).unwrap();
        assert_eq!(records, back);
        for atom in records.iter().take(16) {
            for ion in records.iter().take(16) {
                // classification only errors on mismatched kinds
                let _ = atomlink::species::classify_charge_exchange(atom, ion);
            }
        }
    }
});
