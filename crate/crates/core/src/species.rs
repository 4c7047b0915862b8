//! Atomic species data: masses, ionization energies, tweezer polarizabilities,
//! and hyperfine qubit-state labels, plus charge-exchange energetics.
//!
//! Ionization energies are stored in cm⁻¹ (the unit of the reference
//! tabulations) and always refer to removing one electron from the *neutral*
//! element, also for ion records. That convention makes the charge-exchange
//! classification a plain subtraction: the reaction
//! `Atom + Ion⁺ → Atom⁺ + Neutral` is endothermic — and therefore frozen out
//! at ultracold energies — exactly when the atom's ionization energy exceeds
//! the ion element's.
//!
//! Values are taken from the NIST atomic spectra tabulations; isotope masses
//! from the AME2020 evaluation, ≥6 significant figures.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether a record describes a tweezer-trappable neutral or a trapped ion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Kind {
    NeutralAtom,
    SinglyChargedIon,
}

/// One hyperfine level label (F, m_F). Half-integer values are exact in f64.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QubitState {
    pub f: f64,
    pub m_f: f64,
}

impl std::fmt::Display for QubitState {
    fn fmt(&self, out: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        fn half(x: f64) -> String {
            if x.fract() == 0.0 {
                format!("{}", x as i64)
            } else {
                format!("{}/2", (2.0 * x) as i64)
            }
        }
        write!(out, "|F={},mF={}>", half(self.f), half(self.m_f))
    }
}

/// Static data for one atomic species.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpeciesRecord {
    /// Element plus mass number, e.g. "Li6" or "Ba137+".
    pub name: String,
    pub kind: Kind,
    /// Isotope mass, kg.
    pub mass: f64,
    /// Ionization energy of the neutral element, cm⁻¹.
    pub ionization_energy: f64,
    /// Real part of the dynamic dipole polarizability at 1064 nm, atomic
    /// units. Present for neutral atoms intended for tweezer trapping.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarizability_1064: Option<f64>,
    /// The two hyperfine states used as the qubit, when designated.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qubit_states: Vec<QubitState>,
}

impl SpeciesRecord {
    /// Check the record invariants. Used on construction of builtins and on
    /// every imported record.
    pub fn validate(&self) -> Result<()> {
        if self.name.is_empty() {
            return Err(Error::config("species record has an empty name"));
        }
        if !(self.mass > 0.0) || !self.mass.is_finite() {
            return Err(Error::config(format!("{}: mass must be > 0", self.name)));
        }
        if !(self.ionization_energy > 0.0) || !self.ionization_energy.is_finite() {
            return Err(Error::config(format!(
                "{}: ionization_energy must be > 0",
                self.name
            )));
        }
        if let Some(alpha) = self.polarizability_1064 {
            if !(alpha > 0.0) || !alpha.is_finite() {
                return Err(Error::config(format!(
                    "{}: polarizability_1064 must be > 0 when present",
                    self.name
                )));
            }
        }
        match self.qubit_states.len() {
            0 => {}
            2 => {
                let [a, b] = [self.qubit_states[0], self.qubit_states[1]];
                if !a.f.is_finite() || !a.m_f.is_finite() || !b.f.is_finite() || !b.m_f.is_finite()
                {
                    return Err(Error::config(format!(
                        "{}: qubit state labels must be finite",
                        self.name
                    )));
                }
                if a == b {
                    return Err(Error::config(format!(
                        "{}: qubit_states must be two distinct (F, m_F) labels",
                        self.name
                    )));
                }
            }
            n => {
                return Err(Error::config(format!(
                    "{}: qubit_states must hold exactly 2 labels, got {n}",
                    self.name
                )))
            }
        }
        Ok(())
    }
}

/// Sign of the charge-exchange energy gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ChargeExchangeClass {
    Endothermic,
    Exothermic,
    Thermoneutral,
}

/// Result of classifying a charge-exchange reaction `Atom + Ion⁺`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChargeExchangeVerdict {
    pub classification: ChargeExchangeClass,
    /// IE(atom) − IE(ion's neutral element), cm⁻¹. Positive means the
    /// reaction is energetically forbidden at ultracold energies.
    pub energy_gap: f64,
}

/// Classify the charge-exchange reaction between a neutral atom and a
/// singly charged ion.
pub fn classify_charge_exchange(
    atom: &SpeciesRecord,
    ion: &SpeciesRecord,
) -> Result<ChargeExchangeVerdict> {
    if atom.kind != Kind::NeutralAtom {
        return Err(Error::argument(format!(
            "{} is not a neutral atom",
            atom.name
        )));
    }
    if ion.kind != Kind::SinglyChargedIon {
        return Err(Error::argument(format!(
            "{} is not a singly charged ion",
            ion.name
        )));
    }
    let energy_gap = atom.ionization_energy - ion.ionization_energy;
    let classification = if energy_gap > 0.0 {
        ChargeExchangeClass::Endothermic
    } else if energy_gap < 0.0 {
        ChargeExchangeClass::Exothermic
    } else {
        ChargeExchangeClass::Thermoneutral
    };
    Ok(ChargeExchangeVerdict {
        classification,
        energy_gap,
    })
}

// NIST ionization energies of the neutral elements, cm^-1.
const IE_LI: f64 = 43_487.1142;
const IE_NA: f64 = 41_449.451;
const IE_K: f64 = 35_009.8140;
const IE_RB: f64 = 33_690.8048;
const IE_CS: f64 = 31_406.46766;
const IE_CA: f64 = 49_305.9240;
const IE_SR: f64 = 45_932.2036;
const IE_BA: f64 = 42_034.91;
const IE_RA: f64 = 42_573.36;
const IE_YB: f64 = 50_443.08;

/// Dynamic polarizability of ground-state Li at 1064 nm, atomic units.
/// This is the value that reproduces the 10 mK / 250 mW / 1 μm tweezer
/// calibration point; overridable per record.
pub const LI_POLARIZABILITY_1064_AU: f64 = 270.0;

use crate::constants::ATOMIC_MASS as U;

fn neutral(name: &str, mass_u: f64, ie: f64, alpha: f64) -> SpeciesRecord {
    SpeciesRecord {
        name: name.to_owned(),
        kind: Kind::NeutralAtom,
        mass: mass_u * U,
        ionization_energy: ie,
        polarizability_1064: Some(alpha),
        qubit_states: Vec::new(),
    }
}

fn ion(name: &str, mass_u: f64, ie: f64) -> SpeciesRecord {
    SpeciesRecord {
        name: name.to_owned(),
        kind: Kind::SinglyChargedIon,
        mass: mass_u * U,
        ionization_energy: ie,
        polarizability_1064: None,
        qubit_states: Vec::new(),
    }
}

/// The built-in species table: tweezer-candidate alkali atoms and
/// ion-qubit-candidate alkaline-earth/ytterbium ions.
///
/// ⁶Li and ¹³⁷Ba⁺ carry the messenger/ion qubit state labels. Polarizabilities
/// for the heavier alkalis are approximate literature values; only the Li one
/// is calibration-critical.
pub fn builtin_species() -> Vec<SpeciesRecord> {
    let mut li6 = neutral("Li6", 6.015_122_8874, IE_LI, LI_POLARIZABILITY_1064_AU);
    li6.qubit_states = vec![
        QubitState { f: 0.5, m_f: 0.5 }, // |0_a>
        QubitState { f: 1.5, m_f: 1.5 }, // |1_a>
    ];
    let mut ba137 = ion("Ba137+", 136.905_827_14, IE_BA);
    ba137.qubit_states = vec![
        QubitState { f: 1.0, m_f: 1.0 }, // |0_i>
        QubitState { f: 2.0, m_f: 2.0 }, // |1_i>
    ];

    let table = vec![
        li6,
        neutral("Li7", 7.016_003_4366, IE_LI, LI_POLARIZABILITY_1064_AU),
        neutral("Na23", 22.989_769_2820, IE_NA, 140.9),
        neutral("K39", 38.963_706_4864, IE_K, 600.0),
        neutral("Rb87", 86.909_180_5310, IE_RB, 687.3),
        neutral("Cs133", 132.905_451_9610, IE_CS, 1163.4),
        ion("Ca40+", 39.962_590_863, IE_CA),
        ion("Sr88+", 87.905_612_5, IE_SR),
        ba137,
        ion("Ba138+", 137.905_247_00, IE_BA),
        ion("Ra226+", 226.025_410_33, IE_RA),
        ion("Yb171+", 170.936_330_2, IE_YB),
    ];
    debug_assert!(table.iter().all(|r| r.validate().is_ok()));
    table
}

/// Look up a built-in species by name.
pub fn find_species(name: &str) -> Result<SpeciesRecord> {
    let table = builtin_species();
    table
        .iter()
        .find(|r| r.name == name)
        .cloned()
        .ok_or_else(|| {
            let names: Vec<_> = table.iter().map(|r| r.name.as_str().to_owned()).collect();
            Error::argument(format!(
                "unknown species '{name}'; known: {}",
                names.join(", ")
            ))
        })
}

/// Serialize a species table as a JSON array.
pub fn export_species_json(records: &[SpeciesRecord]) -> Result<String> {
    Ok(serde_json::to_string_pretty(records)?)
}

/// Parse and validate a species table from JSON.
pub fn import_species_json(json: &str) -> Result<Vec<SpeciesRecord>> {
    let records: Vec<SpeciesRecord> = serde_json::from_str(json)?;
    for record in &records {
        record.validate()?;
    }
    Ok(records)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn get(name: &str) -> SpeciesRecord {
        find_species(name).unwrap()
    }

    #[test]
    fn builtin_table_is_valid_and_complete() {
        let table = builtin_species();
        for record in &table {
            record.validate().unwrap();
        }
        for name in [
            "Li6", "Li7", "Na23", "K39", "Rb87", "Cs133", "Ca40+", "Sr88+", "Ba137+", "Ba138+",
            "Ra226+", "Yb171+",
        ] {
            assert!(table.iter().any(|r| r.name == name), "missing {name}");
        }
        // every neutral carries a tweezer polarizability
        for r in table.iter().filter(|r| r.kind == Kind::NeutralAtom) {
            assert!(r.polarizability_1064.unwrap() > 0.0);
        }
    }

    #[test]
    fn qubit_labels_match_the_designated_species() {
        let li6 = get("Li6");
        assert_eq!(
            li6.qubit_states,
            vec![QubitState { f: 0.5, m_f: 0.5 }, QubitState { f: 1.5, m_f: 1.5 }]
        );
        let ba = get("Ba137+");
        assert_eq!(
            ba.qubit_states,
            vec![QubitState { f: 1.0, m_f: 1.0 }, QubitState { f: 2.0, m_f: 2.0 }]
        );
        assert_eq!(ba.qubit_states[1].to_string(), "|F=2,mF=2>");
        assert_eq!(li6.qubit_states[0].to_string(), "|F=1/2,mF=1/2>");
    }

    #[test]
    fn reference_ionization_energies() {
        assert!((get("Li6").ionization_energy - 43_487.0).abs() < 1.0);
        assert!((get("Ba137+").ionization_energy - 42_035.0).abs() < 1.0);
    }

    #[test]
    fn charge_exchange_examples() {
        let verdict = classify_charge_exchange(&get("Li6"), &get("Ba137+")).unwrap();
        assert_eq!(verdict.classification, ChargeExchangeClass::Endothermic);

        let verdict = classify_charge_exchange(&get("Rb87"), &get("Ba137+")).unwrap();
        assert_eq!(verdict.classification, ChargeExchangeClass::Exothermic);

        // hypothetical Li+ record: same element both sides is thermoneutral
        let li_ion = SpeciesRecord {
            name: "Li6+".into(),
            kind: Kind::SinglyChargedIon,
            mass: get("Li6").mass,
            ionization_energy: get("Li6").ionization_energy,
            polarizability_1064: None,
            qubit_states: vec![],
        };
        let verdict = classify_charge_exchange(&get("Li6"), &li_ion).unwrap();
        assert_eq!(verdict.classification, ChargeExchangeClass::Thermoneutral);
        assert_eq!(verdict.energy_gap, 0.0);

        // Ra+-Li is endothermic with a smaller barrier than Ba+-Li
        let ra = classify_charge_exchange(&get("Li6"), &get("Ra226+")).unwrap();
        let ba = classify_charge_exchange(&get("Li6"), &get("Ba137+")).unwrap();
        assert_eq!(ra.classification, ChargeExchangeClass::Endothermic);
        assert!(ba.energy_gap > ra.energy_gap);
    }

    #[test]
    fn exactly_two_endothermic_builtin_pairs() {
        let table = builtin_species();
        let mut endothermic = Vec::new();
        for atom in table.iter().filter(|r| r.kind == Kind::NeutralAtom) {
            for ion in table.iter().filter(|r| r.kind == Kind::SinglyChargedIon) {
                let v = classify_charge_exchange(atom, ion).unwrap();
                if v.classification == ChargeExchangeClass::Endothermic {
                    endothermic.push((atom.name.clone(), ion.name.clone()));
                }
            }
        }
        // Li (both isotopes) against Ba+ (both isotopes) and Ra+; no others.
        for (atom, ion) in &endothermic {
            assert!(atom.starts_with("Li"), "unexpected endothermic atom {atom}");
            assert!(
                ion.starts_with("Ba") || ion.starts_with("Ra"),
                "unexpected endothermic ion {ion}"
            );
        }
        let unique_elements: std::collections::BTreeSet<(char, char)> = endothermic
            .iter()
            .map(|(a, i)| (a.chars().next().unwrap(), i.chars().next().unwrap()))
            .collect();
        assert_eq!(unique_elements.len(), 2); // (L,B) and (L,R)
    }

    #[test]
    fn mismatched_kinds_are_rejected() {
        let li = get("Li6");
        let ba = get("Ba137+");
        assert!(classify_charge_exchange(&ba, &li).is_err());
        assert!(classify_charge_exchange(&li, &li).is_err());
    }

    #[test]
    fn antisymmetry_of_energy_gap() {
        // construct both directions from the stored element energies
        let table = builtin_species();
        for a in &table {
            for b in &table {
                let forward = SpeciesRecord {
                    kind: Kind::NeutralAtom,
                    polarizability_1064: None,
                    ..a.clone()
                };
                let reverse_ion = SpeciesRecord {
                    kind: Kind::SinglyChargedIon,
                    polarizability_1064: None,
                    ..a.clone()
                };
                let b_atom = SpeciesRecord {
                    kind: Kind::NeutralAtom,
                    polarizability_1064: None,
                    ..b.clone()
                };
                let b_ion = SpeciesRecord {
                    kind: Kind::SinglyChargedIon,
                    polarizability_1064: None,
                    ..b.clone()
                };
                let gap_ab = classify_charge_exchange(&forward, &b_ion).unwrap().energy_gap;
                let gap_ba = classify_charge_exchange(&b_atom, &reverse_ion)
                    .unwrap()
                    .energy_gap;
                assert_eq!(gap_ab, -gap_ba);
            }
        }
    }

    #[test]
    fn json_round_trip() {
        let table = builtin_species();
        let json = export_species_json(&table).unwrap();
        let back = import_species_json(&json).unwrap();
        assert_eq!(table, back);
    }

    #[test]
    fn import_rejects_invalid_records() {
        let bad = r#"[{"name":"X","kind":"NeutralAtom","mass":-1.0,"ionization_energy":10.0}]"#;
        assert!(import_species_json(bad).is_err());
        let bad = r#"[{"name":"X","kind":"NeutralAtom","mass":1e-26,"ionization_energy":10.0,
                       "qubit_states":[{"f":0.5,"m_f":0.5}]}]"#;
        assert!(import_species_json(bad).is_err());
        let not_json = "{";
        assert!(import_species_json(not_json).is_err());
    }
}
