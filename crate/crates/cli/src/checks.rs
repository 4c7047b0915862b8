//! The `reproduce-paper` check suite: the headline numbers of the
//! architecture study, each evaluated against its stated tolerance.

use atomlink::gates::{
    blockade_radius, vdw_strength, PairKind, RydbergGateSpec, REFERENCE_C6,
};
use atomlink::quantum::{
    depolarizing_p_for_gate_fidelity, protocol_branch_dm, protocol_pair_fidelity,
    run_messenger_protocol, GateErrorModel, ProtocolMode,
};
use atomlink::sim::{
    analytic_rate, run, EndpointModel, GateConfig, GateKind, LayoutSource, MessengerConfig,
    MessengerStart, RequestEndpoints, RequestModel, SimConfig, TransportConfig,
};
use atomlink::species::{builtin_species, classify_charge_exchange, ChargeExchangeClass, Kind};
use atomlink::topology::{pack_zones, ChainSpec, Endpoint, GRID_ALIGNMENTS, DEFAULT_EDGE_MARGIN};
use atomlink::tweezer::{
    plan_transport, trap_profile, ProfileKind, TransportConstraint, TweezerParams,
};

pub struct Check {
    pub id: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn rel_ok(value: f64, reference: f64, tolerance: f64) -> bool {
    (value - reference).abs() <= tolerance * reference.abs()
}

fn li_trap() -> atomlink::tweezer::TrapProfile {
    let params = TweezerParams {
        power: 0.25,
        waist: 1e-6,
        wavelength: 1.064e-6,
        species: atomlink::species::find_species("Li6").expect("builtin species"),
        polarizability_au: None,
    };
    trap_profile(&params).expect("calibrated species")
}

fn check_trap_calibration() -> Check {
    let two_pi = std::f64::consts::TAU;
    let profile = li_trap();
    let depth_mk = profile.depth_millikelvin();
    let pass = rel_ok(depth_mk, 10.0, 0.05)
        && rel_ok(profile.omega_radial, two_pi * 1.2e6, 0.05)
        && rel_ok(profile.omega_axial, two_pi * 0.28e6, 0.05);
    Check {
        id: 1,
        name: "trap calibration (250 mW, 1 um, 1064 nm, 6Li)",
        pass,
        detail: format!(
            "depth {:.3} mK (10 +/- 5%), w_r 2pi x {:.3} MHz (1.2 +/- 5%), w_z 2pi x {:.3} MHz (0.28 +/- 5%)",
            depth_mk,
            profile.omega_radial / two_pi / 1e6,
            profile.omega_axial / two_pi / 1e6
        ),
    }
}

fn check_transport_budget() -> Check {
    let bb = |a_limit| {
        plan_transport(
            250e-6,
            TransportConstraint {
                a_limit,
                v_limit: None,
            },
            ProfileKind::BangBang,
        )
        .expect("valid constraint")
    };
    let under_spill = bb(li_trap().max_acceleration);
    let at_1e5 = bb(4e5);
    let oracle = 2.0 * (250e-6f64 / 4e5).sqrt();
    let pass = under_spill.duration <= 50e-6 && rel_ok(at_1e5.duration, oracle, 0.001);
    Check {
        id: 2,
        name: "transport budget (250 um hop)",
        pass,
        detail: format!(
            "spill-limited {:.2} us (<= 50 us), 4e5 m/s^2 plan {:.4} us vs closed form {:.4} us +/- 0.1%",
            under_spill.duration * 1e6,
            at_1e5.duration * 1e6,
            oracle * 1e6
        ),
    }
}

/// A saturated single-messenger ping-pong workload whose A->B hop takes
/// exactly 50 us.
fn saturated_config(count: u64, kind: GateKind) -> SimConfig {
    let layout = pack_zones(1.2e-3, 250e-6, ChainSpec::default()).expect("default layout");
    let (za, zb) = layout
        .zones
        .iter()
        .flat_map(|a| layout.zones.iter().map(move |b| (a, b)))
        .find(|(a, b)| {
            (a.center.1 - b.center.1).abs() < 1e-12
                && (b.center.0 - a.center.0 - 250e-6).abs() < 1e-9
        })
        .map(|(a, b)| (a.id, b.id))
        .expect("adjacent zones");
    let from = Endpoint::Ion { zone: za, ion: 29 };
    let to = Endpoint::Ion { zone: zb, ion: 0 };
    SimConfig {
        layout: LayoutSource::Pack {
            fov_diameter: 1.2e-3,
            zone_pitch: 250e-6,
            chain: ChainSpec::default(),
        },
        gate: GateConfig {
            kind,
            collisional: None,
            rydberg: None,
            fidelity: None,
        },
        transport: TransportConfig {
            // 105 um between facing edge ions in exactly 50 us
            a_limit: 1.68e5,
            v_limit: None,
            profile_kind: ProfileKind::BangBang,
            extra_settle_time: 0.0,
        },
        messengers: vec![MessengerConfig {
            id: 0,
            start: MessengerStart::At {
                at: layout.position(from).expect("endpoint"),
            },
        }],
        requests: RequestModel::Closed { count },
        endpoints: EndpointModel::Cycle(vec![
                RequestEndpoints { from, to },
                RequestEndpoints { from: to, to: from },
            ]),
        seed: 0,
        duration_limit: None,
        measure_time: 0.0,
        ramp_overhead: 0.0,
        queue_capacity: None,
        trace_samples_per_leg: 4,
    }
}

fn check_rates() -> Check {
    let collisional = analytic_rate(300e-6, 50e-6, 0.0).expect("valid");
    let rydberg = analytic_rate(0.5e-6, 50e-6, 0.0).expect("valid");
    let sim_collisional = run(saturated_config(200, GateKind::Collisional))
        .expect("valid config")
        .throughput;
    let sim_rydberg = run(saturated_config(2000, GateKind::Rydberg))
        .expect("valid config")
        .throughput;
    let pass = rel_ok(collisional, 1538.0, 0.01)
        && rel_ok(rydberg, 1.96e4, 0.01)
        && rel_ok(sim_collisional, collisional, 0.01)
        && rel_ok(sim_rydberg, rydberg, 0.01);
    Check {
        id: 3,
        name: "entanglement rates (collisional / Rydberg)",
        pass,
        detail: format!(
            "analytic {:.1}/s and {:.0}/s; simulated {:.1}/s and {:.0}/s (each +/- 1%)",
            collisional, rydberg, sim_collisional, sim_rydberg
        ),
    }
}

fn check_protocol() -> Check {
    let ideal = GateErrorModel { depolarizing_p: 0.0 };
    let mut worst_ideal: f64 = 0.0;
    let mut seen = [false, false];
    for seed in 0..64 {
        let r = run_messenger_protocol(
            std::f64::consts::PI,
            ideal,
            seed,
            false,
            ProtocolMode::Trajectory,
        )
        .expect("valid protocol");
        seen[r.measurement_outcome as usize] = true;
        worst_ideal = worst_ideal.max((r.bell_fidelity - 1.0).abs());
        if seen[0] && seen[1] && seed > 8 {
            break;
        }
    }
    let flat = run_messenger_protocol(0.0, ideal, 1, false, ProtocolMode::Trajectory)
        .expect("valid protocol");
    let p = depolarizing_p_for_gate_fidelity(0.9999);
    let noisy = protocol_pair_fidelity(std::f64::consts::PI, p).expect("valid p");
    // frozen exact-channel value for two 99.99% gates
    let oracle = 0.9998293430423713;
    let branch = protocol_branch_dm(std::f64::consts::PI, 0.0, 1, false).expect("valid");
    let pass = seen[0]
        && seen[1]
        && worst_ideal < 1e-9
        && (branch.bell_fidelity - 1.0).abs() < 1e-9
        && (flat.bell_fidelity - 0.5).abs() < 1e-9
        && noisy >= 0.999
        && (noisy - oracle).abs() < 1e-6;
    Check {
        id: 4,
        name: "messenger protocol (exact quantum oracle)",
        pass,
        detail: format!(
            "ideal |F-1| {:.1e}, phase-0 F {:.6}, two-99.99%-gates F {:.8} vs {:.8}",
            worst_ideal, flat.bell_fidelity, noisy, oracle
        ),
    }
}

fn check_charge_exchange() -> Check {
    let table = builtin_species();
    let mut endothermic: Vec<(String, String)> = Vec::new();
    for atom in table.iter().filter(|r| r.kind == Kind::NeutralAtom) {
        for ion in table.iter().filter(|r| r.kind == Kind::SinglyChargedIon) {
            let v = classify_charge_exchange(atom, ion).expect("kinds match");
            if v.classification == ChargeExchangeClass::Endothermic {
                endothermic.push((atom.name.clone(), ion.name.clone()));
            }
        }
    }
    let only_li_ba_ra = endothermic
        .iter()
        .all(|(a, i)| a.starts_with("Li") && (i.starts_with("Ba") || i.starts_with("Ra")));
    let has_both = endothermic.iter().any(|(_, i)| i.starts_with("Ba"))
        && endothermic.iter().any(|(_, i)| i.starts_with("Ra"));
    let li = table.iter().find(|r| r.name == "Li6").expect("builtin");
    let ba = table.iter().find(|r| r.name == "Ba137+").expect("builtin");
    let ra = table.iter().find(|r| r.name == "Ra226+").expect("builtin");
    let gap_ba = classify_charge_exchange(li, ba).expect("kinds").energy_gap;
    let gap_ra = classify_charge_exchange(li, ra).expect("kinds").energy_gap;
    let pass = only_li_ba_ra && has_both && gap_ba > gap_ra && gap_ra > 0.0;
    Check {
        id: 5,
        name: "charge-exchange classification",
        pass,
        detail: format!(
            "endothermic pairs: Li-Ba+ (gap {:.0} cm^-1) and Li-Ra+ (gap {:.0} cm^-1), no others",
            gap_ba, gap_ra
        ),
    }
}

// Independent brute-force recount of the packing.
fn oracle_zone_count(fov: f64, pitch: f64, chain: ChainSpec) -> usize {
    let radius = fov / 2.0 - DEFAULT_EDGE_MARGIN;
    let half = chain.extent() / 2.0;
    let reach = (fov / pitch).ceil() as i64 + 4;
    let mut best = 0;
    for (ox, oy) in GRID_ALIGNMENTS {
        let mut count = 0;
        for j in -reach..=reach {
            for k in -reach..=reach {
                let x = (j as f64 + ox) * pitch;
                let y = (k as f64 + oy) * pitch;
                if ((x.abs() + half).powi(2) + y * y).sqrt() <= radius {
                    count += 1;
                }
            }
        }
        best = best.max(count);
    }
    best
}

fn check_layout() -> Check {
    let layout = pack_zones(1.2e-3, 250e-6, ChainSpec::default()).expect("defaults pack");
    let zones = layout.zone_count();
    let qubits = layout.total_qubits();
    let oracle = oracle_zone_count(1.2e-3, 250e-6, ChainSpec::default());
    let pass = (16..=20).contains(&zones) && (480..=600).contains(&qubits) && zones == oracle;
    Check {
        id: 6,
        name: "layout scaling (1.2 mm FOV)",
        pass,
        detail: format!("{zones} zones (16..=20, oracle {oracle}), {qubits} qubits (480..=600)"),
    }
}

fn check_z_scaling() -> Check {
    let c6 = REFERENCE_C6;
    let r = 1.5e-6;
    let aa = vdw_strength(c6, PairKind::AtomAtom, r).expect("valid");
    let ai = vdw_strength(c6, PairKind::AtomIon, r).expect("valid");
    let ii = vdw_strength(c6, PairKind::IonIon, r).expect("valid");
    let rb = blockade_radius(&RydbergGateSpec {
        pair_kind: PairKind::AtomIon,
        ..RydbergGateSpec::default()
    })
    .expect("valid");
    let pass = ai / aa == 0.125 && ii / aa == 0.015625 && rb > 1e-6;
    Check {
        id: 7,
        name: "Rydberg Z-scaling and blockade radius",
        pass,
        detail: format!(
            "atom-ion/atom-atom {}, ion-ion/atom-atom {}, atom-ion r_b {:.2} um (> 1 um)",
            ai / aa,
            ii / aa,
            rb * 1e6
        ),
    }
}

/// Run all checks in order.
pub fn run_all() -> Vec<Check> {
    vec![
        check_trap_calibration(),
        check_transport_budget(),
        check_rates(),
        check_protocol(),
        check_charge_exchange(),
        check_layout(),
        check_z_scaling(),
    ]
}
