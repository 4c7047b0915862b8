//! Cross-module pipeline: pack a chip, plan the hop between two
//! communication ions, check the protocol fidelity the scheduler attaches,
//! and run a short simulation over the same geometry.

use atomlink::quantum::{depolarizing_p_for_gate_fidelity, protocol_pair_fidelity};
use atomlink::sim::{
    run, EndpointModel, GateConfig, GateKind, LayoutSource, MessengerConfig, MessengerStart,
    RequestModel, SimConfig, TransportConfig,
};
use atomlink::species::{builtin_species, export_species_json, import_species_json};
use atomlink::topology::{pack_zones, ChainSpec, Endpoint};
use atomlink::tweezer::{
    emit_aod_waveform, plan_transport, trap_profile, ProfileKind, TransportConstraint,
    TweezerParams, SPILL_SAFETY_FACTOR,
};

#[test]
fn species_table_round_trips_through_a_file() {
    let table = builtin_species();
    let path = std::env::temp_dir().join(format!("atomlink-species-{}.json", std::process::id()));
    std::fs::write(&path, export_species_json(&table).unwrap()).unwrap();
    let back = import_species_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(table, back);
    let _ = std::fs::remove_file(&path);
}

#[test]
fn trap_limits_feed_the_planner_and_the_chip_geometry() {
    let layout = pack_zones(1.2e-3, 250e-6, ChainSpec::default()).unwrap();
    let li = TweezerParams {
        power: 0.25,
        waist: 1e-6,
        wavelength: 1.064e-6,
        species: atomlink::species::find_species("Li6").unwrap(),
        polarizability_au: None,
    };
    let a_max = trap_profile(&li).unwrap().max_acceleration;

    // hop between the facing edge ions of two same-row neighbors
    let (za, zb) = layout
        .zones
        .iter()
        .flat_map(|a| layout.zones.iter().map(move |b| (a.id, b.id, a, b)))
        .find(|(_, _, a, b)| {
            (a.center.1 - b.center.1).abs() < 1e-12
                && (b.center.0 - a.center.0 - 250e-6).abs() < 1e-9
        })
        .map(|(a, b, _, _)| (a, b))
        .unwrap();
    let d = layout
        .distance(
            Endpoint::Ion { zone: za, ion: 29 },
            Endpoint::Ion { zone: zb, ion: 0 },
        )
        .unwrap();
    let plan = plan_transport(
        d,
        TransportConstraint {
            a_limit: SPILL_SAFETY_FACTOR * a_max,
            v_limit: None,
        },
        ProfileKind::BangBang,
    )
    .unwrap();
    // a half-spill-limit 105 um hop is far inside the 50 us budget
    assert!(plan.duration < 50e-6);

    let waveform = emit_aod_waveform(&plan, 100e6, 2.5e-12).unwrap();
    assert_eq!(waveform.samples.len(), plan.samples.len());
}

#[test]
fn simulated_fidelity_composes_gate_budget_and_protocol() {
    let config = SimConfig {
        layout: LayoutSource::Pack {
            fov_diameter: 1.2e-3,
            zone_pitch: 250e-6,
            chain: ChainSpec::default(),
        },
        gate: GateConfig {
            kind: GateKind::Collisional,
            collisional: None,
            rydberg: None,
            fidelity: Some(0.998),
        },
        transport: TransportConfig {
            a_limit: 1e6,
            v_limit: None,
            profile_kind: ProfileKind::BangBang,
            extra_settle_time: 0.0,
        },
        messengers: vec![MessengerConfig {
            id: 0,
            start: MessengerStart::Idle { idle: 0 },
        }],
        requests: RequestModel::Closed { count: 6 },
        endpoints: EndpointModel::RandomPairs,
        seed: 11,
        duration_limit: None,
        measure_time: 1e-6,
        ramp_overhead: 2e-6,
        queue_capacity: None,
        trace_samples_per_leg: 4,
    };
    let metrics = run(config).unwrap();
    assert_eq!(metrics.delivered_pairs, 6);
    let expected = protocol_pair_fidelity(
        std::f64::consts::PI,
        depolarizing_p_for_gate_fidelity(0.998),
    )
    .unwrap();
    assert_eq!(metrics.mean_pair_fidelity, expected);
    assert!(metrics.mean_latency > 0.0);
    assert!(metrics.event_log_csv().starts_with("time_ns,kind,request,messenger,detail\n"));
}
