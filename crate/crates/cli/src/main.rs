//! Command-line front end for the interconnect simulator.
//!
//! Human-readable reports go to stdout; machine artifacts (CSV/JSON) are
//! written under the output directory (`--out`, `ATOMLINK_OUT_DIR`, or
//! `./atomlink_out`), together with a `manifest.json` listing every emitted
//! file with its SHA-256. All outputs are deterministic for a given
//! (config, seed).
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 internal error.

mod checks;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use atomlink::gates::{CollisionalGateSpec, GateSpec, RydbergGateSpec};
use atomlink::quantum::{run_messenger_protocol, GateErrorModel, ProtocolMode};
use atomlink::sim::{analytic_rate, SimConfig, Simulation};
use atomlink::species::{classify_charge_exchange, find_species, ChargeExchangeClass};
use atomlink::topology::{pack_zones, ChainSpec};
use atomlink::tweezer::{
    emit_aod_waveform, plan_transport, reference_speed_check, trap_profile, ProfileKind,
    TransportConstraint, TweezerParams,
};

use manifest::RunManifest;

#[derive(Parser)]
#[command(
    name = "atomlink",
    version,
    about = "Simulator for tweezer-shuttled neutral-atom interconnects between trapped-ion modules"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ProfileArg {
    BangBang,
    TrapezoidVelocity,
    MinimumJerk,
}

impl From<ProfileArg> for ProfileKind {
    fn from(arg: ProfileArg) -> ProfileKind {
        match arg {
            ProfileArg::BangBang => ProfileKind::BangBang,
            ProfileArg::TrapezoidVelocity => ProfileKind::TrapezoidVelocity,
            ProfileArg::MinimumJerk => ProfileKind::MinimumJerk,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Pure-state trajectory with sampled measurement
    Pure,
    /// Exact density-matrix evolution
    Mixed,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum GateArg {
    Collisional,
    Rydberg,
    Both,
}

#[derive(Subcommand)]
enum Command {
    /// Tweezer trap depth, frequencies and spill limit for a species
    Trap {
        #[arg(long, allow_negative_numbers = true)]
        power_mw: f64,
        #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
        waist_um: f64,
        #[arg(long, default_value_t = 1064.0, allow_negative_numbers = true)]
        wavelength_nm: f64,
        #[arg(long, default_value = "Li6")]
        species: String,
        /// Override the species' stored polarizability (atomic units)
        #[arg(long)]
        polarizability_au: Option<f64>,
    },
    /// Plan a coherent transport and emit trajectory + AOD waveform CSV
    Transport {
        #[arg(long, allow_negative_numbers = true)]
        distance_um: f64,
        #[arg(long, default_value_t = 4e5, allow_negative_numbers = true)]
        a_limit_m_s2: f64,
        #[arg(long)]
        v_limit_m_s: Option<f64>,
        #[arg(long, value_enum, default_value_t = ProfileArg::BangBang)]
        profile: ProfileArg,
        #[arg(long, default_value_t = 100.0, allow_negative_numbers = true)]
        aod_center_mhz: f64,
        /// AOD deflection scale (position per drive-frequency offset)
        #[arg(long, default_value_t = 2.5, allow_negative_numbers = true)]
        aod_scale_um_per_mhz: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the charge-exchange reaction of an atom-ion pair
    ChargeExchange {
        #[arg(long)]
        atom: String,
        #[arg(long)]
        ion: String,
    },
    /// Pack ion-trap zones into the tweezer lens field of view
    Layout {
        #[arg(long, default_value_t = 1.2, allow_negative_numbers = true)]
        fov_mm: f64,
        #[arg(long, default_value_t = 250.0, allow_negative_numbers = true)]
        pitch_um: f64,
        #[arg(long, default_value_t = 30)]
        ions: usize,
        #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
        spacing_um: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the messenger protocol on the exact quantum engine
    VerifyProtocol {
        #[arg(long, default_value_t = std::f64::consts::PI, allow_negative_numbers = true)]
        phase_rad: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        depolarizing_p: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, value_enum, default_value_t = ModeArg::Mixed)]
        mode: ModeArg,
        /// Skip the feed-forward X correction on ion 2
        #[arg(long)]
        no_correction: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Closed-form entanglement rate table
    Rate {
        #[arg(long, value_enum, default_value_t = GateArg::Both)]
        gate: GateArg,
        #[arg(long)]
        t_gate_us: Option<f64>,
        #[arg(long, default_value_t = 50.0, allow_negative_numbers = true)]
        transport_us: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        overhead_us: f64,
    },
    /// Run a discrete-event simulation from a JSON config
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate the headline claims and print a pass/fail table
    ReproducePaper,
}

enum CliError {
    Validation(String),
    Internal(String),
}

impl From<atomlink::Error> for CliError {
    fn from(err: atomlink::Error) -> CliError {
        match err {
            atomlink::Error::Io(e) => CliError::Internal(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> CliError {
        CliError::Internal(err.to_string())
    }
}

fn validation(msg: impl Into<String>) -> CliError {
    CliError::Validation(msg.into())
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("ATOMLINK_OUT_DIR").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("atomlink_out"))
}

fn require_positive(name: &str, value: f64) -> Result<f64, CliError> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(validation(format!("--{name} must be positive, got {value}")))
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            use clap::error::ErrorKind;
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Validation(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(msg)) => {
            eprintln!("internal error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Trap {
            power_mw,
            waist_um,
            wavelength_nm,
            species,
            polarizability_au,
        } => cmd_trap(power_mw, waist_um, wavelength_nm, &species, polarizability_au),
        Command::Transport {
            distance_um,
            a_limit_m_s2,
            v_limit_m_s,
            profile,
            aod_center_mhz,
            aod_scale_um_per_mhz,
            out,
        } => cmd_transport(
            distance_um,
            a_limit_m_s2,
            v_limit_m_s,
            profile.into(),
            aod_center_mhz,
            aod_scale_um_per_mhz,
            out,
        ),
        Command::ChargeExchange { atom, ion } => cmd_charge_exchange(&atom, &ion),
        Command::Layout {
            fov_mm,
            pitch_um,
            ions,
            spacing_um,
            out,
        } => cmd_layout(fov_mm, pitch_um, ions, spacing_um, out),
        Command::VerifyProtocol {
            phase_rad,
            depolarizing_p,
            seed,
            mode,
            no_correction,
            out,
        } => cmd_verify_protocol(phase_rad, depolarizing_p, seed, mode, !no_correction, out),
        Command::Rate {
            gate,
            t_gate_us,
            transport_us,
            overhead_us,
        } => cmd_rate(gate, t_gate_us, transport_us, overhead_us),
        Command::Simulate { config, seed, out } => cmd_simulate(&config, seed, out),
        Command::ReproducePaper => cmd_reproduce_paper(),
    }
}

fn cmd_trap(
    power_mw: f64,
    waist_um: f64,
    wavelength_nm: f64,
    species_name: &str,
    polarizability_au: Option<f64>,
) -> Result<(), CliError> {
    if !(power_mw >= 0.0) || !power_mw.is_finite() {
        return Err(validation("--power-mw must be >= 0"));
    }
    require_positive("waist-um", waist_um)?;
    require_positive("wavelength-nm", wavelength_nm)?;
    let species = find_species(species_name)?;
    let params = TweezerParams {
        power: power_mw * 1e-3,
        waist: waist_um * 1e-6,
        wavelength: wavelength_nm * 1e-9,
        species,
        polarizability_au,
    };
    let profile = trap_profile(&params)?;
    let two_pi = std::f64::consts::TAU;
    println!("tweezer trap for {species_name}");
    println!("  power            {power_mw} mW");
    println!("  waist (1/e^2)    {waist_um} um");
    println!("  wavelength       {wavelength_nm} nm");
    println!(
        "  depth            {:.4e} J = {:.3} mK",
        profile.depth,
        profile.depth_millikelvin()
    );
    println!(
        "  omega_radial     2pi x {:.4} MHz",
        profile.omega_radial / two_pi / 1e6
    );
    println!(
        "  omega_axial      2pi x {:.4} MHz",
        profile.omega_axial / two_pi / 1e6
    );
    println!("  Rayleigh range   {:.3} um", profile.rayleigh_range * 1e6);
    println!(
        "  spill limit      {:.3e} m/s^2 (apply a safety factor before planning)",
        profile.max_acceleration
    );
    Ok(())
}

fn cmd_transport(
    distance_um: f64,
    a_limit: f64,
    v_limit: Option<f64>,
    profile: ProfileKind,
    aod_center_mhz: f64,
    aod_scale_um_per_mhz: f64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    if !(distance_um >= 0.0) || !distance_um.is_finite() {
        return Err(validation("--distance-um must be >= 0"));
    }
    require_positive("a-limit-m-s2", a_limit)?;
    require_positive("aod-center-mhz", aod_center_mhz)?;
    require_positive("aod-scale-um-per-mhz", aod_scale_um_per_mhz)?;
    let plan = plan_transport(
        distance_um * 1e-6,
        TransportConstraint { a_limit, v_limit },
        profile,
    )?;
    let waveform = emit_aod_waveform(
        &plan,
        aod_center_mhz * 1e6,
        aod_scale_um_per_mhz * 1e-12, // um/MHz -> m/Hz
    )?;
    println!("transport plan ({profile:?})");
    println!("  distance        {distance_um} um");
    println!("  duration        {:.4} us", plan.duration * 1e6);
    println!("  peak velocity   {:.4} m/s", plan.peak_velocity);
    println!("  peak accel      {:.4e} m/s^2", plan.peak_acceleration);
    if plan.duration > 0.0 {
        println!(
            "  speed-up over 0.55 um/us reference: {:.2}x",
            reference_speed_check(&plan)?
        );
    }
    let dir = out_dir(out);
    let mut manifest = RunManifest::new("transport", &dir, None, None);
    manifest.write("transport_plan.csv", &plan.to_csv())?;
    manifest.write("aod_waveform.csv", &waveform.to_csv())?;
    manifest.finish()?;
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn cmd_charge_exchange(atom_name: &str, ion_name: &str) -> Result<(), CliError> {
    let atom = find_species(atom_name)?;
    let ion = find_species(ion_name)?;
    let verdict = classify_charge_exchange(&atom, &ion)?;
    let word = match verdict.classification {
        ChargeExchangeClass::Endothermic => "endothermic (frozen out at ultracold energies)",
        ChargeExchangeClass::Exothermic => "exothermic (energetically allowed)",
        ChargeExchangeClass::Thermoneutral => "thermoneutral",
    };
    println!("charge exchange {atom_name} + {ion_name}");
    println!("  energy gap  {:+.2} cm^-1", verdict.energy_gap);
    println!("  verdict     {word}");
    Ok(())
}

fn cmd_layout(
    fov_mm: f64,
    pitch_um: f64,
    ions: usize,
    spacing_um: f64,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    require_positive("fov-mm", fov_mm)?;
    require_positive("pitch-um", pitch_um)?;
    require_positive("spacing-um", spacing_um)?;
    let chain = ChainSpec {
        num_ions: ions,
        ion_spacing: spacing_um * 1e-6,
    };
    let layout = pack_zones(fov_mm * 1e-3, pitch_um * 1e-6, chain)?;
    println!("chip layout");
    println!("  field of view   {fov_mm} mm");
    println!("  zone pitch      {pitch_um} um");
    println!("  chain           {ions} ions @ {spacing_um} um");
    println!("  zones packed    {}", layout.zone_count());
    println!("  total qubits    {}", layout.total_qubits());
    for zone in &layout.zones {
        println!(
            "    zone {:>2} at ({:+8.1} um, {:+8.1} um)",
            zone.id,
            zone.center.0 * 1e6,
            zone.center.1 * 1e6
        );
    }
    let dir = out_dir(out);
    let mut manifest = RunManifest::new("layout", &dir, None, None);
    manifest.write("layout.json", &layout.to_json()?)?;
    manifest.write("ion_positions.csv", &layout.ion_csv())?;
    manifest.finish()?;
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn cmd_verify_protocol(
    phase_rad: f64,
    depolarizing_p: f64,
    seed: u64,
    mode: ModeArg,
    correction: bool,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let protocol_mode = match mode {
        ModeArg::Pure => ProtocolMode::Trajectory,
        ModeArg::Mixed => ProtocolMode::DensityMatrix,
    };
    let result = run_messenger_protocol(
        phase_rad,
        GateErrorModel { depolarizing_p },
        seed,
        correction,
        protocol_mode,
    )?;
    println!("messenger protocol ({mode:?} mode, seed {seed})");
    println!("  gate phase        {phase_rad} rad");
    println!("  depolarizing p    {depolarizing_p}");
    println!("  atom outcome      {}", result.measurement_outcome);
    println!("  correction        {}", result.correction_applied);
    println!("  bell fidelity     {:.9}", result.bell_fidelity);
    let dir = out_dir(out);
    let mut manifest = RunManifest::new("verify-protocol", &dir, None, Some(seed));
    manifest.write("protocol_result.json", &result.to_json(true))?;
    manifest.finish()?;
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn cmd_rate(
    gate: GateArg,
    t_gate_us: Option<f64>,
    transport_us: f64,
    overhead_us: f64,
) -> Result<(), CliError> {
    if !(transport_us >= 0.0) || !(overhead_us >= 0.0) {
        return Err(validation("--transport-us and --overhead-us must be >= 0"));
    }
    let collisional_t = t_gate_us.map(|t| t * 1e-6).unwrap_or_else(|| {
        atomlink::gates::gate_duration(&GateSpec::Collisional(CollisionalGateSpec::default()))
    });
    let rydberg_t = t_gate_us.map(|t| t * 1e-6).unwrap_or_else(|| {
        atomlink::gates::gate_duration(&GateSpec::Rydberg(RydbergGateSpec::default()))
    });
    let rows: Vec<(&str, f64)> = match gate {
        GateArg::Collisional => vec![("collisional", collisional_t)],
        GateArg::Rydberg => vec![("rydberg", rydberg_t)],
        GateArg::Both => vec![("collisional", collisional_t), ("rydberg", rydberg_t)],
    };
    println!("gate          t_gate_us   transport_us  overhead_us  rate_per_s");
    for (name, t_gate) in rows {
        let rate = analytic_rate(t_gate, transport_us * 1e-6, overhead_us * 1e-6)?;
        println!(
            "{name:<12}  {:>9.3}   {transport_us:>12.3}  {overhead_us:>11.3}  {rate:>10.1}",
            t_gate * 1e6
        );
    }
    Ok(())
}

fn cmd_simulate(
    config_path: &PathBuf,
    seed: Option<u64>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| validation(format!("cannot read {}: {e}", config_path.display())))?;
    let mut config = SimConfig::from_json(&text)
        .map_err(|e| validation(format!("{}: {e}", config_path.display())))?;
    if let Some(seed) = seed {
        config.seed = seed;
    }
    let seed = config.seed;
    let sim = Simulation::new(config)?;
    let metrics = sim.run();
    println!("simulation finished (seed {seed})");
    println!("  submitted        {}", metrics.submitted);
    println!("  delivered pairs  {}", metrics.delivered_pairs);
    println!("  rejected         {}", metrics.rejected);
    println!("  elapsed          {:.6} s", metrics.elapsed);
    println!("  throughput       {:.1} pairs/s", metrics.throughput);
    println!("  mean latency     {:.1} us", metrics.mean_latency * 1e6);
    println!("  p95 latency      {:.1} us", metrics.p95_latency * 1e6);
    println!("  pair fidelity    {:.6}", metrics.mean_pair_fidelity);
    for (i, u) in metrics.messenger_utilization.iter().enumerate() {
        println!("  utilization[{i}]   {u:.3}");
    }
    let dir = out_dir(out);
    let mut manifest = RunManifest::new("simulate", &dir, Some(config_path), Some(seed));
    manifest.write("metrics.json", &metrics.to_json())?;
    manifest.write("events.csv", &metrics.event_log_csv())?;
    manifest.write("trace.csv", &metrics.trace_csv())?;
    manifest.finish()?;
    println!("artifacts in {}", dir.display());
    Ok(())
}

fn cmd_reproduce_paper() -> Result<(), CliError> {
    let results = checks::run_all();
    let mut all_pass = true;
    println!("reproduce-paper: headline-number checks\n");
    for check in &results {
        let status = if check.pass { "PASS" } else { "FAIL" };
        all_pass &= check.pass;
        println!("[{status}] {}. {} -- {}", check.id, check.name, check.detail);
    }
    println!();
    if all_pass {
        println!("all {} checks passed", results.len());
        Ok(())
    } else {
        Err(validation("one or more checks failed"))
    }
}
