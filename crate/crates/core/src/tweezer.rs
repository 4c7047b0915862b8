//! Gaussian-beam optical tweezer model and coherent transport planning.
//!
//! The trap model uses the standard single-beam dipole-trap relations for a
//! focused Gaussian beam of power `P`, 1/e² waist `w₀` and wavelength `λ`:
//!
//! - peak intensity `I₀ = 2P/(π w₀²)`
//! - depth `U₀ = α I₀ / (2 ε₀ c)` with `α` the (SI) polarizability
//! - Rayleigh range `z_R = π w₀²/λ`
//! - radial / axial trap frequencies `ω_r = √(4U₀/(m w₀²))`,
//!   `ω_z = √(2U₀/(m z_R²))`
//! - spill-limited acceleration `a_max = 2U₀ e^(−1/2)/(m w₀)`, the peak
//!   restoring force of the radial Gaussian profile divided by the mass.
//!
//! Transport plans are minimum-duration trajectories under an acceleration
//! (and optionally velocity) bound, emitted as dense samples suitable for
//! programming an AOD drive-frequency sweep. Dynamic trap-power changes
//! around a plan are modeled as instantaneous profile switches at the plan
//! boundaries. Motional heating is not modeled; adiabaticity enters only
//! through the caller's acceleration limit.

use serde::{Deserialize, Serialize};

use crate::constants::{
    joule_to_millikelvin, polarizability_au_to_si, SPEED_OF_LIGHT, VACUUM_PERMITTIVITY,
};
use crate::error::{Error, Result};
use crate::species::{Kind, SpeciesRecord};

/// Dimensionless safety factor callers conventionally apply to the spill
/// limit before using it as a transport acceleration bound.
pub const SPILL_SAFETY_FACTOR: f64 = 0.5;

/// Fixed duration budgeted for an axial (varifocal) transport hop, s.
/// Axial moves carry no trajectory detail, only this time cost.
pub const AXIAL_TRANSPORT_TIME: f64 = 30e-6;

/// Average transport speed of the reference Rb demonstration, m/s
/// (0.55 μm/μs).
pub const REFERENCE_AVERAGE_SPEED: f64 = 0.55;

/// Minimum number of sample intervals per transport plan. Chosen so
/// trapezoid-rule double integration of the sampled acceleration closes to
/// well within 0.5% of the commanded distance.
pub const PLAN_SAMPLE_INTERVALS: usize = 240;

/// Tweezer beam parameters for one trapped species.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TweezerParams {
    /// Beam power, W.
    pub power: f64,
    /// 1/e² intensity radius at the focus, m.
    pub waist: f64,
    /// Laser wavelength, m.
    pub wavelength: f64,
    /// The trapped neutral atom.
    pub species: SpeciesRecord,
    /// Polarizability override, atomic units. When absent the species'
    /// stored 1064 nm value is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polarizability_au: Option<f64>,
}

/// Derived trap quantities.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TrapProfile {
    /// Trap depth U₀, J.
    pub depth: f64,
    /// Radial trap frequency, rad/s.
    pub omega_radial: f64,
    /// Axial trap frequency, rad/s.
    pub omega_axial: f64,
    /// Rayleigh range z_R, m.
    pub rayleigh_range: f64,
    /// Spill-limited maximum acceleration, m/s².
    pub max_acceleration: f64,
}

impl TrapProfile {
    /// Trap depth expressed in millikelvin.
    pub fn depth_millikelvin(&self) -> f64 {
        joule_to_millikelvin(self.depth)
    }
}

/// Compute the trap profile for the given beam and species.
pub fn trap_profile(params: &TweezerParams) -> Result<TrapProfile> {
    if params.species.kind != Kind::NeutralAtom {
        return Err(Error::config(format!(
            "{} is not a tweezer-trappable neutral atom",
            params.species.name
        )));
    }
    if !(params.power >= 0.0) {
        return Err(Error::argument("power must be >= 0"));
    }
    if !(params.waist > 0.0) {
        return Err(Error::argument("waist must be > 0"));
    }
    if !(params.wavelength > 0.0) {
        return Err(Error::argument("wavelength must be > 0"));
    }
    let alpha_au = params
        .polarizability_au
        .or(params.species.polarizability_1064)
        .ok_or_else(|| {
            Error::config(format!(
                "{} has no polarizability for tweezer trapping",
                params.species.name
            ))
        })?;
    if !(alpha_au > 0.0) {
        return Err(Error::config("polarizability must be > 0"));
    }

    let mass = params.species.mass;
    let waist = params.waist;
    let peak_intensity = 2.0 * params.power / (std::f64::consts::PI * waist * waist);
    let depth = polarizability_au_to_si(alpha_au) * peak_intensity
        / (2.0 * VACUUM_PERMITTIVITY * SPEED_OF_LIGHT);
    let rayleigh_range = std::f64::consts::PI * waist * waist / params.wavelength;
    let omega_radial = (4.0 * depth / (mass * waist * waist)).sqrt();
    let omega_axial = (2.0 * depth / (mass * rayleigh_range * rayleigh_range)).sqrt();
    let max_acceleration = 2.0 * depth * (-0.5f64).exp() / (mass * waist);
    Ok(TrapProfile {
        depth,
        omega_radial,
        omega_axial,
        rayleigh_range,
        max_acceleration,
    })
}

/// Shape of a transport trajectory.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileKind {
    /// Maximum acceleration, then maximum deceleration. Time-optimal.
    BangBang,
    /// Bang-bang with a constant-velocity coast when the velocity limit binds.
    TrapezoidVelocity,
    /// Smooth 10-15-6 polynomial, scaled so its acceleration peak hits the limit.
    MinimumJerk,
}

/// Kinematic constraints for the planner.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct TransportConstraint {
    /// Acceleration bound, m/s². Must be positive.
    pub a_limit: f64,
    /// Optional velocity bound, m/s.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_limit: Option<f64>,
}

/// One sampled point of a transport plan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanSample {
    pub t: f64,
    pub x: f64,
    pub v: f64,
    pub a: f64,
}

/// A planned point-to-point tweezer move.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TransportPlan {
    pub distance: f64,
    pub duration: f64,
    pub profile_kind: ProfileKind,
    pub samples: Vec<PlanSample>,
    pub peak_acceleration: f64,
    pub peak_velocity: f64,
}

// Piecewise-constant-acceleration description used for bang-bang and
// trapezoid profiles: per phase (duration, acceleration), with closed-form
// position/velocity at the phase entry.
struct Phase {
    duration: f64,
    accel: f64,
    x0: f64,
    v0: f64,
}

// Sample each phase on its own uniform grid, including both phase ends.
// Interior phase boundaries therefore appear twice, once with each one-sided
// acceleration limit; that makes the sampled profile an exact
// piecewise-linear record, and trapezoid double integration closes to
// machine precision.
fn sample_phases(phases: &[Phase], total: f64) -> Vec<PlanSample> {
    let mut samples = Vec::new();
    let mut t_base = 0.0;
    for phase in phases {
        let n = ((phase.duration * PLAN_SAMPLE_INTERVALS as f64 / total).ceil() as usize).max(1);
        for k in 0..=n {
            let dt = phase.duration * k as f64 / n as f64;
            samples.push(PlanSample {
                t: t_base + dt,
                x: phase.x0 + phase.v0 * dt + 0.5 * phase.accel * dt * dt,
                v: phase.v0 + phase.accel * dt,
                a: phase.accel,
            });
        }
        t_base += phase.duration;
    }
    samples
}

/// Plan the minimum-duration move of `distance` under `constraint` with the
/// requested profile shape.
pub fn plan_transport(
    distance: f64,
    constraint: TransportConstraint,
    profile_kind: ProfileKind,
) -> Result<TransportPlan> {
    if !(distance >= 0.0) || !distance.is_finite() {
        return Err(Error::argument("distance must be >= 0 and finite"));
    }
    if !(constraint.a_limit > 0.0) || !constraint.a_limit.is_finite() {
        return Err(Error::argument("a_limit must be > 0 and finite"));
    }
    if let Some(v) = constraint.v_limit {
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::argument("v_limit must be > 0 when given"));
        }
    }
    if distance == 0.0 {
        return Ok(TransportPlan {
            distance,
            duration: 0.0,
            profile_kind,
            samples: vec![PlanSample {
                t: 0.0,
                x: 0.0,
                v: 0.0,
                a: 0.0,
            }],
            peak_acceleration: 0.0,
            peak_velocity: 0.0,
        });
    }

    let a = constraint.a_limit;
    match profile_kind {
        ProfileKind::BangBang => {
            let duration = 2.0 * (distance / a).sqrt();
            let half = duration / 2.0;
            let v_peak = a * half;
            let phases = [
                Phase {
                    duration: half,
                    accel: a,
                    x0: 0.0,
                    v0: 0.0,
                },
                Phase {
                    duration: half,
                    accel: -a,
                    x0: distance / 2.0,
                    v0: v_peak,
                },
            ];
            let mut samples = sample_phases(&phases, duration);
            pin_endpoint(&mut samples, duration, distance);
            Ok(TransportPlan {
                distance,
                duration,
                profile_kind,
                samples,
                peak_acceleration: a,
                peak_velocity: v_peak,
            })
        }
        ProfileKind::TrapezoidVelocity => {
            let v_bb = (distance * a).sqrt();
            let v = match constraint.v_limit {
                Some(v_lim) if v_lim < v_bb => v_lim,
                _ => v_bb,
            };
            let t_ramp = v / a;
            let d_ramp = 0.5 * v * v / a;
            let d_coast = (distance - 2.0 * d_ramp).max(0.0);
            let t_coast = d_coast / v;
            let duration = 2.0 * t_ramp + t_coast;
            let mut phases = vec![Phase {
                duration: t_ramp,
                accel: a,
                x0: 0.0,
                v0: 0.0,
            }];
            if t_coast > 0.0 {
                phases.push(Phase {
                    duration: t_coast,
                    accel: 0.0,
                    x0: d_ramp,
                    v0: v,
                });
            }
            phases.push(Phase {
                duration: t_ramp,
                accel: -a,
                x0: d_ramp + d_coast,
                v0: v,
            });
            let mut samples = sample_phases(&phases, duration);
            pin_endpoint(&mut samples, duration, distance);
            Ok(TransportPlan {
                distance,
                duration,
                profile_kind,
                samples,
                peak_acceleration: a,
                peak_velocity: v,
            })
        }
        ProfileKind::MinimumJerk => {
            // x(s) = d (10s³ − 15s⁴ + 6s⁵); the acceleration extremum is
            // 10d/(√3 T²), so T = √(10d/(√3 a)) saturates the limit.
            let duration = (10.0 * distance / (3.0f64.sqrt() * a)).sqrt();
            let n = PLAN_SAMPLE_INTERVALS;
            let mut samples = Vec::with_capacity(n + 1);
            for k in 0..=n {
                let s = k as f64 / n as f64;
                let t = duration * s;
                let s2 = s * s;
                let s3 = s2 * s;
                let x = distance * (10.0 * s3 - 15.0 * s2 * s2 + 6.0 * s2 * s3);
                let v = distance / duration * (30.0 * s2 - 60.0 * s3 + 30.0 * s2 * s2);
                let acc = distance / (duration * duration)
                    * (60.0 * s - 180.0 * s2 + 120.0 * s3);
                samples.push(PlanSample {
                    t,
                    x,
                    v,
                    a: acc.clamp(-a, a),
                });
            }
            let peak_acceleration = samples.iter().map(|s| s.a.abs()).fold(0.0, f64::max);
            let peak_velocity = 15.0 * distance / (8.0 * duration);
            pin_endpoint(&mut samples, duration, distance);
            Ok(TransportPlan {
                distance,
                duration,
                profile_kind,
                samples,
                peak_acceleration,
                peak_velocity,
            })
        }
    }
}

// Closed-form phase arithmetic leaves the final sample within a few ulp of
// (duration, distance, 0); pin it so downstream equality checks are exact.
fn pin_endpoint(samples: &mut [PlanSample], duration: f64, distance: f64) {
    if let Some(last) = samples.last_mut() {
        last.t = duration;
        last.x = distance;
        last.v = 0.0;
    }
    if let Some(first) = samples.first_mut() {
        first.t = 0.0;
        first.x = 0.0;
        first.v = 0.0;
    }
}

impl TransportPlan {
    /// Average speed, m/s.
    pub fn average_speed(&self) -> f64 {
        if self.duration == 0.0 {
            0.0
        } else {
            self.distance / self.duration
        }
    }

    /// CSV export with header `t,x,v,a`, SI units.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,x,v,a\n");
        for s in &self.samples {
            out.push_str(&format!("{},{},{},{}\n", s.t, s.x, s.v, s.a));
        }
        out
    }
}

/// Speed-up factor of a plan over the 0.55 μm/μs reference demonstration.
pub fn reference_speed_check(plan: &TransportPlan) -> Result<f64> {
    if plan.duration <= 0.0 {
        return Err(Error::argument("plan duration must be > 0"));
    }
    Ok(plan.average_speed() / REFERENCE_AVERAGE_SPEED)
}

/// AOD drive-frequency waveform generated from a transport plan.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AodWaveform {
    /// (t, drive frequency) pairs, s and Hz.
    pub samples: Vec<(f64, f64)>,
    pub center_frequency: f64,
    /// Deflection per unit drive-frequency offset, m/Hz.
    pub scale: f64,
}

impl AodWaveform {
    /// CSV export with header `t,f`, SI units.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,f\n");
        for (t, f) in &self.samples {
            out.push_str(&format!("{t},{f}\n"));
        }
        out
    }

    /// Reconstruct the tweezer positions encoded by this waveform.
    pub fn positions(&self) -> Vec<(f64, f64)> {
        self.samples
            .iter()
            .map(|&(t, f)| (t, (f - self.center_frequency) * self.scale))
            .collect()
    }
}

/// Map a transport plan onto an AOD drive-frequency sweep:
/// `f(t) = center + x(t)/scale`.
pub fn emit_aod_waveform(
    plan: &TransportPlan,
    center_frequency: f64,
    scale: f64,
) -> Result<AodWaveform> {
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::argument("AOD scale must be nonzero"));
    }
    let samples = plan
        .samples
        .iter()
        .map(|s| (s.t, center_frequency + s.x / scale))
        .collect();
    Ok(AodWaveform {
        samples,
        center_frequency,
        scale,
    })
}
