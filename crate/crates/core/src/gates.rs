//! Parametric models of the two candidate atom-ion entangling gates: the
//! collisional phase gate and the Rydberg blockade gate.
//!
//! Both models are budget-level. The collisional gate takes the microscopic
//! loss-rate coefficient `K_loss` and pair density `n` as inputs and demands
//! that the loss rate `K_loss·n` stay a configurable `margin` below the gate
//! rate `1/t_gate`. The Rydberg model captures only the net-core-charge
//! scaling of the van der Waals interaction: relative to an atom-atom
//! reference C₆, an atom-ion pair is weaker by 2⁻³ and an ion-ion pair by
//! 2⁻⁶ (net core charge Z = 2 for singly charged ions).

use serde::{Deserialize, Serialize};

use crate::constants::{HBAR, PLANCK};
use crate::error::{Error, Result};

/// Default collisional gate time, s.
pub const COLLISIONAL_GATE_TIME: f64 = 300e-6;
/// Representative Rydberg gate time (sub-microsecond regime), s.
pub const RYDBERG_GATE_TIME: f64 = 0.5e-6;
/// Reference atom-atom van der Waals coefficient, J·m⁶ (h × 50 GHz·μm⁶,
/// typical of principal quantum numbers near 50).
pub const REFERENCE_C6: f64 = PLANCK * 50e9 * 1e-36;

/// Collisional phase-gate parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct CollisionalGateSpec {
    /// Gate duration, s.
    pub t_gate: f64,
    /// Accumulated controlled phase, rad. π gives a Cz gate.
    pub phase: f64,
    /// Fidelity of the ideal-loss gate, in (0, 1].
    pub base_fidelity: f64,
    /// Microscopic loss-rate coefficient, m³/s.
    pub k_loss: f64,
    /// Relative pair density at closest approach, m⁻³.
    pub density: f64,
    /// Required ratio between the gate rate and the loss rate.
    pub margin: f64,
}

impl Default for CollisionalGateSpec {
    fn default() -> Self {
        CollisionalGateSpec {
            t_gate: COLLISIONAL_GATE_TIME,
            phase: std::f64::consts::PI,
            base_fidelity: 0.9999,
            k_loss: 0.0,
            density: 0.0,
            margin: 100.0,
        }
    }
}

impl CollisionalGateSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_gate > 0.0) {
            return Err(Error::argument("t_gate must be > 0"));
        }
        if !(self.base_fidelity > 0.0 && self.base_fidelity <= 1.0) {
            return Err(Error::argument("base_fidelity must be in (0, 1]"));
        }
        if !(self.k_loss >= 0.0) || !(self.density >= 0.0) {
            return Err(Error::argument("k_loss and density must be >= 0"));
        }
        if !(self.margin >= 1.0) {
            return Err(Error::argument("margin must be >= 1"));
        }
        Ok(())
    }
}

/// Which particles share the Rydberg excitation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairKind {
    AtomAtom,
    AtomIon,
    IonIon,
}

impl PairKind {
    /// Multiplicative C₆ suppression relative to the atom-atom reference.
    pub fn charge_scaling(self) -> f64 {
        match self {
            PairKind::AtomAtom => 1.0,
            PairKind::AtomIon => 1.0 / 8.0,
            PairKind::IonIon => 1.0 / 64.0,
        }
    }
}

/// Rydberg blockade-gate parameters.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RydbergGateSpec {
    /// Gate duration, s.
    pub t_gate: f64,
    /// Atom-atom van der Waals coefficient at the chosen principal quantum
    /// number, J·m⁶.
    pub c6_reference: f64,
    pub pair_kind: PairKind,
    /// Rydberg Rabi frequency Ω, rad/s.
    pub rabi_frequency: f64,
    /// Particle separation during the gate, m.
    pub separation: f64,
}

impl Default for RydbergGateSpec {
    fn default() -> Self {
        RydbergGateSpec {
            t_gate: RYDBERG_GATE_TIME,
            c6_reference: REFERENCE_C6,
            pair_kind: PairKind::AtomIon,
            rabi_frequency: std::f64::consts::TAU * 1e6,
            separation: 1e-6,
        }
    }
}

impl RydbergGateSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("t_gate", self.t_gate),
            ("c6_reference", self.c6_reference),
            ("rabi_frequency", self.rabi_frequency),
            ("separation", self.separation),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::argument(format!("{name} must be > 0")));
            }
        }
        Ok(())
    }
}

/// Either entangling gate, as configured for a run.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum GateSpec {
    Collisional(CollisionalGateSpec),
    Rydberg(RydbergGateSpec),
}

/// Duration of one entangling gate. Defaults reproduce the 300 μs
/// collisional and 0.5 μs Rydberg budgets.
pub fn gate_duration(spec: &GateSpec) -> f64 {
    match spec {
        GateSpec::Collisional(s) => s.t_gate,
        GateSpec::Rydberg(s) => s.t_gate,
    }
}

/// Feasibility and fidelity budget for one gate instance.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GateOutcome {
    pub feasible: bool,
    pub effective_fidelity: f64,
    pub loss_probability: f64,
    pub diagnostics: String,
}

/// Evaluate the collisional-gate loss budget.
///
/// The pair is lost with probability `1 − exp(−K_loss·n·t_gate)`; the gate is
/// feasible when the loss rate is at least `margin` times slower than the
/// gate rate, i.e. `K_loss·n·t_gate·margin ≤ 1`.
pub fn collisional_budget(spec: &CollisionalGateSpec) -> Result<GateOutcome> {
    spec.validate()?;
    let loss_rate = spec.k_loss * spec.density;
    let loss_probability = 1.0 - (-loss_rate * spec.t_gate).exp();
    let feasible = loss_rate * spec.t_gate * spec.margin <= 1.0;
    let effective_fidelity = spec.base_fidelity * (1.0 - loss_probability);
    let diagnostics = format!(
        "loss rate K*n = {loss_rate:.3e} /s vs gate rate {:.3e} /s (margin {})",
        1.0 / spec.t_gate,
        spec.margin
    );
    Ok(GateOutcome {
        feasible,
        effective_fidelity,
        loss_probability,
        diagnostics,
    })
}

/// van der Waals interaction energy `C₆_eff / r⁶` with the pair-kind charge
/// scaling applied, J.
pub fn vdw_strength(c6_reference: f64, pair_kind: PairKind, separation: f64) -> Result<f64> {
    if !(separation > 0.0) {
        return Err(Error::argument("separation must be > 0"));
    }
    Ok(c6_reference * pair_kind.charge_scaling() / separation.powi(6))
}

/// Blockade radius `r_b = (C₆_eff/(ħΩ))^(1/6)`, m. The blockade condition at
/// separation `d` is `d < r_b`.
pub fn blockade_radius(spec: &RydbergGateSpec) -> Result<f64> {
    if !(spec.rabi_frequency > 0.0) {
        return Err(Error::argument("rabi_frequency must be > 0"));
    }
    let c6_eff = spec.c6_reference * spec.pair_kind.charge_scaling();
    Ok((c6_eff / (HBAR * spec.rabi_frequency)).powf(1.0 / 6.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn lossless_gate_is_ideal() {
        let outcome = collisional_budget(&CollisionalGateSpec::default()).unwrap();
        assert_eq!(outcome.loss_probability, 0.0);
        assert_eq!(outcome.effective_fidelity, 0.9999);
        assert!(outcome.feasible);
    }

    #[test]
    fn boundary_loss_budget() {
        // K*n exactly at the margin-100 boundary: still feasible,
        // loss = 1 - exp(-0.01)
        let spec = CollisionalGateSpec {
            k_loss: 1.0,
            density: 1.0 / (100.0 * COLLISIONAL_GATE_TIME),
            ..CollisionalGateSpec::default()
        };
        let outcome = collisional_budget(&spec).unwrap();
        assert!(outcome.feasible);
        assert_relative_eq!(
            outcome.loss_probability,
            0.009950166250832004,
            max_relative = 1e-12
        );

        // loss rate equal to the gate rate violates the margin
        let spec = CollisionalGateSpec {
            k_loss: 1.0,
            density: 1.0 / COLLISIONAL_GATE_TIME,
            ..CollisionalGateSpec::default()
        };
        assert!(!collisional_budget(&spec).unwrap().feasible);
    }

    #[test]
    fn feasibility_flips_exactly_at_the_margin() {
        for (eps, expect) in [(-1e-6, true), (1e-6, false)] {
            let spec = CollisionalGateSpec {
                k_loss: 1.0,
                density: (1.0 + eps) / (100.0 * COLLISIONAL_GATE_TIME),
                ..CollisionalGateSpec::default()
            };
            assert_eq!(collisional_budget(&spec).unwrap().feasible, expect, "eps={eps}");
        }
    }

    #[test]
    fn charge_scaling_ratios_are_exact() {
        let c6 = REFERENCE_C6;
        let r = 2e-6;
        let aa = vdw_strength(c6, PairKind::AtomAtom, r).unwrap();
        let ai = vdw_strength(c6, PairKind::AtomIon, r).unwrap();
        let ii = vdw_strength(c6, PairKind::IonIon, r).unwrap();
        assert_eq!(ai / aa, 1.0 / 8.0);
        assert_eq!(ii / aa, 1.0 / 64.0);
        assert_eq!(aa, c6 / r.powi(6));
    }

    #[test]
    fn blockade_radius_reference_values() {
        // atom-atom: C6 = h x 50 GHz um^6, Omega = 2pi x 1 MHz -> 6.07 um
        let spec = RydbergGateSpec {
            pair_kind: PairKind::AtomAtom,
            ..RydbergGateSpec::default()
        };
        let rb = blockade_radius(&spec).unwrap();
        assert_relative_eq!(rb, 6.069622310649005e-6, max_relative = 1e-9);

        // atom-ion shrinks by 8^(1/6) = sqrt(2) and stays above 1 um
        let spec = RydbergGateSpec::default();
        let rb_ai = blockade_radius(&spec).unwrap();
        assert_relative_eq!(rb / rb_ai, 8f64.powf(1.0 / 6.0), max_relative = 1e-12);
        assert!(rb_ai > 1e-6);

        // definitional point: C6_eff = hbar*Omega*(1 m)^6 -> r_b = 1 m
        let spec = RydbergGateSpec {
            c6_reference: HBAR * 1e6,
            pair_kind: PairKind::AtomAtom,
            rabi_frequency: 1e6,
            ..RydbergGateSpec::default()
        };
        assert_relative_eq!(blockade_radius(&spec).unwrap(), 1.0, max_relative = 1e-12);
    }

    #[test]
    fn gate_durations_default_to_the_budgets() {
        assert_eq!(
            gate_duration(&GateSpec::Collisional(CollisionalGateSpec::default())),
            300e-6
        );
        assert_eq!(
            gate_duration(&GateSpec::Rydberg(RydbergGateSpec::default())),
            0.5e-6
        );
        let custom = CollisionalGateSpec {
            t_gate: 10e-6,
            ..CollisionalGateSpec::default()
        };
        assert_eq!(gate_duration(&GateSpec::Collisional(custom)), 10e-6);
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let spec = CollisionalGateSpec {
            t_gate: 0.0,
            ..CollisionalGateSpec::default()
        };
        assert!(collisional_budget(&spec).is_err());
        let spec = CollisionalGateSpec {
            margin: 0.5,
            ..CollisionalGateSpec::default()
        };
        assert!(collisional_budget(&spec).is_err());
        assert!(vdw_strength(1.0, PairKind::AtomAtom, 0.0).is_err());
        let spec = RydbergGateSpec {
            rabi_frequency: -1.0,
            ..RydbergGateSpec::default()
        };
        assert!(blockade_radius(&spec).is_err());
    }

    proptest! {
        #[test]
        fn loss_monotonicity(
            k in 0.0..1e-14f64,
            n in 0.0..1e16f64,
            t in 1e-6..1e-2f64,
            factor in 1.01..10.0f64,
        ) {
            let base = CollisionalGateSpec { k_loss: k, density: n, t_gate: t, ..Default::default() };
            let b0 = collisional_budget(&base).unwrap();
            for grown in [
                CollisionalGateSpec { k_loss: k * factor, ..base },
                CollisionalGateSpec { density: n * factor, ..base },
                CollisionalGateSpec { t_gate: t * factor, ..base },
            ] {
                let b1 = collisional_budget(&grown).unwrap();
                prop_assert!(b1.loss_probability >= b0.loss_probability);
                prop_assert!(b1.effective_fidelity <= b0.effective_fidelity);
            }
        }

        #[test]
        fn vdw_distance_scaling(c6 in 1e-62..1e-56f64, r in 0.2e-6..5e-6f64) {
            let near = vdw_strength(c6, PairKind::AtomIon, r).unwrap();
            let far = vdw_strength(c6, PairKind::AtomIon, 2.0 * r).unwrap();
            prop_assert!((near / far - 64.0).abs() < 1e-9);
            prop_assert!(far < near);
        }

        #[test]
        fn blockade_radius_scale_invariance(
            c6 in 1e-62..1e-56f64,
            omega in 1e4..1e9f64,
            c in 0.01..100.0f64,
        ) {
            let spec = RydbergGateSpec {
                c6_reference: c6, rabi_frequency: omega, ..RydbergGateSpec::default()
            };
            let scaled = RydbergGateSpec {
                c6_reference: c * c6, rabi_frequency: c * omega, ..spec
            };
            let r1 = blockade_radius(&spec).unwrap();
            let r2 = blockade_radius(&scaled).unwrap();
            prop_assert!((r1 / r2 - 1.0).abs() < 1e-12);
        }
    }
}
