//! Exact small-system quantum engine: dense state vectors and density
//! matrices, used as the oracle for the messenger entanglement protocol.
//!
//! Conventions, fixed across the crate:
//! - little-endian basis labeling: basis index `b` has qubit `q` in state
//!   `(b >> q) & 1`;
//! - protocol qubits: index 0 = ion 1, index 1 = ion 2, index 2 = atom;
//! - controlled phase applies `e^(−iφ)` to the `|11⟩` component;
//! - gate errors are two-qubit depolarizing channels after each entangling
//!   gate, with strength `p` related to gate fidelity by `F = 1 − 15p/16`.
//!
//! The protocol itself prepares all three qubits in `|+⟩`, applies the
//! controlled-phase gate between the atom and each ion in turn, rotates the
//! atom back with a Hadamard and measures it. Outcome 0 leaves the ions in
//! Φ⁺, outcome 1 in Ψ⁺; a feed-forward X on ion 2 maps outcome 1 onto Φ⁺.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};

/// Cap on state-vector size (2^14 amplitudes ≈ 0.26 MB).
pub const MAX_PURE_QUBITS: usize = 14;
/// Cap on density-matrix size (2^7 × 2^7 complex ≈ 0.26 MB).
pub const MAX_MIXED_QUBITS: usize = 7;

/// Protocol qubit indices.
pub const ION1: usize = 0;
pub const ION2: usize = 1;
pub const ATOM: usize = 2;

/// Single- and two-qubit gates understood by the engine.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H,
    X,
    Z,
    /// Controlled phase: multiplies the `|11⟩` component by `e^(−iφ)`.
    CPhase(f64),
}

impl Gate {
    fn arity(self) -> usize {
        match self {
            Gate::H | Gate::X | Gate::Z => 1,
            Gate::CPhase(_) => 2,
        }
    }

    // U† for use on the column side of ρ → UρU†.
    fn dagger(self) -> Gate {
        match self {
            Gate::CPhase(phi) => Gate::CPhase(-phi),
            other => other,
        }
    }
}

fn check_targets(num_qubits: usize, gate: Gate, targets: &[usize]) -> Result<()> {
    if targets.len() != gate.arity() {
        return Err(Error::argument(format!(
            "{gate:?} takes {} target(s), got {}",
            gate.arity(),
            targets.len()
        )));
    }
    for &t in targets {
        if t >= num_qubits {
            return Err(Error::argument(format!(
                "target qubit {t} out of range for {num_qubits} qubits"
            )));
        }
    }
    if targets.len() == 2 && targets[0] == targets[1] {
        return Err(Error::argument("two-qubit gate targets must be distinct"));
    }
    Ok(())
}

// Apply `gate` to a dense amplitude vector.
fn apply_to_vector(amps: &mut [Complex64], num_qubits: usize, gate: Gate, targets: &[usize]) {
    match gate {
        Gate::H => {
            let mask = 1usize << targets[0];
            let inv_sqrt2 = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            for i in 0..amps.len() {
                if i & mask == 0 {
                    let a0 = amps[i];
                    let a1 = amps[i | mask];
                    amps[i] = inv_sqrt2 * (a0 + a1);
                    amps[i | mask] = inv_sqrt2 * (a0 - a1);
                }
            }
        }
        Gate::X => {
            let mask = 1usize << targets[0];
            for i in 0..amps.len() {
                if i & mask == 0 {
                    amps.swap(i, i | mask);
                }
            }
        }
        Gate::Z => {
            let mask = 1usize << targets[0];
            for (i, a) in amps.iter_mut().enumerate() {
                if i & mask != 0 {
                    *a = -*a;
                }
            }
        }
        Gate::CPhase(phi) => {
            let mask = (1usize << targets[0]) | (1usize << targets[1]);
            let phase = Complex64::from_polar(1.0, -phi);
            for (i, a) in amps.iter_mut().enumerate() {
                if i & mask == mask {
                    *a *= phase;
                }
            }
        }
    }
    let _ = num_qubits;
}

/// A normalized pure state of up to [`MAX_PURE_QUBITS`] qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// The all-zeros computational basis state.
    pub fn zero(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_PURE_QUBITS {
            return Err(Error::argument(format!(
                "num_qubits must be in 1..={MAX_PURE_QUBITS}"
            )));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << num_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(PureState {
            num_qubits,
            amplitudes,
        })
    }

    /// Build a state from explicit amplitudes; must be normalized to 1e-10.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if !len.is_power_of_two() || len < 2 {
            return Err(Error::argument("amplitude count must be a power of two"));
        }
        let num_qubits = len.trailing_zeros() as usize;
        if num_qubits > MAX_PURE_QUBITS {
            return Err(Error::argument(format!(
                "num_qubits must be <= {MAX_PURE_QUBITS}"
            )));
        }
        let state = PureState {
            num_qubits,
            amplitudes,
        };
        if state.norm_deviation() > 1e-10 {
            return Err(Error::argument("state is not normalized"));
        }
        Ok(state)
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// |Σ|aᵢ|² − 1|.
    pub fn norm_deviation(&self) -> f64 {
        (self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs()
    }

    pub fn apply_gate(&mut self, gate: Gate, targets: &[usize]) -> Result<()> {
        check_targets(self.num_qubits, gate, targets)?;
        apply_to_vector(&mut self.amplitudes, self.num_qubits, gate, targets);
        Ok(())
    }

    /// Probability of reading `outcome` on qubit `q`.
    pub fn measure_probability(&self, q: usize, outcome: u8) -> Result<f64> {
        if q >= self.num_qubits {
            return Err(Error::argument("qubit out of range"));
        }
        let mask = 1usize << q;
        let want = if outcome == 0 { 0 } else { mask };
        Ok(self
            .amplitudes
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == want)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Project qubit `q` onto `outcome`, renormalize and drop the qubit.
    /// Returns the branch probability together with the reduced state.
    pub fn collapse_qubit(&self, q: usize, outcome: u8) -> Result<(f64, PureState)> {
        let prob = self.measure_probability(q, outcome)?;
        if prob <= 1e-300 {
            return Err(Error::argument("branch has zero probability"));
        }
        let mask = 1usize << q;
        let want = if outcome == 0 { 0 } else { mask };
        let low = mask - 1;
        let norm = prob.sqrt();
        let mut reduced = vec![Complex64::new(0.0, 0.0); 1 << (self.num_qubits - 1)];
        for (i, a) in self.amplitudes.iter().enumerate() {
            if i & mask == want {
                let j = (i & low) | ((i >> 1) & !low);
                reduced[j] = a / norm;
            }
        }
        Ok((
            prob,
            PureState {
                num_qubits: self.num_qubits - 1,
                amplitudes: reduced,
            },
        ))
    }

    /// Fidelity |⟨B|ψ⟩|² against a two-qubit Bell state.
    pub fn bell_fidelity(&self, target: BellState) -> Result<f64> {
        if self.num_qubits != 2 {
            return Err(Error::argument("bell_fidelity needs exactly 2 qubits"));
        }
        let b = target.amplitudes();
        let overlap: Complex64 = b
            .iter()
            .zip(&self.amplitudes)
            .map(|(bi, ai)| bi.conj() * ai)
            .sum();
        Ok(overlap.norm_sqr())
    }
}

/// A density matrix over up to [`MAX_MIXED_QUBITS`] qubits, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedState {
    num_qubits: usize,
    elements: Vec<Complex64>,
}

impl MixedState {
    pub fn from_pure(state: &PureState) -> Result<Self> {
        if state.num_qubits > MAX_MIXED_QUBITS {
            return Err(Error::argument(format!(
                "density matrices support up to {MAX_MIXED_QUBITS} qubits"
            )));
        }
        let dim = 1 << state.num_qubits;
        let mut elements = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                elements[r * dim + c] = state.amplitudes[r] * state.amplitudes[c].conj();
            }
        }
        Ok(MixedState {
            num_qubits: state.num_qubits,
            elements,
        })
    }

    /// Maximally mixed state I/2ⁿ.
    pub fn maximally_mixed(num_qubits: usize) -> Result<Self> {
        if num_qubits == 0 || num_qubits > MAX_MIXED_QUBITS {
            return Err(Error::argument(format!(
                "num_qubits must be in 1..={MAX_MIXED_QUBITS}"
            )));
        }
        let dim = 1 << num_qubits;
        let mut elements = vec![Complex64::new(0.0, 0.0); dim * dim];
        for r in 0..dim {
            elements[r * dim + r] = Complex64::new(1.0 / dim as f64, 0.0);
        }
        Ok(MixedState {
            num_qubits,
            elements,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    fn dim(&self) -> usize {
        1 << self.num_qubits
    }

    pub fn element(&self, row: usize, col: usize) -> Complex64 {
        self.elements[row * self.dim() + col]
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|r| self.element(r, r)).sum()
    }

    pub fn trace_deviation(&self) -> f64 {
        (self.trace() - Complex64::new(1.0, 0.0)).norm()
    }

    /// Largest elementwise deviation from ρ = ρ†.
    pub fn hermiticity_deviation(&self) -> f64 {
        let dim = self.dim();
        let mut worst: f64 = 0.0;
        for r in 0..dim {
            for c in 0..dim {
                worst = worst.max((self.element(r, c) - self.element(c, r).conj()).norm());
            }
        }
        worst
    }

    /// ρ → UρU†.
    pub fn apply_gate(&mut self, gate: Gate, targets: &[usize]) -> Result<()> {
        check_targets(self.num_qubits, gate, targets)?;
        let dim = self.dim();
        let mut column = vec![Complex64::new(0.0, 0.0); dim];
        // U on the row index
        for c in 0..dim {
            for r in 0..dim {
                column[r] = self.elements[r * dim + c];
            }
            apply_to_vector(&mut column, self.num_qubits, gate, targets);
            for r in 0..dim {
                self.elements[r * dim + c] = column[r];
            }
        }
        // U† (as conjugate-transpose) on the column index: apply conj(U) rowwise
        let gate_conj = gate.dagger(); // H, X, Z are real; CPhase conjugates the phase
        for r in 0..dim {
            let row = &mut self.elements[r * dim..(r + 1) * dim];
            apply_to_vector(row, self.num_qubits, gate_conj, targets);
        }
        Ok(())
    }

    // σ_k ρ σ_k† for one qubit, with Y realized as XZ (the i·XZ phases cancel
    // under conjugation).
    fn conjugate_pauli(&mut self, q: usize, pauli: u8) {
        match pauli {
            0 => {}
            1 => self.apply_gate(Gate::X, &[q]).unwrap(),
            2 => {
                self.apply_gate(Gate::Z, &[q]).unwrap();
                self.apply_gate(Gate::X, &[q]).unwrap();
            }
            3 => self.apply_gate(Gate::Z, &[q]).unwrap(),
            _ => unreachable!(),
        }
    }

    /// Two-qubit depolarizing channel of strength `p` on (qa, qb):
    /// ρ → (1−p)ρ + p/15 Σ_{(P,Q)≠(I,I)} (P⊗Q) ρ (P⊗Q)†.
    pub fn depolarize_pair(&mut self, qa: usize, qb: usize, p: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::argument("depolarizing strength must be in [0, 1]"));
        }
        check_targets(self.num_qubits, Gate::CPhase(0.0), &[qa, qb])?;
        if p == 0.0 {
            return Ok(());
        }
        let dim = self.dim();
        let mut sum = vec![Complex64::new(0.0, 0.0); dim * dim];
        for pa in 0..4u8 {
            for pb in 0..4u8 {
                if pa == 0 && pb == 0 {
                    continue;
                }
                let mut term = self.clone();
                term.conjugate_pauli(qa, pa);
                term.conjugate_pauli(qb, pb);
                for (acc, t) in sum.iter_mut().zip(&term.elements) {
                    *acc += t;
                }
            }
        }
        let keep = 1.0 - p;
        let mix = p / 15.0;
        for (e, s) in self.elements.iter_mut().zip(&sum) {
            *e = keep * *e + mix * s;
        }
        Ok(())
    }

    /// Probability of reading `outcome` on qubit `q`.
    pub fn measure_probability(&self, q: usize, outcome: u8) -> Result<f64> {
        if q >= self.num_qubits {
            return Err(Error::argument("qubit out of range"));
        }
        let mask = 1usize << q;
        let want = if outcome == 0 { 0 } else { mask };
        Ok((0..self.dim())
            .filter(|i| i & mask == want)
            .map(|i| self.element(i, i).re)
            .sum())
    }

    /// Project qubit `q` onto `outcome`, renormalize, and trace the qubit
    /// out. Returns the branch probability with the reduced state.
    pub fn conditional(&self, q: usize, outcome: u8) -> Result<(f64, MixedState)> {
        let prob = self.measure_probability(q, outcome)?;
        if prob <= 1e-300 {
            return Err(Error::argument("branch has zero probability"));
        }
        let mask = 1usize << q;
        let want = if outcome == 0 { 0 } else { mask };
        let low = mask - 1;
        let embed = |j: usize| (j & low) | ((j & !low) << 1) | want;
        let rdim = 1 << (self.num_qubits - 1);
        let mut reduced = vec![Complex64::new(0.0, 0.0); rdim * rdim];
        for r in 0..rdim {
            for c in 0..rdim {
                reduced[r * rdim + c] = self.element(embed(r), embed(c)) / prob;
            }
        }
        Ok((
            prob,
            MixedState {
                num_qubits: self.num_qubits - 1,
                elements: reduced,
            },
        ))
    }

    /// Fidelity ⟨B|ρ|B⟩ against a two-qubit Bell state.
    pub fn bell_fidelity(&self, target: BellState) -> Result<f64> {
        if self.num_qubits != 2 {
            return Err(Error::argument("bell_fidelity needs exactly 2 qubits"));
        }
        let b = target.amplitudes();
        let mut acc = Complex64::new(0.0, 0.0);
        for r in 0..4 {
            for c in 0..4 {
                acc += b[r].conj() * self.element(r, c) * b[c];
            }
        }
        Ok(acc.re)
    }

    /// Smallest eigenvalue, via cyclic Jacobi on the real symmetric
    /// embedding [[Re, −Im], [Im, Re]]. Diagnostic; O(dim³) per sweep.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let n = 2 * d;
        let mut m = vec![0.0f64; n * n];
        for r in 0..d {
            for c in 0..d {
                let z = self.element(r, c);
                m[r * n + c] = z.re;
                m[r * n + (c + d)] = -z.im;
                m[(r + d) * n + c] = z.im;
                m[(r + d) * n + (c + d)] = z.re;
            }
        }
        for _sweep in 0..64 {
            let mut off = 0.0;
            for p in 0..n {
                for q in (p + 1)..n {
                    off += m[p * n + q] * m[p * n + q];
                }
            }
            if off < 1e-24 {
                break;
            }
            for p in 0..n {
                for q in (p + 1)..n {
                    let apq = m[p * n + q];
                    if apq.abs() < 1e-30 {
                        continue;
                    }
                    let theta = (m[q * n + q] - m[p * n + p]) / (2.0 * apq);
                    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                    let c = 1.0 / (t * t + 1.0).sqrt();
                    let s = t * c;
                    for k in 0..n {
                        let mkp = m[k * n + p];
                        let mkq = m[k * n + q];
                        m[k * n + p] = c * mkp - s * mkq;
                        m[k * n + q] = s * mkp + c * mkq;
                    }
                    for k in 0..n {
                        let mpk = m[p * n + k];
                        let mqk = m[q * n + k];
                        m[p * n + k] = c * mpk - s * mqk;
                        m[q * n + k] = s * mpk + c * mqk;
                    }
                }
            }
        }
        (0..n).map(|k| m[k * n + k]).fold(f64::INFINITY, f64::min)
    }
}

/// The four Bell states, in the crate's little-endian two-qubit basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BellState {
    PhiPlus,
    PsiPlus,
    PhiMinus,
    PsiMinus,
}

impl BellState {
    pub fn amplitudes(self) -> [Complex64; 4] {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let z = Complex64::new(0.0, 0.0);
        let p = Complex64::new(h, 0.0);
        let m = Complex64::new(-h, 0.0);
        match self {
            BellState::PhiPlus => [p, z, z, p],
            BellState::PhiMinus => [p, z, z, m],
            BellState::PsiPlus => [z, p, p, z],
            BellState::PsiMinus => [z, p, m, z],
        }
    }
}

/// Gate-error model for the protocol: a two-qubit depolarizing channel of
/// the given strength after each entangling gate.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct GateErrorModel {
    pub depolarizing_p: f64,
}

/// Depolarizing strength equivalent to a given two-qubit gate fidelity,
/// using the `F = 1 − 15p/16` convention.
pub fn depolarizing_p_for_gate_fidelity(fidelity: f64) -> f64 {
    16.0 * (1.0 - fidelity) / 15.0
}

/// How the protocol propagates states.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolMode {
    /// Pure-state trajectory: stochastic Pauli insertion, sampled measurement.
    Trajectory,
    /// Exact density-matrix evolution; the reported outcome is sampled but
    /// both branches are computed exactly.
    DensityMatrix,
}

/// Two-ion state delivered by one protocol run.
#[derive(Debug, Clone)]
pub enum PostState {
    Pure(PureState),
    Mixed(MixedState),
}

/// Result of one messenger protocol execution.
#[derive(Debug, Clone)]
pub struct ProtocolResult {
    pub measurement_outcome: u8,
    pub post_state: PostState,
    pub bell_fidelity: f64,
    pub correction_applied: bool,
}

impl ProtocolResult {
    /// JSON export: outcome, fidelity, correction flag, and (for pure
    /// states, when requested) the two-ion amplitudes as [re, im] pairs.
    pub fn to_json(&self, include_state: bool) -> String {
        #[derive(Serialize)]
        struct Doc {
            outcome: u8,
            bell_fidelity: f64,
            correction_applied: bool,
            #[serde(skip_serializing_if = "Option::is_none")]
            amplitudes: Option<Vec<[f64; 2]>>,
        }
        let amplitudes = match (&self.post_state, include_state) {
            (PostState::Pure(state), true) => {
                Some(state.amplitudes().iter().map(|a| [a.re, a.im]).collect())
            }
            _ => None,
        };
        serde_json::to_string_pretty(&Doc {
            outcome: self.measurement_outcome,
            bell_fidelity: self.bell_fidelity,
            correction_applied: self.correction_applied,
            amplitudes,
        })
        .expect("protocol result serialization cannot fail")
    }
}

fn validate_protocol_args(error: GateErrorModel) -> Result<()> {
    if !(0.0..=1.0).contains(&error.depolarizing_p) {
        return Err(Error::argument("depolarizing_p must be in [0, 1]"));
    }
    Ok(())
}

// Draw one of the 15 non-identity two-qubit Paulis and apply it (up to
// global phase) to the trajectory state.
fn insert_random_pauli(state: &mut PureState, qa: usize, qb: usize, rng: &mut ChaCha8Rng) {
    let idx = rng.gen_range(1..16u8);
    for (q, pauli) in [(qa, idx >> 2), (qb, idx & 3)] {
        match pauli {
            0 => {}
            1 => state.apply_gate(Gate::X, &[q]).unwrap(),
            2 => {
                // Y up to global phase
                state.apply_gate(Gate::Z, &[q]).unwrap();
                state.apply_gate(Gate::X, &[q]).unwrap();
            }
            3 => state.apply_gate(Gate::Z, &[q]).unwrap(),
            _ => unreachable!(),
        }
    }
}

fn fidelity_target(outcome: u8, corrected: bool) -> BellState {
    if outcome == 0 || corrected {
        BellState::PhiPlus
    } else {
        BellState::PsiPlus
    }
}

/// Execute the three-qubit messenger protocol.
///
/// `gate_phase` is the controlled phase of the entangling gate (π for the
/// ideal Cz), `error` the per-gate depolarizing strength, `seed` drives all
/// pseudo-randomness, and `apply_correction` enables the feed-forward X on
/// ion 2 for outcome 1.
pub fn run_messenger_protocol(
    gate_phase: f64,
    error: GateErrorModel,
    seed: u64,
    apply_correction: bool,
    mode: ProtocolMode,
) -> Result<ProtocolResult> {
    validate_protocol_args(error)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let p = error.depolarizing_p;

    match mode {
        ProtocolMode::Trajectory => {
            let mut state = PureState::zero(3)?;
            for q in [ION1, ION2, ATOM] {
                state.apply_gate(Gate::H, &[q])?;
            }
            state.apply_gate(Gate::CPhase(gate_phase), &[ATOM, ION1])?;
            if p > 0.0 && rng.gen::<f64>() < p {
                insert_random_pauli(&mut state, ATOM, ION1, &mut rng);
            }
            state.apply_gate(Gate::CPhase(gate_phase), &[ATOM, ION2])?;
            if p > 0.0 && rng.gen::<f64>() < p {
                insert_random_pauli(&mut state, ATOM, ION2, &mut rng);
            }
            state.apply_gate(Gate::H, &[ATOM])?;

            let p0 = state.measure_probability(ATOM, 0)?;
            let outcome = u8::from(rng.gen::<f64>() >= p0);
            let (_, mut ions) = state.collapse_qubit(ATOM, outcome)?;
            let correction_applied = apply_correction && outcome == 1;
            if correction_applied {
                ions.apply_gate(Gate::X, &[1])?;
            }
            let fidelity = ions.bell_fidelity(fidelity_target(outcome, correction_applied))?;
            Ok(ProtocolResult {
                measurement_outcome: outcome,
                post_state: PostState::Pure(ions),
                bell_fidelity: fidelity,
                correction_applied,
            })
        }
        ProtocolMode::DensityMatrix => {
            let branch0 = protocol_branch_dm(gate_phase, p, 0, apply_correction)?;
            let outcome = u8::from(rng.gen::<f64>() >= branch0.probability);
            let branch = if outcome == 0 {
                branch0
            } else {
                protocol_branch_dm(gate_phase, p, 1, apply_correction)?
            };
            Ok(ProtocolResult {
                measurement_outcome: outcome,
                post_state: PostState::Mixed(branch.state),
                bell_fidelity: branch.bell_fidelity,
                correction_applied: apply_correction && outcome == 1,
            })
        }
    }
}

/// One exactly-computed measurement branch of the protocol.
#[derive(Debug, Clone)]
pub struct ProtocolBranch {
    pub probability: f64,
    pub state: MixedState,
    pub bell_fidelity: f64,
}

/// Exact density-matrix evolution of the protocol, conditioned on the atom
/// measurement `outcome`.
pub fn protocol_branch_dm(
    gate_phase: f64,
    depolarizing_p: f64,
    outcome: u8,
    apply_correction: bool,
) -> Result<ProtocolBranch> {
    validate_protocol_args(GateErrorModel {
        depolarizing_p,
    })?;
    let mut rho = MixedState::from_pure(&PureState::zero(3)?)?;
    for q in [ION1, ION2, ATOM] {
        rho.apply_gate(Gate::H, &[q])?;
    }
    rho.apply_gate(Gate::CPhase(gate_phase), &[ATOM, ION1])?;
    rho.depolarize_pair(ATOM, ION1, depolarizing_p)?;
    rho.apply_gate(Gate::CPhase(gate_phase), &[ATOM, ION2])?;
    rho.depolarize_pair(ATOM, ION2, depolarizing_p)?;
    rho.apply_gate(Gate::H, &[ATOM])?;

    let (probability, mut ions) = rho.conditional(ATOM, outcome)?;
    let corrected = apply_correction && outcome == 1;
    if corrected {
        ions.apply_gate(Gate::X, &[1])?;
    }
    let bell_fidelity = ions.bell_fidelity(fidelity_target(outcome, corrected))?;
    Ok(ProtocolBranch {
        probability,
        state: ions,
        bell_fidelity,
    })
}

/// Probability-weighted corrected Bell fidelity over both measurement
/// branches; the single number a scheduler attaches to a delivered pair.
pub fn protocol_pair_fidelity(gate_phase: f64, depolarizing_p: f64) -> Result<f64> {
    let b0 = protocol_branch_dm(gate_phase, depolarizing_p, 0, true)?;
    let b1 = protocol_branch_dm(gate_phase, depolarizing_p, 1, true)?;
    Ok(b0.probability * b0.bell_fidelity + b1.probability * b1.bell_fidelity)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    // independently computed protocol fidelities (exact channel evolution)
    const FID_TWO_9999_GATES: f64 = 0.9998293430423713;
    const FID_P_2E4: f64 = 0.9996800341333337;
    const FID_P_001: f64 = 0.9840853333333326;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn cphase_acts_only_on_the_11_component() {
        // |11> picks up e^{-i phi}
        let mut state = PureState::zero(2).unwrap();
        state.apply_gate(Gate::X, &[0]).unwrap();
        state.apply_gate(Gate::X, &[1]).unwrap();
        state.apply_gate(Gate::CPhase(PI), &[0, 1]).unwrap();
        assert_relative_eq!(state.amplitudes()[3].re, -1.0, max_relative = 1e-12);

        // |00> is untouched for any phi
        let mut state = PureState::zero(2).unwrap();
        state.apply_gate(Gate::CPhase(1.234), &[0, 1]).unwrap();
        assert_eq!(state.amplitudes()[0], c(1.0, 0.0));

        // CPhase(0) is the identity
        let mut state = PureState::zero(2).unwrap();
        state.apply_gate(Gate::H, &[0]).unwrap();
        state.apply_gate(Gate::H, &[1]).unwrap();
        let before = state.clone();
        state.apply_gate(Gate::CPhase(0.0), &[0, 1]).unwrap();
        assert_eq!(state, before);
    }

    #[test]
    fn cphase_pi_conjugated_by_hadamard_is_cnot() {
        // H(target) CZ H(target) = CNOT for every computational basis input
        for input in 0..4usize {
            let mut state = PureState::zero(2).unwrap();
            if input & 1 != 0 {
                state.apply_gate(Gate::X, &[0]).unwrap();
            }
            if input & 2 != 0 {
                state.apply_gate(Gate::X, &[1]).unwrap();
            }
            state.apply_gate(Gate::H, &[1]).unwrap();
            state.apply_gate(Gate::CPhase(PI), &[0, 1]).unwrap();
            state.apply_gate(Gate::H, &[1]).unwrap();
            let expected = if input & 1 != 0 { input ^ 2 } else { input };
            assert_relative_eq!(state.amplitudes()[expected].norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gates_preserve_norm_and_trace() {
        let mut state = PureState::zero(3).unwrap();
        let mut rho = MixedState::from_pure(&state).unwrap();
        for (gate, targets) in [
            (Gate::H, vec![0]),
            (Gate::X, vec![1]),
            (Gate::CPhase(0.7), vec![0, 2]),
            (Gate::H, vec![2]),
            (Gate::Z, vec![0]),
            (Gate::CPhase(PI), vec![1, 2]),
        ] {
            state.apply_gate(gate, &targets).unwrap();
            rho.apply_gate(gate, &targets).unwrap();
            assert!(state.norm_deviation() < 1e-10);
            assert!(rho.trace_deviation() < 1e-10);
            assert!(rho.hermiticity_deviation() < 1e-10);
        }
        rho.depolarize_pair(0, 1, 0.3).unwrap();
        assert!(rho.trace_deviation() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn out_of_range_targets_are_rejected() {
        let mut state = PureState::zero(2).unwrap();
        assert!(state.apply_gate(Gate::H, &[2]).is_err());
        assert!(state.apply_gate(Gate::CPhase(PI), &[0, 0]).is_err());
        assert!(state.apply_gate(Gate::CPhase(PI), &[0]).is_err());
        let rho = MixedState::from_pure(&state).unwrap();
        assert!(rho.clone().apply_gate(Gate::X, &[5]).is_err());
        assert!(rho.clone().depolarize_pair(0, 1, 1.5).is_err());
    }

    #[test]
    fn bell_fidelity_reference_points() {
        let phi_plus = PureState::from_amplitudes(BellState::PhiPlus.amplitudes().to_vec()).unwrap();
        assert_relative_eq!(
            phi_plus.bell_fidelity(BellState::PhiPlus).unwrap(),
            1.0,
            epsilon = 1e-15
        );

        let mixed = MixedState::maximally_mixed(2).unwrap();
        for target in [
            BellState::PhiPlus,
            BellState::PsiPlus,
            BellState::PhiMinus,
            BellState::PsiMinus,
        ] {
            assert_relative_eq!(mixed.bell_fidelity(target).unwrap(), 0.25, epsilon = 1e-15);
        }

        let mut plus_plus = PureState::zero(2).unwrap();
        plus_plus.apply_gate(Gate::H, &[0]).unwrap();
        plus_plus.apply_gate(Gate::H, &[1]).unwrap();
        assert_relative_eq!(
            plus_plus.bell_fidelity(BellState::PhiPlus).unwrap(),
            0.5,
            epsilon = 1e-12
        );

        let three = PureState::zero(3).unwrap();
        assert!(three.bell_fidelity(BellState::PhiPlus).is_err());
    }

    #[test]
    fn ideal_protocol_yields_exact_bell_pairs() {
        let no_error = GateErrorModel { depolarizing_p: 0.0 };
        let mut seen = [false, false];
        for seed in 0..32 {
            let result =
                run_messenger_protocol(PI, no_error, seed, false, ProtocolMode::Trajectory)
                    .unwrap();
            seen[result.measurement_outcome as usize] = true;
            assert!((result.bell_fidelity - 1.0).abs() < 1e-9);
            let PostState::Pure(ions) = &result.post_state else {
                panic!("trajectory mode returns a pure state")
            };
            // outcome 0 -> (|00>+|11>)/sqrt2, outcome 1 -> (|01>+|10>)/sqrt2
            let expect = if result.measurement_outcome == 0 {
                BellState::PhiPlus
            } else {
                BellState::PsiPlus
            };
            assert!((ions.bell_fidelity(expect).unwrap() - 1.0).abs() < 1e-9);
        }
        assert!(seen[0] && seen[1], "both outcomes occur across seeds");

        // with correction, outcome 1 maps onto PhiPlus
        for seed in 0..16 {
            let result =
                run_messenger_protocol(PI, no_error, seed, true, ProtocolMode::Trajectory).unwrap();
            let PostState::Pure(ions) = &result.post_state else {
                unreachable!()
            };
            assert!((ions.bell_fidelity(BellState::PhiPlus).unwrap() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_phase_gives_a_product_state() {
        for mode in [ProtocolMode::Trajectory, ProtocolMode::DensityMatrix] {
            let result = run_messenger_protocol(
                0.0,
                GateErrorModel { depolarizing_p: 0.0 },
                3,
                false,
                mode,
            )
            .unwrap();
            assert!((result.bell_fidelity - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn ideal_branch_probabilities_are_half() {
        for outcome in [0, 1] {
            let branch = protocol_branch_dm(PI, 0.0, outcome, false).unwrap();
            assert!((branch.probability - 0.5).abs() < 1e-10);
            assert!((branch.bell_fidelity - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn trajectory_outcomes_are_binomially_balanced() {
        let n = 10_000;
        let mut ones = 0usize;
        for seed in 0..n {
            let result = run_messenger_protocol(
                PI,
                GateErrorModel { depolarizing_p: 0.0 },
                seed as u64,
                false,
                ProtocolMode::Trajectory,
            )
            .unwrap();
            ones += result.measurement_outcome as usize;
        }
        // 3 sigma of Binomial(n, 1/2)
        let sigma = (n as f64 * 0.25).sqrt();
        assert!(
            (ones as f64 - n as f64 / 2.0).abs() < 3.0 * sigma,
            "ones = {ones}"
        );
    }

    #[test]
    fn noisy_protocol_matches_the_frozen_oracle() {
        let p = depolarizing_p_for_gate_fidelity(0.9999);
        assert_relative_eq!(p, 16.0 * 1e-4 / 15.0, max_relative = 1e-12);
        let fidelity = protocol_pair_fidelity(PI, p).unwrap();
        assert!((fidelity - FID_TWO_9999_GATES).abs() < 1e-6);
        assert!(fidelity >= 0.999);

        let fidelity = protocol_pair_fidelity(PI, 2e-4).unwrap();
        assert!((fidelity - FID_P_2E4).abs() < 1e-6);

        // both branches carry the same corrected fidelity
        let b0 = protocol_branch_dm(PI, 2e-4, 0, true).unwrap();
        let b1 = protocol_branch_dm(PI, 2e-4, 1, true).unwrap();
        assert!((b0.bell_fidelity - b1.bell_fidelity).abs() < 1e-12);
        assert!((b0.probability + b1.probability - 1.0).abs() < 1e-10);
    }

    #[test]
    fn fidelity_is_monotone_in_depolarizing_strength() {
        let mut last = f64::INFINITY;
        for k in 0..=25 {
            let p = 0.5 * k as f64 / 25.0;
            let fidelity = protocol_pair_fidelity(PI, p).unwrap();
            assert!(fidelity <= last + 1e-12, "p={p}");
            last = fidelity;
        }
    }

    #[test]
    fn trajectory_average_approaches_the_density_matrix() {
        let p = 0.01;
        let exact = protocol_pair_fidelity(PI, p).unwrap();
        assert!((exact - FID_P_001).abs() < 1e-9);
        let n = 100_000u64;
        let mut sum = 0.0;
        for seed in 0..n {
            let result = run_messenger_protocol(
                PI,
                GateErrorModel { depolarizing_p: p },
                seed,
                true,
                ProtocolMode::Trajectory,
            )
            .unwrap();
            sum += result.bell_fidelity;
        }
        let mean = sum / n as f64;
        assert!(
            (mean - exact).abs() < 0.005,
            "trajectory mean {mean} vs exact {exact}"
        );
    }

    #[test]
    fn protocol_states_are_physical() {
        let branch = protocol_branch_dm(PI, 0.05, 1, true).unwrap();
        assert!(branch.state.trace_deviation() < 1e-10);
        assert!(branch.state.hermiticity_deviation() < 1e-10);
        assert!(branch.state.min_eigenvalue() > -1e-9);
    }

    #[test]
    fn determinism_and_validation() {
        let error = GateErrorModel { depolarizing_p: 0.3 };
        let a = run_messenger_protocol(PI, error, 99, true, ProtocolMode::Trajectory).unwrap();
        let b = run_messenger_protocol(PI, error, 99, true, ProtocolMode::Trajectory).unwrap();
        assert_eq!(a.measurement_outcome, b.measurement_outcome);
        assert_eq!(a.bell_fidelity, b.bell_fidelity);

        let bad = GateErrorModel { depolarizing_p: -0.1 };
        assert!(run_messenger_protocol(PI, bad, 0, true, ProtocolMode::Trajectory).is_err());
    }

    #[test]
    fn protocol_result_json_shape() {
        let result = run_messenger_protocol(
            PI,
            GateErrorModel { depolarizing_p: 0.0 },
            7,
            true,
            ProtocolMode::Trajectory,
        )
        .unwrap();
        let json = result.to_json(true);
        assert!(json.contains("\"outcome\""));
        assert!(json.contains("\"bell_fidelity\""));
        assert!(json.contains("\"amplitudes\""));
        let bare = result.to_json(false);
        assert!(!bare.contains("amplitudes"));
    }
}
