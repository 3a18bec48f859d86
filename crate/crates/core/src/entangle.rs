//! Multi-atom + field states, field measurement, Bell/GHZ targets and
//! entanglement measures.
//!
//! Each atom is a qubit on `{P_{+l0}, P_{−l0}}` (`|+⟩`, `|−⟩`). A `k`-atom
//! register is indexed with atom 0 as the most significant bit and bit value
//! 1 meaning `|−⟩`, so `|+−⟩` is index 1.
//!
//! The field is `a_0|0⟩ + a_1|n0⟩`. The atoms never change the photon number,
//! so the joint state is `Σ_n a_n |n⟩ ⊗ |atoms_n⟩` with each `|atoms_n⟩` a
//! product of single-atom states.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{self, ShiftConvention, TwoLevelCoeffs};
use crate::error::{invalid, Error, Result};
use crate::ladder::{self, Direction, EvolveOptions, LadderRange, Propagator};
use crate::params::{PhysicalParams, RegimeThresholds, RegimeVerdict};

/// Largest register handled by the scenario runner.
pub const MAX_ATOMS: usize = 10;

const ORTHONORMAL_TOL: f64 = 1e-12;
const MIN_PROBABILITY: f64 = 1e-14;
const DENSITY_TOL: f64 = 1e-10;

type C = Complex64;

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

/// Field state `amp_vacuum|0⟩ + amp_fock|n0⟩`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldSuperposition {
    pub amp_vacuum: C,
    pub amp_fock: C,
    pub n0: u32,
}

impl FieldSuperposition {
    pub fn new(amp_vacuum: C, amp_fock: C, n0: u32) -> Result<Self> {
        let norm = amp_vacuum.norm_sqr() + amp_fock.norm_sqr();
        if (norm - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(invalid(format!("field amplitudes have norm {norm}")));
        }
        if n0 == 0 {
            return Err(invalid("Fock branch needs n0 >= 1"));
        }
        Ok(FieldSuperposition {
            amp_vacuum,
            amp_fock,
            n0,
        })
    }

    /// `(|0⟩ + |n0⟩)/√2`.
    pub fn equal(n0: u32) -> Self {
        FieldSuperposition {
            amp_vacuum: c(FRAC_1_SQRT_2, 0.0),
            amp_fock: c(FRAC_1_SQRT_2, 0.0),
            n0,
        }
    }

    fn amps(&self) -> [C; 2] {
        [self.amp_vacuum, self.amp_fock]
    }
}

/// Two-mode amplitudes `(C+, C−)` of one atom in the vacuum and Fock
/// branches. Norms below one are population lost to other ladder orders.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AtomBranches {
    pub n0: u32,
    pub vacuum: [C; 2],
    pub fock: [C; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct JointState {
    pub field: FieldSuperposition,
    pub atoms: usize,
    /// Normalised atom register per branch, `[vacuum, fock]`.
    pub branches: [Vec<C>; 2],
    /// Per-atom population outside the two resonant orders, `[vacuum, fock]`.
    pub atom_leakage: Vec<[f64; 2]>,
    /// Total probability discarded by the two-mode projection.
    pub leakage: f64,
}

/// Tensor product of single-qubit states, atom 0 most significant.
pub fn product_state(qubits: &[[C; 2]]) -> Vec<C> {
    qubits.iter().fold(vec![c(1.0, 0.0)], |acc, q| {
        acc.iter()
            .flat_map(|a| [a * q[0], a * q[1]])
            .collect()
    })
}

fn normalise_pair(pair: [C; 2]) -> Result<([C; 2], f64)> {
    let norm = pair[0].norm_sqr() + pair[1].norm_sqr();
    if norm > 1.0 + 1e-9 {
        return Err(invalid(format!("atom branch norm {norm} exceeds 1")));
    }
    if norm < MIN_PROBABILITY {
        return Err(invalid("atom has left the two resonant orders entirely"));
    }
    let scale = norm.sqrt();
    Ok(([pair[0] / scale, pair[1] / scale], norm))
}

pub fn compose(atom_states: &[AtomBranches], field: FieldSuperposition) -> Result<JointState> {
    if atom_states.is_empty() {
        return Err(invalid("need at least one atom"));
    }
    if let Some(bad) = atom_states.iter().find(|a| a.n0 != field.n0) {
        return Err(invalid(format!(
            "atom prepared for n0 = {} but field has n0 = {}",
            bad.n0, field.n0
        )));
    }
    let mut qubits: [Vec<[C; 2]>; 2] = [Vec::new(), Vec::new()];
    let mut atom_leakage = Vec::with_capacity(atom_states.len());
    let mut retained = [1.0, 1.0];
    for atom in atom_states {
        let mut leak = [0.0; 2];
        for (b, pair) in [atom.vacuum, atom.fock].into_iter().enumerate() {
            let (q, norm) = normalise_pair(pair)?;
            qubits[b].push(q);
            leak[b] = (1.0 - norm).max(0.0);
            retained[b] *= norm;
        }
        atom_leakage.push(leak);
    }
    let weights = field.amps().map(|a| a.norm_sqr());
    let kept = weights[0] * retained[0] + weights[1] * retained[1];
    Ok(JointState {
        field,
        atoms: atom_states.len(),
        branches: [product_state(&qubits[0]), product_state(&qubits[1])],
        atom_leakage,
        leakage: (1.0 - kept).max(0.0),
    })
}

/// Orthonormal pair of field states over `span{|0⟩, |n0⟩}`, each given as
/// `(vacuum, fock)` amplitudes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FieldBasis {
    pub vectors: [[C; 2]; 2],
}

fn check_orthonormal(v: &[[C; 2]; 2]) -> Result<()> {
    let dot = |a: &[C; 2], b: &[C; 2]| a[0].conj() * b[0] + a[1].conj() * b[1];
    let ok = (dot(&v[0], &v[0]) - 1.0).norm() <= ORTHONORMAL_TOL
        && (dot(&v[1], &v[1]) - 1.0).norm() <= ORTHONORMAL_TOL
        && dot(&v[0], &v[1]).norm() <= ORTHONORMAL_TOL;
    if ok {
        Ok(())
    } else {
        Err(invalid("measurement basis is not orthonormal"))
    }
}

impl FieldBasis {
    pub fn new(vectors: [[C; 2]; 2]) -> Result<Self> {
        check_orthonormal(&vectors)?;
        Ok(FieldBasis { vectors })
    }

    /// `{|0⟩, |n0⟩}`.
    pub fn computational() -> Self {
        FieldBasis {
            vectors: [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]],
        }
    }

    /// `{(|0⟩ + |n0⟩)/√2, (|0⟩ − |n0⟩)/√2}`.
    pub fn superposition() -> Self {
        let h = c(FRAC_1_SQRT_2, 0.0);
        FieldBasis {
            vectors: [[h, h], [h, -h]],
        }
    }
}

/// Projects the field onto `basis.vectors[outcome]`; returns the outcome
/// probability and the normalised atom state left behind.
pub fn measure_field(j: &JointState, basis: &FieldBasis, outcome: usize) -> Result<(f64, Vec<C>)> {
    check_orthonormal(&basis.vectors)?;
    let b = basis
        .vectors
        .get(outcome)
        .ok_or_else(|| invalid(format!("field outcome {outcome} out of range")))?;
    let amps = j.field.amps();
    let w = [b[0].conj() * amps[0], b[1].conj() * amps[1]];
    let psi: Vec<C> = j.branches[0]
        .iter()
        .zip(&j.branches[1])
        .map(|(v, f)| w[0] * v + w[1] * f)
        .collect();
    normalise(psi)
}

fn normalise(psi: Vec<C>) -> Result<(f64, Vec<C>)> {
    let p: f64 = psi.iter().map(|a| a.norm_sqr()).sum();
    if !(p > MIN_PROBABILITY) {
        return Err(Error::ZeroProbability);
    }
    let scale = p.sqrt();
    Ok((p, psi.into_iter().map(|a| a / scale).collect()))
}

/// Projects atom `atom` of a `k`-atom register onto `vector` (given as
/// `(C+, C−)`); returns the probability and the remaining `k−1` atoms.
pub fn measure_atom(psi: &[C], atom: usize, vector: [C; 2]) -> Result<(f64, Vec<C>)> {
    let k = register_size(psi.len())?;
    if atom >= k {
        return Err(invalid(format!("atom {atom} out of range for {k} atoms")));
    }
    let shift = k - 1 - atom;
    let low_mask = (1usize << shift) - 1;
    let rest: Vec<C> = (0..psi.len() / 2)
        .map(|idx| {
            let high = (idx & !low_mask) << 1;
            let low = idx & low_mask;
            let with = |bit: usize| psi[high | (bit << shift) | low];
            vector[0].conj() * with(0) + vector[1].conj() * with(1)
        })
        .collect();
    normalise(rest)
}

fn register_size(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(invalid(format!("{len} amplitudes is not a qubit register")));
    }
    Ok(len.trailing_zeros() as usize)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BellKind {
    /// `(|+−⟩ + e^{−iφ}|−+⟩)/√2`
    #[serde(rename = "psi+")]
    PsiPlus,
    /// `(|+−⟩ − e^{−iφ}|−+⟩)/√2`
    #[serde(rename = "psi-")]
    PsiMinus,
    /// `(|++⟩ + e^{−iφ}|−−⟩)/√2`
    #[serde(rename = "phi+")]
    PhiPlus,
    /// `(|++⟩ − e^{−iφ}|−−⟩)/√2`
    #[serde(rename = "phi-")]
    PhiMinus,
}

impl BellKind {
    pub fn sign(self) -> Sign {
        match self {
            BellKind::PsiPlus | BellKind::PhiPlus => Sign::Plus,
            BellKind::PsiMinus | BellKind::PhiMinus => Sign::Minus,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            BellKind::PsiPlus => BellKind::PsiMinus,
            BellKind::PsiMinus => BellKind::PsiPlus,
            BellKind::PhiPlus => BellKind::PhiMinus,
            BellKind::PhiMinus => BellKind::PhiPlus,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            BellKind::PsiPlus => "psi+",
            BellKind::PsiMinus => "psi-",
            BellKind::PhiPlus => "phi+",
            BellKind::PhiMinus => "phi-",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }

    fn from_parity(r: i64) -> Self {
        if r.rem_euclid(2) == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }
}

/// `(|first⟩ ± e^{−iφ}|second⟩)/√2` on `2^k` amplitudes.
fn two_term_state(k: usize, first: usize, second: usize, sign: Sign, phase: f64) -> Vec<C> {
    let mut v = vec![c(0.0, 0.0); 1 << k];
    v[first] = c(FRAC_1_SQRT_2, 0.0);
    v[second] = C::from_polar(sign.value() * FRAC_1_SQRT_2, -phase);
    v
}

pub fn bell_target(kind: BellKind, phase: f64) -> Vec<C> {
    let (first, second) = match kind {
        BellKind::PsiPlus | BellKind::PsiMinus => (0b01, 0b10),
        BellKind::PhiPlus | BellKind::PhiMinus => (0b00, 0b11),
    };
    two_term_state(2, first, second, kind.sign(), phase)
}

/// `(|+⟩^⊗k ± e^{−iφ}|−⟩^⊗k)/√2` for `3 ≤ k ≤ MAX_ATOMS`.
pub fn ghz_target(k: usize, sign: Sign, phase: f64) -> Result<Vec<C>> {
    if !(3..=MAX_ATOMS).contains(&k) {
        return Err(invalid(format!(
            "GHZ target needs 3..={MAX_ATOMS} atoms, got {k}"
        )));
    }
    Ok(two_term_state(k, 0, (1 << k) - 1, sign, phase))
}

/// `|⟨target|state⟩|²` for normalised states.
pub fn fidelity(state: &[C], target: &[C]) -> Result<f64> {
    if state.len() != target.len() {
        return Err(Error::DimensionMismatch {
            expected: target.len(),
            found: state.len(),
        });
    }
    let overlap: C = target.iter().zip(state).map(|(t, s)| t.conj() * s).sum();
    Ok(overlap.norm_sqr().clamp(0.0, 1.0))
}

/// `|ψ⟩⟨ψ|`.
pub fn density(psi: &[C]) -> DMatrix<C> {
    let n = psi.len();
    DMatrix::from_fn(n, n, |i, j| psi[i] * psi[j].conj())
}

fn validate_density(rho: &DMatrix<C>) -> Result<SymmetricEigen<C, nalgebra::Dyn>> {
    if rho.shape() != (4, 4) {
        return Err(Error::InvalidDensity(format!(
            "expected 4x4, got {}x{}",
            rho.nrows(),
            rho.ncols()
        )));
    }
    if rho.iter().any(|x| !x.re.is_finite() || !x.im.is_finite()) {
        return Err(Error::InvalidDensity("non-finite entries".into()));
    }
    let asym = (rho - rho.adjoint()).iter().map(|x| x.norm()).fold(0.0, f64::max);
    if asym > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("not Hermitian ({asym:.2e})")));
    }
    let trace = rho.trace();
    if (trace - 1.0).norm() > DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("trace {trace} != 1")));
    }
    let eig = SymmetricEigen::new(rho.clone());
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    if min < -DENSITY_TOL {
        return Err(Error::InvalidDensity(format!("negative eigenvalue {min:.2e}")));
    }
    Ok(eig)
}

/// Wootters concurrence of a two-qubit density operator.
pub fn concurrence(rho: &DMatrix<C>) -> Result<f64> {
    let eig = validate_density(rho)?;
    // square roots of round-off eigenvalues would cost ~1e-8; pure states
    // have the closed form 2|ψ01ψ10 − ψ00ψ11|
    let (top, top_val) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    if top_val > 1.0 - 1e-12 {
        let v = eig.eigenvectors.column(top);
        return Ok((2.0 * (v[1] * v[2] - v[0] * v[3]).norm()).clamp(0.0, 1.0));
    }
    let sqrt_vals = eig.eigenvalues.map(|l| c(l.max(0.0).sqrt(), 0.0));
    let sqrt_rho =
        &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.adjoint();
    // σy ⊗ σy is real: reversed anti-diagonal (−1, 1, 1, −1)
    let flip = DMatrix::from_fn(4, 4, |i, j| match (i, j) {
        (0, 3) | (3, 0) => c(-1.0, 0.0),
        (1, 2) | (2, 1) => c(1.0, 0.0),
        _ => c(0.0, 0.0),
    });
    let tilde = &flip * rho.conjugate() * &flip;
    let mut m = &sqrt_rho * tilde * &sqrt_rho;
    m = (&m + m.adjoint()) * c(0.5, 0.0);
    let mut lambdas: Vec<f64> = SymmetricEigen::new(m)
        .eigenvalues
        .iter()
        .map(|mu| mu.max(0.0).sqrt())
        .collect();
    lambdas.sort_by(|a, b| b.total_cmp(a));
    Ok((lambdas[0] - lambdas[1] - lambdas[2] - lambdas[3]).clamp(0.0, 1.0))
}

/// Phase wrapped into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    let y = x.rem_euclid(2.0 * PI);
    if y > PI {
        y - 2.0 * PI
    } else {
        y
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrepMode {
    /// Atoms start in `|P_{+l0}⟩` and `|P_{−l0}⟩`.
    Opposite,
    /// All atoms start in `|P_{+l0}⟩`.
    Same,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    /// Closed-form two-level solution.
    Adiabatic,
    /// Numerical evolution on the truncated momentum ladder.
    Ladder,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldBasisKind {
    /// `(|0⟩ ± |n0⟩)/√2`; keeps the atom-atom entanglement.
    #[default]
    Superposition,
    /// `{|0⟩, |n0⟩}`; collapses the atoms onto a product state.
    Computational,
}

impl FieldBasisKind {
    pub fn basis(self) -> FieldBasis {
        match self {
            FieldBasisKind::Superposition => FieldBasis::superposition(),
            FieldBasisKind::Computational => FieldBasis::computational(),
        }
    }
}

/// One run of the protocol: prepare, interact for `sπ/B` (the last atom for
/// `(s + 2r)π/B`), measure the field.
#[derive(Clone, Debug, PartialEq)]
pub struct Scenario {
    pub params: PhysicalParams,
    pub atoms: usize,
    pub mode: PrepMode,
    pub s: u32,
    pub r: i64,
    pub engine: Engine,
    pub basis: FieldBasisKind,
    pub convention: ShiftConvention,
    pub include_stark: bool,
    /// Compare against the target with the measured relative phase instead
    /// of the predicted one.
    pub fit_phase: bool,
    /// Run the ladder engine even when the regime check fails.
    pub allow_violated: bool,
    pub thresholds: RegimeThresholds,
    pub evolve: EvolveOptions,
}

impl Scenario {
    pub fn bell(params: PhysicalParams, mode: PrepMode, s: u32, r: i64, engine: Engine) -> Self {
        Scenario {
            params,
            atoms: 2,
            mode,
            s,
            r,
            engine,
            basis: FieldBasisKind::default(),
            convention: ShiftConvention::default(),
            include_stark: false,
            fit_phase: false,
            allow_violated: false,
            thresholds: RegimeThresholds::default(),
            evolve: EvolveOptions::default(),
        }
    }

    pub fn ghz(params: PhysicalParams, k: usize, s: u32, r: i64, engine: Engine) -> Self {
        Scenario {
            atoms: k,
            ..Scenario::bell(params, PrepMode::Same, s, r, engine)
        }
    }

    fn name(&self) -> &'static str {
        match (self.atoms, self.mode) {
            (2, PrepMode::Opposite) => "bell-opposite",
            (2, PrepMode::Same) => "bell-same",
            _ => "ghz",
        }
    }

    fn validate(&self) -> Result<()> {
        if self.s.is_multiple_of(2) {
            return Err(invalid(format!("s must be odd, got {}", self.s)));
        }
        if !(2..=MAX_ATOMS).contains(&self.atoms) {
            return Err(invalid(format!(
                "atom count must be in 2..={MAX_ATOMS}, got {}",
                self.atoms
            )));
        }
        if self.atoms > 2 && self.mode == PrepMode::Opposite {
            return Err(invalid("GHZ preparation needs all atoms in the same state"));
        }
        if i64::from(self.s) + 2 * self.r < 1 {
            return Err(invalid(format!(
                "offset r = {} leaves no interaction time",
                self.r
            )));
        }
        Ok(())
    }

    fn directions(&self) -> Vec<Direction> {
        (0..self.atoms)
            .map(|j| match (self.mode, j) {
                (PrepMode::Opposite, 1) => Direction::Minus,
                _ => Direction::Plus,
            })
            .collect()
    }

    /// Pulse multiples `m_j`: atom `j` interacts for `m_j π/B`.
    fn pulse_multiples(&self) -> Vec<i64> {
        (0..self.atoms)
            .map(|j| {
                if j + 1 == self.atoms {
                    i64::from(self.s) + 2 * self.r
                } else {
                    i64::from(self.s)
                }
            })
            .collect()
    }

    fn indices(&self) -> (usize, usize) {
        match self.mode {
            PrepMode::Opposite => (0b01, 0b10),
            PrepMode::Same => (0, (1 << self.atoms) - 1),
        }
    }

    fn target_sign(&self) -> Sign {
        Sign::from_parity(self.r)
    }

    fn target_name(&self, sign: Sign) -> String {
        match (self.atoms, self.mode) {
            (2, PrepMode::Opposite) => format!("psi{}", sign.symbol()),
            (2, PrepMode::Same) => format!("phi{}", sign.symbol()),
            _ => format!("ghz{}", sign.symbol()),
        }
    }

    fn target(&self, sign: Sign, phase: f64) -> Result<Vec<C>> {
        if self.atoms == 2 {
            let kind = match (self.mode, sign) {
                (PrepMode::Opposite, Sign::Plus) => BellKind::PsiPlus,
                (PrepMode::Opposite, Sign::Minus) => BellKind::PsiMinus,
                (PrepMode::Same, Sign::Plus) => BellKind::PhiPlus,
                (PrepMode::Same, Sign::Minus) => BellKind::PhiMinus,
            };
            Ok(bell_target(kind, phase))
        } else {
            ghz_target(self.atoms, sign, phase)
        }
    }
}

/// Relative phase `φ` of the ideal output after the `(|0⟩+|n0⟩)/√2`
/// outcome, from the exact two-level solution.
///
/// Every atom interacts for an odd multiple `m_j` of `π/B` and so flips
/// completely in the Fock branch, acquiring `i·(−1)^{(m_j−1)/2}·e^{−iA t_j}`.
/// The vacuum branch is left unchanged.
pub fn predicted_phase(
    coeffs: &TwoLevelCoeffs,
    pulse_multiples: &[i64],
    sign: Sign,
    field: &FieldSuperposition,
) -> f64 {
    let unit = PI / coeffs.b_n;
    let times: Vec<f64> = pulse_multiples.iter().map(|&m| m as f64 * unit).collect();
    phase_for_times(coeffs.a_n, coeffs.b_n, &times, sign, field)
}

/// Same as [`predicted_phase`] for arbitrary shift, coupling and
/// interaction times. Only the sign of each transfer amplitude matters.
pub fn phase_for_times(
    level_shift: f64,
    coupling: f64,
    times: &[f64],
    sign: Sign,
    field: &FieldSuperposition,
) -> f64 {
    let ratio = times
        .iter()
        .fold(field.amp_fock / field.amp_vacuum, |acc, &t| {
            let flip = if (0.5 * coupling * t).sin() >= 0.0 { 1.0 } else { -1.0 };
            acc * c(0.0, flip) * C::from_polar(1.0, -level_shift * t)
        });
    wrap_phase(-(ratio * sign.value()).arg())
}

fn measured_phase(psi: &[C], first: usize, second: usize, sign: Sign) -> Option<f64> {
    if psi[first].norm() < 1e-6 || psi[second].norm() < 1e-6 {
        return None;
    }
    Some(wrap_phase(-(psi[second] / psi[first] * sign.value()).arg()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioParameters {
    pub mass_kg: f64,
    pub wavelength_m: f64,
    pub coupling_g_rad_s: f64,
    pub detuning_rad_s: f64,
    pub n0: u32,
    pub l0: u32,
    pub atoms: usize,
    pub mode: PrepMode,
    pub s: u32,
    pub r: i64,
    pub field_basis: FieldBasisKind,
    pub shift_convention: ShiftConvention,
    pub include_stark: bool,
    pub fit_phase: bool,
    pub chi_rad_s: f64,
    pub recoil_frequency_rad_s: f64,
    pub regime_ratio: f64,
    pub regime: RegimeVerdict,
    pub a_n_rad_s: f64,
    pub b_n_rad_s: f64,
    pub t1_s: f64,
    pub t2_s: f64,
}

/// Result of one field-measurement outcome.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutcomeReport {
    pub outcome: usize,
    pub probability: f64,
    pub target: String,
    pub fidelity: Option<f64>,
    pub concurrence: Option<f64>,
}

/// Measuring atom 0 of a GHZ output in `(|+⟩ ± |−⟩)/√2`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CollapseReport {
    pub field_outcome: usize,
    pub atom_outcome: usize,
    pub probability: f64,
    pub fidelity: f64,
    pub concurrence: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EntanglementReport {
    pub scenario: String,
    pub engine: Engine,
    pub parameters: ScenarioParameters,
    pub target: String,
    /// Smallest fidelity over field outcomes with nonzero probability.
    pub fidelity: f64,
    /// Smallest concurrence over field outcomes (two atoms only).
    pub concurrence: Option<f64>,
    pub phase_measured_rad: Option<f64>,
    pub phase_predicted_rad: f64,
    /// Estimate from the level shift alone, without the flip factors.
    pub phase_shift_only_rad: f64,
    pub leakage: f64,
    /// Largest change of any vacuum-branch population.
    pub vacuum_deviation: f64,
    pub outcome_probabilities: Vec<f64>,
    pub outcomes: Vec<OutcomeReport>,
    pub collapse: Vec<CollapseReport>,
}

struct AtomRun {
    branches: AtomBranches,
    vacuum_deviation: f64,
}

fn run_atoms(
    sc: &Scenario,
    fock: &TwoLevelCoeffs,
    times: &[f64],
    dirs: &[Direction],
) -> Result<Vec<AtomRun>> {
    let p = &sc.params;
    let d = p.derive()?;
    match sc.engine {
        Engine::Adiabatic => {
            let vac = adiabatic::coeffs(0, p.l0, &d, sc.convention)?;
            Ok(dirs
                .iter()
                .zip(times)
                .map(|(dir, &t)| {
                    let init = match dir {
                        Direction::Plus => (c(1.0, 0.0), c(0.0, 0.0)),
                        Direction::Minus => (c(0.0, 0.0), c(1.0, 0.0)),
                    };
                    let v = adiabatic::solve(init, &vac, t);
                    let f = adiabatic::solve(init, fock, t);
                    let dev = (v.c_plus.norm_sqr() - init.0.norm_sqr())
                        .abs()
                        .max((v.c_minus.norm_sqr() - init.1.norm_sqr()).abs());
                    AtomRun {
                        branches: AtomBranches {
                            n0: p.n0,
                            vacuum: [v.c_plus, v.c_minus],
                            fock: [f.c_plus, f.c_minus],
                        },
                        vacuum_deviation: dev,
                    }
                })
                .collect())
        }
        Engine::Ladder => {
            let range = LadderRange::default_for(p.l0);
            let props = [0, p.n0].map(|n| {
                ladder::build_hamiltonian(n, p.l0, range, &d, sc.include_stark)
                    .map(|h| Propagator::new(&h))
            });
            let [vac_prop, fock_prop] = props;
            let (vac_prop, fock_prop) = (vac_prop?, fock_prop?);
            dirs.iter()
                .zip(times)
                .map(|(&dir, &t)| {
                    let s0 = ladder::initial_state_in(p.l0, dir, 0, range)?;
                    let v = vac_prop.evolve(&s0, t, &sc.evolve)?;
                    let f0 = ladder::initial_state_in(p.l0, dir, p.n0, range)?;
                    let f = fock_prop.evolve(&f0, t, &sc.evolve)?;
                    let dev = s0
                        .amplitudes
                        .iter()
                        .zip(&v.amplitudes)
                        .map(|(a, b)| (a.norm_sqr() - b.norm_sqr()).abs())
                        .fold(0.0, f64::max);
                    Ok(AtomRun {
                        branches: AtomBranches {
                            n0: p.n0,
                            vacuum: v.two_mode().0,
                            fock: f.two_mode().0,
                        },
                        vacuum_deviation: dev,
                    })
                })
                .collect()
        }
    }
}

pub fn run_scenario(sc: &Scenario) -> Result<EntanglementReport> {
    sc.validate()?;
    let p = &sc.params;
    let d = p.derive()?;
    let regime = sc.thresholds.classify(d.regime_ratio);
    if sc.engine == Engine::Ladder && regime == RegimeVerdict::Violated && !sc.allow_violated {
        return Err(Error::RegimeViolated {
            ratio: d.regime_ratio,
        });
    }
    let fock = adiabatic::coeffs(p.n0, p.l0, &d, sc.convention)?;
    let (t1, t2) = adiabatic::pulse_times(&fock, sc.s, sc.r)?;
    let multiples = sc.pulse_multiples();
    let times: Vec<f64> = multiples
        .iter()
        .enumerate()
        .map(|(j, _)| if j + 1 == sc.atoms { t2 } else { t1 })
        .collect();
    let dirs = sc.directions();

    let runs = run_atoms(sc, &fock, &times, &dirs)?;
    let vacuum_deviation = runs.iter().map(|r| r.vacuum_deviation).fold(0.0, f64::max);
    let atoms: Vec<AtomBranches> = runs.into_iter().map(|r| r.branches).collect();
    let field = FieldSuperposition::equal(p.n0);
    let joint = compose(&atoms, field)?;

    let sign = sc.target_sign();
    let (first, second) = sc.indices();
    let phase_predicted = match sc.engine {
        Engine::Adiabatic => predicted_phase(&fock, &multiples, sign, &field),
        // the ladder carries shifts from outer orders and its own coupling sign
        Engine::Ladder => {
            let range = LadderRange::default_for(p.l0);
            let h = ladder::build_hamiltonian(p.n0, p.l0, range, &d, sc.include_stark)?;
            let eff = Propagator::new(&h).effective_two_level();
            phase_for_times(eff.level_shift, eff.coupling, &times, sign, &field)
        }
    };

    // the relative phase is read off the superposition-basis "+" outcome
    let phase_measured = measure_field(&joint, &FieldBasis::superposition(), 0)
        .ok()
        .and_then(|(_, psi)| measured_phase(&psi, first, second, sign));
    let phase_target = match (sc.fit_phase, phase_measured) {
        (true, Some(m)) => m,
        _ => phase_predicted,
    };

    let basis = sc.basis.basis();
    let mut outcomes = Vec::with_capacity(2);
    let mut collapse = Vec::new();
    for outcome in 0..2 {
        // the "−" superposition outcome flips the relative sign
        let out_sign = if sc.basis == FieldBasisKind::Superposition && outcome == 1 {
            sign.flipped()
        } else {
            sign
        };
        let name = sc.target_name(out_sign);
        match measure_field(&joint, &basis, outcome) {
            Ok((prob, psi)) => {
                let target = sc.target(out_sign, phase_target)?;
                let fid = fidelity(&psi, &target)?;
                let conc = if sc.atoms == 2 {
                    Some(concurrence(&density(&psi))?)
                } else {
                    None
                };
                if sc.atoms > 2 {
                    collapse.extend(collapse_reports(sc, &psi, outcome, out_sign, phase_target)?);
                }
                outcomes.push(OutcomeReport {
                    outcome,
                    probability: prob,
                    target: name,
                    fidelity: Some(fid),
                    concurrence: conc,
                });
            }
            Err(Error::ZeroProbability) => outcomes.push(OutcomeReport {
                outcome,
                probability: 0.0,
                target: name,
                fidelity: None,
                concurrence: None,
            }),
            Err(e) => return Err(e),
        }
    }

    let fidelity = outcomes
        .iter()
        .filter_map(|o| o.fidelity)
        .fold(f64::INFINITY, f64::min);
    let concurrence = if sc.atoms == 2 {
        outcomes
            .iter()
            .filter_map(|o| o.concurrence)
            .reduce(f64::min)
    } else {
        None
    };
    let phase_shift_only = if sc.atoms == 2 {
        adiabatic::shift_phase_bell(&fock, sc.s, sc.r)
    } else {
        adiabatic::shift_phase_ghz(&fock, sc.atoms, sc.s, sc.r)
    };

    Ok(EntanglementReport {
        scenario: sc.name().to_string(),
        engine: sc.engine,
        parameters: ScenarioParameters {
            mass_kg: p.mass_kg,
            wavelength_m: p.wavelength_m,
            coupling_g_rad_s: p.coupling_g,
            detuning_rad_s: p.detuning,
            n0: p.n0,
            l0: p.l0,
            atoms: sc.atoms,
            mode: sc.mode,
            s: sc.s,
            r: sc.r,
            field_basis: sc.basis,
            shift_convention: sc.convention,
            include_stark: sc.include_stark,
            fit_phase: sc.fit_phase,
            chi_rad_s: d.chi,
            recoil_frequency_rad_s: d.recoil_frequency,
            regime_ratio: d.regime_ratio,
            regime,
            a_n_rad_s: fock.a_n,
            b_n_rad_s: fock.b_n,
            t1_s: t1,
            t2_s: t2,
        },
        target: sc.target_name(sign),
        fidelity,
        concurrence,
        phase_measured_rad: phase_measured,
        phase_predicted_rad: phase_predicted,
        phase_shift_only_rad: phase_shift_only,
        leakage: joint.leakage,
        vacuum_deviation,
        outcome_probabilities: outcomes.iter().map(|o| o.probability).collect(),
        outcomes,
        collapse,
    })
}

fn collapse_reports(
    sc: &Scenario,
    psi: &[C],
    field_outcome: usize,
    sign: Sign,
    phase: f64,
) -> Result<Vec<CollapseReport>> {
    let h = c(FRAC_1_SQRT_2, 0.0);
    let rest = sc.atoms - 1;
    [[h, h], [h, -h]]
        .into_iter()
        .enumerate()
        .map(|(atom_outcome, vector)| {
            let (prob, reduced) = measure_atom(psi, 0, vector)?;
            let s = if atom_outcome == 1 { sign.flipped() } else { sign };
            let target = if rest == 2 {
                bell_target(
                    match s {
                        Sign::Plus => BellKind::PhiPlus,
                        Sign::Minus => BellKind::PhiMinus,
                    },
                    phase,
                )
            } else {
                ghz_target(rest, s, phase)?
            };
            let conc = if rest == 2 {
                Some(concurrence(&density(&reduced))?)
            } else {
                None
            };
            Ok(CollapseReport {
                field_outcome,
                atom_outcome,
                probability: prob,
                fidelity: fidelity(&reduced, &target)?,
                concurrence: conc,
            })
        })
        .collect()
}
