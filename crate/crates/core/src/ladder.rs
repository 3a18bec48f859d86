//! Truncated momentum ladder for one atom in one field branch.
//!
//! Amplitude `C_l` belongs to momentum `P_{l0} + l·ħk` with `l` even. The
//! amplitudes obey
//!
//! ```text
//! i dC_l/dt = w_rec·l(l + l0)·C_l − (χn/2)(C_{l+2} + C_{l−2})
//! ```
//!
//! so orders `l = 0` and `l = −l0` are degenerate and every other order is
//! detuned by at least a few recoil frequencies.
//!
//! An atom incident at `−l0` satisfies the same equations with the ladder
//! index mirrored (`P_{−l0} − l·ħk`). Both directions therefore share one
//! Hamiltonian; [`Direction`] only changes how ladder orders map onto
//! physical momenta.

use std::collections::BTreeMap;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::params::{check_bragg_order, DerivedParams};

/// Smallest number of extra orders kept beyond `[−l0, 0]` on each side.
pub const MIN_GUARD: i32 = 4;
/// Guard used by [`LadderRange::default_for`].
pub const DEFAULT_GUARD: i32 = 8;
pub const DEFAULT_EDGE_THRESHOLD: f64 = 1e-10;
pub const DEFAULT_TOL: f64 = 1e-9;

const EDGE_CHECKPOINTS: usize = 64;

/// Inclusive range of even ladder orders.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LadderRange {
    l_min: i32,
    l_max: i32,
}

impl LadderRange {
    pub fn new(l_min: i32, l_max: i32) -> Result<Self> {
        if l_min % 2 != 0 || l_max % 2 != 0 {
            return Err(invalid(format!(
                "ladder bounds must be even, got [{l_min}, {l_max}]"
            )));
        }
        if l_min >= l_max {
            return Err(invalid(format!("empty ladder range [{l_min}, {l_max}]")));
        }
        Ok(LadderRange { l_min, l_max })
    }

    /// `[−l0 − 8, 8]`.
    pub fn default_for(l0: u32) -> Self {
        LadderRange {
            l_min: -(l0 as i32) - DEFAULT_GUARD,
            l_max: DEFAULT_GUARD,
        }
    }

    /// The range must bracket both resonant orders `0` and `−l0` with at
    /// least [`MIN_GUARD`] orders to spare.
    pub fn check_brackets(&self, l0: u32) -> Result<()> {
        let l0 = l0 as i32;
        if self.l_min > -l0 - MIN_GUARD || self.l_max < MIN_GUARD {
            return Err(invalid(format!(
                "ladder range [{}, {}] must extend to at least [{}, {}] for l0 = {l0}",
                self.l_min,
                self.l_max,
                -l0 - MIN_GUARD,
                MIN_GUARD
            )));
        }
        Ok(())
    }

    pub fn l_min(&self) -> i32 {
        self.l_min
    }

    pub fn l_max(&self) -> i32 {
        self.l_max
    }

    pub fn len(&self) -> usize {
        ((self.l_max - self.l_min) / 2 + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn orders(&self) -> impl Iterator<Item = i32> {
        (self.l_min..=self.l_max).step_by(2)
    }

    pub fn index_of(&self, l: i32) -> Option<usize> {
        if l % 2 != 0 || l < self.l_min || l > self.l_max {
            None
        } else {
            Some(((l - self.l_min) / 2) as usize)
        }
    }

    pub fn order_at(&self, idx: usize) -> i32 {
        self.l_min + 2 * idx as i32
    }
}

/// Incidence direction of an atom: `P_{+l0}` or `P_{−l0}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Plus,
    Minus,
}

/// Real symmetric tridiagonal generator of the ladder equations.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderHamiltonian {
    pub range: LadderRange,
    pub l0: u32,
    pub n: u32,
    /// Diagonal entries in order `l_min..=l_max`, rad/s.
    pub diagonal: Vec<f64>,
    /// Coupling between neighbouring orders, −χn/2, rad/s.
    pub off_diagonal: f64,
    /// Constant −χn light shift added to the diagonal, when enabled.
    pub stark_shift: Option<f64>,
    pub recoil_frequency: f64,
}

pub fn build_hamiltonian(
    n: u32,
    l0: u32,
    range: LadderRange,
    d: &DerivedParams,
    include_stark: bool,
) -> Result<LadderHamiltonian> {
    check_bragg_order(l0)?;
    range.check_brackets(l0)?;
    let chi_n = d.chi * f64::from(n);
    let stark_shift = include_stark.then_some(-chi_n);
    let l0f = f64::from(l0);
    let diagonal = range
        .orders()
        .map(|l| {
            let l = f64::from(l);
            d.recoil_frequency * l * (l + l0f) + stark_shift.unwrap_or(0.0)
        })
        .collect();
    Ok(LadderHamiltonian {
        range,
        l0,
        n,
        diagonal,
        off_diagonal: -chi_n / 2.0,
        stark_shift,
        recoil_frequency: d.recoil_frequency,
    })
}

impl LadderHamiltonian {
    pub fn dim(&self) -> usize {
        self.diagonal.len()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.dim();
        DMatrix::from_fn(dim, dim, |i, j| {
            if i == j {
                self.diagonal[i]
            } else if i.abs_diff(j) == 1 {
                self.off_diagonal
            } else {
                0.0
            }
        })
    }

    pub fn diagonal_at(&self, l: i32) -> Option<f64> {
        self.range.index_of(l).map(|i| self.diagonal[i])
    }
}

/// Amplitudes over the ladder for one atom and one field branch.
#[derive(Clone, Debug, PartialEq)]
pub struct LadderState {
    pub amplitudes: Vec<Complex64>,
    pub range: LadderRange,
    pub l0: u32,
    pub n: u32,
    pub direction: Direction,
    /// Elapsed interaction time, s.
    pub time: f64,
}

/// Unit amplitude at ladder order 0 on the default range.
pub fn initial_state(l0: u32, direction: Direction, n: u32) -> Result<LadderState> {
    initial_state_in(l0, direction, n, LadderRange::default_for(l0))
}

pub fn initial_state_in(
    l0: u32,
    direction: Direction,
    n: u32,
    range: LadderRange,
) -> Result<LadderState> {
    check_bragg_order(l0)?;
    range.check_brackets(l0)?;
    let mut amplitudes = vec![Complex64::new(0.0, 0.0); range.len()];
    amplitudes[range.index_of(0).expect("range brackets order 0")] = Complex64::new(1.0, 0.0);
    Ok(LadderState {
        amplitudes,
        range,
        l0,
        n,
        direction,
        time: 0.0,
    })
}

impl LadderState {
    pub fn amplitude(&self, l: i32) -> Complex64 {
        self.range
            .index_of(l)
            .map(|i| self.amplitudes[i])
            .unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Populations keyed by ladder order.
    pub fn populations(&self) -> BTreeMap<i32, f64> {
        self.range
            .orders()
            .zip(&self.amplitudes)
            .map(|(l, c)| (l, c.norm_sqr()))
            .collect()
    }

    /// Populations keyed by physical order `m`, momentum `P_{+l0} + m·ħk`.
    pub fn physical_populations(&self) -> BTreeMap<i32, f64> {
        let l0 = self.l0 as i32;
        self.range
            .orders()
            .zip(&self.amplitudes)
            .map(|(l, c)| {
                let m = match self.direction {
                    Direction::Plus => l,
                    Direction::Minus => -l0 - l,
                };
                (m, c.norm_sqr())
            })
            .collect()
    }

    /// Amplitudes on `(P_{+l0}, P_{−l0})` and the population outside them.
    pub fn two_mode(&self) -> ([Complex64; 2], f64) {
        let here = self.amplitude(0);
        let there = self.amplitude(-(self.l0 as i32));
        let pair = match self.direction {
            Direction::Plus => [here, there],
            Direction::Minus => [there, here],
        };
        let inside = pair[0].norm_sqr() + pair[1].norm_sqr();
        (pair, (self.norm_sqr() - inside).max(0.0))
    }
}

pub fn populations(s: &LadderState) -> BTreeMap<i32, f64> {
    s.populations()
}

/// Tolerances for [`Propagator::evolve`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvolveOptions {
    /// Allowed change of Σ|C_l|².
    pub tol: f64,
    /// Largest population tolerated on the two outermost orders.
    pub edge_threshold: f64,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        EvolveOptions {
            tol: DEFAULT_TOL,
            edge_threshold: DEFAULT_EDGE_THRESHOLD,
        }
    }
}

/// Effective two-level parameters read off the ladder spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EffectiveTwoLevel {
    /// Common shift of the two resonant orders, rad/s.
    pub level_shift: f64,
    /// Signed coupling B in `i dC± /dt = A C± − (B/2) C∓`, rad/s.
    pub coupling: f64,
}

/// Exact propagator `exp(−iHt)` from the eigendecomposition of `H`.
#[derive(Clone, Debug)]
pub struct Propagator {
    range: LadderRange,
    l0: u32,
    n: u32,
    energies: Vec<f64>,
    vectors: DMatrix<f64>,
}

impl Propagator {
    pub fn new(h: &LadderHamiltonian) -> Self {
        let eig = SymmetricEigen::new(h.to_dense());
        Propagator {
            range: h.range,
            l0: h.l0,
            n: h.n,
            energies: eig.eigenvalues.iter().copied().collect(),
            vectors: eig.eigenvectors,
        }
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    fn eigen_coefficients(&self, psi: &[Complex64]) -> Vec<Complex64> {
        let dim = psi.len();
        (0..dim)
            .map(|k| (0..dim).map(|i| psi[i] * self.vectors[(i, k)]).sum())
            .collect()
    }

    fn amplitudes_at(&self, coeffs: &[Complex64], dt: f64) -> Vec<Complex64> {
        let dim = coeffs.len();
        let phased: Vec<Complex64> = coeffs
            .iter()
            .zip(&self.energies)
            .map(|(c, e)| c * Complex64::from_polar(1.0, -e * dt))
            .collect();
        (0..dim)
            .map(|i| (0..dim).map(|k| phased[k] * self.vectors[(i, k)]).sum())
            .collect()
    }

    fn check_compatible(&self, s: &LadderState) -> Result<()> {
        if s.range != self.range || s.l0 != self.l0 || s.n != self.n {
            return Err(invalid(format!(
                "state (l0 = {}, n = {}, range {:?}) does not match Hamiltonian (l0 = {}, n = {}, range {:?})",
                s.l0, s.n, s.range, self.l0, self.n, self.range
            )));
        }
        Ok(())
    }

    /// Evolves `s` by `duration` seconds.
    ///
    /// Fails with [`Error::Truncation`] if either edge order becomes populated
    /// above `opts.edge_threshold` during the interval.
    pub fn evolve(&self, s: &LadderState, duration: f64, opts: &EvolveOptions) -> Result<LadderState> {
        self.check_compatible(s)?;
        if !(duration.is_finite() && duration >= 0.0) {
            return Err(invalid(format!("duration must be >= 0, got {duration}")));
        }
        if !(opts.tol > 0.0) {
            return Err(invalid("tolerance must be positive"));
        }
        if duration == 0.0 {
            return Ok(s.clone());
        }
        let coeffs = self.eigen_coefficients(&s.amplitudes);
        self.check_edges(&coeffs, duration, opts.edge_threshold)?;

        let amplitudes = self.amplitudes_at(&coeffs, duration);
        let norm_in = s.norm_sqr();
        let norm_out: f64 = amplitudes.iter().map(|c| c.norm_sqr()).sum();
        let drift = (norm_out - norm_in).abs();
        if drift > opts.tol {
            return Err(Error::NormDrift { drift, tol: opts.tol });
        }
        Ok(LadderState {
            amplitudes,
            time: s.time + duration,
            ..s.clone()
        })
    }

    fn check_edges(&self, coeffs: &[Complex64], duration: f64, threshold: f64) -> Result<()> {
        let last = self.range.len() - 1;
        for edge in [0, last] {
            // |C_edge(t)| ≤ Σ_k |V_edge,k|·|c_k| for every t
            let bound: f64 = coeffs
                .iter()
                .enumerate()
                .map(|(k, c)| self.vectors[(edge, k)].abs() * c.norm())
                .sum();
            if bound * bound <= threshold {
                continue;
            }
            let mut worst = 0.0_f64;
            for step in 1..=EDGE_CHECKPOINTS {
                let t = duration * step as f64 / EDGE_CHECKPOINTS as f64;
                let c: Complex64 = coeffs
                    .iter()
                    .zip(&self.energies)
                    .enumerate()
                    .map(|(k, (c, e))| c * Complex64::from_polar(self.vectors[(edge, k)], -e * t))
                    .sum();
                worst = worst.max(c.norm_sqr());
            }
            if worst > threshold {
                return Err(Error::Truncation {
                    order: self.range.order_at(edge),
                    population: worst,
                    threshold,
                });
            }
        }
        Ok(())
    }

    /// Two-level parameters of the pair of eigenstates living mostly on the
    /// resonant orders `0` and `−l0`.
    pub fn effective_two_level(&self) -> EffectiveTwoLevel {
        let i0 = self.range.index_of(0).expect("range brackets order 0");
        let im = self
            .range
            .index_of(-(self.l0 as i32))
            .expect("range brackets order -l0");
        let mut weights: Vec<(usize, f64)> = (0..self.energies.len())
            .map(|k| {
                let w = self.vectors[(i0, k)].powi(2) + self.vectors[(im, k)].powi(2);
                (k, w)
            })
            .collect();
        weights.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        let (k1, k2) = (weights[0].0, weights[1].0);
        let level_shift = 0.5 * (self.energies[k1] + self.energies[k2]);
        let symmetric = |k: usize| self.vectors[(i0, k)] * self.vectors[(im, k)] > 0.0;
        let e_sym = if symmetric(k1) {
            self.energies[k1]
        } else {
            self.energies[k2]
        };
        EffectiveTwoLevel {
            level_shift,
            coupling: -2.0 * (e_sym - level_shift),
        }
    }
}

/// Evolves `s` under `h` for `duration` seconds with the default edge
/// threshold.
pub fn evolve(s: &LadderState, h: &LadderHamiltonian, duration: f64, tol: f64) -> Result<LadderState> {
    Propagator::new(h).evolve(
        s,
        duration,
        &EvolveOptions {
            tol,
            ..EvolveOptions::default()
        },
    )
}

/// Sampled populations of one ladder run.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries {
    pub orders: Vec<i32>,
    pub recoil_frequency: f64,
    /// `(t, populations in `orders` order)`.
    pub rows: Vec<(f64, Vec<f64>)>,
}

/// Samples `samples` evenly spaced times over `[0, duration]`. A zero
/// duration yields the initial state alone.
pub fn time_series(
    s0: &LadderState,
    h: &LadderHamiltonian,
    duration: f64,
    samples: usize,
    opts: &EvolveOptions,
) -> Result<TimeSeries> {
    if samples == 0 {
        return Err(invalid("need at least one sample"));
    }
    let prop = Propagator::new(h);
    let times: Vec<f64> = if duration == 0.0 || samples == 1 {
        vec![0.0]
    } else {
        (0..samples)
            .map(|i| duration * i as f64 / (samples - 1) as f64)
            .collect()
    };
    let rows = times
        .into_iter()
        .map(|t| {
            let s = prop.evolve(s0, t, opts)?;
            Ok((s0.time + t, s.amplitudes.iter().map(|c| c.norm_sqr()).collect()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TimeSeries {
        orders: s0.range.orders().collect(),
        recoil_frequency: h.recoil_frequency,
        rows,
    })
}

impl TimeSeries {
    /// CSV with header `t_s,tau,p_<l>...`; `tau = w_rec·t`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["t_s".to_string(), "tau".to_string()];
        header.extend(self.orders.iter().map(|l| format!("p_{l}")));
        w.write_record(&header)?;
        for (t, pops) in &self.rows {
            let mut record = vec![fmt_sci(*t), fmt_sci(self.recoil_frequency * t)];
            record.extend(pops.iter().map(|p| fmt_sci(*p)));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Scientific notation with 15 significant digits.
pub(crate) fn fmt_sci(x: f64) -> String {
    format!("{x:.14e}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{derive, rubidium_preset};
    use approx::assert_relative_eq;
    use std::f64::consts::{PI, TAU};

    fn rb() -> DerivedParams {
        derive(&rubidium_preset()).unwrap()
    }

    #[test]
    fn range_indexing() {
        let r = LadderRange::default_for(2);
        assert_eq!((r.l_min(), r.l_max(), r.len()), (-10, 8, 10));
        assert_eq!(r.index_of(0), Some(5));
        assert_eq!(r.index_of(-2), Some(4));
        assert_eq!(r.index_of(1), None);
        assert_eq!(r.index_of(10), None);
        assert_eq!(r.order_at(9), 8);
        assert!(LadderRange::new(-3, 4).is_err());
        assert!(LadderRange::new(4, 4).is_err());
    }

    #[test]
    fn range_must_bracket_resonances() {
        let d = rb();
        assert!(build_hamiltonian(1, 2, LadderRange::new(-6, 4).unwrap(), &d, false).is_ok());
        assert!(build_hamiltonian(1, 2, LadderRange::new(-4, 4).unwrap(), &d, false).is_err());
        assert!(build_hamiltonian(1, 4, LadderRange::new(-6, 8).unwrap(), &d, false).is_err());
        assert!(build_hamiltonian(1, 2, LadderRange::new(-6, 2).unwrap(), &d, false).is_err());
        assert!(build_hamiltonian(1, 3, LadderRange::default_for(4), &d, false).is_err());
    }

    #[test]
    fn hamiltonian_entries() {
        let d = rb();
        let h = build_hamiltonian(1, 2, LadderRange::default_for(2), &d, false).unwrap();
        assert_eq!(h.diagonal_at(0), Some(0.0));
        assert_eq!(h.diagonal_at(-2), Some(0.0));
        assert_eq!(h.diagonal_at(2), Some(8.0 * d.recoil_frequency));
        assert_eq!(h.off_diagonal, -d.chi / 2.0);
        // −χ/2 ≈ −2π × 39.2 Hz
        assert_relative_eq!(h.off_diagonal / TAU, -39.2, max_relative = 1e-12);

        let vac = build_hamiltonian(0, 4, LadderRange::default_for(4), &d, false).unwrap();
        assert_eq!(vac.off_diagonal, 0.0);

        let l4 = build_hamiltonian(1, 4, LadderRange::default_for(4), &d, false).unwrap();
        assert_eq!(l4.diagonal_at(0), Some(0.0));
        assert_eq!(l4.diagonal_at(-4), Some(0.0));
        assert_eq!(l4.diagonal_at(-2), Some(-4.0 * d.recoil_frequency));
    }

    #[test]
    fn stark_shift_is_uniform() {
        let d = rb();
        let plain = build_hamiltonian(2, 2, LadderRange::default_for(2), &d, false).unwrap();
        let stark = build_hamiltonian(2, 2, LadderRange::default_for(2), &d, true).unwrap();
        assert_eq!(stark.stark_shift, Some(-2.0 * d.chi));
        for (a, b) in plain.diagonal.iter().zip(&stark.diagonal) {
            assert_relative_eq!(b - a, -2.0 * d.chi, max_relative = 1e-9);
        }
    }

    #[test]
    fn hamiltonian_is_symmetric() {
        let h = build_hamiltonian(3, 6, LadderRange::default_for(6), &rb(), true).unwrap();
        let m = h.to_dense();
        assert_eq!(m, m.transpose());
    }

    #[test]
    fn initial_states() {
        for dir in [Direction::Plus, Direction::Minus] {
            let s = initial_state(2, dir, 1).unwrap();
            assert_eq!(s.norm_sqr(), 1.0);
            let pops = s.populations();
            assert_eq!(pops[&0], 1.0);
            assert_eq!(pops.values().sum::<f64>(), 1.0);
        }
        let (pair, leak) = initial_state(2, Direction::Minus, 1).unwrap().two_mode();
        assert_eq!(pair, [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)]);
        assert_eq!(leak, 0.0);
    }

    #[test]
    fn superposition_populations() {
        let mut s = initial_state(2, Direction::Plus, 1).unwrap();
        let i0 = s.range.index_of(0).unwrap();
        let im = s.range.index_of(-2).unwrap();
        s.amplitudes[i0] = Complex64::new(0.5f64.sqrt(), 0.0);
        s.amplitudes[im] = Complex64::new(0.0, 0.5f64.sqrt());
        let p = populations(&s);
        assert_relative_eq!(p[&0], 0.5, max_relative = 1e-15);
        assert_relative_eq!(p[&-2], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn zero_duration_is_identity() {
        let d = rb();
        let h = build_hamiltonian(1, 2, LadderRange::default_for(2), &d, false).unwrap();
        let s = initial_state(2, Direction::Plus, 1).unwrap();
        assert_eq!(evolve(&s, &h, 0.0, 1e-9).unwrap(), s);
    }

    #[test]
    fn vacuum_branch_keeps_populations() {
        let d = rb();
        let h = build_hamiltonian(0, 2, LadderRange::default_for(2), &d, false).unwrap();
        let mut s = initial_state(2, Direction::Plus, 0).unwrap();
        let i2 = s.range.index_of(2).unwrap();
        s.amplitudes[i2] = Complex64::new(0.6, 0.0);
        s.amplitudes[s.range.index_of(0).unwrap()] = Complex64::new(0.8, 0.0);
        // edge populations are zero here, so no truncation concern
        let out = evolve(&s, &h, 0.37, 1e-9).unwrap();
        for (a, b) in s.amplitudes.iter().zip(&out.amplitudes) {
            assert!((a.norm_sqr() - b.norm_sqr()).abs() < 1e-14);
        }
        assert!(out.amplitude(2).arg().abs() > 0.0);
        assert_eq!(out.time, 0.37);
    }

    #[test]
    fn pi_pulse_transfers_first_order() {
        let d = rb();
        let h = build_hamiltonian(1, 2, LadderRange::default_for(2), &d, false).unwrap();
        let s = initial_state(2, Direction::Plus, 1).unwrap();
        let out = evolve(&s, &h, PI / d.chi, 1e-9).unwrap();
        assert!(out.populations()[&-2] >= 0.99);
        let half = evolve(&s, &h, PI / (2.0 * d.chi), 1e-9).unwrap().populations();
        assert!((half[&0] - 0.5).abs() < 1e-3);
        assert!((half[&-2] - 0.5).abs() < 1e-3);
    }

    #[test]
    fn rejects_mismatched_state() {
        let d = rb();
        let h = build_hamiltonian(1, 2, LadderRange::default_for(2), &d, false).unwrap();
        let wrong_branch = initial_state(2, Direction::Plus, 0).unwrap();
        assert!(evolve(&wrong_branch, &h, 1e-3, 1e-9).is_err());
        let s = initial_state(2, Direction::Plus, 1).unwrap();
        assert!(evolve(&s, &h, -1.0, 1e-9).is_err());
        assert!(evolve(&s, &h, 1.0, 0.0).is_err());
    }

    #[test]
    fn truncation_error_on_tight_range() {
        // strong coupling on the narrowest legal range reaches the edges
        let p = rubidium_preset().with_regime_ratio(2.0).unwrap();
        let d = derive(&p).unwrap();
        let range = LadderRange::new(-6, 4).unwrap();
        let h = build_hamiltonian(1, 2, range, &d, false).unwrap();
        let s = initial_state_in(2, Direction::Plus, 1, range).unwrap();
        let err = evolve(&s, &h, PI / d.chi, 1e-9).unwrap_err();
        assert!(matches!(err, Error::Truncation { .. }), "{err}");
    }

    #[test]
    fn effective_two_level_first_order() {
        let d = rb();
        let h = build_hamiltonian(1, 2, LadderRange::default_for(2), &d, false).unwrap();
        let eff = Propagator::new(&h).effective_two_level();
        assert_relative_eq!(eff.coupling, d.chi, max_relative = 1e-3);
        // both resonant orders are pushed down by one outer neighbour each
        let outer = -(d.chi / 2.0).powi(2) / (8.0 * d.recoil_frequency);
        assert_relative_eq!(eff.level_shift, outer, max_relative = 0.05);
    }

    #[test]
    fn csv_layout() {
        let d = rb();
        let h = build_hamiltonian(1, 2, LadderRange::default_for(2), &d, false).unwrap();
        let s = initial_state(2, Direction::Plus, 1).unwrap();
        let ts = time_series(&s, &h, 1e-3, 3, &EvolveOptions::default()).unwrap();
        let mut buf = Vec::new();
        ts.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("t_s,tau,p_-10,p_-8"));
        assert!(lines[0].ends_with("p_8"));
        assert_eq!(lines[1].split(',').count(), 12);
        assert!(lines[1].starts_with("0.00000000000000e0,0.00000000000000e0,"));

        let single = time_series(&s, &h, 0.0, 200, &EvolveOptions::default()).unwrap();
        assert_eq!(single.rows.len(), 1);
    }
}
