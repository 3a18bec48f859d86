//! Physical inputs, derived frequency scales and the Bragg-regime check.
//!
//! All angular frequencies are in rad/s, lengths in metres, masses in kg.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Reduced Planck constant (CODATA 2018), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Experimental inputs of the scheme.
///
/// `l0` is the Bragg order, stored positive. The incidence direction of an
/// atom (±l0) is an initial condition and lives with the atom, not here.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicalParams {
    pub mass_kg: f64,
    pub wavelength_m: f64,
    /// Atom-field coupling constant g, rad/s.
    pub coupling_g: f64,
    /// Detuning Δ = ν − w between field and atomic transition, rad/s.
    pub detuning: f64,
    /// Photon number of the non-vacuum Fock branch.
    pub n0: u32,
    /// Bragg order (2, 4, 6, ...).
    pub l0: u32,
}

/// Frequency scales derived from [`PhysicalParams`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    /// k = 2π/λ, rad/m.
    pub wavenumber: f64,
    /// w_rec = ħk²/2M, rad/s.
    pub recoil_frequency: f64,
    /// χ = |g|²/2Δ, rad/s. Carries the sign of the detuning.
    pub chi: f64,
    /// |χ|·n0 / w_rec.
    pub regime_ratio: f64,
}

impl DerivedParams {
    /// |χ|·n / w_rec for an arbitrary photon number.
    pub fn ratio_for(&self, n: u32) -> f64 {
        self.chi.abs() * f64::from(n) / self.recoil_frequency
    }
}

impl PhysicalParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.mass_kg.is_finite() && self.mass_kg > 0.0) {
            return Err(invalid(format!("mass must be positive, got {}", self.mass_kg)));
        }
        if !(self.wavelength_m.is_finite() && self.wavelength_m > 0.0) {
            return Err(invalid(format!(
                "wavelength must be positive, got {}",
                self.wavelength_m
            )));
        }
        if !self.coupling_g.is_finite() {
            return Err(invalid("coupling g must be finite"));
        }
        if !self.detuning.is_finite() || self.detuning == 0.0 {
            return Err(invalid("detuning must be finite and nonzero"));
        }
        if self.n0 < 1 {
            return Err(invalid("n0 must be at least 1"));
        }
        check_bragg_order(self.l0)
    }

    pub fn derive(&self) -> Result<DerivedParams> {
        derive(self)
    }

    /// Returns a copy with `coupling_g` rescaled so that |χ|·n0/w_rec equals
    /// `ratio`. The sign of the detuning is kept.
    pub fn with_regime_ratio(&self, ratio: f64) -> Result<PhysicalParams> {
        if !(ratio.is_finite() && ratio >= 0.0) {
            return Err(invalid(format!("regime ratio must be >= 0, got {ratio}")));
        }
        let d = self.derive()?;
        let chi = ratio * d.recoil_frequency / f64::from(self.n0);
        Ok(PhysicalParams {
            coupling_g: (2.0 * self.detuning.abs() * chi).sqrt(),
            ..*self
        })
    }
}

pub(crate) fn check_bragg_order(l0: u32) -> Result<()> {
    if l0 == 0 || !l0.is_multiple_of(2) {
        return Err(invalid(format!(
            "Bragg order l0 must be a positive even integer, got {l0}"
        )));
    }
    Ok(())
}

pub fn derive(p: &PhysicalParams) -> Result<DerivedParams> {
    p.validate()?;
    let wavenumber = TAU / p.wavelength_m;
    let recoil_frequency = HBAR * wavenumber * wavenumber / (2.0 * p.mass_kg);
    let chi = p.coupling_g * p.coupling_g / (2.0 * p.detuning);
    Ok(DerivedParams {
        wavenumber,
        recoil_frequency,
        chi,
        regime_ratio: chi.abs() * f64::from(p.n0) / recoil_frequency,
    })
}

/// Rubidium atoms crossing a 0.8 μm cavity field, detuned by 2π×80 MHz with
/// g = 2π×112 kHz, first-order Bragg, single-photon Fock branch.
pub fn rubidium_preset() -> PhysicalParams {
    PhysicalParams {
        mass_kg: 1.42e-25,
        wavelength_m: 0.8e-6,
        coupling_g: TAU * 112e3,
        detuning: TAU * 80e6,
        n0: 1,
        l0: 2,
    }
}

const ATOMIC_MASS_UNIT: f64 = 1.660_539_066_60e-27;

/// Named parameter sets. The first entry is the default.
pub fn presets() -> Vec<(&'static str, &'static str, PhysicalParams)> {
    let rb = rubidium_preset();
    vec![
        (
            "rubidium",
            "Rb, M = 1.42e-25 kg, lambda = 0.8 um, g = 2pi x 112 kHz, delta = 2pi x 80 MHz",
            rb,
        ),
        (
            "rubidium-780",
            "as `rubidium` but at the Rb D2 wavelength 780.24 nm",
            PhysicalParams {
                wavelength_m: 780.241e-9,
                ..rb
            },
        ),
        (
            "rubidium-85",
            "as `rubidium` with the 85Rb isotope mass",
            PhysicalParams {
                mass_kg: 84.911_789_738 * ATOMIC_MASS_UNIT,
                ..rb
            },
        ),
    ]
}

pub fn preset(name: &str) -> Result<PhysicalParams> {
    presets()
        .into_iter()
        .find(|(n, _, _)| *n == name)
        .map(|(_, _, p)| p)
        .ok_or_else(|| Error::UnknownPreset(name.to_string()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegimeVerdict {
    Good,
    Marginal,
    Violated,
}

/// Upper bounds on χn/w_rec for the [`RegimeVerdict::Good`] and
/// [`RegimeVerdict::Marginal`] verdicts.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegimeThresholds {
    pub good: f64,
    pub marginal: f64,
}

impl Default for RegimeThresholds {
    fn default() -> Self {
        RegimeThresholds {
            good: 0.05,
            marginal: 0.2,
        }
    }
}

impl RegimeThresholds {
    pub fn classify(&self, ratio: f64) -> RegimeVerdict {
        if ratio <= self.good {
            RegimeVerdict::Good
        } else if ratio <= self.marginal {
            RegimeVerdict::Marginal
        } else {
            RegimeVerdict::Violated
        }
    }
}

/// Checks w_rec ≫ χn for the branch with `n` photons.
pub fn validate_bragg_regime(
    d: &DerivedParams,
    n: u32,
    thresholds: &RegimeThresholds,
) -> RegimeVerdict {
    thresholds.classify(d.ratio_for(n))
}

/// Angular frequency from a value quoted as "2π × f".
pub fn from_2pi_hz(f: f64) -> f64 {
    2.0 * PI * f
}
