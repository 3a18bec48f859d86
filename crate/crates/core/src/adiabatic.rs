//! Two-level reduction of the ladder after eliminating the intermediate
//! orders between `0` and `−l0`.
//!
//! The resonant amplitudes obey
//!
//! ```text
//! i dC+/dt = A_n C+ − (B_n/2) C−
//! i dC−/dt = A_n C− − (B_n/2) C+
//! ```
//!
//! with `|B_n| = (χn)^{l0/2} / ((2 w_rec)^{l0/2−1} [(l0−2)(l0−4)…4·2]²)`
//! (`χn` for first order). [`solve`] is the exact unitary solution of this
//! pair.
//!
//! Two conventions are offered for the level shift `A_n` when `l0 > 2`:
//! [`ShiftConvention::Literal`] evaluates `−(χn/2) / (2 w_rec (l0−2))`
//! which is dimensionless and kept for comparison, and [`ShiftConvention::Corrected`]
//! uses the second-order shift `(χn/2)² / (2 w_rec (l0−2))` from the
//! adjacent intermediate order, which has units of rad/s. Both vanish for
//! `l0 = 2`.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::ladder::fmt_sci;
use crate::params::{check_bragg_order, DerivedParams};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShiftConvention {
    #[serde(rename = "literal")]
    Literal,
    #[default]
    Corrected,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelCoeffs {
    /// Level shift A_n, rad/s.
    pub a_n: f64,
    /// Coupling |B_n| ≥ 0, rad/s.
    pub b_n: f64,
    pub n: u32,
    pub l0: u32,
}

/// `m·(m−2)·…·4·2` for even `m`; 1 for `m = 0`.
pub fn even_double_factorial(m: u32) -> f64 {
    (2..=m).step_by(2).map(f64::from).product()
}

pub fn coupling_magnitude(n: u32, l0: u32, d: &DerivedParams) -> f64 {
    let chi_n = (d.chi * f64::from(n)).abs();
    if l0 == 2 {
        return chi_n;
    }
    let half = (l0 / 2) as i32;
    let norm = even_double_factorial(l0 - 2);
    chi_n.powi(half) / ((2.0 * d.recoil_frequency).powi(half - 1) * norm * norm)
}

pub fn level_shift(n: u32, l0: u32, d: &DerivedParams, convention: ShiftConvention) -> f64 {
    if l0 == 2 || n == 0 {
        return 0.0;
    }
    let half_rabi = d.chi * f64::from(n) / 2.0;
    let gap = 2.0 * d.recoil_frequency * f64::from(l0 - 2);
    match convention {
        ShiftConvention::Literal => -half_rabi / gap,
        ShiftConvention::Corrected => half_rabi * half_rabi / gap,
    }
}

pub fn coeffs(
    n: u32,
    l0: u32,
    d: &DerivedParams,
    convention: ShiftConvention,
) -> Result<TwoLevelCoeffs> {
    check_bragg_order(l0)?;
    Ok(TwoLevelCoeffs {
        a_n: level_shift(n, l0, d, convention),
        b_n: coupling_magnitude(n, l0, d),
        n,
        l0,
    })
}

impl TwoLevelCoeffs {
    /// π/|B_n|; infinite when the branch is uncoupled.
    pub fn pi_pulse(&self) -> f64 {
        PI / self.b_n
    }
}

/// Amplitudes on `P_{+l0}` and `P_{−l0}` at time `t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoLevelSolution {
    pub c_plus: Complex64,
    pub c_minus: Complex64,
    pub t: f64,
}

impl TwoLevelSolution {
    pub fn norm_sqr(&self) -> f64 {
        self.c_plus.norm_sqr() + self.c_minus.norm_sqr()
    }
}

/// Exact solution from `init = (C+(0), C−(0))`.
pub fn solve(init: (Complex64, Complex64), c: &TwoLevelCoeffs, t: f64) -> TwoLevelSolution {
    let (p0, m0) = init;
    let phase = Complex64::from_polar(1.0, -c.a_n * t);
    let half = 0.5 * c.b_n * t;
    let (cos, isin) = (half.cos(), Complex64::new(0.0, half.sin()));
    TwoLevelSolution {
        c_plus: phase * (p0 * cos + isin * m0),
        c_minus: phase * (m0 * cos + isin * p0),
        t,
    }
}

/// Interaction times `(t1, t2)` with `t1 = sπ/B` and `t2 = t1 + 2rπ/B`.
pub fn pulse_times(c: &TwoLevelCoeffs, s: u32, r: i64) -> Result<(f64, f64)> {
    if s.is_multiple_of(2) {
        return Err(invalid(format!("pulse number s must be odd, got {s}")));
    }
    if !(c.b_n > 0.0) {
        return Err(invalid(format!(
            "no pulse times for an uncoupled branch (n = {})",
            c.n
        )));
    }
    let unit = PI / c.b_n;
    let t1 = f64::from(s) * unit;
    let t2 = t1 + 2.0 * r as f64 * unit;
    if t2 < 0.0 {
        return Err(invalid(format!(
            "offset r = {r} makes the second interaction time negative"
        )));
    }
    Ok((t1, t2))
}

/// `(s + r)πA/B`: the two-atom phase from the level shift alone, without
/// the `i` factor each flip contributes.
pub fn shift_phase_bell(c: &TwoLevelCoeffs, s: u32, r: i64) -> f64 {
    (f64::from(s) + r as f64) * PI * c.a_n / c.b_n
}

/// `ksπA/2B` for simultaneous interaction, `[(k−1)s + 2r]πA/2B` when one
/// atom is offset by `2rπ/B`.
pub fn shift_phase_ghz(c: &TwoLevelCoeffs, k: usize, s: u32, r: i64) -> f64 {
    let s = f64::from(s);
    let k = k as f64;
    let weight = if r == 0 {
        k * s
    } else {
        (k - 1.0) * s + 2.0 * r as f64
    };
    weight * PI * c.a_n / (2.0 * c.b_n)
}

/// Writes `n,l0,a_n_rad_s,b_n_rad_s,pi_pulse_s` rows.
pub fn write_coeffs_csv<W: Write>(rows: &[TwoLevelCoeffs], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "l0", "a_n_rad_s", "b_n_rad_s", "pi_pulse_s"])?;
    for c in rows {
        w.write_record([
            c.n.to_string(),
            c.l0.to_string(),
            fmt_sci(c.a_n),
            fmt_sci(c.b_n),
            fmt_sci(c.pi_pulse()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
