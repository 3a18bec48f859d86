//! Ladder numerics checked against the two-level model, and parameter
//! sweeps built from those checks.

use std::f64::consts::{PI, TAU};
use std::io::Write;

use nalgebra::{Matrix3, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{self, ShiftConvention};
use crate::entangle::{self, Engine, PrepMode, Scenario};
use crate::error::{invalid, Result};
use crate::ladder::{self, Direction, EvolveOptions, LadderRange, Propagator};
use crate::params::{PhysicalParams, RegimeThresholds, RegimeVerdict};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ValidationOptions {
    /// Samples over one Rabi cycle `2π/|B_n|`.
    pub samples: usize,
    pub include_stark: bool,
    pub thresholds: RegimeThresholds,
    pub evolve: EvolveOptions,
}

impl Default for ValidationOptions {
    fn default() -> Self {
        ValidationOptions {
            samples: 2001,
            include_stark: false,
            thresholds: RegimeThresholds::default(),
            evolve: EvolveOptions::default(),
        }
    }
}

/// Level shift and coupling for `l0 > 2` from both printed-form conventions
/// and from the ladder spectrum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShiftComparison {
    pub a_literal_rad_s: f64,
    pub a_corrected_rad_s: f64,
    pub a_ladder_rad_s: f64,
    pub b_formula_rad_s: f64,
    pub b_ladder_rad_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub l0: u32,
    pub n: u32,
    pub chi_rad_s: f64,
    pub recoil_frequency_rad_s: f64,
    pub regime_ratio: f64,
    pub regime: RegimeVerdict,
    pub b_n_rad_s: f64,
    pub rabi_cycle_s: f64,
    /// Angular frequency of the `0 ↔ −l0` population oscillation.
    pub frequency_extracted_rad_s: f64,
    pub frequency_ratio: f64,
    /// Largest `|p_ladder − p_two_level|` on orders `0` and `−l0`.
    pub max_population_deviation: f64,
    /// Smallest population held by orders `0` and `−l0`.
    pub min_two_mode_confinement: f64,
    /// Population on `−l0` after `π/|B_n|`.
    pub peak_transfer: f64,
    pub max_norm_drift: f64,
    pub shift_comparison: Option<ShiftComparison>,
}

/// Fits `a + b·cos(ωt) + c·sin(ωt)` to `(t, y)`; returns the residual sum of
/// squares for a fixed `ω`.
fn sinusoid_residual(ts: &[f64], ys: &[f64], omega: f64) -> f64 {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&t, &y) in ts.iter().zip(ys) {
        let row = Vector3::new(1.0, (omega * t).cos(), (omega * t).sin());
        ata += row * row.transpose();
        aty += row * y;
    }
    let Some(coef) = ata.cholesky().map(|ch| ch.solve(&aty)) else {
        return f64::INFINITY;
    };
    ts.iter()
        .zip(ys)
        .map(|(&t, &y)| {
            let fit = coef[0] + coef[1] * (omega * t).cos() + coef[2] * (omega * t).sin();
            (y - fit).powi(2)
        })
        .sum()
}

/// Best-fit angular frequency of a single sinusoid, searched over
/// `[lo, hi]` on a log grid and refined by golden section.
pub fn fit_frequency(ts: &[f64], ys: &[f64], lo: f64, hi: f64) -> f64 {
    const GRID: usize = 600;
    let ratio = (hi / lo).powf(1.0 / (GRID - 1) as f64);
    let grid: Vec<f64> = (0..GRID).map(|i| lo * ratio.powi(i as i32)).collect();
    let best = grid
        .iter()
        .enumerate()
        .map(|(i, &w)| (i, sinusoid_residual(ts, ys, w)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(GRID - 1)];
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (sinusoid_residual(ts, ys, x1), sinusoid_residual(ts, ys, x2));
    for _ in 0..80 {
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sinusoid_residual(ts, ys, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sinusoid_residual(ts, ys, x2);
        }
    }
    0.5 * (a + b)
}

/// Runs the ladder for one Rabi cycle from `|P_{+l0}⟩` in the branch with
/// `n` photons and compares it with the two-level solution.
pub fn validate(p: &PhysicalParams, n: u32, opts: &ValidationOptions) -> Result<ValidationReport> {
    if n == 0 {
        return Err(invalid("validation needs a coupled branch (n >= 1)"));
    }
    if opts.samples < 16 {
        return Err(invalid("validation needs at least 16 samples"));
    }
    let d = p.derive()?;
    let l0 = p.l0;
    let coeffs = adiabatic::coeffs(n, l0, &d, ShiftConvention::Corrected)?;
    if !(coeffs.b_n > 0.0) {
        return Err(invalid("coupling vanishes; nothing to validate"));
    }
    let range = LadderRange::default_for(l0);
    let h = ladder::build_hamiltonian(n, l0, range, &d, opts.include_stark)?;
    let prop = Propagator::new(&h);
    let s0 = ladder::initial_state_in(l0, Direction::Plus, n, range)?;
    let cycle = TAU / coeffs.b_n;

    let mut ts = Vec::with_capacity(opts.samples);
    let mut transfer = Vec::with_capacity(opts.samples);
    let mut max_dev = 0.0_f64;
    let mut min_conf = 1.0_f64;
    let mut max_drift = 0.0_f64;
    let minus = -(l0 as i32);
    for i in 0..opts.samples {
        let t = cycle * i as f64 / (opts.samples - 1) as f64;
        let s = prop.evolve(&s0, t, &opts.evolve)?;
        let (p0, pm) = (s.amplitude(0).norm_sqr(), s.amplitude(minus).norm_sqr());
        let expect = (0.5 * coeffs.b_n * t).sin().powi(2);
        max_dev = max_dev.max((pm - expect).abs()).max((p0 - (1.0 - expect)).abs());
        min_conf = min_conf.min(p0 + pm);
        max_drift = max_drift.max((s.norm_sqr() - 1.0).abs());
        ts.push(t);
        transfer.push(pm);
    }
    let omega = fit_frequency(&ts, &transfer, 0.25 * coeffs.b_n, 4.0 * coeffs.b_n);
    let peak = prop.evolve(&s0, PI / coeffs.b_n, &opts.evolve)?;

    let shift_comparison = (l0 > 2).then(|| {
        let eff = prop.effective_two_level();
        ShiftComparison {
            a_literal_rad_s: adiabatic::level_shift(n, l0, &d, ShiftConvention::Literal),
            a_corrected_rad_s: coeffs.a_n,
            a_ladder_rad_s: eff.level_shift,
            b_formula_rad_s: coeffs.b_n,
            b_ladder_rad_s: eff.coupling.abs(),
        }
    });

    Ok(ValidationReport {
        l0,
        n,
        chi_rad_s: d.chi,
        recoil_frequency_rad_s: d.recoil_frequency,
        regime_ratio: d.ratio_for(n),
        regime: opts.thresholds.classify(d.ratio_for(n)),
        b_n_rad_s: coeffs.b_n,
        rabi_cycle_s: cycle,
        frequency_extracted_rad_s: omega,
        frequency_ratio: omega / coeffs.b_n,
        max_population_deviation: max_dev,
        min_two_mode_confinement: min_conf,
        peak_transfer: peak.amplitude(minus).norm_sqr(),
        max_norm_drift: max_drift,
        shift_comparison,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepVar {
    ChiRatio,
    L0,
    N0,
    S,
}

impl SweepVar {
    pub fn name(self) -> &'static str {
        match self {
            SweepVar::ChiRatio => "chi_ratio",
            SweepVar::L0 => "l0",
            SweepVar::N0 => "n0",
            SweepVar::S => "s",
        }
    }
}

impl std::str::FromStr for SweepVar {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "chi_ratio" => Ok(SweepVar::ChiRatio),
            "l0" => Ok(SweepVar::L0),
            "n0" => Ok(SweepVar::N0),
            "s" => Ok(SweepVar::S),
            other => Err(format!(
                "unknown sweep variable `{other}` (expected chi_ratio, l0, n0 or s)"
            )),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub variable: &'static str,
    pub value: f64,
    pub validation: ValidationReport,
    /// Opposite-state Bell run on the ladder, `r = 0`.
    pub bell_fidelity: f64,
    pub bell_concurrence: f64,
}

fn as_count(var: SweepVar, v: f64) -> Result<u32> {
    if v.fract() != 0.0 || !(1.0..=1e6).contains(&v) {
        return Err(invalid(format!(
            "{} must be a positive integer, got {v}",
            var.name()
        )));
    }
    Ok(v as u32)
}

fn sweep_point(
    base: &PhysicalParams,
    var: SweepVar,
    value: f64,
    opts: &ValidationOptions,
) -> Result<SweepRow> {
    let mut p = *base;
    let mut s = 1;
    match var {
        SweepVar::ChiRatio => p = p.with_regime_ratio(value)?,
        SweepVar::L0 => p.l0 = as_count(var, value)?,
        SweepVar::N0 => p.n0 = as_count(var, value)?,
        SweepVar::S => {
            s = as_count(var, value)?;
            if s % 2 == 0 {
                return Err(invalid(format!("s must be odd, got {s}")));
            }
        }
    }
    p.validate()?;
    let validation = validate(&p, p.n0, opts)?;
    let mut sc = Scenario::bell(p, PrepMode::Opposite, s, 0, Engine::Ladder);
    sc.include_stark = opts.include_stark;
    sc.allow_violated = true;
    sc.thresholds = opts.thresholds;
    sc.evolve = opts.evolve;
    let bell = entangle::run_scenario(&sc)?;
    Ok(SweepRow {
        variable: var.name(),
        value,
        validation,
        bell_fidelity: bell.fidelity,
        bell_concurrence: bell.concurrence.unwrap_or(0.0),
    })
}

/// Evaluates every point in parallel; rows come back in input order.
pub fn sweep(
    base: &PhysicalParams,
    var: SweepVar,
    values: &[f64],
    opts: &ValidationOptions,
) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(invalid("sweep needs at least one value"));
    }
    values
        .par_iter()
        .map(|&v| sweep_point(base, var, v, opts))
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    use crate::ladder::fmt_sci;
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "variable",
        "value",
        "l0",
        "n",
        "regime_ratio",
        "regime",
        "b_n_rad_s",
        "frequency_ratio",
        "max_population_deviation",
        "min_two_mode_confinement",
        "peak_transfer",
        "bell_fidelity",
        "bell_concurrence",
    ])?;
    for r in rows {
        let v = &r.validation;
        w.write_record([
            r.variable.to_string(),
            fmt_sci(r.value),
            v.l0.to_string(),
            v.n.to_string(),
            fmt_sci(v.regime_ratio),
            serde_json::to_value(v.regime)?
                .as_str()
                .unwrap_or_default()
                .to_string(),
            fmt_sci(v.b_n_rad_s),
            fmt_sci(v.frequency_ratio),
            fmt_sci(v.max_population_deviation),
            fmt_sci(v.min_two_mode_confinement),
            fmt_sci(v.peak_transfer),
            fmt_sci(r.bell_fidelity),
            fmt_sci(r.bell_concurrence),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::rubidium_preset;

    #[test]
    fn recovers_pure_sinusoid() {
        let ts: Vec<f64> = (0..500).map(|i| i as f64 * 0.01).collect();
        let ys: Vec<f64> = ts.iter().map(|t| 0.3 + 0.5 * (2.7 * t + 0.4).cos()).collect();
        let w = fit_frequency(&ts, &ys, 0.5, 10.0);
        assert!((w - 2.7).abs() < 1e-6, "{w}");
    }

    #[test]
    fn rubidium_first_order() {
        let rep = validate(&rubidium_preset(), 1, &ValidationOptions::default()).unwrap();
        assert_eq!(rep.regime, RegimeVerdict::Good);
        assert!((rep.frequency_ratio - 1.0).abs() < 0.02);
        assert!(rep.peak_transfer >= 0.99);
        assert!(rep.max_population_deviation < 1e-2);
        assert!(rep.shift_comparison.is_none());
        assert!(rep.max_norm_drift < 1e-9);
    }

    #[test]
    fn violated_regime_is_flagged() {
        let p = rubidium_preset().with_regime_ratio(0.5).unwrap();
        let rep = validate(&p, 1, &ValidationOptions::default()).unwrap();
        assert_eq!(rep.regime, RegimeVerdict::Violated);
    }

    #[test]
    fn second_order_reports_shift_comparison() {
        let p = PhysicalParams { l0: 4, ..rubidium_preset() };
        let rep = validate(&p, 1, &ValidationOptions::default()).unwrap();
        let cmp = rep.shift_comparison.unwrap();
        assert!((cmp.b_ladder_rad_s / cmp.b_formula_rad_s - 1.0).abs() < 0.05);
        assert!(cmp.a_literal_rad_s < 0.0);
        assert!(cmp.a_corrected_rad_s > 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        let p = rubidium_preset();
        assert!(validate(&p, 0, &ValidationOptions::default()).is_err());
        assert!(sweep(&p, SweepVar::L0, &[], &ValidationOptions::default()).is_err());
        assert!(sweep(&p, SweepVar::L0, &[3.0], &ValidationOptions::default()).is_err());
        assert!(sweep(&p, SweepVar::S, &[2.0], &ValidationOptions::default()).is_err());
        assert!(sweep(&p, SweepVar::N0, &[1.5], &ValidationOptions::default()).is_err());
        assert!("temperature".parse::<SweepVar>().is_err());
    }
}
