//! Flat `key = value` parameter files and command-line overrides.
//!
//! ```text
//! # rubidium, second-order Bragg
//! preset = rubidium
//! l0 = 4
//! g_2pi_hz = 112e3
//! ```
//!
//! Resolution order is preset, then file, then command-line overrides; a
//! later layer replaces any field an earlier one set.

use crate::error::{Error, Result};
use crate::params::{self, PhysicalParams};

/// Keys accepted in config files and `--set` overrides.
pub const KEYS: &[&str] = &[
    "preset",
    "mass_kg",
    "wavelength_m",
    "g_rad_s",
    "g_2pi_hz",
    "detuning_rad_s",
    "detuning_2pi_hz",
    "n0",
    "l0",
    "regime_ratio",
];

/// One layer of parameter settings. Unset fields leave the layer below alone.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamOverrides {
    pub preset: Option<String>,
    pub mass_kg: Option<f64>,
    pub wavelength_m: Option<f64>,
    pub coupling_g: Option<f64>,
    pub detuning: Option<f64>,
    pub n0: Option<u32>,
    pub l0: Option<u32>,
    /// Rescales g so that |χ|·n0/w_rec hits this value; applied after the
    /// other fields of the same layer.
    pub regime_ratio: Option<f64>,
}

fn parse_float(key: &str, raw: &str, line: usize) -> Result<f64> {
    let v: f64 = raw.parse().map_err(|_| Error::Config {
        line,
        message: format!("`{key}`: cannot parse `{raw}` as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Config {
            line,
            message: format!("`{key}`: value must be finite"),
        });
    }
    Ok(v)
}

fn parse_count(key: &str, raw: &str, line: usize) -> Result<u32> {
    raw.parse().map_err(|_| Error::Config {
        line,
        message: format!("`{key}`: cannot parse `{raw}` as a non-negative integer"),
    })
}

fn fill<T>(slot: &mut Option<T>, value: T, key: &str, line: usize) -> Result<()> {
    if slot.is_some() {
        return Err(Error::Config {
            line,
            message: format!("`{key}` set more than once"),
        });
    }
    *slot = Some(value);
    Ok(())
}

impl ParamOverrides {
    /// Sets one key. `line` is reported in errors (0 for command-line input).
    pub fn set(&mut self, key: &str, raw: &str, line: usize) -> Result<()> {
        match key {
            "preset" => {
                if raw.is_empty() {
                    return Err(Error::Config {
                        line,
                        message: "`preset`: empty name".into(),
                    });
                }
                fill(&mut self.preset, raw.to_string(), key, line)
            }
            "mass_kg" => fill(&mut self.mass_kg, parse_float(key, raw, line)?, key, line),
            "wavelength_m" => fill(
                &mut self.wavelength_m,
                parse_float(key, raw, line)?,
                key,
                line,
            ),
            "g_rad_s" => fill(&mut self.coupling_g, parse_float(key, raw, line)?, key, line),
            "g_2pi_hz" => fill(
                &mut self.coupling_g,
                params::from_2pi_hz(parse_float(key, raw, line)?),
                key,
                line,
            ),
            "detuning_rad_s" => {
                fill(&mut self.detuning, parse_float(key, raw, line)?, key, line)
            }
            "detuning_2pi_hz" => fill(
                &mut self.detuning,
                params::from_2pi_hz(parse_float(key, raw, line)?),
                key,
                line,
            ),
            "n0" => fill(&mut self.n0, parse_count(key, raw, line)?, key, line),
            "l0" => fill(&mut self.l0, parse_count(key, raw, line)?, key, line),
            "regime_ratio" => fill(
                &mut self.regime_ratio,
                parse_float(key, raw, line)?,
                key,
                line,
            ),
            other => Err(Error::UnknownKey(other.to_string())),
        }
    }

    /// Applies this layer on top of `base`.
    pub fn apply(&self, base: PhysicalParams) -> Result<PhysicalParams> {
        let mut p = base;
        if let Some(v) = self.mass_kg {
            p.mass_kg = v;
        }
        if let Some(v) = self.wavelength_m {
            p.wavelength_m = v;
        }
        if let Some(v) = self.coupling_g {
            p.coupling_g = v;
        }
        if let Some(v) = self.detuning {
            p.detuning = v;
        }
        if let Some(v) = self.n0 {
            p.n0 = v;
        }
        if let Some(v) = self.l0 {
            p.l0 = v;
        }
        if let Some(r) = self.regime_ratio {
            p = p.with_regime_ratio(r)?;
        }
        Ok(p)
    }
}

fn split_pair(text: &str, line: usize) -> Result<(&str, &str)> {
    let (key, value) = text.split_once('=').ok_or_else(|| Error::Config {
        line,
        message: format!("expected `key = value`, found `{text}`"),
    })?;
    let (key, value) = (key.trim(), value.trim());
    if key.is_empty() {
        return Err(Error::Config {
            line,
            message: "missing key".into(),
        });
    }
    if value.is_empty() {
        return Err(Error::Config {
            line,
            message: format!("`{key}`: missing value"),
        });
    }
    Ok((key, value))
}

/// Parses a config file. `#` starts a comment; blank lines are ignored.
pub fn parse_config(text: &str) -> Result<ParamOverrides> {
    let mut out = ParamOverrides::default();
    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = match raw_line.split_once('#') {
            Some((before, _)) => before,
            None => raw_line,
        }
        .trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = split_pair(content, line)?;
        out.set(key, value, line)?;
    }
    Ok(out)
}

/// Parses a single `key=value` command-line override.
pub fn parse_override(item: &str) -> Result<(String, String)> {
    let (key, value) = split_pair(item.trim(), 0)?;
    if !KEYS.contains(&key) {
        return Err(Error::UnknownKey(key.to_string()));
    }
    Ok((key.to_string(), value.to_string()))
}

pub fn parse_overrides<S: AsRef<str>>(items: &[S]) -> Result<ParamOverrides> {
    let mut out = ParamOverrides::default();
    for item in items {
        let (key, value) = parse_override(item.as_ref())?;
        out.set(&key, &value, 0)?;
    }
    Ok(out)
}

/// Resolves parameters from the three layers. The base preset is the
/// command-line one if given, else the file's, else `rubidium`.
pub fn resolve(file: Option<&ParamOverrides>, cli: &ParamOverrides) -> Result<PhysicalParams> {
    let name = cli
        .preset
        .as_deref()
        .or_else(|| file.and_then(|f| f.preset.as_deref()))
        .unwrap_or("rubidium");
    let mut p = params::preset(name)?;
    if let Some(f) = file {
        p = f.apply(p)?;
    }
    p = cli.apply(p)?;
    p.validate()?;
    Ok(p)
}

/// Parses a comma-separated list of numbers, e.g. `0.01,0.02,0.05`.
pub fn parse_value_list(text: &str) -> Result<Vec<f64>> {
    let values = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| parse_float("values", s, 0))
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(Error::InvalidParameter("empty value list".into()));
    }
    Ok(values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::rubidium_preset;
    use std::f64::consts::TAU;

    #[test]
    fn parses_all_keys() {
        let cfg = parse_config(
            "# comment\n\
             preset = rubidium-85\n\
             mass_kg = 1.5e-25\n\
             wavelength_m=7.8e-7   # trailing\n\
             \n\
             g_2pi_hz = 100e3\n\
             detuning_rad_s = 1e9\n\
             n0 = 2\n\
             l0 = 4\n\
             regime_ratio = 0.01\n",
        )
        .unwrap();
        assert_eq!(cfg.preset.as_deref(), Some("rubidium-85"));
        assert_eq!(cfg.mass_kg, Some(1.5e-25));
        assert_eq!(cfg.wavelength_m, Some(7.8e-7));
        assert_eq!(cfg.coupling_g, Some(TAU * 100e3));
        assert_eq!(cfg.detuning, Some(1e9));
        assert_eq!((cfg.n0, cfg.l0), (Some(2), Some(4)));
        assert_eq!(cfg.regime_ratio, Some(0.01));
    }

    #[test]
    fn rejects_malformed_lines() {
        for (text, line) in [
            ("mass_kg 1e-25", 1),
            ("\n= 3", 2),
            ("l0 =", 1),
            ("l0 = -2", 1),
            ("mass_kg = heavy", 1),
            ("mass_kg = inf", 1),
            ("n0 = 1\nn0 = 2", 2),
            ("g_rad_s = 1\ng_2pi_hz = 1", 2),
        ] {
            match parse_config(text) {
                Err(Error::Config { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?} gave {other:?}"),
            }
        }
        assert!(matches!(parse_config("temperature = 3"), Err(Error::UnknownKey(_))));
    }

    #[test]
    fn override_rejects_unknown_keys() {
        assert!(matches!(parse_override("colour=blue"), Err(Error::UnknownKey(_))));
        assert_eq!(
            parse_override(" l0 = 4 ").unwrap(),
            ("l0".to_string(), "4".to_string())
        );
    }

    #[test]
    fn precedence_cli_over_file_over_preset() {
        let file = parse_config("l0 = 4\nn0 = 3\ng_rad_s = 5.0").unwrap();
        let cli = parse_overrides(&["l0=6"]).unwrap();
        let p = resolve(Some(&file), &cli).unwrap();
        assert_eq!(p.l0, 6);
        assert_eq!(p.n0, 3);
        assert_eq!(p.coupling_g, 5.0);
        assert_eq!(p.mass_kg, rubidium_preset().mass_kg);

        let none = resolve(None, &ParamOverrides::default()).unwrap();
        assert_eq!(none, rubidium_preset());
    }

    #[test]
    fn preset_selection_precedence() {
        let file = parse_config("preset = rubidium-85").unwrap();
        let p = resolve(Some(&file), &ParamOverrides::default()).unwrap();
        assert_eq!(p, crate::params::preset("rubidium-85").unwrap());
        let cli = parse_overrides(&["preset=rubidium-780"]).unwrap();
        let p = resolve(Some(&file), &cli).unwrap();
        assert_eq!(p, crate::params::preset("rubidium-780").unwrap());
        let bad = parse_overrides(&["preset=unobtainium"]).unwrap();
        assert!(matches!(resolve(None, &bad), Err(Error::UnknownPreset(_))));
    }

    #[test]
    fn regime_ratio_layer_order() {
        // file fixes the ratio, command line then replaces g outright
        let file = parse_config("regime_ratio = 0.1").unwrap();
        let cli = parse_overrides(&["g_rad_s=7"]).unwrap();
        let p = resolve(Some(&file), &cli).unwrap();
        assert_eq!(p.coupling_g, 7.0);

        let p = resolve(None, &parse_overrides(&["regime_ratio=0.1"]).unwrap()).unwrap();
        assert!((p.derive().unwrap().regime_ratio - 0.1).abs() < 1e-12);
    }

    #[test]
    fn resolve_validates_result() {
        let cli = parse_overrides(&["l0=3"]).unwrap();
        assert!(matches!(resolve(None, &cli), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn value_lists() {
        assert_eq!(parse_value_list("0.01, 0.02,0.05").unwrap(), vec![0.01, 0.02, 0.05]);
        assert!(parse_value_list("").is_err());
        assert!(parse_value_list(" , ").is_err());
        assert!(parse_value_list("1,x").is_err());
    }
}
