//! Run configuration: a TOML file with named sections, parsed strictly and
//! validated in full before any computation starts.

use std::path::PathBuf;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use pnrhd::povm::{LoSetting, Outcome, Truncation, Uncertainties};
use pnrhd::tmd::{self, BinSplitting, DetectorModel};
use pnrhd::tomography::{SweepPreset, DEFAULT_SHOTS};

/// Every problem found in a configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<String>);

impl std::fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.0.len())?;
        for e in &self.0 {
            writeln!(f, "  - {e}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDetector {
    efficiency: f64,
    bins: Option<usize>,
    bin_probabilities: Option<Vec<f64>>,
    #[serde(default)]
    resolving: bool,
    max_clicks: Option<usize>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLo {
    amplitude: Option<f64>,
    transmission: Option<f64>,
    mean_measured: Option<f64>,
    coupling: f64,
    phases: Option<Vec<f64>>,
    sweep: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTruncation {
    n_max: Option<usize>,
    internal_dim: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProtocol {
    shots: Option<u64>,
    seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    directory: Option<PathBuf>,
    #[serde(default)]
    emit_elements: Vec<[usize; 2]>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    detector_a: RawDetector,
    detector_b: RawDetector,
    lo: RawLo,
    uncertainties: Option<Uncertainties>,
    #[serde(default)]
    truncation: RawTruncation,
    #[serde(default)]
    protocol: RawProtocol,
    #[serde(default)]
    output: RawOutput,
}

/// A validated configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub detector_a: DetectorModel,
    pub detector_b: DetectorModel,
    pub settings: Vec<LoSetting>,
    pub uncertainties: Option<Uncertainties>,
    pub truncation: Truncation,
    pub shots: u64,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub emit_elements: Vec<Outcome>,
    /// Hex SHA-256 of the configuration text.
    pub hash: String,
}

pub const DEFAULT_SEED: u64 = 0;
/// Largest sweep accepted from a configuration.
pub const MAX_SETTINGS: usize = 10_000;

fn detector(raw: &RawDetector, name: &str, errors: &mut Vec<String>) -> Option<DetectorModel> {
    let choices = usize::from(raw.bins.is_some())
        + usize::from(raw.bin_probabilities.is_some())
        + usize::from(raw.resolving);
    if choices > 1 {
        errors.push(format!(
            "[{name}] give at most one of `bins`, `bin_probabilities`, `resolving`"
        ));
        return None;
    }
    let splitting = if raw.resolving {
        BinSplitting::Resolving
    } else if let Some(p) = &raw.bin_probabilities {
        BinSplitting::Weighted {
            probabilities: p.clone(),
        }
    } else {
        BinSplitting::Uniform {
            bins: raw.bins.unwrap_or(tmd::DEFAULT_BINS),
        }
    };
    let max_clicks = raw.max_clicks.unwrap_or(tmd::DEFAULT_MAX_CLICKS);
    match DetectorModel::new(raw.efficiency, splitting, max_clicks) {
        Ok(m) => Some(m),
        Err(e) => {
            errors.push(format!("[{name}] {e}"));
            None
        }
    }
}

fn amplitude(raw: &RawLo, errors: &mut Vec<String>) -> Option<f64> {
    match (raw.amplitude, raw.transmission, raw.mean_measured) {
        (Some(a), None, None) => Some(a),
        (None, Some(t), Some(n)) => match tmd::lo_amplitude_from_calibration(t, n) {
            Ok(c) => Some(c.amplitude),
            Err(e) => {
                errors.push(format!("[lo] {e}"));
                None
            }
        },
        _ => {
            errors.push(
                "[lo] give either `amplitude` or both `transmission` and `mean_measured`".into(),
            );
            None
        }
    }
}

fn phases(raw: &RawLo, errors: &mut Vec<String>) -> Option<Vec<f64>> {
    match (&raw.phases, &raw.sweep) {
        (Some(list), None) => {
            if list.is_empty() || list.len() > MAX_SETTINGS {
                errors.push(format!("[lo] `phases` needs 1..={MAX_SETTINGS} entries"));
                return None;
            }
            Some(list.clone())
        }
        (None, Some(name)) => match name.parse::<SweepPreset>() {
            Ok(p) => {
                let n = p.phases();
                Some(
                    (0..n)
                        .map(|k| std::f64::consts::TAU * k as f64 / n as f64)
                        .collect(),
                )
            }
            Err(e) => {
                errors.push(format!("[lo] {e}"));
                None
            }
        },
        _ => {
            errors.push("[lo] give exactly one of `phases` or `sweep`".into());
            None
        }
    }
}

impl RunConfig {
    /// Parses and validates `text`, reporting every problem found.
    pub fn parse(text: &str) -> Result<Self, ConfigErrors> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigErrors(vec![e.message().to_string()]))?;
        let mut errors = Vec::new();
        let detector_a = detector(&raw.detector_a, "detector_a", &mut errors);
        let detector_b = detector(&raw.detector_b, "detector_b", &mut errors);
        let amp = amplitude(&raw.lo, &mut errors);
        let phases = phases(&raw.lo, &mut errors);
        let mut settings = Vec::new();
        if let (Some(amp), Some(phases)) = (amp, phases) {
            for (i, &theta) in phases.iter().enumerate() {
                match LoSetting::new(amp, theta, raw.lo.coupling) {
                    Ok(s) => settings.push(s),
                    Err(e) => {
                        errors.push(format!("[lo] setting {i}: {e}"));
                        break;
                    }
                }
            }
        }
        if let Some(u) = &raw.uncertainties {
            if let Err(e) = u.validate() {
                errors.push(format!("[uncertainties] {e}"));
            }
        }
        let defaults = Truncation::default();
        let truncation = Truncation {
            n_max: raw.truncation.n_max.unwrap_or(defaults.n_max),
            internal_dim: raw.truncation.internal_dim.unwrap_or(defaults.internal_dim),
        };
        if let Err(e) = truncation.validate() {
            errors.push(format!("[truncation] {e}"));
        }
        if truncation.n_max + 1 > pnrhd::formats::MAX_FILE_DIM {
            errors.push(format!(
                "[truncation] n_max must be below {}",
                pnrhd::formats::MAX_FILE_DIM
            ));
        }
        if truncation.internal_dim > 4 * pnrhd::formats::MAX_FILE_DIM {
            errors.push("[truncation] internal_dim is unreasonably large".into());
        }
        let emit_elements: Vec<Outcome> = raw
            .output
            .emit_elements
            .iter()
            .map(|&[a, b]| Outcome::new(a, b))
            .collect();
        if let (Some(a), Some(b)) = (&detector_a, &detector_b) {
            for o in &emit_elements {
                if o.k_a >= a.outcomes() || o.k_b >= b.outcomes() {
                    errors.push(format!(
                        "[output] element ({}, {}) is outside the outcome range",
                        o.k_a, o.k_b
                    ));
                }
            }
        }
        let shots = raw.protocol.shots.unwrap_or(DEFAULT_SHOTS);
        if errors.is_empty() {
            Ok(Self {
                detector_a: detector_a.expect("validated"),
                detector_b: detector_b.expect("validated"),
                settings,
                uncertainties: raw.uncertainties,
                truncation,
                shots,
                seed: raw.protocol.seed.unwrap_or(DEFAULT_SEED),
                output: raw.output.directory,
                emit_elements,
                hash: config_hash(text),
            })
        } else {
            Err(ConfigErrors(errors))
        }
    }
}

pub fn config_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const GOOD: &str = r#"
[detector_a]
efficiency = 0.10

[detector_b]
efficiency = 0.15

[lo]
amplitude = 0.3
coupling = 0.5
sweep = "pa20"
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = RunConfig::parse(GOOD).unwrap();
        assert_eq!(c.settings.len(), 20);
        assert_eq!(c.truncation, Truncation::default());
        assert_eq!(c.shots, DEFAULT_SHOTS);
        assert_eq!(c.detector_a.outcomes(), 9);
        assert_eq!(c.hash, config_hash(GOOD));
    }

    #[test]
    fn every_problem_is_reported() {
        let text = r#"
[detector_a]
efficiency = 1.5

[detector_b]
efficiency = 0.1
bins = 8
resolving = true

[lo]
coupling = 0.5
sweep = "pa7"
"#;
        let err = RunConfig::parse(text).unwrap_err();
        assert_eq!(err.0.len(), 4, "{err}");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = GOOD.replace("coupling = 0.5", "coupling = 0.5\nreflectivity = 0.5");
        assert!(RunConfig::parse(&text).is_err());
    }

    #[test]
    fn calibration_sets_amplitude() {
        let text = GOOD.replace(
            "amplitude = 0.3",
            "transmission = 0.01\nmean_measured = 9.0",
        );
        let c = RunConfig::parse(&text).unwrap();
        assert!((c.settings[0].amplitude - 0.3).abs() < 1e-12);
    }
}
