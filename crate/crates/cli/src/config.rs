//! Strict configuration schema. Unknown keys are rejected with a message
//! naming the key; every frequency in the document is in Hz (converted to
//! rad/s at this boundary), durations in seconds, geometry in meters.

use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    /// Experiment kind; must match the subcommand.
    pub experiment: String,
    /// Seed for stochastic runs (required by `pipeline`).
    pub seed: Option<u64>,
    /// Output directory; the --out flag takes precedence.
    pub output: Option<PathBuf>,
    /// Worker-thread cap; --threads and PPCQED_THREADS take precedence.
    pub threads: Option<usize>,

    pub estimate: Option<EstimateConfig>,
    pub chevron: Option<ChevronConfig>,
    pub spectrum: Option<SpectrumConfig>,
    pub calibrate: Option<CalibrateConfig>,
    pub fit_notch: Option<FitNotchConfig>,
    pub fit_crossing: Option<FitCrossingConfig>,
    pub extract_g0: Option<ExtractG0Config>,
    pub pipeline: Option<PipelineConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateConfig {
    pub idc: IdcConfig,
    pub squid: SquidConfig,
    pub resonator_hz: f64,
    pub flux: FluxConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IdcConfig {
    pub fingers: u32,
    pub finger_width_m: f64,
    pub finger_gap_m: f64,
    pub finger_length_m: f64,
    pub relative_permittivity: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SquidConfig {
    pub loop_length_m: f64,
    pub near_distance_m: f64,
    pub far_distance_m: f64,
}

/// Either a measured flux sensitivity or a symmetric-arc evaluation point.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FluxConfig {
    pub sensitivity_hz_per_phi0: Option<f64>,
    pub sweet_spot_hz: Option<f64>,
    pub anharmonicity_hz: Option<f64>,
    pub operating_flux: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChevronConfig {
    pub coupling_hz: f64,
    pub detuning_min_hz: f64,
    pub detuning_max_hz: f64,
    pub detuning_count: usize,
    pub time_max_s: f64,
    pub time_count: usize,
    /// "ground" | "excited_qubit" | "fock1_resonator"
    pub prep: String,
    pub dt_max_s: Option<f64>,
    /// Resonator linewidth κ_b/2π; omitted = closed system.
    pub kappa_b_hz: Option<f64>,
    /// Qubit T1; omitted = no qubit decay.
    pub qubit_t1_s: Option<f64>,
    pub qubit_hz: Option<f64>,
    pub resonator_hz: Option<f64>,
    pub anharmonicity_hz: Option<f64>,
    pub truncation: Option<TruncationConfig>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TruncationConfig {
    pub qubit_dim: usize,
    pub resonator_dim: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumConfig {
    pub resonance_hz: f64,
    pub kappa_int_hz: f64,
    pub kappa_ext_hz: f64,
    pub impedance_phase_rad: Option<f64>,
    pub probe_min_hz: f64,
    pub probe_max_hz: f64,
    pub probe_count: usize,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrateConfig {
    pub anharmonicity_hz: f64,
    pub qubit_hz: f64,
    pub drive_hz: f64,
    /// Forward mode: drive amplitudes ε_d/2π.
    pub drive_amps_hz: Option<Vec<f64>>,
    /// Inverse mode: measured qubit shifts δω_q/2π.
    pub measured_shifts_hz: Option<Vec<f64>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitNotchConfig {
    /// CSV in the spectrum schema (probe_hz,s21_re,s21_im,s21_abs).
    pub data: PathBuf,
    pub init_resonance_hz: f64,
    pub init_kappa_int_hz: f64,
    pub init_kappa_ext_hz: f64,
    pub init_phase_rad: Option<f64>,
    pub subtract_background: Option<bool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitCrossingConfig {
    /// CSV with columns drive_hz,minimum_hz (one row per branch minimum).
    pub data: PathBuf,
    pub init_resonance_hz: f64,
    pub init_coupling_hz: f64,
    pub init_drive_center_hz: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractG0Config {
    /// CSV with columns n_bar,coupling_hz and optionally coupling_sigma_hz.
    pub data: PathBuf,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub g0_true_hz: f64,
    pub qubit_hz: f64,
    pub resonator_hz: f64,
    pub anharmonicity_hz: f64,
    pub kappa_int_hz: f64,
    pub kappa_ext_hz: f64,
    pub impedance_phase_rad: Option<f64>,
    pub drive_amps_hz: Vec<f64>,
    pub s21_noise: f64,
    pub stark_shift_noise_rel: f64,
    pub drive_points: Option<usize>,
    pub drive_span_factor: Option<f64>,
    pub probe_points: Option<usize>,
    pub probe_span_factor: Option<f64>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> CliResult<Self> {
        toml::from_str(text).map_err(|e| CliError::config(e.to_string()))
    }

    /// The configured experiment must match the invoked subcommand, and
    /// exactly the matching parameter block may be present.
    pub fn validate_kind(&self, subcommand: &str) -> CliResult<()> {
        if self.experiment != subcommand {
            return Err(CliError::config(format!(
                "key `experiment` is \"{}\" but the `{}` subcommand was invoked",
                self.experiment, subcommand
            )));
        }
        let blocks: [(&str, bool); 8] = [
            ("estimate", self.estimate.is_some()),
            ("chevron", self.chevron.is_some()),
            ("spectrum", self.spectrum.is_some()),
            ("calibrate", self.calibrate.is_some()),
            ("fit_notch", self.fit_notch.is_some()),
            ("fit_crossing", self.fit_crossing.is_some()),
            ("extract_g0", self.extract_g0.is_some()),
            ("pipeline", self.pipeline.is_some()),
        ];
        let wanted = subcommand.replace('-', "_");
        for (name, present) in blocks {
            if name == wanted && !present {
                return Err(CliError::config(format!(
                    "missing parameter table `{name}` for experiment \"{}\"",
                    self.experiment
                )));
            }
            if name != wanted && present {
                return Err(CliError::config(format!(
                    "table `{name}` does not belong in a \"{}\" configuration",
                    self.experiment
                )));
            }
        }
        Ok(())
    }
}

/// Hz → rad/s at the configuration boundary.
pub fn hz(value: f64) -> f64 {
    value * std::f64::consts::TAU
}

/// rad/s → Hz at the output boundary.
pub fn to_hz(value: f64) -> f64 {
    value / std::f64::consts::TAU
}
