//! End-to-end synthetic reproduction of the single-photon coupling-rate
//! measurement. For each sideband drive amplitude: the steady-state Kerr
//! occupation fixes the enhanced coupling g = g₀·√n̄; a noisy
//! avoided-crossing scan is synthesized and refit for g; the AC-Stark
//! shift is "measured" (with noise) and inverted back into a photon
//! number; finally g versus √n̄ is fit through the origin to recover g₀.
//!
//! Everything is driven by one seeded RNG, so a fixed configuration and
//! seed reproduce byte-identical results.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::calibration::{
    ac_stark_shift, kerr_steady_state, photon_number_from_stark, CalibrationError, StarkCalibration,
};
use crate::linspace;
use crate::optimize::FitError;
use crate::scalar::Real;
use crate::spectroscopy::{
    extract_minima, fit_avoided_crossing, fit_g0, normal_mode_frequencies, s21_notch, CrossingInit,
    FitResult, G0Point, NotchParams,
};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Calibration(#[from] CalibrationError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error("invalid pipeline configuration: {0}")]
    InvalidConfig(String),
}

/// Configuration of the synthetic g₀ experiment. Frequencies and rates in
/// rad/s.
#[derive(Clone, Debug)]
pub struct G0PipelineConfig<T> {
    /// Injected single-photon coupling rate.
    pub g0_true: T,
    pub omega_q: T,
    pub omega_b: T,
    pub alpha: T,
    pub kappa_int: T,
    pub kappa_ext: T,
    pub theta: T,
    /// Sideband drive amplitudes ε_d.
    pub drive_amps: Vec<T>,
    /// Gaussian noise per S21 quadrature.
    pub s21_noise: T,
    /// Relative Gaussian noise on the measured Stark shift.
    pub stark_noise_rel: T,
    /// Sideband-drive scan points per power.
    pub drive_points: usize,
    /// Scan half-span in units of the expected coupling g.
    pub drive_span_factor: T,
    /// Probe-frequency points per spectrum.
    pub probe_points: usize,
    /// Probe half-span in units of the expected coupling g.
    pub probe_span_factor: T,
    pub seed: u64,
}

impl<T: Real> G0PipelineConfig<T> {
    /// Reference-device parameters with four drive amplitudes giving
    /// steady-state populations below a single photon.
    pub fn reference_device(seed: u64) -> Self {
        let tau = T::TAU();
        Self {
            g0_true: tau * T::lit(11.9e6),
            omega_q: tau * T::lit(6.10e9),
            omega_b: tau * T::lit(4.347e9),
            alpha: -tau * T::lit(388e6),
            kappa_int: tau * T::lit(28.0e3),
            kappa_ext: tau * T::lit(88.6e3),
            theta: T::zero(),
            drive_amps: [0.4e9, 0.7e9, 1.0e9, 1.37e9]
                .iter()
                .map(|&f| tau * T::lit(f))
                .collect(),
            s21_noise: T::lit(0.03),
            stark_noise_rel: T::lit(0.02),
            drive_points: 21,
            drive_span_factor: T::lit(3.0),
            probe_points: 1201,
            probe_span_factor: T::lit(4.0),
            seed,
        }
    }
}

/// Per-power outcome of the synthetic experiment.
#[derive(Clone, Debug)]
pub struct PowerPoint<T> {
    pub eps_d: T,
    /// Steady-state occupation from the forward model.
    pub n_bar_true: T,
    /// Injected enhanced coupling g₀·√n̄.
    pub g_true: T,
    /// Coupling recovered from the avoided-crossing fit.
    pub g_fit: T,
    pub g_sigma: T,
    /// Noisy "measured" Stark shift fed to the calibration.
    pub stark_shift: T,
    /// Photon number recovered from the Stark shift.
    pub n_bar_calibrated: T,
}

#[derive(Clone, Debug)]
pub struct G0PipelineResult<T> {
    pub powers: Vec<PowerPoint<T>>,
    pub g0_fit: FitResult<T>,
}

impl<T: Real> G0PipelineResult<T> {
    pub fn g0(&self) -> T {
        self.g0_fit.value("g0").expect("fit carries g0")
    }

    pub fn g0_uncertainty(&self) -> T {
        self.g0_fit.uncertainty("g0").expect("fit carries g0")
    }
}

fn validate<T: Real>(cfg: &G0PipelineConfig<T>) -> Result<(), PipelineError> {
    let bad = |msg: &str| Err(PipelineError::InvalidConfig(msg.into()));
    if !(cfg.g0_true > T::zero()) {
        return bad("g0_true must be positive");
    }
    if !(cfg.omega_q > cfg.omega_b) {
        return bad("omega_q must exceed omega_b for a red-sideband drive");
    }
    if cfg.drive_amps.is_empty() || cfg.drive_amps.iter().any(|e| !(*e > T::zero())) {
        return bad("drive_amps must be non-empty and positive");
    }
    if cfg.drive_points < 5 || cfg.probe_points < 32 {
        return bad("need at least 5 drive points and 32 probe points");
    }
    if cfg.s21_noise < T::zero() || cfg.stark_noise_rel < T::zero() {
        return bad("noise levels must be non-negative");
    }
    if !(cfg.drive_span_factor > T::zero() && cfg.probe_span_factor > cfg.drive_span_factor) {
        return bad("probe_span_factor must exceed drive_span_factor");
    }
    Ok(())
}

/// Runs the full synthetic experiment.
pub fn run_g0_pipeline<T: Real>(
    cfg: &G0PipelineConfig<T>,
) -> Result<G0PipelineResult<T>, PipelineError> {
    validate(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut normal = move || -> T {
        let x: f64 = StandardNormal.sample(&mut rng);
        T::lit(x)
    };

    let omega_d_center = cfg.omega_q - cfg.omega_b;
    let cal = StarkCalibration::from_frequencies(cfg.alpha, cfg.omega_q, omega_d_center)?;
    let kappa = cfg.kappa_int + cfg.kappa_ext;
    let noisy = cfg.s21_noise > T::zero() || cfg.stark_noise_rel > T::zero();

    let mut powers = Vec::with_capacity(cfg.drive_amps.len());
    let mut points = Vec::with_capacity(cfg.drive_amps.len());
    for &eps in &cfg.drive_amps {
        let n_true = kerr_steady_state(cal.delta_q(), cfg.alpha, eps)?.n_bar;
        if !(n_true > T::zero()) {
            return Err(PipelineError::InvalidConfig(format!(
                "drive amplitude {eps} produces no steady-state population"
            )));
        }
        let g_true = cfg.g0_true * n_true.sqrt();

        // Synthetic avoided-crossing scan around the red sideband.
        let drives = linspace(
            omega_d_center - cfg.drive_span_factor * g_true,
            omega_d_center + cfg.drive_span_factor * g_true,
            cfg.drive_points,
        );
        let probes = linspace(
            cfg.omega_b - cfg.probe_span_factor * g_true,
            cfg.omega_b + cfg.probe_span_factor * g_true,
            cfg.probe_points,
        );
        let mut spectra: Vec<(T, Vec<T>)> = Vec::with_capacity(drives.len());
        for &drive in &drives {
            let delta_q = drive - cfg.omega_q;
            let pair = normal_mode_frequencies(cfg.omega_b, delta_q, g_true);
            let branch = |w0: T| NotchParams {
                omega_b: w0,
                kappa_int: cfg.kappa_int,
                kappa_ext: cfg.kappa_ext,
                theta: cfg.theta,
            };
            let (up, low) = (branch(pair.upper), branch(pair.lower));
            let one = Complex::new(T::one(), T::zero());
            let mags: Vec<T> = probes
                .iter()
                .map(|&w| {
                    let mut s = s21_notch(w, &up) + s21_notch(w, &low) - one;
                    if cfg.s21_noise > T::zero() {
                        s += Complex::new(cfg.s21_noise * normal(), cfg.s21_noise * normal());
                    }
                    s.norm()
                })
                .collect();
            let minima = extract_minima(&probes, &mags, kappa);
            // The physical dips are far deeper than noise wiggles; keep
            // the two deepest per scan line.
            let mut by_depth = minima;
            by_depth.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
            let mut kept: Vec<T> = by_depth.iter().take(2).map(|m| m.0).collect();
            kept.sort_by(|a, b| a.partial_cmp(b).unwrap());
            spectra.push((drive, kept));
        }

        // Data-driven initial guess: center and coupling from the scan
        // line with the smallest splitting.
        let mut splittings: Vec<(T, T)> = spectra
            .iter()
            .filter(|(_, m)| m.len() == 2)
            .map(|(d, m)| (*d, m[1] - m[0]))
            .collect();
        if splittings.is_empty() {
            return Err(PipelineError::Fit(FitError::DegenerateData(
                "no scan line shows both branches".into(),
            )));
        }
        splittings.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        let (center_init, min_split) = splittings[0];
        let all_minima: Vec<T> = spectra
            .iter()
            .flat_map(|(_, m)| m.iter().copied())
            .collect();
        let omega_b_init =
            all_minima.iter().copied().sum::<T>() / T::from_usize(all_minima.len()).unwrap();
        let init = CrossingInit {
            omega_b: omega_b_init,
            g: (min_split * T::lit(0.5)).max(kappa),
            drive_center: center_init,
        };
        let crossing = fit_avoided_crossing(&spectra, &init)?;
        let g_fit = crossing.value("g").expect("crossing fit carries g");
        let g_sigma = crossing.uncertainty("g").expect("crossing fit carries g");

        // Stark-shift photon-number calibration.
        let shift_true = ac_stark_shift(eps, &cal);
        let shift_meas = shift_true * (T::one() + cfg.stark_noise_rel * normal());
        let n_cal = photon_number_from_stark(shift_meas, &cal)?;

        points.push(G0Point {
            n_bar: n_cal,
            g: g_fit,
            g_sigma: if noisy && g_sigma > T::zero() {
                Some(g_sigma)
            } else {
                None
            },
        });
        powers.push(PowerPoint {
            eps_d: eps,
            n_bar_true: n_true,
            g_true,
            g_fit,
            g_sigma,
            stark_shift: shift_meas,
            n_bar_calibrated: n_cal,
        });
    }

    let g0_fit = fit_g0(&points)?;
    Ok(G0PipelineResult { powers, g0_fit })
}
