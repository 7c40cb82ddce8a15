//! Steady-state Kerr-oscillator solution, AC-Stark/Bloch-Siegert shift,
//! and the photon-number calibration built from them, plus the
//! critical-photon-number diagnostic of the parasitic dipole coupling.
//!
//! Sign conventions: the sideband drive is red-detuned, Δ_q = ω_d − ω_q < 0,
//! and the Stark shift carries the sign of the (negative) anharmonicity.
//! The shift expression is validated for red-detuned drives only.

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::monic_roots;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum CalibrationError {
    #[error("anharmonicity must be <= 0, got {0}")]
    PositiveKerr(f64),
    #[error("invalid calibration frame: {0}")]
    InvalidParams(String),
    #[error("shift {shift} is inconsistent with the sign of the anharmonicity {alpha}")]
    SignMismatch { shift: f64, alpha: f64 },
    #[error("steady-state cubic has no non-negative real root")]
    NoPhysicalRoot,
}

/// Steady-state occupation of the driven Kerr oscillator.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KerrSteadyState<T> {
    /// n̄_q = |⟨â⟩|², the occupation of the physical branch (the one
    /// continuously connected to the undriven solution).
    pub n_bar: T,
    /// Number of coexisting positive steady-state branches, 1 or 3.
    pub root_multiplicity: u8,
    pub bistable: bool,
}

/// Calibration frame for the AC-Stark photon-number gauge: anharmonicity
/// α < 0, drive detuning Δ_q = ω_d − ω_q ≠ 0, sum frequency Σ = ω_q + ω_d > 0.
/// The measured qubit shift is passed to the operations separately.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StarkCalibration<T> {
    alpha: T,
    delta_q: T,
    sigma: T,
}

impl<T: Real> StarkCalibration<T> {
    pub fn new(alpha: T, delta_q: T, sigma: T) -> Result<Self, CalibrationError> {
        if !(alpha < T::zero()) {
            return Err(CalibrationError::PositiveKerr(
                alpha.to_f64().unwrap_or(f64::NAN),
            ));
        }
        if delta_q == T::zero() {
            return Err(CalibrationError::InvalidParams(
                "delta_q must be nonzero".into(),
            ));
        }
        if !(sigma > T::zero()) {
            return Err(CalibrationError::InvalidParams(
                "sum frequency must be positive".into(),
            ));
        }
        Ok(Self {
            alpha,
            delta_q,
            sigma,
        })
    }

    /// Builds the frame from the qubit and drive frequencies.
    pub fn from_frequencies(alpha: T, omega_q: T, omega_d: T) -> Result<Self, CalibrationError> {
        Self::new(alpha, omega_d - omega_q, omega_q + omega_d)
    }

    pub fn alpha(&self) -> T {
        self.alpha
    }
    pub fn delta_q(&self) -> T {
        self.delta_q
    }
    pub fn sigma(&self) -> T {
        self.sigma
    }

    /// The detuning bracket 1/Δ_q² + 2/(|Δ_q|Σ) + 1/Σ².
    fn bracket(&self) -> T {
        let two = T::lit(2.0);
        (self.delta_q * self.delta_q).recip()
            + two / (self.delta_q.abs() * self.sigma)
            + (self.sigma * self.sigma).recip()
    }
}

/// Steady state of the driven Kerr oscillator: the smallest non-negative
/// real root of
///
/// ```text
/// n̄·(−Δ_q + α·n̄)² − ε_d² = 0
/// ```
///
/// solved through companion-matrix eigenvalues (robust near the fold where
/// closed-form discriminants lose digits). Real roots are identified by
/// |Im| < 1e-9·(1 + |Re|); three positive roots set the bistable flag.
pub fn kerr_steady_state<T: Real>(
    delta_q: T,
    alpha: T,
    eps_d: T,
) -> Result<KerrSteadyState<T>, CalibrationError> {
    if alpha > T::zero() {
        return Err(CalibrationError::PositiveKerr(
            alpha.to_f64().unwrap_or(f64::NAN),
        ));
    }
    if eps_d == T::zero() {
        return Ok(KerrSteadyState {
            n_bar: T::zero(),
            root_multiplicity: 1,
            bistable: false,
        });
    }
    if alpha == T::zero() {
        if delta_q == T::zero() {
            return Err(CalibrationError::InvalidParams(
                "delta_q must be nonzero for a linear oscillator".into(),
            ));
        }
        return Ok(KerrSteadyState {
            n_bar: (eps_d / delta_q) * (eps_d / delta_q),
            root_multiplicity: 1,
            bistable: false,
        });
    }

    // Monic cubic n³ + c2·n² + c1·n + c0 after dividing by α², with the
    // variable rescaled to keep the companion matrix well conditioned.
    let c2 = -T::lit(2.0) * delta_q / alpha;
    let c1 = (delta_q / alpha) * (delta_q / alpha);
    let c0 = -(eps_d / alpha) * (eps_d / alpha);
    let scale = c2
        .abs()
        .max(c1.abs().sqrt())
        .max(c0.abs().cbrt())
        .max(T::min_positive_value());
    let coeffs = [
        Complex::new(c0 / (scale * scale * scale), T::zero()),
        Complex::new(c1 / (scale * scale), T::zero()),
        Complex::new(c2 / scale, T::zero()),
    ];
    let roots = monic_roots(&coeffs);

    let im_tol = T::tol(1e-9);
    let mut real_positive: Vec<T> = Vec::with_capacity(3);
    let mut smallest: Option<T> = None;
    for r in roots {
        if r.im.abs() >= im_tol * (T::one() + r.re.abs()) {
            continue;
        }
        let n = r.re * scale;
        if n > T::tol(1e-12) * scale {
            real_positive.push(n);
        }
        if n >= -T::tol(1e-9) * scale {
            let n = n.max(T::zero());
            smallest = Some(match smallest {
                Some(s) if s <= n => s,
                _ => n,
            });
        }
    }
    let n_bar = smallest.ok_or(CalibrationError::NoPhysicalRoot)?;
    let bistable = real_positive.len() >= 3;
    Ok(KerrSteadyState {
        n_bar: polish_root(n_bar, delta_q, alpha, eps_d),
        root_multiplicity: if bistable { 3 } else { 1 },
        bistable,
    })
}

/// Newton refinement of a companion root on the original cubic; restores
/// full relative precision for roots far smaller than the coefficient
/// scale. Left untouched near a fold where the derivative vanishes.
fn polish_root<T: Real>(mut n: T, delta_q: T, alpha: T, eps_d: T) -> T {
    let scale =
        (eps_d * eps_d).max(delta_q.abs().powi(3) / alpha.abs().max(T::min_positive_value()));
    for _ in 0..6 {
        let bracket = -delta_q + alpha * n;
        let p = n * bracket * bracket - eps_d * eps_d;
        let dp = bracket * bracket + T::lit(2.0) * n * bracket * alpha;
        if dp.abs() * (T::one() + n) <= p.abs() || dp == T::zero() {
            break;
        }
        let step = p / dp;
        n = (n - step).max(T::zero());
        if p.abs() < T::epsilon() * scale {
            break;
        }
    }
    n
}

/// Drive-induced qubit shift including the counter-rotating
/// (Bloch-Siegert) contributions:
///
/// ```text
/// δω_q = ½·ε_d²·α·(1/Δ_q² + 2/(|Δ_q|·Σ) + 1/Σ²)
/// ```
pub fn ac_stark_shift<T: Real>(eps_d: T, cal: &StarkCalibration<T>) -> T {
    T::lit(0.5) * eps_d * eps_d * cal.alpha() * cal.bracket()
}

/// Inverts the Stark shift into the steady-state photon number: the shift
/// fixes ε_d², and the steady-state cubic then yields n̄_q (smallest
/// positive real root).
///
/// The shift must carry the sign of the anharmonicity; zero maps to zero.
pub fn photon_number_from_stark<T: Real>(
    shift: T,
    cal: &StarkCalibration<T>,
) -> Result<T, CalibrationError> {
    if shift == T::zero() {
        return Ok(T::zero());
    }
    if shift * cal.alpha() <= T::zero() {
        return Err(CalibrationError::SignMismatch {
            shift: shift.to_f64().unwrap_or(f64::NAN),
            alpha: cal.alpha().to_f64().unwrap_or(f64::NAN),
        });
    }
    let eps_sq = T::lit(2.0) * shift / (cal.alpha() * cal.bracket());
    Ok(kerr_steady_state(cal.delta_q(), cal.alpha(), eps_sq.sqrt())?.n_bar)
}

/// Kerr nonlinearity dressed by the resonator coupling:
/// α_eff = α − 2g₀²ω_b/(ω_b² + γ_b²/4).
pub fn effective_kerr<T: Real>(
    alpha: T,
    g0: T,
    omega_b: T,
    gamma_b: T,
) -> Result<T, CalibrationError> {
    if !(omega_b > T::zero()) {
        return Err(CalibrationError::InvalidParams(
            "omega_b must be positive".into(),
        ));
    }
    let quarter = T::lit(0.25);
    Ok(alpha - T::lit(2.0) * g0 * g0 * omega_b / (omega_b * omega_b + gamma_b * gamma_b * quarter))
}

/// Critical photon number of the parasitic dipole coupling,
/// n_crit = Δ²/(4·g_ab²).
pub fn critical_photon_number<T: Real>(delta: T, g_ab: T) -> Result<T, CalibrationError> {
    if !(g_ab > T::zero()) {
        return Err(CalibrationError::InvalidParams(
            "g_ab must be positive".into(),
        ));
    }
    let r = delta / (T::lit(2.0) * g_ab);
    Ok(r * r)
}
