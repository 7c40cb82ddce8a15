//! Analytic estimation of circuit parameters from device geometry:
//! interdigitated-capacitor capacitance, inductance from the resonance
//! frequency, zero-point current and flux, wire/SQUID mutual inductance,
//! the transmon flux arc, and the single-photon coupling rate they imply.
//!
//! All inputs are SI (meters, farads, henries); every frequency and rate is
//! angular (rad/s). Conversion from Hz happens at the I/O boundary, never
//! here.

use thiserror::Error;

use crate::constants;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum CircuitError {
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
}

fn domain<T>(op: &'static str, detail: String) -> Result<T, CircuitError> {
    Err(CircuitError::Domain { op, detail })
}

/// Interdigitated capacitor geometry.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdcGeometry<T> {
    finger_count: u32,
    finger_width: T,
    finger_gap: T,
    finger_length: T,
    relative_permittivity: T,
}

impl<T: Real> IdcGeometry<T> {
    /// `finger_count` ≥ 4, widths/gaps/lengths positive (meters), ε_r ≥ 1.
    pub fn new(
        finger_count: u32,
        finger_width: T,
        finger_gap: T,
        finger_length: T,
        relative_permittivity: T,
    ) -> Result<Self, CircuitError> {
        if finger_count < 4 {
            return Err(CircuitError::InvalidGeometry(format!(
                "finger_count must be >= 4, got {finger_count}"
            )));
        }
        for (name, v) in [
            ("finger_width", finger_width),
            ("finger_gap", finger_gap),
            ("finger_length", finger_length),
        ] {
            if !(v > T::zero()) {
                return Err(CircuitError::InvalidGeometry(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(relative_permittivity >= T::one()) {
            return Err(CircuitError::InvalidGeometry(format!(
                "relative_permittivity must be >= 1, got {relative_permittivity}"
            )));
        }
        Ok(Self {
            finger_count,
            finger_width,
            finger_gap,
            finger_length,
            relative_permittivity,
        })
    }

    pub fn finger_count(&self) -> u32 {
        self.finger_count
    }
    pub fn finger_width(&self) -> T {
        self.finger_width
    }
    pub fn finger_gap(&self) -> T {
        self.finger_gap
    }
    pub fn finger_length(&self) -> T {
        self.finger_length
    }
    pub fn relative_permittivity(&self) -> T {
        self.relative_permittivity
    }
}

/// SQUID loop geometry relative to the inductor wire.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SquidGeometry<T> {
    loop_length: T,
    near_distance: T,
    far_distance: T,
}

impl<T: Real> SquidGeometry<T> {
    /// `loop_length` > 0 and 0 < `near_distance` < `far_distance` (meters).
    pub fn new(loop_length: T, near_distance: T, far_distance: T) -> Result<Self, CircuitError> {
        if !(loop_length > T::zero()) {
            return Err(CircuitError::InvalidGeometry(format!(
                "loop_length must be positive, got {loop_length}"
            )));
        }
        if !(near_distance > T::zero() && far_distance > near_distance) {
            return Err(CircuitError::InvalidGeometry(format!(
                "need 0 < near_distance < far_distance, got {near_distance} and {far_distance}"
            )));
        }
        Ok(Self {
            loop_length,
            near_distance,
            far_distance,
        })
    }

    pub fn loop_length(&self) -> T {
        self.loop_length
    }
    pub fn near_distance(&self) -> T {
        self.near_distance
    }
    pub fn far_distance(&self) -> T {
        self.far_distance
    }
}

/// Lumped-element view of the linear resonator.
///
/// Capacitance and inductance are optional: when both are present the
/// constructor enforces ω·√(LC) ≈ 1 within [`ResonatorParams::CONSISTENCY_TOL`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ResonatorParams<T> {
    pub frequency: T,
    pub capacitance: Option<T>,
    pub inductance: Option<T>,
    pub internal_rate: T,
    pub external_rate: T,
}

impl<T: Real> ResonatorParams<T> {
    /// Relative tolerance on ω·√(LC) = 1 when all three are set.
    pub const CONSISTENCY_TOL: f64 = 0.02;

    pub fn validated(self) -> Result<Self, CircuitError> {
        if !(self.frequency > T::zero()) {
            return Err(CircuitError::InvalidGeometry(
                "resonator frequency must be positive".into(),
            ));
        }
        for (name, v) in [
            ("internal_rate", self.internal_rate),
            ("external_rate", self.external_rate),
        ] {
            if v < T::zero() {
                return Err(CircuitError::InvalidGeometry(format!(
                    "{name} must be non-negative, got {v}"
                )));
            }
        }
        if let (Some(c), Some(l)) = (self.capacitance, self.inductance) {
            if !(c > T::zero() && l > T::zero()) {
                return Err(CircuitError::InvalidGeometry(
                    "capacitance and inductance must be positive".into(),
                ));
            }
            let check = self.frequency * (l * c).sqrt();
            if (check - T::one()).abs() > T::lit(Self::CONSISTENCY_TOL) {
                return Err(CircuitError::InvalidGeometry(format!(
                    "omega*sqrt(L*C) = {check}, inconsistent with 1"
                )));
            }
        }
        Ok(self)
    }

    pub fn total_rate(&self) -> T {
        self.internal_rate + self.external_rate
    }
}

/// Flux arc of a symmetric-SQUID transmon.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FluxArc<T> {
    sweet_spot_frequency: T,
    anharmonicity: T,
    operating_flux: T,
}

impl<T: Real> FluxArc<T> {
    /// Sweet-spot frequency positive (rad/s), anharmonicity negative
    /// (rad/s), |operating flux| < 0.5 Φ₀.
    pub fn new(
        sweet_spot_frequency: T,
        anharmonicity: T,
        operating_flux: T,
    ) -> Result<Self, CircuitError> {
        if !(sweet_spot_frequency > T::zero()) {
            return Err(CircuitError::InvalidGeometry(
                "sweet-spot frequency must be positive".into(),
            ));
        }
        if !(anharmonicity < T::zero()) {
            return Err(CircuitError::InvalidGeometry(
                "anharmonicity must be negative".into(),
            ));
        }
        if !(operating_flux.abs() < T::lit(0.5)) {
            return Err(CircuitError::InvalidGeometry(
                "operating flux must satisfy |flux| < 0.5".into(),
            ));
        }
        Ok(Self {
            sweet_spot_frequency,
            anharmonicity,
            operating_flux,
        })
    }

    pub fn sweet_spot_frequency(&self) -> T {
        self.sweet_spot_frequency
    }
    pub fn anharmonicity(&self) -> T {
        self.anharmonicity
    }
    pub fn operating_flux(&self) -> T {
        self.operating_flux
    }
}

/// Complete elliptic integral of the first kind K(k), modulus convention
/// (not the parameter m = k²):
///
/// ```text
/// K(k) = ∫₀^{π/2} dθ / √(1 − k²·sin²θ)
/// ```
///
/// Computed by arithmetic–geometric-mean iteration (DLMF 19.8.5),
/// K(k) = π / (2·agm(1, √(1−k²))), converged to |aₙ−bₙ| < 1e-15·aₙ.
pub fn complete_elliptic_k<T: Real>(k: T) -> Result<T, CircuitError> {
    if !(k >= T::zero() && k < T::one()) {
        return domain(
            "complete_elliptic_k",
            format!("modulus must be in [0, 1), got {k}"),
        );
    }
    let tol = T::tol(1e-15);
    let mut a = T::one();
    let mut b = (T::one() - k * k).sqrt();
    for _ in 0..60 {
        let an = (a + b) * T::lit(0.5);
        let bn = (a * b).sqrt();
        if (an - bn).abs() < tol * an {
            return Ok(T::PI() / (an + an));
        }
        a = an;
        b = bn;
    }
    Ok(T::PI() / (a + a))
}

/// Capacitance of an interdigitated capacitor from the analytical
/// conformal-mapping model (Igreja & Dias 2004), farads:
///
/// ```text
/// C_IDC = (N − 3)·C₁/2 + 2·C₁·C₂/(C₁ + C₂)
/// Cᵢ    = 2·ε₀·ε_eff·l·K(kᵢ)/K(1 − kᵢ²),    ε_eff = (ε_r + 1)/2
/// k₁    = sin(π·a / (2(a + b)))
/// k₂    = 2√(a(a + b)) / (2a + b)
/// ```
///
/// with finger width `a`, gap `b`, finger length `l` and count `N`. Note
/// the complementary argument 1 − kᵢ²: this is the convention of the
/// reference-device parameter chain this toolkit reproduces, and the
/// downstream inductance/zero-point estimates are calibrated against it.
pub fn idc_capacitance<T: Real>(geom: &IdcGeometry<T>) -> Result<T, CircuitError> {
    let a = geom.finger_width;
    let b = geom.finger_gap;
    let half = T::lit(0.5);
    let two = T::lit(2.0);

    let k1 = (T::PI() * half * a / (a + b)).sin();
    let k2 = two * (a * (a + b)).sqrt() / (two * a + b);
    let eps_eff = (geom.relative_permittivity + T::one()) * half;
    let unit = two * constants::vacuum_permittivity::<T>() * eps_eff * geom.finger_length;

    let mut c = [T::zero(); 2];
    for (i, k) in [k1, k2].into_iter().enumerate() {
        if !(k > T::zero() && k < T::one()) {
            return domain(
                "idc_capacitance",
                format!("modulus k{} = {k} outside (0, 1)", i + 1),
            );
        }
        let kc = T::one() - k * k;
        c[i] = unit * complete_elliptic_k(k)? / complete_elliptic_k(kc)?;
    }

    let n = T::from_u32(geom.finger_count).expect("finger count fits scalar");
    Ok((n - T::lit(3.0)) * c[0] * half + two * c[0] * c[1] / (c[0] + c[1]))
}

/// Inductance implied by a resonance frequency and capacitance,
/// L = 1/(ω²·C), henries.
pub fn inductance_from_frequency<T: Real>(omega_b: T, c_b: T) -> Result<T, CircuitError> {
    if !(omega_b > T::zero() && c_b > T::zero()) {
        return domain(
            "inductance_from_frequency",
            format!("need positive omega and C, got {omega_b}, {c_b}"),
        );
    }
    Ok((omega_b * omega_b * c_b).recip())
}

/// Zero-point current fluctuation of an LC mode, I_zpf = √(ħω/(2L)), amperes.
pub fn zero_point_current<T: Real>(omega_b: T, l_b: T) -> Result<T, CircuitError> {
    if !(omega_b > T::zero() && l_b > T::zero()) {
        return domain(
            "zero_point_current",
            format!("need positive omega and L, got {omega_b}, {l_b}"),
        );
    }
    Ok((constants::hbar::<T>() * omega_b / (T::lit(2.0) * l_b)).sqrt())
}

/// Mutual inductance between a straight wire and a rectangular loop of
/// length `l` spanning perpendicular distances d₁..d₂ from the wire,
/// M = μ₀·l/(2π)·ln(d₂/d₁), henries.
pub fn mutual_inductance<T: Real>(geom: &SquidGeometry<T>) -> T {
    constants::vacuum_permeability::<T>() * geom.loop_length / T::TAU()
        * (geom.far_distance / geom.near_distance).ln()
}

/// Zero-point flux through the loop in units of Φ₀ = h/(2e).
pub fn zero_point_flux<T: Real>(m: T, i_zpf: T) -> Result<T, CircuitError> {
    if m < T::zero() || i_zpf < T::zero() {
        return domain(
            "zero_point_flux",
            format!("need non-negative M and I_zpf, got {m}, {i_zpf}"),
        );
    }
    Ok(m * i_zpf / constants::flux_quantum::<T>())
}

/// Symmetric-SQUID transmon frequency at external flux `flux` (units of
/// Φ₀): ω(Φ) = ω_max·√|cos(πΦ)|.
pub fn flux_arc_frequency<T: Real>(arc: &FluxArc<T>, flux: T) -> Result<T, CircuitError> {
    let cosine = (T::PI() * flux).cos().abs();
    if cosine <= T::epsilon() {
        return domain(
            "flux_arc_frequency",
            format!("arc vanishes at flux = {flux} (half flux quantum)"),
        );
    }
    Ok(arc.sweet_spot_frequency * cosine.sqrt())
}

/// Magnitude of the arc slope |∂ω/∂Φ| at `flux`, rad/s per Φ₀:
/// ω_max·(π/2)·|sin(πΦ)|/√|cos(πΦ)|.
pub fn flux_sensitivity<T: Real>(arc: &FluxArc<T>, flux: T) -> Result<T, CircuitError> {
    let cosine = (T::PI() * flux).cos().abs();
    if cosine <= T::epsilon() {
        return domain(
            "flux_sensitivity",
            format!("sensitivity diverges at flux = {flux}"),
        );
    }
    let sine = (T::PI() * flux).sin().abs();
    Ok(arc.sweet_spot_frequency * T::PI() * T::lit(0.5) * sine / cosine.sqrt())
}

/// Single-photon photon-pressure coupling rate g₀ = |∂ω/∂Φ|·Φ_zpf, rad/s.
pub fn single_photon_coupling<T: Real>(sensitivity: T, phi_zpf: T) -> Result<T, CircuitError> {
    if sensitivity < T::zero() || phi_zpf < T::zero() {
        return domain(
            "single_photon_coupling",
            format!("need non-negative inputs, got {sensitivity}, {phi_zpf}"),
        );
    }
    Ok(sensitivity * phi_zpf)
}

/// Where the flux sensitivity for the estimator chain comes from.
#[derive(Clone, Copy, Debug)]
pub enum SensitivityInput<T> {
    /// A measured slope, rad/s per Φ₀.
    Measured(T),
    /// Evaluate the symmetric arc at the given flux (units of Φ₀).
    Arc { arc: FluxArc<T>, flux: T },
}

/// Output of the full analytic estimator chain.
#[derive(Clone, Copy, Debug)]
pub struct CircuitEstimate<T> {
    /// C_IDC, farads.
    pub capacitance: T,
    /// L_b = 1/(ω²C), henries.
    pub inductance: T,
    /// I_zpf, amperes.
    pub zero_point_current: T,
    /// M, henries.
    pub mutual_inductance: T,
    /// Φ_zpf in units of Φ₀.
    pub zero_point_flux: T,
    /// |∂ω/∂Φ|, rad/s per Φ₀.
    pub flux_sensitivity: T,
    /// g₀, rad/s.
    pub single_photon_coupling: T,
}

/// Runs the full chain geometry → C → L → I_zpf, M → Φ_zpf, and
/// g₀ = sensitivity·Φ_zpf.
pub fn estimate_chain<T: Real>(
    idc: &IdcGeometry<T>,
    squid: &SquidGeometry<T>,
    omega_b: T,
    sensitivity: SensitivityInput<T>,
) -> Result<CircuitEstimate<T>, CircuitError> {
    let capacitance = idc_capacitance(idc)?;
    let inductance = inductance_from_frequency(omega_b, capacitance)?;
    let i_zpf = zero_point_current(omega_b, inductance)?;
    let m = mutual_inductance(squid);
    let phi_zpf = zero_point_flux(m, i_zpf)?;
    let slope = match sensitivity {
        SensitivityInput::Measured(s) => {
            if s < T::zero() {
                return domain(
                    "estimate_chain",
                    format!("measured sensitivity must be non-negative, got {s}"),
                );
            }
            s
        }
        SensitivityInput::Arc { arc, flux } => flux_sensitivity(&arc, flux)?,
    };
    Ok(CircuitEstimate {
        capacitance,
        inductance,
        zero_point_current: i_zpf,
        mutual_inductance: m,
        zero_point_flux: phi_zpf,
        flux_sensitivity: slope,
        single_photon_coupling: single_photon_coupling(slope, phi_zpf)?,
    })
}
