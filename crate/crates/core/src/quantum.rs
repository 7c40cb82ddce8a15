//! Truncated-Hilbert-space operator algebra and Hamiltonian builders for a
//! Kerr qubit coupled to a linear resonator: the bare Kerr Hamiltonian, the
//! photon-pressure interaction g₀·â†â(b̂+b̂†), its sideband-linearized
//! Jaynes-Cummings form, and the co-rotating chevron-frame Hamiltonian used
//! by the time-domain simulations.
//!
//! States are ordered |qubit⟩⊗|resonator⟩ with index q·D_b + n. All
//! Hamiltonians are returned divided by ħ, in rad/s.

use num_complex::Complex;
use thiserror::Error;

use crate::dynamics::PulseSchedule;
use crate::linalg::CMat;
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum QuantumError {
    #[error("total Hilbert-space dimension {dim} exceeds the cap {cap}")]
    SpaceTooLarge { dim: usize, cap: usize },
    #[error("subsystem dimensions must each be >= 2, got {qubit} x {resonator}")]
    DimensionTooSmall { qubit: usize, resonator: usize },
    #[error("operator dimension {found} does not match the space dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("operation requires a two-level qubit, space has D_q = {0}")]
    QubitNotTwoLevel(usize),
    #[error("time {t} s is outside the schedule horizon {horizon} s")]
    OutsideSchedule { t: f64, horizon: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParams(String),
}

/// Truncated tensor-product space of a qubit factor and a resonator factor.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct HilbertSpace {
    qubit_dim: usize,
    resonator_dim: usize,
}

impl HilbertSpace {
    /// Default cap on the total dimension.
    pub const DIM_CAP: usize = 4096;

    pub fn new(qubit_dim: usize, resonator_dim: usize) -> Result<Self, QuantumError> {
        Self::with_cap(qubit_dim, resonator_dim, Self::DIM_CAP)
    }

    pub fn with_cap(
        qubit_dim: usize,
        resonator_dim: usize,
        cap: usize,
    ) -> Result<Self, QuantumError> {
        if qubit_dim < 2 || resonator_dim < 2 {
            return Err(QuantumError::DimensionTooSmall {
                qubit: qubit_dim,
                resonator: resonator_dim,
            });
        }
        let dim = qubit_dim * resonator_dim;
        if dim > cap {
            return Err(QuantumError::SpaceTooLarge { dim, cap });
        }
        Ok(Self {
            qubit_dim,
            resonator_dim,
        })
    }

    pub fn qubit_dim(&self) -> usize {
        self.qubit_dim
    }

    pub fn resonator_dim(&self) -> usize {
        self.resonator_dim
    }

    pub fn total_dim(&self) -> usize {
        self.qubit_dim * self.resonator_dim
    }

    /// Flat index of the basis state |q, n⟩.
    pub fn index(&self, qubit_level: usize, resonator_level: usize) -> usize {
        debug_assert!(qubit_level < self.qubit_dim && resonator_level < self.resonator_dim);
        qubit_level * self.resonator_dim + resonator_level
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    Qubit,
    Resonator,
}

/// Dense operator on a [`HilbertSpace`]; immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator<T> {
    space: HilbertSpace,
    mat: CMat<T>,
}

impl<T: Real> Operator<T> {
    pub fn zeros(space: HilbertSpace) -> Self {
        Self {
            space,
            mat: CMat::zeros(space.total_dim()),
        }
    }

    pub fn identity(space: HilbertSpace) -> Self {
        Self {
            space,
            mat: CMat::identity(space.total_dim()),
        }
    }

    pub fn from_matrix(space: HilbertSpace, mat: CMat<T>) -> Result<Self, QuantumError> {
        if mat.dim() != space.total_dim() {
            return Err(QuantumError::DimensionMismatch {
                expected: space.total_dim(),
                found: mat.dim(),
            });
        }
        Ok(Self { space, mat })
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat<T> {
        self.mat
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            mat: self.mat.adjoint(),
        }
    }

    pub fn scale(&self, s: T) -> Self {
        Self {
            space: self.space,
            mat: self.mat.scale_re(s),
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        Self {
            space: self.space,
            mat: self.mat.matmul(&rhs.mat),
        }
    }

    pub fn add(&self, rhs: &Self) -> Self {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        Self {
            space: self.space,
            mat: &self.mat + &rhs.mat,
        }
    }

    pub fn sub(&self, rhs: &Self) -> Self {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        Self {
            space: self.space,
            mat: &self.mat - &rhs.mat,
        }
    }

    pub fn commutator(&self, rhs: &Self) -> Self {
        self.matmul(rhs).sub(&rhs.matmul(self))
    }

    /// ‖A − A†‖_max.
    pub fn hermiticity_defect(&self) -> T {
        self.mat.hermiticity_defect()
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = self.mat.max_abs().max(T::one());
        self.hermiticity_defect() < T::tol(1e-12) * scale
    }

    pub fn element(&self, row: (usize, usize), col: (usize, usize)) -> Complex<T> {
        self.mat[(
            self.space.index(row.0, row.1),
            self.space.index(col.0, col.1),
        )]
    }
}

/// Physical parameter set shared by the dynamics, calibration and
/// spectroscopy layers. All angular (rad/s); `alpha` ≤ 0; rates ≥ 0.
///
/// `gamma_1` = 1/T₁ enters the master equation; `gamma_q` is the measured
/// qubit linewidth and only feeds frequency-domain expressions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams<T> {
    pub omega_q: T,
    pub alpha: T,
    pub omega_b: T,
    pub g0: T,
    pub g_ab: T,
    pub kappa_b: T,
    pub gamma_1: T,
    pub gamma_q: T,
}

impl<T: Real> SystemParams<T> {
    pub fn validated(self) -> Result<Self, QuantumError> {
        if !(self.omega_q > T::zero() && self.omega_b > T::zero()) {
            return Err(QuantumError::InvalidParams(
                "omega_q and omega_b must be positive".into(),
            ));
        }
        if self.alpha > T::zero() {
            return Err(QuantumError::InvalidParams(
                "anharmonicity must be <= 0".into(),
            ));
        }
        for (name, r) in [
            ("kappa_b", self.kappa_b),
            ("gamma_1", self.gamma_1),
            ("gamma_q", self.gamma_q),
        ] {
            if r < T::zero() {
                return Err(QuantumError::InvalidParams(format!(
                    "decay rate {name} must be non-negative, got {r}"
                )));
            }
        }
        Ok(self)
    }
}

/// Sideband drive tone. Detuning and sum frequency are always derived from
/// the stored frequencies, never cached.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DriveParams<T> {
    pub omega_d: T,
    pub epsilon_d: T,
}

impl<T: Real> DriveParams<T> {
    /// Δ_q = ω_d − ω_q.
    pub fn delta_q(&self, omega_q: T) -> T {
        self.omega_d - omega_q
    }

    /// Σ = ω_q + ω_d.
    pub fn sigma(&self, omega_q: T) -> T {
        omega_q + self.omega_d
    }
}

fn ladder<T: Real>(dim: usize) -> CMat<T> {
    CMat::from_fn(dim, |r, c| {
        if c == r + 1 {
            Complex::new(T::from_usize(c).unwrap().sqrt(), T::zero())
        } else {
            Complex::new(T::zero(), T::zero())
        }
    })
}

fn embed<T: Real>(space: HilbertSpace, sub: Subsystem, small: &CMat<T>) -> Operator<T> {
    let mat = match sub {
        Subsystem::Qubit => small.kron(&CMat::identity(space.resonator_dim())),
        Subsystem::Resonator => CMat::identity(space.qubit_dim()).kron(small),
    };
    Operator { space, mat }
}

/// Annihilation operator of the chosen factor, embedded on the full space:
/// entries √n on the first superdiagonal, identity on the other factor.
pub fn annihilation<T: Real>(space: HilbertSpace, sub: Subsystem) -> Operator<T> {
    let dim = match sub {
        Subsystem::Qubit => space.qubit_dim(),
        Subsystem::Resonator => space.resonator_dim(),
    };
    embed(space, sub, &ladder(dim))
}

pub fn creation<T: Real>(space: HilbertSpace, sub: Subsystem) -> Operator<T> {
    annihilation(space, sub).adjoint()
}

/// Number operator a†a of the chosen factor.
pub fn number_operator<T: Real>(space: HilbertSpace, sub: Subsystem) -> Operator<T> {
    let a = annihilation(space, sub);
    a.adjoint().matmul(&a)
}

fn require_two_level(space: HilbertSpace) -> Result<(), QuantumError> {
    if space.qubit_dim() != 2 {
        return Err(QuantumError::QubitNotTwoLevel(space.qubit_dim()));
    }
    Ok(())
}

/// σ₊ = |e⟩⟨g| on the qubit factor (requires D_q = 2).
pub fn sigma_plus<T: Real>(space: HilbertSpace) -> Result<Operator<T>, QuantumError> {
    require_two_level(space)?;
    Ok(creation(space, Subsystem::Qubit))
}

pub fn sigma_minus<T: Real>(space: HilbertSpace) -> Result<Operator<T>, QuantumError> {
    require_two_level(space)?;
    Ok(annihilation(space, Subsystem::Qubit))
}

/// σ_z = |e⟩⟨e| − |g⟩⟨g| on the qubit factor (requires D_q = 2).
pub fn sigma_z<T: Real>(space: HilbertSpace) -> Result<Operator<T>, QuantumError> {
    require_two_level(space)?;
    let mut z = CMat::zeros(2);
    z[(0, 0)] = Complex::new(-T::one(), T::zero());
    z[(1, 1)] = Complex::new(T::one(), T::zero());
    Ok(embed(space, Subsystem::Qubit, &z))
}

/// σ_x = σ₊ + σ₋ on the qubit factor (requires D_q = 2).
pub fn sigma_x<T: Real>(space: HilbertSpace) -> Result<Operator<T>, QuantumError> {
    let sp = sigma_plus(space)?;
    Ok(sp.add(&sp.adjoint()))
}

/// Bare Kerr-qubit plus linear-resonator Hamiltonian,
/// Ĥ₀/ħ = ω_q·â†â + (α/2)·â†â†ââ + ω_b·b̂†b̂.
pub fn kerr_hamiltonian<T: Real>(params: &SystemParams<T>, space: HilbertSpace) -> Operator<T> {
    let aq = annihilation::<T>(space, Subsystem::Qubit);
    let nq = aq.adjoint().matmul(&aq);
    // a†a†aa = n(n-1)
    let kerr = nq.matmul(&nq).sub(&nq);
    let nb = number_operator(space, Subsystem::Resonator);
    nq.scale(params.omega_q)
        .add(&kerr.scale(params.alpha * T::lit(0.5)))
        .add(&nb.scale(params.omega_b))
}

/// Photon-pressure interaction Ĥ_int/ħ = g₀·â†â·(b̂ + b̂†).
pub fn photon_pressure_interaction<T: Real>(g0: T, space: HilbertSpace) -> Operator<T> {
    let nq = number_operator(space, Subsystem::Qubit);
    let b = annihilation(space, Subsystem::Resonator);
    let quad = b.add(&b.adjoint());
    nq.matmul(&quad).scale(g0)
}

/// Sideband-linearized Jaynes-Cummings Hamiltonian in the displaced
/// rotating frame (requires D_q = 2):
///
/// ```text
/// Ĥ/ħ = −Δ_q·σ̂₊σ̂₋ + ω_b·b̂†b̂ + g·(σ̂₊b̂ + σ̂₋b̂†)
/// ```
///
/// The qubit term is written −Δ_q·σ̂₊σ̂₋ (zero of energy at |g,0⟩), which
/// equals −(Δ_q/2)·σ̂_z up to the constant (Δ_q/2)·𝟙. With this convention
/// the n-excitation block on {|g,n⟩, |e,n−1⟩} is exactly
/// [[−Δ_qb + n·ω_b, g√n], [g√n, n·ω_b]] with Δ_qb = ω_b + Δ_q, and its
/// eigenvalues are E_{n,±} = n·ω_b − Δ_qb/2 ± ½√(Δ_qb² + 4n·g²).
/// Commutes with the total excitation number b̂†b̂ + σ̂₊σ̂₋.
pub fn linearized_jc_hamiltonian<T: Real>(
    g: T,
    delta_q: T,
    omega_b: T,
    space: HilbertSpace,
) -> Result<Operator<T>, QuantumError> {
    require_two_level(space)?;
    let sp = sigma_plus(space)?;
    let sm = sp.adjoint();
    let b = annihilation(space, Subsystem::Resonator);
    let excited = sp.matmul(&sm);
    let jc = sp.matmul(&b).add(&sm.matmul(&b.adjoint()));
    Ok(excited
        .scale(-delta_q)
        .add(&number_operator(space, Subsystem::Resonator).scale(omega_b))
        .add(&jc.scale(g)))
}

/// Total excitation number N̂ = b̂†b̂ + σ̂₊σ̂₋ (requires D_q = 2).
pub fn total_excitation<T: Real>(space: HilbertSpace) -> Result<Operator<T>, QuantumError> {
    require_two_level(space)?;
    let sp = sigma_plus(space)?;
    Ok(number_operator(space, Subsystem::Resonator).add(&sp.matmul(&sp.adjoint())))
}

/// Instantaneous chevron-frame Hamiltonian (requires D_q = 2):
///
/// ```text
/// Ĥ/ħ = (δ/2)·σ̂_z + g·(σ̂₊b̂ + σ̂₋b̂†) + ε·(σ̂₊ + σ̂₋)
/// ```
///
/// δ is the sideband-drive detuning from the red-sideband resonance; in
/// this fully co-rotating frame it is the only static term, so step sizes
/// are set by g and δ alone. The counter-rotating coupling
/// g·(σ̂₊b̂† + σ̂₋b̂) is dropped unless `counter_rotating` is set; the qubit
/// drive is taken exactly resonant.
pub fn chevron_frame_hamiltonian<T: Real>(
    delta: T,
    g: T,
    drive: T,
    space: HilbertSpace,
    counter_rotating: bool,
) -> Result<Operator<T>, QuantumError> {
    require_two_level(space)?;
    let sp = sigma_plus(space)?;
    let sm = sp.adjoint();
    let b = annihilation(space, Subsystem::Resonator);
    let mut h = sigma_z(space)?.scale(delta * T::lit(0.5));
    let mut coupling = sp.matmul(&b).add(&sm.matmul(&b.adjoint()));
    if counter_rotating {
        coupling = coupling.add(&sp.matmul(&b.adjoint()).add(&sm.matmul(&b)));
    }
    h = h.add(&coupling.scale(g));
    if drive != T::zero() {
        h = h.add(&sigma_x(space)?.scale(drive));
    }
    Ok(h)
}

/// Chevron-frame Hamiltonian at time `t` of a piecewise-constant schedule;
/// right-continuous at segment edges.
pub fn driven_chevron_hamiltonian<T: Real>(
    delta: T,
    schedule: &PulseSchedule<T>,
    t: T,
    space: HilbertSpace,
) -> Result<Operator<T>, QuantumError> {
    let seg = schedule
        .segment_at(t)
        .ok_or_else(|| QuantumError::OutsideSchedule {
            t: t.to_f64().unwrap_or(f64::NAN),
            horizon: schedule.total_duration().to_f64().unwrap_or(f64::NAN),
        })?;
    let drive = if seg.qubit_drive_on {
        seg.qubit_drive_amp
    } else {
        T::zero()
    };
    chevron_frame_hamiltonian(delta, seg.coupling_g, drive, space, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::PulseSegment;
    use crate::linalg::hermitian_eigenvalues;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn params(omega_q: f64, alpha: f64, omega_b: f64) -> SystemParams<f64> {
        SystemParams {
            omega_q,
            alpha,
            omega_b,
            g0: 0.0,
            g_ab: 0.0,
            kappa_b: 0.0,
            gamma_1: 0.0,
            gamma_q: 0.0,
        }
        .validated()
        .unwrap()
    }

    #[test]
    fn space_cap_enforced() {
        assert!(HilbertSpace::new(2, 2048).is_ok());
        assert!(matches!(
            HilbertSpace::new(2, 2049),
            Err(QuantumError::SpaceTooLarge { .. })
        ));
        assert!(HilbertSpace::with_cap(2, 8, 8).is_err());
        assert!(HilbertSpace::new(1, 8).is_err());
    }

    #[test]
    fn two_level_ladder_matrix() {
        let space = HilbertSpace::new(2, 2).unwrap();
        let a: Operator<f64> = annihilation(space, Subsystem::Qubit);
        assert_eq!(a.element((0, 0), (1, 0)).re, 1.0);
        assert_eq!(a.element((0, 1), (1, 1)).re, 1.0);
        assert_eq!(a.element((1, 0), (0, 0)).re, 0.0);
        assert_eq!(a.element((0, 0), (0, 1)).re, 0.0);
    }

    #[test]
    fn number_operator_diagonal() {
        let space = HilbertSpace::new(2, 3).unwrap();
        let n: Operator<f64> = number_operator(space, Subsystem::Resonator);
        for q in 0..2 {
            for k in 0..3 {
                assert!((n.element((q, k), (q, k)).re - k as f64).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn ladder_commutator_with_truncation() {
        // [a, a†] = 1 except the top level, which picks up 1 - D.
        let space = HilbertSpace::new(2, 5).unwrap();
        let a: Operator<f64> = annihilation(space, Subsystem::Resonator);
        let comm = a.commutator(&a.adjoint());
        for k in 0..4 {
            assert!((comm.element((0, k), (0, k)).re - 1.0).abs() < 1e-12);
        }
        assert!((comm.element((0, 4), (0, 4)).re - (1.0 - 5.0)).abs() < 1e-12);
    }

    #[test]
    fn kerr_two_level_reduces_to_qubit_splitting() {
        let space = HilbertSpace::new(2, 2).unwrap();
        let p = params(2.0 * PI * 6.1e9, -2.0 * PI * 388e6, 2.0 * PI * 4.347e9);
        let h = kerr_hamiltonian(&p, space);
        // Kerr term needs two excitations; the qubit block is diag(0, ω_q).
        assert!((h.element((0, 0), (0, 0)).re - 0.0).abs() < 1e-3);
        assert!((h.element((1, 0), (1, 0)).re - p.omega_q).abs() < 1e-3);
    }

    #[test]
    fn kerr_anharmonicity_is_level_spacing_difference() {
        let space = HilbertSpace::new(3, 2).unwrap();
        let alpha = -2.0 * PI * 388e6;
        let p = params(2.0 * PI * 6.1e9, alpha, 2.0 * PI * 4.347e9);
        let h = kerr_hamiltonian(&p, space);
        let e = |n: usize| h.element((n, 0), (n, 0)).re;
        let defect = (e(2) - e(1)) - (e(1) - e(0));
        assert!(
            (defect - alpha).abs() < 1.0,
            "defect {defect} vs alpha {alpha}"
        );
    }

    #[test]
    fn kerr_eigenvalues_match_dense_diagonalization() {
        let space = HilbertSpace::new(3, 4).unwrap();
        let p = params(3.0, -0.5, 2.0);
        let h = kerr_hamiltonian(&p, space);
        let mut analytic: Vec<f64> = (0..3)
            .flat_map(|q| {
                (0..4).map(move |n| {
                    p.omega_q * q as f64
                        + 0.5 * p.alpha * (q * (q.max(1) - 1)) as f64
                        + p.omega_b * n as f64
                })
            })
            .collect();
        analytic.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let eig = hermitian_eigenvalues(h.matrix());
        for (got, want) in eig.iter().zip(analytic.iter()) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn photon_pressure_vacuum_and_single_elements() {
        let space = HilbertSpace::new(2, 3).unwrap();
        let g0 = 2.0 * PI * 12.0e6;
        let h = photon_pressure_interaction(g0, space);
        assert_eq!(h.element((0, 0), (0, 0)).re, 0.0);
        assert!((h.element((1, 1), (1, 0)).re - g0).abs() < g0 * 1e-14);
    }

    #[test]
    fn photon_pressure_exhaustive_small_space() {
        let space = HilbertSpace::new(3, 4).unwrap();
        let g0 = 1.75;
        let h = photon_pressure_interaction(g0, space);
        for q in 0..3 {
            for n in 0..4 {
                for q2 in 0..3 {
                    for n2 in 0..4 {
                        let got = h.element((q2, n2), (q, n)).re;
                        let want = if q2 == q && n2 == n + 1 {
                            g0 * q as f64 * ((n + 1) as f64).sqrt()
                        } else if q2 == q && n + 1 == n2 + 2 {
                            g0 * q as f64 * (n as f64).sqrt()
                        } else {
                            0.0
                        };
                        assert!(
                            (got - want).abs() < 1e-12,
                            "element (({q2},{n2}),({q},{n})): {got} vs {want}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn jc_conserves_total_excitation() {
        let space = HilbertSpace::new(2, 6).unwrap();
        let h = linearized_jc_hamiltonian(
            2.0 * PI * 2.76e6,
            -2.0 * PI * 4.347e9,
            2.0 * PI * 4.347e9,
            space,
        )
        .unwrap();
        let n = total_excitation(space).unwrap();
        let comm = h.commutator(&n);
        let scale = h.matrix().max_abs();
        assert!(comm.matrix().max_abs() < 1e-12 * scale);
    }

    #[test]
    fn jc_block_matches_closed_form() {
        let space = HilbertSpace::new(2, 5).unwrap();
        let (g, dq, wb) = (0.35, -1.2, 0.9);
        let h = linearized_jc_hamiltonian(g, dq, wb, space).unwrap();
        let dqb = wb + dq;
        for n in 1..5 {
            let nf = n as f64;
            let hee = h.element((1, n - 1), (1, n - 1)).re;
            let hgg = h.element((0, n), (0, n)).re;
            let heg = h.element((1, n - 1), (0, n)).re;
            assert!((hee - (-dqb + nf * wb)).abs() < 1e-14);
            assert!((hgg - nf * wb).abs() < 1e-14);
            assert!((heg - g * nf.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn jc_eigenvalues_match_ladder_formula() {
        let space = HilbertSpace::new(2, 5).unwrap();
        let (g, dq, wb) = (0.35, -0.7, 0.9);
        let h = linearized_jc_hamiltonian(g, dq, wb, space).unwrap();
        let dqb = wb + dq;
        let eig = hermitian_eigenvalues(h.matrix());
        for n in 1..5u32 {
            let nf = n as f64;
            let root = (dqb * dqb + 4.0 * nf * g * g).sqrt();
            for sign in [-1.0, 1.0] {
                let e = nf * wb - 0.5 * dqb + 0.5 * sign * root;
                assert!(
                    eig.iter().any(|x| (x - e).abs() < 1e-12),
                    "missing eigenvalue {e} for n={n}"
                );
            }
        }
    }

    #[test]
    fn full_hamiltonian_polaron_ladder_and_sideband_resonance() {
        // Dense diagonalization of the full Kerr + photon-pressure
        // Hamiltonian (two-level qubit): each qubit branch is a displaced
        // oscillator, E(q,n) = ω_q·q + ω_b·n − q²·g₀²/ω_b. At the
        // polaron-corrected red sideband ω_d = ω_q − ω_b − g₀²/ω_b the
        // single-excitation pair {|e,0⟩, |g,1⟩} is degenerate in the
        // rotating frame — the resonant Jaynes-Cummings block diagonal.
        let space = HilbertSpace::new(2, 24).unwrap();
        let p = params(6.0, -0.4, 1.0);
        let g0 = 0.04;
        let h = kerr_hamiltonian(&p, space).add(&photon_pressure_interaction(g0, space));
        let eig = hermitian_eigenvalues(h.matrix());
        let shift = g0 * g0 / p.omega_b;
        for q in 0..2usize {
            for n in 0..6usize {
                let expect = p.omega_q * q as f64 + p.omega_b * n as f64 - (q * q) as f64 * shift;
                assert!(
                    eig.iter().any(|e| (e - expect).abs() < 1e-8),
                    "missing displaced-ladder level E({q},{n}) = {expect}"
                );
            }
        }
        let omega_d = p.omega_q - p.omega_b - shift;
        let e_excited = p.omega_q - shift - omega_d; // |e,0⟩ in the drive frame
        let e_photon = p.omega_b; // |g,1⟩
        assert!((e_excited - e_photon).abs() < 1e-12);
    }

    #[test]
    fn chevron_idle_frame_is_pure_detuning() {
        let space = HilbertSpace::new(2, 5).unwrap();
        let delta = 2.0 * PI * 3.0e6;
        let h = chevron_frame_hamiltonian(delta, 0.0, 0.0, space, false).unwrap();
        let z = sigma_z::<f64>(space).unwrap().scale(delta * 0.5);
        assert!(h.sub(&z).matrix().max_abs() < 1e-16 * delta.abs());
    }

    #[test]
    fn chevron_single_excitation_splitting() {
        // At δ = 0 the {|e,0>, |g,1>} block splits by exactly 2g.
        let space = HilbertSpace::new(2, 5).unwrap();
        let g = 2.0 * PI * 2.76e6;
        let h = chevron_frame_hamiltonian(0.0, g, 0.0, space, false).unwrap();
        let mut block = CMat::<f64>::zeros(2);
        let i_e0 = space.index(1, 0);
        let i_g1 = space.index(0, 1);
        for (r, ri) in [i_e0, i_g1].into_iter().enumerate() {
            for (c, ci) in [i_e0, i_g1].into_iter().enumerate() {
                block[(r, c)] = h.matrix()[(ri, ci)];
            }
        }
        let eig = hermitian_eigenvalues(&block);
        assert!(((eig[1] - eig[0]) - 2.0 * g).abs() < 1e-6);
    }

    #[test]
    fn chevron_counter_rotating_flag() {
        let space = HilbertSpace::new(2, 4).unwrap();
        let g = 1.0f64;
        let rwa = chevron_frame_hamiltonian(0.0, g, 0.0, space, false).unwrap();
        let full = chevron_frame_hamiltonian(0.0, g, 0.0, space, true).unwrap();
        // The counter-rotating part adds <e,1|H|g,0> = g.
        assert_eq!(rwa.element((1, 1), (0, 0)).re, 0.0);
        assert!((full.element((1, 1), (0, 0)).re - g).abs() < 1e-15);
        assert!(full.is_hermitian());
    }

    #[test]
    fn schedule_hamiltonian_right_continuous() {
        let space = HilbertSpace::new(2, 3).unwrap();
        let schedule = PulseSchedule::new(vec![
            PulseSegment {
                duration: 100e-9,
                coupling_g: 1.0e6,
                qubit_drive_amp: 0.0,
                qubit_drive_on: false,
            },
            PulseSegment {
                duration: 100e-9,
                coupling_g: 3.0e6,
                qubit_drive_amp: 0.5e6,
                qubit_drive_on: true,
            },
        ])
        .unwrap();
        let edge = 100e-9;
        let before = driven_chevron_hamiltonian(0.0, &schedule, edge - 1e-15, space).unwrap();
        let at = driven_chevron_hamiltonian(0.0, &schedule, edge, space).unwrap();
        let after = driven_chevron_hamiltonian(0.0, &schedule, edge + 1e-15, space).unwrap();
        assert_eq!(at, after);
        assert!(at.sub(&before).matrix().max_abs() > 1.0);
        assert!(matches!(
            driven_chevron_hamiltonian(0.0, &schedule, 300e-9, space),
            Err(QuantumError::OutsideSchedule { .. })
        ));
    }

    #[test]
    fn drive_params_always_derived() {
        let d = DriveParams {
            omega_d: 2.0 * PI * 1.753e9,
            epsilon_d: 1.0e9,
        };
        let wq = 2.0 * PI * 6.10e9;
        assert_eq!(d.delta_q(wq), d.omega_d - wq);
        assert_eq!(d.sigma(wq), d.omega_d + wq);
    }

    proptest! {
        #[test]
        fn builders_are_hermitian(
            wq in 0.1f64..10.0,
            alpha in -2.0f64..0.0,
            wb in 0.1f64..10.0,
            g in 0.0f64..3.0,
            delta in -3.0f64..3.0,
            drive in 0.0f64..2.0,
        ) {
            let space = HilbertSpace::new(3, 4).unwrap();
            let space2 = HilbertSpace::new(2, 4).unwrap();
            let p = params(wq, alpha, wb);
            for h in [
                kerr_hamiltonian(&p, space),
                photon_pressure_interaction(g, space),
            ] {
                let scale = h.matrix().max_abs().max(1.0);
                prop_assert!(h.hermiticity_defect() < 1e-12 * scale);
            }
            for h in [
                linearized_jc_hamiltonian(g, delta, wb, space2).unwrap(),
                chevron_frame_hamiltonian(delta, g, drive, space2, false).unwrap(),
                chevron_frame_hamiltonian(delta, g, drive, space2, true).unwrap(),
            ] {
                let scale = h.matrix().max_abs().max(1.0);
                prop_assert!(h.hermiticity_defect() < 1e-12 * scale);
            }
        }
    }
}
