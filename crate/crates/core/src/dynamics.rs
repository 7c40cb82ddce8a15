//! Time-domain Lindblad dynamics: density matrices, piecewise-constant
//! pulse schedules, fixed-step RK4 integration of
//!
//! ```text
//! ∂ρ/∂t = −i[Ĥ(t), ρ] + κ_b·D[b̂]ρ + γ₁·D[σ̂₋]ρ
//! ```
//!
//! in the co-rotating chevron frame, plus the chevron experiment protocol
//! (state preparation by ideal π-pulses and photon-pressure swaps) and the
//! damped-sinusoid Rabi-frequency fit.
//!
//! Dephasing is deliberately absent from the collapse set; the qubit drive
//! is taken exactly resonant, and pulse edges are ideal square switches
//! (a finite rise time would slightly reduce the effective pulse area).

use num_complex::Complex;
use thiserror::Error;

use crate::linalg::{hermitian_eigenvalues, CMat};
use crate::optimize::{nelder_mead, FitError, NelderMeadOptions};
use crate::quantum::{
    annihilation, chevron_frame_hamiltonian, sigma_x, HilbertSpace, Operator, QuantumError,
    Subsystem, SystemParams,
};
use crate::scalar::Real;

#[derive(Debug, Error, PartialEq)]
pub enum DynamicsError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("operator dimension {found} does not match the state dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("collapse rate must be non-negative, got {0}")]
    InvalidRate(f64),
    #[error("invalid schedule: {0}")]
    InvalidSchedule(String),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("step size underflow: h = {h}")]
    StepUnderflow { h: f64 },
    #[error("state invariant violated at t = {time} s: {detail}")]
    InvariantViolation { time: f64, detail: String },
}

/// One piecewise-constant control segment.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PulseSegment<T> {
    /// Segment length, seconds (> 0).
    pub duration: T,
    /// Jaynes-Cummings coupling g during the segment, rad/s.
    pub coupling_g: T,
    /// Resonant qubit drive amplitude, rad/s.
    pub qubit_drive_amp: T,
    /// Whether the qubit drive is applied.
    pub qubit_drive_on: bool,
}

/// Ordered list of control segments; lookups are right-continuous at the
/// segment edges and the final edge belongs to the last segment.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule<T> {
    segments: Vec<PulseSegment<T>>,
}

impl<T: Real> PulseSchedule<T> {
    pub fn new(segments: Vec<PulseSegment<T>>) -> Result<Self, DynamicsError> {
        for (i, s) in segments.iter().enumerate() {
            if !(s.duration > T::zero()) || !s.duration.is_finite() {
                return Err(DynamicsError::InvalidSchedule(format!(
                    "segment {i} has non-positive duration {}",
                    s.duration
                )));
            }
        }
        Ok(Self { segments })
    }

    /// Single constant-coupling segment with the qubit drive off.
    pub fn constant(duration: T, coupling_g: T) -> Result<Self, DynamicsError> {
        Self::new(vec![PulseSegment {
            duration,
            coupling_g,
            qubit_drive_amp: T::zero(),
            qubit_drive_on: false,
        }])
    }

    pub fn segments(&self) -> &[PulseSegment<T>] {
        &self.segments
    }

    pub fn total_duration(&self) -> T {
        self.segments
            .iter()
            .fold(T::zero(), |acc, s| acc + s.duration)
    }

    /// Segment active at time `t`, or None outside [0, total_duration].
    pub fn segment_at(&self, t: T) -> Option<&PulseSegment<T>> {
        if t < T::zero() || self.segments.is_empty() {
            return None;
        }
        let mut start = T::zero();
        for s in &self.segments {
            let end = start + s.duration;
            if t < end {
                return Some(s);
            }
            start = end;
        }
        if t <= start {
            return self.segments.last();
        }
        None
    }
}

/// Dense density matrix on a truncated space.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix<T> {
    space: HilbertSpace,
    mat: CMat<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// |g,0⟩⟨g,0|.
    pub fn ground(space: HilbertSpace) -> Self {
        Self::pure(space, 0, 0).expect("ground state always valid")
    }

    /// |q,n⟩⟨q,n|.
    pub fn pure(
        space: HilbertSpace,
        qubit_level: usize,
        resonator_level: usize,
    ) -> Result<Self, DynamicsError> {
        if qubit_level >= space.qubit_dim() || resonator_level >= space.resonator_dim() {
            return Err(DynamicsError::InvalidGrid(format!(
                "basis state ({qubit_level},{resonator_level}) outside the space"
            )));
        }
        let mut mat = CMat::zeros(space.total_dim());
        let i = space.index(qubit_level, resonator_level);
        mat[(i, i)] = Complex::new(T::one(), T::zero());
        Ok(Self { space, mat })
    }

    /// Wraps a raw matrix after checking trace, Hermiticity and positivity.
    pub fn from_matrix(space: HilbertSpace, mat: CMat<T>) -> Result<Self, DynamicsError> {
        if mat.dim() != space.total_dim() {
            return Err(DynamicsError::DimensionMismatch {
                expected: space.total_dim(),
                found: mat.dim(),
            });
        }
        let dm = Self { space, mat };
        dm.validate(T::zero())?;
        Ok(dm)
    }

    pub fn space(&self) -> HilbertSpace {
        self.space
    }

    pub fn matrix(&self) -> &CMat<T> {
        &self.mat
    }

    pub fn trace(&self) -> Complex<T> {
        self.mat.trace()
    }

    pub fn hermiticity_defect(&self) -> T {
        self.mat.hermiticity_defect()
    }

    pub fn min_eigenvalue(&self) -> T {
        hermitian_eigenvalues(&self.mat)[0]
    }

    /// Trace within 1e-8 of one, Hermitian to 1e-10, eigenvalues ≥ −1e-8.
    pub fn validate(&self, time: T) -> Result<(), DynamicsError> {
        let at = time.to_f64().unwrap_or(f64::NAN);
        let tr = self.trace();
        if (tr.re - T::one()).abs() > T::tol(1e-8) || tr.im.abs() > T::tol(1e-8) {
            return Err(DynamicsError::InvariantViolation {
                time: at,
                detail: format!("trace = {} + {}i", tr.re, tr.im),
            });
        }
        let herm = self.hermiticity_defect();
        if herm > T::tol(1e-10) {
            return Err(DynamicsError::InvariantViolation {
                time: at,
                detail: format!("hermiticity defect {herm}"),
            });
        }
        let min = self.min_eigenvalue();
        if min < -T::tol(1e-8) {
            return Err(DynamicsError::InvariantViolation {
                time: at,
                detail: format!("negative eigenvalue {min}"),
            });
        }
        Ok(())
    }

    /// tr(ρ·A).
    pub fn expectation(&self, op: &Operator<T>) -> Complex<T> {
        assert_eq!(self.space, op.space(), "operator space mismatch");
        let n = self.mat.dim();
        let mut acc = Complex::new(T::zero(), T::zero());
        for i in 0..n {
            for j in 0..n {
                acc += self.mat[(i, j)] * op.matrix()[(j, i)];
            }
        }
        acc
    }

    /// Population of one qubit level, traced over the resonator.
    pub fn qubit_level_population(&self, level: usize) -> T {
        let mut p = T::zero();
        for n in 0..self.space.resonator_dim() {
            let i = self.space.index(level, n);
            p += self.mat[(i, i)].re;
        }
        p
    }

    /// P_|e⟩ for a two-level qubit factor.
    pub fn excited_population(&self) -> T {
        self.qubit_level_population(1)
    }

    /// UρU†.
    pub fn apply_unitary(&self, u: &Operator<T>) -> Self {
        assert_eq!(self.space, u.space(), "operator space mismatch");
        Self {
            space: self.space,
            mat: u.matrix().matmul(&self.mat).matmul(&u.matrix().adjoint()),
        }
    }
}

/// Integration output: states at every accepted RK4 step.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    times: Vec<T>,
    states: Vec<DensityMatrix<T>>,
    boundary_indices: Vec<usize>,
}

impl<T: Real> Trajectory<T> {
    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn states(&self) -> &[DensityMatrix<T>] {
        &self.states
    }

    /// Indices of the initial state and every segment boundary.
    pub fn boundary_indices(&self) -> &[usize] {
        &self.boundary_indices
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn last(&self) -> &DensityMatrix<T> {
        self.states.last().expect("trajectory never empty")
    }

    /// (t, P_|e⟩) samples, the input of [`rabi_frequency_fit`].
    pub fn excited_population_trace(&self) -> Vec<(T, T)> {
        self.times
            .iter()
            .zip(self.states.iter())
            .map(|(t, s)| (*t, s.excited_population()))
            .collect()
    }
}

/// Excited-state probability on a (detuning × pulse-duration) grid,
/// row-major over detuning then time.
#[derive(Clone, Debug)]
pub struct ChevronResult<T> {
    detunings: Vec<T>,
    times: Vec<T>,
    p_excited: Vec<T>,
}

impl<T: Real> ChevronResult<T> {
    pub fn new(detunings: Vec<T>, times: Vec<T>, p_excited: Vec<T>) -> Result<Self, DynamicsError> {
        if p_excited.len() != detunings.len() * times.len() {
            return Err(DynamicsError::InvalidGrid(format!(
                "grid size {} does not match {} x {}",
                p_excited.len(),
                detunings.len(),
                times.len()
            )));
        }
        for p in &p_excited {
            if !(*p > -T::tol(1e-8) && *p < T::one() + T::tol(1e-8)) {
                return Err(DynamicsError::InvalidGrid(format!(
                    "probability {p} outside [0, 1]"
                )));
            }
        }
        Ok(Self {
            detunings,
            times,
            p_excited,
        })
    }

    pub fn detunings(&self) -> &[T] {
        &self.detunings
    }

    pub fn times(&self) -> &[T] {
        &self.times
    }

    pub fn at(&self, detuning_index: usize, time_index: usize) -> T {
        self.p_excited[detuning_index * self.times.len() + time_index]
    }

    /// All pulse durations for one detuning.
    pub fn row(&self, detuning_index: usize) -> &[T] {
        let n = self.times.len();
        &self.p_excited[detuning_index * n..(detuning_index + 1) * n]
    }

    pub fn values(&self) -> &[T] {
        &self.p_excited
    }
}

/// Initial-state protocol of a chevron run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChevronPrep {
    /// |g,0⟩: nothing happens without excitations.
    Ground,
    /// Ideal instantaneous π-pulse: |e,0⟩ (single-excitation manifold).
    ExcitedQubit,
    /// Resonator prepared in Fock |m⟩ by m photon-pressure π-swaps, then a
    /// final π-pulse: |e,m⟩ ((m+1)-excitation manifold). The swap pulses
    /// run through the open-system integrator, so preparation infidelity
    /// under decay is reproduced without extra parameters.
    FockResonator(usize),
}

struct Dissipator<T> {
    l: CMat<T>,
    l_adj: CMat<T>,
    ldl: CMat<T>,
    rate: T,
}

impl<T: Real> Dissipator<T> {
    fn new(op: &CMat<T>, rate: T) -> Self {
        let l_adj = op.adjoint();
        let ldl = l_adj.matmul(op);
        Self {
            l: op.clone(),
            l_adj,
            ldl,
            rate,
        }
    }
}

fn rhs_mat<T: Real>(h: &CMat<T>, rho: &CMat<T>, diss: &[Dissipator<T>]) -> CMat<T> {
    let minus_i = Complex::new(T::zero(), -T::one());
    let mut out = (&h.matmul(rho) - &rho.matmul(h)).scale(minus_i);
    let half = T::lit(0.5);
    for d in diss {
        let lrl = d.l.matmul(rho).matmul(&d.l_adj);
        out.axpy_re(d.rate, &lrl);
        out.axpy_re(-d.rate * half, &d.ldl.matmul(rho));
        out.axpy_re(-d.rate * half, &rho.matmul(&d.ldl));
    }
    out
}

/// Lindblad right-hand side −i\[Ĥ,ρ\] + Σᵢ rᵢ(LᵢρLᵢ† − ½{Lᵢ†Lᵢ, ρ}).
///
/// The result is exactly traceless up to rounding.
pub fn lindblad_rhs<T: Real>(
    h: &Operator<T>,
    rho: &DensityMatrix<T>,
    collapse: &[(Operator<T>, T)],
) -> Result<CMat<T>, DynamicsError> {
    let dim = rho.matrix().dim();
    if h.matrix().dim() != dim {
        return Err(DynamicsError::DimensionMismatch {
            expected: dim,
            found: h.matrix().dim(),
        });
    }
    let mut diss = Vec::with_capacity(collapse.len());
    for (op, rate) in collapse {
        if op.matrix().dim() != dim {
            return Err(DynamicsError::DimensionMismatch {
                expected: dim,
                found: op.matrix().dim(),
            });
        }
        if *rate < T::zero() {
            return Err(DynamicsError::InvalidRate(
                rate.to_f64().unwrap_or(f64::NAN),
            ));
        }
        diss.push(Dissipator::new(op.matrix(), *rate));
    }
    Ok(rhs_mat(h.matrix(), rho.matrix(), &diss))
}

fn collapse_set<T: Real>(params: &SystemParams<T>, space: HilbertSpace) -> Vec<Dissipator<T>> {
    let mut diss = Vec::new();
    if params.kappa_b > T::zero() {
        let b: Operator<T> = annihilation(space, Subsystem::Resonator);
        diss.push(Dissipator::new(b.matrix(), params.kappa_b));
    }
    if params.gamma_1 > T::zero() {
        let sm: Operator<T> = annihilation(space, Subsystem::Qubit);
        diss.push(Dissipator::new(sm.matrix(), params.gamma_1));
    }
    diss
}

fn rk4_step<T: Real>(rho: &mut CMat<T>, h_mat: &CMat<T>, diss: &[Dissipator<T>], dt: T) {
    let half = T::lit(0.5);
    let sixth = T::lit(1.0 / 6.0);
    let k1 = rhs_mat(h_mat, rho, diss);
    let mut stage = rho.clone();
    stage.axpy_re(dt * half, &k1);
    let k2 = rhs_mat(h_mat, &stage, diss);
    stage = rho.clone();
    stage.axpy_re(dt * half, &k2);
    let k3 = rhs_mat(h_mat, &stage, diss);
    stage = rho.clone();
    stage.axpy_re(dt, &k3);
    let k4 = rhs_mat(h_mat, &stage, diss);
    rho.axpy_re(dt * sixth, &k1);
    rho.axpy_re(dt * sixth * T::lit(2.0), &k2);
    rho.axpy_re(dt * sixth * T::lit(2.0), &k3);
    rho.axpy_re(dt * sixth, &k4);
}

/// Largest frequency scale of the run in Hz: max(|δ|, g, ε, γ₁, κ_b)/2π.
fn max_frequency_scale<T: Real>(
    schedule: &PulseSchedule<T>,
    params: &SystemParams<T>,
    delta: T,
) -> T {
    let mut m = delta.abs().max(params.gamma_1).max(params.kappa_b);
    for s in schedule.segments() {
        m = m.max(s.coupling_g.abs());
        if s.qubit_drive_on {
            m = m.max(s.qubit_drive_amp.abs());
        }
    }
    m / T::TAU()
}

/// Integrates the master equation over a pulse schedule with classic
/// fixed-step RK4.
///
/// The step is h ≤ min(dt_max, 1/(50·f_max)) with f_max from
/// max(|δ|, g, ε, γ₁, κ_b)/2π, rounded down so that each segment boundary
/// is a step boundary. State invariants (unit trace, Hermiticity,
/// positivity) are verified at ten checkpoints across the horizon and on
/// the final state; a violation aborts with a diagnostic.
pub fn evolve<T: Real>(
    rho0: &DensityMatrix<T>,
    schedule: &PulseSchedule<T>,
    params: &SystemParams<T>,
    delta: T,
    dt_max: T,
) -> Result<Trajectory<T>, DynamicsError> {
    if !(dt_max > T::zero()) || !dt_max.is_finite() {
        return Err(DynamicsError::StepUnderflow {
            h: dt_max.to_f64().unwrap_or(f64::NAN),
        });
    }
    rho0.validate(T::zero())?;
    let space = rho0.space();
    let diss = collapse_set(params, space);

    let f_max = max_frequency_scale(schedule, params, delta);
    let mut h_target = dt_max;
    if f_max > T::zero() {
        h_target = h_target.min((T::lit(50.0) * f_max).recip());
    }

    let mut times = vec![T::zero()];
    let mut states = vec![rho0.clone()];
    let mut boundaries = vec![0usize];
    let mut rho = rho0.matrix().clone();
    let mut t = T::zero();

    for seg in schedule.segments() {
        let steps_f = (seg.duration / h_target).ceil();
        let steps = steps_f.to_usize().unwrap_or(usize::MAX);
        if steps == 0 || steps > 100_000_000 {
            return Err(DynamicsError::StepUnderflow {
                h: h_target.to_f64().unwrap_or(f64::NAN),
            });
        }
        let h = seg.duration / T::from_usize(steps).unwrap();
        let drive = if seg.qubit_drive_on {
            seg.qubit_drive_amp
        } else {
            T::zero()
        };
        let h_mat = chevron_frame_hamiltonian(delta, seg.coupling_g, drive, space, false)?;
        for _ in 0..steps {
            rk4_step(&mut rho, h_mat.matrix(), &diss, h);
            t += h;
            times.push(t);
            states.push(DensityMatrix {
                space,
                mat: rho.clone(),
            });
        }
        boundaries.push(states.len() - 1);
    }

    // Ten evenly spaced checkpoints plus the final state.
    let n = states.len();
    let mut checks: Vec<usize> = (1..=10).map(|k| k * (n - 1) / 10).collect();
    checks.push(n - 1);
    checks.dedup();
    for &i in &checks {
        states[i].validate(times[i])?;
    }

    Ok(Trajectory {
        times,
        states,
        boundary_indices: boundaries,
    })
}

fn prepare_state<T: Real>(
    params: &SystemParams<T>,
    g_pulse: T,
    prep: ChevronPrep,
    space: HilbertSpace,
    dt_max: T,
) -> Result<DensityMatrix<T>, DynamicsError> {
    let pi_flip = sigma_x(space)?;
    let mut state = DensityMatrix::ground(space);
    match prep {
        ChevronPrep::Ground => {}
        ChevronPrep::ExcitedQubit => {
            state = state.apply_unitary(&pi_flip);
        }
        ChevronPrep::FockResonator(m) => {
            if !(g_pulse > T::zero()) {
                return Err(DynamicsError::InvalidGrid(
                    "Fock preparation requires a positive swap coupling".into(),
                ));
            }
            for k in 1..=m {
                state = state.apply_unitary(&pi_flip);
                // π-swap on the k-excitation manifold: duration π/(2√k·g).
                let swap_t = T::PI() / (T::lit(2.0) * T::from_usize(k).unwrap().sqrt() * g_pulse);
                let swap = PulseSchedule::constant(swap_t, g_pulse)?;
                state = evolve(&state, &swap, params, T::zero(), dt_max)?
                    .last()
                    .clone();
            }
            state = state.apply_unitary(&pi_flip);
        }
    }
    Ok(state)
}

fn chevron_space(prep: ChevronPrep) -> Result<HilbertSpace, DynamicsError> {
    let resonator_dim = match prep {
        ChevronPrep::Ground | ChevronPrep::ExcitedQubit => 5,
        ChevronPrep::FockResonator(m) => 5usize.max(m + 4),
    };
    Ok(HilbertSpace::new(2, resonator_dim)?)
}

fn validate_grid<T: Real>(name: &str, grid: &[T]) -> Result<(), DynamicsError> {
    if grid.is_empty() {
        return Err(DynamicsError::InvalidGrid(format!("{name} grid is empty")));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(DynamicsError::InvalidGrid(format!(
            "{name} grid must be strictly increasing"
        )));
    }
    Ok(())
}

fn chevron_row<T: Real>(
    prepared: &DensityMatrix<T>,
    params: &SystemParams<T>,
    g_pulse: T,
    delta: T,
    taus: &[T],
    dt_max: T,
) -> Result<Vec<T>, DynamicsError> {
    let mut row = Vec::with_capacity(taus.len());
    let mut idx = 0usize;
    if taus[0] == T::zero() {
        row.push(prepared.excited_population());
        idx = 1;
    }
    if idx == taus.len() {
        return Ok(row);
    }
    // One integration per detuning: the pulse is constant, so the state at
    // time τ equals the state after a pulse of duration τ. Segment
    // boundaries are placed at every requested τ.
    let mut segments = Vec::with_capacity(taus.len() - idx);
    let mut prev = T::zero();
    for &tau in &taus[idx..] {
        segments.push(PulseSegment {
            duration: tau - prev,
            coupling_g: g_pulse,
            qubit_drive_amp: T::zero(),
            qubit_drive_on: false,
        });
        prev = tau;
    }
    let schedule = PulseSchedule::new(segments)?;
    let traj = evolve(prepared, &schedule, params, delta, dt_max)?;
    for &b in &traj.boundary_indices()[1..] {
        row.push(traj.states()[b].excited_population());
    }
    Ok(row)
}

/// Chevron experiment on the default truncation (D_q = 2, D_b = 5, grown
/// as needed for higher Fock preparations): prepare, apply the coupling
/// pulse g for each duration τ at each detuning δ, and record P_|e⟩.
pub fn chevron_experiment<T: Real>(
    params: &SystemParams<T>,
    g_pulse: T,
    detunings: &[T],
    taus: &[T],
    prep: ChevronPrep,
    dt_max: T,
) -> Result<ChevronResult<T>, DynamicsError> {
    let space = chevron_space(prep)?;
    chevron_experiment_in(space, params, g_pulse, detunings, taus, prep, dt_max)
}

/// Chevron experiment on an explicit truncation.
pub fn chevron_experiment_in<T: Real>(
    space: HilbertSpace,
    params: &SystemParams<T>,
    g_pulse: T,
    detunings: &[T],
    taus: &[T],
    prep: ChevronPrep,
    dt_max: T,
) -> Result<ChevronResult<T>, DynamicsError> {
    validate_grid("detuning", detunings)?;
    validate_grid("time", taus)?;
    if taus[0] < T::zero() {
        return Err(DynamicsError::InvalidGrid(
            "pulse durations must be non-negative".into(),
        ));
    }
    let prepared = prepare_state(params, g_pulse, prep, space, dt_max)?;
    let mut grid = Vec::with_capacity(detunings.len() * taus.len());
    for &delta in detunings {
        grid.extend(chevron_row(
            &prepared, params, g_pulse, delta, taus, dt_max,
        )?);
    }
    ChevronResult::new(detunings.to_vec(), taus.to_vec(), grid)
}

/// Same as [`chevron_experiment`], with detunings distributed over up to
/// `threads` OS threads. Rows are merged by grid index, so the result is
/// identical to the sequential one.
pub fn chevron_experiment_parallel<T: Real>(
    params: &SystemParams<T>,
    g_pulse: T,
    detunings: &[T],
    taus: &[T],
    prep: ChevronPrep,
    dt_max: T,
    threads: usize,
) -> Result<ChevronResult<T>, DynamicsError> {
    let threads = threads.max(1).min(detunings.len().max(1));
    if threads == 1 {
        return chevron_experiment(params, g_pulse, detunings, taus, prep, dt_max);
    }
    validate_grid("detuning", detunings)?;
    validate_grid("time", taus)?;
    let space = chevron_space(prep)?;
    let prepared = prepare_state(params, g_pulse, prep, space, dt_max)?;

    let mut results: Vec<Result<Vec<T>, DynamicsError>> = Vec::new();
    std::thread::scope(|scope| {
        let prepared = &prepared;
        let mut handles = Vec::new();
        let chunk = detunings.len().div_ceil(threads);
        for part in detunings.chunks(chunk) {
            handles.push(scope.spawn(move || {
                let mut rows = Vec::with_capacity(part.len() * taus.len());
                for &delta in part {
                    match chevron_row(prepared, params, g_pulse, delta, taus, dt_max) {
                        Ok(row) => rows.extend(row),
                        Err(e) => return Err(e),
                    }
                }
                Ok(rows)
            }));
        }
        for h in handles {
            results.push(h.join().expect("chevron worker panicked"));
        }
    });

    let mut grid = Vec::with_capacity(detunings.len() * taus.len());
    for r in results {
        grid.extend(r?);
    }
    ChevronResult::new(detunings.to_vec(), taus.to_vec(), grid)
}

/// Damped-sinusoid fit result; `coupling` is g in A·e^{−Γt}·cos(2g·t) + C.
#[derive(Clone, Debug)]
pub struct RabiFit<T> {
    pub coupling: T,
    pub decay: T,
    pub amplitude: T,
    pub offset: T,
    pub residual_norm: T,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-squares fit of A·e^{−Γt}·cos(2g·t) + C to a (t, P) trace.
///
/// Initialized from the periodogram peak of the mean-subtracted trace; the
/// sign of A is tie-broken by refitting with both signs and keeping the
/// lower residual. Needs at least 10 samples spanning one oscillation.
pub fn rabi_frequency_fit<T: Real>(trace: &[(T, T)]) -> Result<RabiFit<T>, FitError> {
    if trace.len() < 10 {
        return Err(FitError::InsufficientData(format!(
            "need at least 10 samples, got {}",
            trace.len()
        )));
    }
    let n = trace.len();
    let t0 = trace[0].0;
    let span = trace[n - 1].0 - t0;
    if !(span > T::zero()) {
        return Err(FitError::DegenerateData("zero time span".into()));
    }
    let mean = trace.iter().map(|p| p.1).sum::<T>() / T::from_usize(n).unwrap();
    let (mut lo, mut hi) = (T::infinity(), -T::infinity());
    for p in trace {
        lo = lo.min(p.1);
        hi = hi.max(p.1);
    }
    if !(hi - lo > T::tol(1e-12)) {
        return Err(FitError::DegenerateData("flat trace".into()));
    }

    // Periodogram on the Fourier grid of the span; robust to mild
    // non-uniformity of the time samples.
    let half = n / 2;
    let mut best_k = 1usize;
    let mut best_p = -T::one();
    let mut powers = vec![T::zero(); half + 1];
    for k in 1..=half {
        let f = T::from_usize(k).unwrap() / span;
        let mut re = T::zero();
        let mut im = T::zero();
        for &(t, y) in trace {
            let ph = T::TAU() * f * (t - t0);
            re += (y - mean) * ph.cos();
            im += (y - mean) * ph.sin();
        }
        let p = re * re + im * im;
        powers[k] = p;
        if p > best_p {
            best_p = p;
            best_k = k;
        }
    }
    // Parabolic refinement of the peak bin.
    let mut kf = T::from_usize(best_k).unwrap();
    if best_k > 1 && best_k < half {
        let (pm, p0, pp) = (powers[best_k - 1], powers[best_k], powers[best_k + 1]);
        let denom = pm - T::lit(2.0) * p0 + pp;
        if denom.abs() > T::zero() {
            let shift = T::lit(0.5) * (pm - pp) / denom;
            if shift.abs() < T::one() {
                kf += shift;
            }
        }
    }
    let omega0 = T::TAU() * kf / span; // ≈ 2g
    let g0 = omega0 * T::lit(0.5);

    // Crude decay estimate from the envelope of the first and last thirds.
    let third = n / 3;
    let rms = |part: &[(T, T)]| {
        let s: T = part.iter().map(|p| (p.1 - mean) * (p.1 - mean)).sum();
        (s / T::from_usize(part.len()).unwrap()).sqrt()
    };
    let r1 = rms(&trace[..third.max(2)]);
    let r2 = rms(&trace[n - third.max(2)..]);
    let gamma0 = if r1 > T::zero() && r2 > T::zero() && r1 > r2 {
        (r1 / r2).ln() / (span * T::lit(2.0 / 3.0))
    } else {
        T::zero()
    };

    let a0 = (hi - lo) * T::lit(0.5);
    let sse = |x: &[T]| {
        let (a, gamma, g, c) = (x[0], x[1], x[2], x[3]);
        let mut acc = T::zero();
        for &(t, y) in trace {
            let tt = t - t0;
            let m = a * (-gamma * tt).exp() * (T::lit(2.0) * g * tt).cos() + c;
            acc += (m - y) * (m - y);
        }
        acc
    };
    let scales = [
        a0.max(T::tol(1e-6)),
        (gamma0.abs() + span.recip()) * T::lit(0.5),
        (T::PI() / span).max(g0 * T::lit(0.05)),
        a0.max(T::tol(1e-6)),
    ];
    let opts = NelderMeadOptions::default();
    let pos = nelder_mead(sse, &[a0, gamma0, g0, mean], &scales, &opts);
    let neg = nelder_mead(sse, &[-a0, gamma0, g0, mean], &scales, &opts);
    let best = if pos.value <= neg.value { pos } else { neg };
    if !best.converged {
        return Err(FitError::NonConvergence {
            iterations: best.iterations,
        });
    }
    Ok(RabiFit {
        coupling: best.x[2].abs(),
        decay: best.x[1],
        amplitude: best.x[0],
        offset: best.x[3],
        residual_norm: best.value.sqrt(),
        iterations: best.iterations,
        converged: best.converged,
    })
}
