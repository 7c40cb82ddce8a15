//! Simulation and calibration toolkit for a photon-pressure coupled
//! transmon/resonator circuit: analytic circuit-parameter estimation from
//! device geometry, Lindblad time-domain dynamics of the sideband-driven
//! Jaynes-Cummings interaction, steady-state Kerr/AC-Stark photon-number
//! calibration, and frequency-domain response fitting up to the
//! g = g₀·√n̄ extraction of the single-photon coupling rate.
//!
//! All numerics are generic over the scalar type through [`scalar::Real`]
//! (`f32` or `f64`); the `*64` aliases at the crate root pin the double
//! precision used by the command-line tools. Internally every frequency
//! and rate is angular (rad/s); conversion from Hz belongs to the I/O
//! boundary.

// Validation guards are written `!(x > 0)` rather than `x <= 0` so that a
// NaN input fails validation instead of slipping through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod circuit;
pub mod constants;
pub mod dynamics;
pub mod linalg;
pub mod optimize;
pub mod pipeline;
pub mod quantum;
pub mod scalar;
pub mod spectroscopy;

pub use scalar::Real;

// The complex type appears throughout the public API.
pub use num_complex;

/// `n` evenly spaced values from `start` to `end` inclusive.
pub fn linspace<T: Real>(start: T, end: T, n: usize) -> Vec<T> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (end - start) / T::from_usize(n - 1).unwrap();
            (0..n)
                .map(|i| start + step * T::from_usize(i).unwrap())
                .collect()
        }
    }
}

/// Double-precision aliases for the main public types.
pub type Operator64 = quantum::Operator<f64>;
pub type SystemParams64 = quantum::SystemParams<f64>;
pub type DensityMatrix64 = dynamics::DensityMatrix<f64>;
pub type PulseSchedule64 = dynamics::PulseSchedule<f64>;
pub type ChevronResult64 = dynamics::ChevronResult<f64>;
pub type FitResult64 = spectroscopy::FitResult<f64>;
pub type NotchParams64 = spectroscopy::NotchParams<f64>;
pub type G0PipelineConfig64 = pipeline::G0PipelineConfig<f64>;
