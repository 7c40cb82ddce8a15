//! Derivative-free simplex minimization (Nelder-Mead) with deterministic
//! shrinking restarts, plus curvature-based uncertainty estimates for
//! least-squares objectives. Shared by the time-domain and frequency-domain
//! fitters.

use thiserror::Error;

use crate::scalar::Real;

/// Errors shared by every fitter built on the simplex optimizer.
#[derive(Debug, Error, PartialEq)]
pub enum FitError {
    #[error("fit did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("degenerate data: {0}")]
    DegenerateData(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
}

#[derive(Clone, Copy, Debug)]
pub struct NelderMeadOptions<T> {
    pub max_iterations: usize,
    /// Converged when the simplex diameter, relative to the per-parameter
    /// scales, falls below this.
    pub relative_tolerance: T,
    /// ... or when the residual spread across the simplex falls below this.
    pub residual_tolerance: T,
    /// Deterministic restarts around the best point with 10x smaller steps.
    pub restarts: usize,
}

impl<T: Real> Default for NelderMeadOptions<T> {
    fn default() -> Self {
        Self {
            max_iterations: 10_000,
            relative_tolerance: T::tol(1e-9),
            residual_tolerance: T::tol(1e-12),
            restarts: 2,
        }
    }
}

#[derive(Clone, Debug)]
pub struct NelderMeadResult<T> {
    pub x: Vec<T>,
    pub value: T,
    pub iterations: usize,
    pub converged: bool,
}

fn sanitize<T: Real>(v: T) -> T {
    if v.is_nan() {
        T::infinity()
    } else {
        v
    }
}

/// Minimizes `f` starting from `x0`; `scales[i]` is the characteristic step
/// for parameter i and sets both the initial simplex and the convergence
/// metric.
pub fn nelder_mead<T: Real, F: Fn(&[T]) -> T>(
    f: F,
    x0: &[T],
    scales: &[T],
    opts: &NelderMeadOptions<T>,
) -> NelderMeadResult<T> {
    assert_eq!(x0.len(), scales.len(), "one scale per parameter");
    let n = x0.len();
    assert!(n > 0);

    let mut best_x = x0.to_vec();
    let mut best_v = sanitize(f(x0));
    let mut iterations = 0usize;
    let mut converged = false;

    for restart in 0..=opts.restarts {
        let shrink = T::lit(0.1).powi(restart as i32);
        let steps: Vec<T> = scales.iter().map(|s| *s * shrink).collect();
        let run = single_run(
            &f,
            &best_x,
            &steps,
            scales,
            opts.max_iterations - iterations.min(opts.max_iterations),
            opts,
        );
        iterations += run.iterations;
        converged = run.converged;
        if run.value < best_v {
            best_x = run.x;
            best_v = run.value;
        }
        if !converged {
            break;
        }
    }

    NelderMeadResult {
        x: best_x,
        value: best_v,
        iterations,
        converged,
    }
}

fn single_run<T: Real, F: Fn(&[T]) -> T>(
    f: &F,
    x0: &[T],
    steps: &[T],
    scales: &[T],
    max_iterations: usize,
    opts: &NelderMeadOptions<T>,
) -> NelderMeadResult<T> {
    let n = x0.len();
    let (alpha, gamma, rho, sigma) = (T::one(), T::lit(2.0), T::lit(0.5), T::lit(0.5));

    let mut simplex: Vec<Vec<T>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<T> = simplex.iter().map(|v| sanitize(f(v))).collect();

    let mut iterations = 0usize;
    let mut converged = false;

    while iterations < max_iterations {
        iterations += 1;

        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let best = order[0];
        let worst = order[n];
        let second_worst = order[n - 1];

        // Convergence: simplex diameter relative to the parameter scales,
        // or no residual spread left to exploit.
        let mut diameter = T::zero();
        for v in &simplex {
            for i in 0..n {
                let d = (v[i] - simplex[best][i]).abs() / scales[i].abs().max(T::epsilon());
                if d > diameter {
                    diameter = d;
                }
            }
        }
        let spread = values[worst] - values[best];
        if diameter < opts.relative_tolerance
            || spread < opts.residual_tolerance * (T::one() + values[best].abs())
        {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        let mut centroid = vec![T::zero(); n];
        for (k, v) in simplex.iter().enumerate() {
            if k == worst {
                continue;
            }
            for i in 0..n {
                centroid[i] += v[i];
            }
        }
        let inv = T::one() / T::from_usize(n).unwrap();
        for c in centroid.iter_mut() {
            *c *= inv;
        }

        let blend = |a: T, b: T, w: T| a + w * (b - a);
        let reflected: Vec<T> = (0..n)
            .map(|i| blend(centroid[i], simplex[worst][i], -alpha))
            .collect();
        let fr = sanitize(f(&reflected));

        if fr < values[best] {
            let expanded: Vec<T> = (0..n)
                .map(|i| blend(centroid[i], simplex[worst][i], -gamma))
                .collect();
            let fe = sanitize(f(&expanded));
            if fe < fr {
                simplex[worst] = expanded;
                values[worst] = fe;
            } else {
                simplex[worst] = reflected;
                values[worst] = fr;
            }
        } else if fr < values[second_worst] {
            simplex[worst] = reflected;
            values[worst] = fr;
        } else {
            let contract_outside = fr < values[worst];
            let (base, fbase) = if contract_outside {
                (&reflected, fr)
            } else {
                (&simplex[worst], values[worst])
            };
            let contracted: Vec<T> = (0..n)
                .map(|i| centroid[i] + rho * (base[i] - centroid[i]))
                .collect();
            let fc = sanitize(f(&contracted));
            if fc < fbase {
                simplex[worst] = contracted;
                values[worst] = fc;
            } else {
                // Shrink toward the best vertex.
                let best_point = simplex[best].clone();
                for (k, v) in simplex.iter_mut().enumerate() {
                    if k == best {
                        continue;
                    }
                    for i in 0..n {
                        v[i] = best_point[i] + sigma * (v[i] - best_point[i]);
                    }
                }
                for (k, v) in simplex.iter().enumerate() {
                    if k != best {
                        values[k] = sanitize(f(v));
                    }
                }
            }
        }
    }

    let mut best = 0;
    for k in 1..values.len() {
        if values[k] < values[best] {
            best = k;
        }
    }
    NelderMeadResult {
        x: simplex.swap_remove(best),
        value: values[best],
        iterations,
        converged,
    }
}

/// One-sigma parameter uncertainties for a sum-of-squared-residuals
/// objective from the quadratic expansion around the optimum:
/// cov = 2·s²·H⁻¹ with H the finite-difference Hessian of `f` and
/// s² = f(x)/dof the residual variance estimate.
///
/// Returns zeros when the Hessian is not invertible (flat directions).
pub fn least_squares_uncertainties<T: Real, F: Fn(&[T]) -> T>(
    f: F,
    x: &[T],
    scales: &[T],
    dof: usize,
) -> Vec<T> {
    let n = x.len();
    let f0 = f(x);
    let s2 = if dof > 0 {
        f0 / T::from_usize(dof).unwrap()
    } else {
        f0
    };

    // Central-difference Hessian with per-parameter steps.
    let h: Vec<T> = scales
        .iter()
        .map(|s| s.abs().max(T::epsilon()) * T::lit(1e-4))
        .collect();
    let mut hess = vec![vec![T::zero(); n]; n];
    let eval = |xs: &mut Vec<T>, i: usize, di: T, j: usize, dj: T, f: &F| {
        xs[i] += di;
        xs[j] += dj;
        let v = f(xs);
        xs[i] -= di;
        xs[j] -= dj;
        v
    };
    let mut xs = x.to_vec();
    for i in 0..n {
        let fp = eval(&mut xs, i, h[i], i, T::zero(), &f);
        let fm = eval(&mut xs, i, -h[i], i, T::zero(), &f);
        hess[i][i] = (fp - T::lit(2.0) * f0 + fm) / (h[i] * h[i]);
        for j in (i + 1)..n {
            let fpp = eval(&mut xs, i, h[i], j, h[j], &f);
            let fpm = eval(&mut xs, i, h[i], j, -h[j], &f);
            let fmp = eval(&mut xs, i, -h[i], j, h[j], &f);
            let fmm = eval(&mut xs, i, -h[i], j, -h[j], &f);
            let v = (fpp - fpm - fmp + fmm) / (T::lit(4.0) * h[i] * h[j]);
            hess[i][j] = v;
            hess[j][i] = v;
        }
    }

    match invert_symmetric(&hess) {
        Some(inv) => (0..n)
            .map(|i| {
                let var = T::lit(2.0) * s2 * inv[i][i];
                if var > T::zero() {
                    var.sqrt()
                } else {
                    T::zero()
                }
            })
            .collect(),
        None => vec![T::zero(); n],
    }
}

/// Gauss-Jordan inverse of a small real matrix; None if singular.
fn invert_symmetric<T: Real>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut inv = vec![vec![T::zero(); n]; n];
    for (i, row) in inv.iter_mut().enumerate() {
        row[i] = T::one();
    }
    for col in 0..n {
        let mut pivot = col;
        for r in (col + 1)..n {
            if a[r][col].abs() > a[pivot][col].abs() {
                pivot = r;
            }
        }
        if a[pivot][col].abs() < T::epsilon() {
            return None;
        }
        a.swap(col, pivot);
        inv.swap(col, pivot);
        let d = a[col][col];
        for j in 0..n {
            a[col][j] /= d;
            inv[col][j] /= d;
        }
        for r in 0..n {
            if r == col {
                continue;
            }
            let factor = a[r][col];
            if factor == T::zero() {
                continue;
            }
            for j in 0..n {
                let acj = a[col][j];
                let icj = inv[col][j];
                a[r][j] -= factor * acj;
                inv[r][j] -= factor * icj;
            }
        }
    }
    Some(inv)
}
