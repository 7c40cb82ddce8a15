//! Shared oracles for the integration tests. Everything here is kept
//! independent of the library's propagation path: the matrix exponential
//! is scaling-and-squaring Taylor on an explicitly assembled Liouvillian.

use num_complex::Complex64 as C64;
use ppcqed_core::linalg::CMat;

/// Row-major vectorization of a density matrix.
pub fn vec_rho(rho: &CMat<f64>) -> Vec<C64> {
    rho.data().to_vec()
}

pub fn unvec_rho(v: &[C64], dim: usize) -> CMat<f64> {
    CMat::from_fn(dim, |r, c| v[r * dim + c])
}

/// Liouvillian superoperator for row-major vectorization:
/// L = −i(H⊗I − I⊗Hᵀ) + Σ r·[L⊗L̄ − ½((L†L)⊗I + I⊗(L†L)ᵀ)].
pub fn liouvillian(h: &CMat<f64>, collapse: &[(CMat<f64>, f64)]) -> CMat<f64> {
    let n = h.dim();
    let eye = CMat::<f64>::identity(n);
    let transpose = |m: &CMat<f64>| CMat::from_fn(n, |r, c| m[(c, r)]);
    let conjugate = |m: &CMat<f64>| CMat::from_fn(n, |r, c| m[(r, c)].conj());

    let minus_i = C64::new(0.0, -1.0);
    let mut sup = (&h.kron(&eye) - &eye.kron(&transpose(h))).scale(minus_i);
    for (l, rate) in collapse {
        let ldl = l.adjoint().matmul(l);
        let jump = l.kron(&conjugate(l));
        let anti = &ldl.kron(&eye) + &eye.kron(&transpose(&ldl));
        sup.axpy_re(*rate, &jump);
        sup.axpy_re(-0.5 * rate, &anti);
    }
    sup
}

/// exp(A) by scaling-and-squaring with a 24-term Taylor series.
pub fn expm(a: &CMat<f64>) -> CMat<f64> {
    let n = a.dim();
    // Crude upper bound on the norm to pick the scaling power.
    let norm = a.max_abs() * n as f64;
    let s = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let b = a.scale_re(0.5f64.powi(s));

    let mut result = CMat::<f64>::identity(n);
    let mut term = CMat::<f64>::identity(n);
    for k in 1..=24 {
        term = term.matmul(&b).scale_re(1.0 / k as f64);
        result.axpy_re(1.0, &term);
    }
    for _ in 0..s {
        result = result.matmul(&result);
    }
    result
}

/// Apply a dense superoperator to a vectorized state.
pub fn apply(sup: &CMat<f64>, v: &[C64]) -> Vec<C64> {
    let n = sup.dim();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for (r, o) in out.iter_mut().enumerate() {
        let mut acc = C64::new(0.0, 0.0);
        for c in 0..n {
            acc += sup[(r, c)] * v[c];
        }
        *o = acc;
    }
    out
}

/// First local minimum of a sampled trace, refined with a three-point
/// parabola. Returns the refined abscissa.
pub fn first_minimum(xs: &[f64], ys: &[f64]) -> Option<f64> {
    for i in 1..ys.len() - 1 {
        if ys[i] <= ys[i - 1] && ys[i] < ys[i + 1] {
            let denom = ys[i - 1] - 2.0 * ys[i] + ys[i + 1];
            let h = 0.5 * (xs[i + 1] - xs[i - 1]);
            let mut x = xs[i];
            if denom > 0.0 {
                let shift = 0.5 * (ys[i - 1] - ys[i + 1]) / denom;
                if shift.abs() <= 1.0 {
                    x += shift * h;
                }
            }
            return Some(x);
        }
    }
    None
}
