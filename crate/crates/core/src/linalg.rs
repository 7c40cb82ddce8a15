//! Dense complex linear algebra on small square matrices.
//!
//! Everything in this crate lives on truncated Hilbert spaces of at most a
//! few dozen levels, so storage is a row-major `Vec<Complex<T>>`, products
//! are the naive O(n³) loops, and the eigensolvers are classical dense
//! algorithms: cyclic Jacobi sweeps for Hermitian matrices and shifted
//! Hessenberg QR for companion matrices.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex;

use crate::scalar::Real;

/// Square dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct CMat<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> CMat<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Complex::new(T::zero(), T::zero()); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = Complex::new(T::one(), T::zero());
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex<T>) -> Self {
        let mut m = Self::zeros(dim);
        for r in 0..dim {
            for c in 0..dim {
                m[(r, c)] = f(r, c);
            }
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex<T>]) -> Self {
        let mut m = Self::zeros(diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[(i, i)] = *d;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn row(&self, r: usize) -> &[Complex<T>] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> Complex<T> {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    /// Largest entry magnitude (max norm).
    pub fn max_abs(&self) -> T {
        self.data
            .iter()
            .map(|z| z.norm())
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }

    /// ‖A − A†‖_max, zero for an exactly Hermitian matrix.
    pub fn hermiticity_defect(&self) -> T {
        let mut worst = T::zero();
        for r in 0..self.dim {
            for c in r..self.dim {
                let d = (self[(r, c)] - self[(c, r)].conj()).norm();
                if d > worst {
                    worst = d;
                }
            }
        }
        worst
    }

    pub fn scale(&self, s: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn scale_re(&self, s: T) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|z| z.scale(s)).collect(),
        }
    }

    /// `self += coef * rhs`, the workhorse of the RK4 update.
    pub fn axpy(&mut self, coef: Complex<T>, rhs: &Self) {
        assert_eq!(self.dim, rhs.dim, "axpy dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += coef * b;
        }
    }

    pub fn axpy_re(&mut self, coef: T, rhs: &Self) {
        assert_eq!(self.dim, rhs.dim, "axpy dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(rhs.data.iter()) {
            *a += b.scale(coef);
        }
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for k in 0..n {
                let aik = self[(i, k)];
                if aik.re == T::zero() && aik.im == T::zero() {
                    continue;
                }
                let brow = &rhs.data[k * n..(k + 1) * n];
                let orow = &mut out.data[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow.iter()) {
                    *o += aik * b;
                }
            }
        }
        out
    }

    /// Kronecker product; `self` acts on the leading tensor factor.
    pub fn kron(&self, rhs: &Self) -> Self {
        let (na, nb) = (self.dim, rhs.dim);
        let mut out = Self::zeros(na * nb);
        for i in 0..na {
            for j in 0..na {
                let aij = self[(i, j)];
                if aij.re == T::zero() && aij.im == T::zero() {
                    continue;
                }
                for k in 0..nb {
                    for l in 0..nb {
                        out[(i * nb + k, j * nb + l)] = aij * rhs[(k, l)];
                    }
                }
            }
        }
        out
    }
}

impl<T> Index<(usize, usize)> for CMat<T> {
    type Output = Complex<T>;
    fn index(&self, (r, c): (usize, usize)) -> &Complex<T> {
        &self.data[r * self.dim + c]
    }
}

impl<T> IndexMut<(usize, usize)> for CMat<T> {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut Complex<T> {
        &mut self.data[r * self.dim + c]
    }
}

impl<T: Real> Add for &CMat<T> {
    type Output = CMat<T>;
    fn add(self, rhs: Self) -> CMat<T> {
        assert_eq!(self.dim, rhs.dim, "add dimension mismatch");
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<T: Real> Sub for &CMat<T> {
    type Output = CMat<T>;
    fn sub(self, rhs: Self) -> CMat<T> {
        assert_eq!(self.dim, rhs.dim, "sub dimension mismatch");
        CMat {
            dim: self.dim,
            data: self
                .data
                .iter()
                .zip(rhs.data.iter())
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl<T: Real> Mul for &CMat<T> {
    type Output = CMat<T>;
    fn mul(self, rhs: Self) -> CMat<T> {
        self.matmul(rhs)
    }
}

impl<T: Real> Neg for &CMat<T> {
    type Output = CMat<T>;
    fn neg(self) -> CMat<T> {
        CMat {
            dim: self.dim,
            data: self.data.iter().map(|z| -z).collect(),
        }
    }
}

/// AB − BA.
pub fn commutator<T: Real>(a: &CMat<T>, b: &CMat<T>) -> CMat<T> {
    &a.matmul(b) - &b.matmul(a)
}

/// Eigenvalues of a Hermitian matrix by cyclic complex Jacobi sweeps,
/// returned in ascending order.
///
/// The input is taken to be Hermitian; only the upper triangle's phases are
/// trusted. Quadratic convergence makes ~10 sweeps plenty at these sizes.
pub fn hermitian_eigenvalues<T: Real>(m: &CMat<T>) -> Vec<T> {
    let n = m.dim();
    let mut a = m.clone();
    let scale = a.max_abs();
    if scale == T::zero() {
        return vec![T::zero(); n];
    }
    let tol = T::epsilon() * scale;

    for _sweep in 0..60 {
        let mut off = T::zero();
        for p in 0..n {
            for q in (p + 1)..n {
                let g = a[(p, q)].norm();
                if g > off {
                    off = g;
                }
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let gpq = a[(p, q)];
                let gn = gpq.norm();
                if gn <= tol * T::lit(1e-2) {
                    continue;
                }
                let phase = gpq.unscale(gn); // e^{iφ}
                let app = a[(p, p)].re;
                let aqq = a[(q, q)].re;
                let tau = (aqq - app) / (gn + gn);
                let t = if tau == T::zero() {
                    T::one()
                } else {
                    let s = if tau > T::zero() { T::one() } else { -T::one() };
                    s / (tau.abs() + (T::one() + tau * tau).sqrt())
                };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;

                // Unitary V with V[p][p]=c, V[p][q]=s,
                // V[q][p]=-s·e^{-iφ}, V[q][q]=c·e^{-iφ}; apply A ← V†AV.
                let sp = phase.scale(s); // s·e^{iφ}
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akq = a[(k, q)];
                    a[(k, p)] = akp.scale(c) - akq * sp.conj();
                    a[(k, q)] = akp.scale(s) + akq * phase.conj().scale(c);
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let aqk = a[(q, k)];
                    a[(p, k)] = apk.scale(c) - aqk * sp;
                    a[(q, k)] = apk.scale(s) + aqk * phase.scale(c);
                }
            }
        }
    }

    let mut eig: Vec<T> = (0..n).map(|i| a[(i, i)].re).collect();
    eig.sort_by(|x, y| x.partial_cmp(y).expect("NaN eigenvalue"));
    eig
}

/// Roots of the monic polynomial xⁿ + c\[n−1\]·xⁿ⁻¹ + … + c\[0\], computed as
/// the eigenvalues of the Frobenius companion matrix via shifted
/// Hessenberg QR with Givens rotations.
pub fn monic_roots<T: Real>(coeffs: &[Complex<T>]) -> Vec<Complex<T>> {
    let n = coeffs.len();
    assert!(n >= 1, "polynomial must have degree >= 1");
    if n == 1 {
        return vec![-coeffs[0]];
    }
    if n == 2 {
        return quadratic_roots(coeffs[1], coeffs[0]);
    }

    // Companion matrix: subdiagonal ones, last column -c.
    let mut h = CMat::<T>::zeros(n);
    for i in 1..n {
        h[(i, i - 1)] = Complex::new(T::one(), T::zero());
    }
    for i in 0..n {
        h[(i, n - 1)] = -coeffs[i];
    }

    let scale = h.max_abs().max(T::one());
    let eps = T::epsilon();
    let mut roots = Vec::with_capacity(n);
    let mut m = n;
    let mut stuck = 0usize;
    let mut total = 0usize;

    while m > 0 {
        if m == 1 {
            roots.push(h[(0, 0)]);
            break;
        }
        let sub = h[(m - 1, m - 2)].norm();
        let local = h[(m - 2, m - 2)].norm() + h[(m - 1, m - 1)].norm();
        if sub <= eps * (local + scale) {
            roots.push(h[(m - 1, m - 1)]);
            m -= 1;
            stuck = 0;
            continue;
        }
        if m == 2 {
            let tr = h[(0, 0)] + h[(1, 1)];
            let det = h[(0, 0)] * h[(1, 1)] - h[(0, 1)] * h[(1, 0)];
            roots.extend(quadratic_roots(-tr, det));
            m = 0;
            continue;
        }

        let mut mu = wilkinson_shift(
            h[(m - 2, m - 2)],
            h[(m - 2, m - 1)],
            h[(m - 1, m - 2)],
            h[(m - 1, m - 1)],
        );
        stuck += 1;
        total += 1;
        if stuck.is_multiple_of(24) {
            // Exceptional complex shift against the rare Wilkinson cycle;
            // scaled by the remaining subdiagonal weight so it is harmless
            // once the iteration is already contracting.
            let mut ts = h[(m - 1, m - 2)].norm();
            if m >= 3 {
                ts += h[(m - 2, m - 3)].norm();
            }
            mu = h[(m - 1, m - 1)] + Complex::new(ts * T::lit(0.7), ts * T::lit(0.4));
        }
        if total > 200 * n {
            // Bail out with the current diagonal; unreachable for the small
            // well-scaled polynomials this crate produces.
            for i in 0..m {
                roots.push(h[(i, i)]);
            }
            break;
        }
        qr_sweep(&mut h, m, mu);
    }

    for r in roots.iter_mut() {
        *r = newton_polish(coeffs, *r);
    }
    roots
}

/// A few Newton steps on the original polynomial to restore the relative
/// accuracy the companion eigenvalues may lose on far-from-unit roots.
fn newton_polish<T: Real>(coeffs: &[Complex<T>], mut z: Complex<T>) -> Complex<T> {
    let eval = |z: Complex<T>| -> (Complex<T>, Complex<T>) {
        // Horner for p and p' on the monic polynomial.
        let one = Complex::new(T::one(), T::zero());
        let mut p = one;
        let mut dp = Complex::new(T::zero(), T::zero());
        for c in coeffs.iter().rev() {
            dp = dp * z + p;
            p = p * z + *c;
        }
        (p, dp)
    };
    let (mut p_best, _) = eval(z);
    for _ in 0..8 {
        let (p, dp) = eval(z);
        if dp.norm() == T::zero() {
            break;
        }
        let step = p / dp;
        if !step.re.is_finite() || !step.im.is_finite() {
            break;
        }
        let cand = z - step;
        let (p_new, _) = eval(cand);
        if p_new.norm() > p_best.norm() {
            break;
        }
        p_best = p_new;
        z = cand;
        if p_new.norm() == T::zero() {
            break;
        }
    }
    z
}

/// Roots of x² + b·x + c with a cancellation-safe quadratic formula.
fn quadratic_roots<T: Real>(b: Complex<T>, c: Complex<T>) -> Vec<Complex<T>> {
    let half = T::lit(0.5);
    let disc = (b * b - c.scale(T::lit(4.0))).sqrt();
    // Pick the sign that avoids cancellation in -b ∓ disc.
    let q = if (b + disc).norm() >= (b - disc).norm() {
        (b + disc).scale(-half)
    } else {
        (disc - b).scale(half)
    };
    if q.norm() == T::zero() {
        return vec![q, -b - q];
    }
    vec![q, c / q]
}

fn wilkinson_shift<T: Real>(
    a: Complex<T>,
    b: Complex<T>,
    c: Complex<T>,
    d: Complex<T>,
) -> Complex<T> {
    let half = T::lit(0.5);
    let mid = (a - d).scale(half);
    let disc = (mid * mid + b * c).sqrt();
    let l1 = (a + d).scale(half) + disc;
    let l2 = (a + d).scale(half) - disc;
    if (l1 - d).norm() <= (l2 - d).norm() {
        l1
    } else {
        l2
    }
}

/// One explicit single-shift QR step on the leading m×m block of a
/// Hessenberg matrix: H ← RQ + μI where QR = H − μI.
fn qr_sweep<T: Real>(h: &mut CMat<T>, m: usize, mu: Complex<T>) {
    for i in 0..m {
        h[(i, i)] -= mu;
    }
    let mut rots: Vec<(T, Complex<T>)> = Vec::with_capacity(m - 1);
    for i in 0..(m - 1) {
        let (c, s) = givens(h[(i, i)], h[(i + 1, i)]);
        for j in 0..m {
            let hi = h[(i, j)];
            let hk = h[(i + 1, j)];
            h[(i, j)] = hi.scale(c) + s * hk;
            h[(i + 1, j)] = -(s.conj() * hi) + hk.scale(c);
        }
        rots.push((c, s));
    }
    for (i, (c, s)) in rots.into_iter().enumerate() {
        for r in 0..m {
            let hi = h[(r, i)];
            let hk = h[(r, i + 1)];
            h[(r, i)] = hi.scale(c) + hk * s.conj();
            h[(r, i + 1)] = -(hi * s) + hk.scale(c);
        }
    }
    for i in 0..m {
        h[(i, i)] += mu;
    }
}

/// Rotation (c real, s complex) with c·x + s·y = r and −s̄·x + c·y = 0.
fn givens<T: Real>(x: Complex<T>, y: Complex<T>) -> (T, Complex<T>) {
    let xn = x.norm();
    let yn = y.norm();
    if yn == T::zero() {
        return (T::one(), Complex::new(T::zero(), T::zero()));
    }
    let r = xn.hypot(yn);
    if xn == T::zero() {
        return (T::zero(), y.conj().unscale(yn));
    }
    (xn / r, (x * y.conj()).unscale(xn * r))
}
