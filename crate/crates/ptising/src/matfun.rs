//! Small dense complex linear algebra: a general (non-Hermitian)
//! eigensolver built from Hessenberg reduction and Wilkinson-shifted QR
//! iteration, spectral matrix functions, an overflow-safe matrix
//! exponential, and the trace-of-square-root-of-product kernel behind the
//! mixed-state fidelity.
//!
//! Everything here targets matrices of dimension at most a few hundred, so
//! O(n^3) with plain loops is the intended operating point.

use crate::error::MatError;
use crate::scalar::{as_f64, creal, re, Real, C};
use num_complex::Complex;

/// Dense square complex matrix, row major.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexMatrix<T: Real> {
    n: usize,
    data: Vec<C<T>>,
}

impl<T: Real> ComplexMatrix<T> {
    pub fn zeros(n: usize) -> Self {
        Self { n, data: vec![Complex::new(T::zero(), T::zero()); n * n] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = creal(T::one());
        }
        m
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> C<T>) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Construct from rows, rejecting non-finite entries.
    pub fn from_rows(rows: &[Vec<C<T>>]) -> Result<Self, MatError> {
        let n = rows.len();
        let mut m = Self::zeros(n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(MatError::DimensionMismatch(n, row.len()));
            }
            for (j, &z) in row.iter().enumerate() {
                m[(i, j)] = z;
            }
        }
        m.validate_finite()?;
        Ok(m)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn validate_finite(&self) -> Result<(), MatError> {
        if self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
            Ok(())
        } else {
            Err(MatError::NotFinite)
        }
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[C<T>] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    #[inline]
    fn row_mut(&mut self, i: usize) -> &mut [C<T>] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn column(&self, j: usize) -> Vec<C<T>> {
        (0..self.n).map(|i| self[(i, j)]).collect()
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let n = self.n;
        let mut out = Self::zeros(n);
        for i in 0..n {
            for l in 0..n {
                let a = self[(i, l)];
                if a.re == T::zero() && a.im == T::zero() {
                    continue;
                }
                let src = other.row(l);
                let dst = out.row_mut(i);
                for j in 0..n {
                    dst[j] = dst[j] + a * src[j];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[C<T>]) -> Vec<C<T>> {
        assert_eq!(self.n, v.len());
        self.data
            .chunks(self.n)
            .map(|row| {
                row.iter()
                    .zip(v)
                    .fold(Complex::new(T::zero(), T::zero()), |acc, (&a, &b)| acc + a * b)
            })
            .collect()
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = *a + *b;
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!(self.n, other.n);
        let mut out = self.clone();
        for (a, b) in out.data.iter_mut().zip(&other.data) {
            *a = *a - *b;
        }
        out
    }

    pub fn scale(&self, z: C<T>) -> Self {
        let mut out = self.clone();
        for a in out.data.iter_mut() {
            *a = *a * z;
        }
        out
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.n, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> C<T> {
        (0..self.n).fold(Complex::new(T::zero(), T::zero()), |acc, i| acc + self[(i, i)])
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    /// Maximum absolute column sum.
    pub fn one_norm(&self) -> T {
        (0..self.n)
            .map(|j| (0..self.n).fold(T::zero(), |acc, i| acc + self[(i, j)].norm()))
            .fold(T::zero(), T::max)
    }

    /// Largest entry norm of `self - other`.
    pub fn max_diff(&self, other: &Self) -> T {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (*a - *b).norm())
            .fold(T::zero(), T::max)
    }

    /// Kronecker product.
    pub fn kron(&self, other: &Self) -> Self {
        let (n, m) = (self.n, other.n);
        let mut out = Self::zeros(n * m);
        for i in 0..n {
            for j in 0..n {
                let a = self[(i, j)];
                for p in 0..m {
                    for q in 0..m {
                        out[(i * m + p, j * m + q)] = a * other[(p, q)];
                    }
                }
            }
        }
        out
    }

    /// Principal submatrix on the given index set.
    pub fn submatrix(&self, idx: &[usize]) -> Self {
        Self::from_fn(idx.len(), |i, j| self[(idx[i], idx[j])])
    }
}

impl<T: Real> std::ops::Index<(usize, usize)> for ComplexMatrix<T> {
    type Output = C<T>;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.data[i * self.n + j]
    }
}

impl<T: Real> std::ops::IndexMut<(usize, usize)> for ComplexMatrix<T> {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.data[i * self.n + j]
    }
}

// ---------------------------------------------------------------------------
// LU decomposition with partial pivoting
// ---------------------------------------------------------------------------

pub struct Lu<T: Real> {
    lu: ComplexMatrix<T>,
    pivots: Vec<usize>,
}

impl<T: Real> Lu<T> {
    pub fn decompose(m: &ComplexMatrix<T>) -> Result<Self, MatError> {
        let n = m.dim();
        let mut lu = m.clone();
        let mut pivots = vec![0usize; n];
        for col in 0..n {
            let mut best = col;
            let mut best_mag = lu[(col, col)].norm_sqr();
            for row in col + 1..n {
                let mag = lu[(row, col)].norm_sqr();
                if mag > best_mag {
                    best = row;
                    best_mag = mag;
                }
            }
            if best_mag == T::zero() {
                return Err(MatError::Singular(col));
            }
            pivots[col] = best;
            if best != col {
                for j in 0..n {
                    let tmp = lu[(col, j)];
                    lu[(col, j)] = lu[(best, j)];
                    lu[(best, j)] = tmp;
                }
            }
            let pivot = lu[(col, col)];
            for row in col + 1..n {
                let factor = lu[(row, col)] / pivot;
                lu[(row, col)] = factor;
                if factor.re != T::zero() || factor.im != T::zero() {
                    for j in col + 1..n {
                        let sub = factor * lu[(col, j)];
                        lu[(row, j)] = lu[(row, j)] - sub;
                    }
                }
            }
        }
        Ok(Self { lu, pivots })
    }

    pub fn solve_vec(&self, rhs: &[C<T>]) -> Vec<C<T>> {
        let n = self.lu.dim();
        let mut x = rhs.to_vec();
        for i in 0..n {
            x.swap(i, self.pivots[i]);
        }
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc = acc - self.lu[(i, j)] * x[j];
            }
            x[i] = acc / self.lu[(i, i)];
        }
        x
    }

    pub fn inverse(&self) -> ComplexMatrix<T> {
        let n = self.lu.dim();
        let mut out = ComplexMatrix::zeros(n);
        let mut e = vec![Complex::new(T::zero(), T::zero()); n];
        for j in 0..n {
            e[j] = creal(T::one());
            let col = self.solve_vec(&e);
            e[j] = Complex::new(T::zero(), T::zero());
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }
}

/// `a^{-1}` via LU with partial pivoting.
pub fn inverse<T: Real>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, MatError> {
    Ok(Lu::decompose(m)?.inverse())
}

/// Solve `a x = b` for a single right-hand side.
pub fn solve<T: Real>(m: &ComplexMatrix<T>, rhs: &[C<T>]) -> Result<Vec<C<T>>, MatError> {
    Ok(Lu::decompose(m)?.solve_vec(rhs))
}

// ---------------------------------------------------------------------------
// Balancing (diagonal similarity by powers of two)
// ---------------------------------------------------------------------------

fn balance<T: Real>(a: &mut ComplexMatrix<T>) -> Vec<T> {
    let n = a.dim();
    let mut scale = vec![T::one(); n];
    let radix = re::<T>(2.0);
    let mut converged = false;
    let mut rounds = 0;
    while !converged && rounds < 32 {
        converged = true;
        rounds += 1;
        for i in 0..n {
            let mut c = T::zero();
            let mut r = T::zero();
            for j in 0..n {
                if j != i {
                    c = c + a[(j, i)].norm();
                    r = r + a[(i, j)].norm();
                }
            }
            if c == T::zero() || r == T::zero() {
                continue;
            }
            let mut f = T::one();
            let s = c + r;
            let mut c_scaled = c;
            let mut r_scaled = r;
            while c_scaled < r_scaled / radix {
                f = f * radix;
                c_scaled = c_scaled * radix;
                r_scaled = r_scaled / radix;
            }
            while c_scaled >= r_scaled * radix {
                f = f / radix;
                c_scaled = c_scaled / radix;
                r_scaled = r_scaled * radix;
            }
            if c_scaled + r_scaled < re::<T>(0.95) * s && f != T::one() {
                converged = false;
                scale[i] = scale[i] * f;
                let inv_f = T::one() / f;
                for j in 0..n {
                    a[(i, j)] = a[(i, j)].scale(inv_f);
                }
                for j in 0..n {
                    a[(j, i)] = a[(j, i)].scale(f);
                }
            }
        }
    }
    scale
}

// ---------------------------------------------------------------------------
// Hessenberg reduction (complex Householder)
// ---------------------------------------------------------------------------

fn hessenberg<T: Real>(a: &mut ComplexMatrix<T>, q: Option<&mut ComplexMatrix<T>>) {
    let n = a.dim();
    if n < 3 {
        if let Some(q) = q {
            *q = ComplexMatrix::identity(n);
        }
        return;
    }
    let mut reflectors: Vec<(usize, Vec<C<T>>)> = Vec::new();
    for col in 0..n - 2 {
        // Householder vector annihilating a[col+2.., col]
        let mut norm_sq = T::zero();
        for i in col + 1..n {
            norm_sq = norm_sq + a[(i, col)].norm_sqr();
        }
        let x0 = a[(col + 1, col)];
        let norm = norm_sq.sqrt();
        if norm == T::zero() {
            continue;
        }
        let phase = if x0.norm() == T::zero() { creal(T::one()) } else { x0 / creal(x0.norm()) };
        let alpha = -phase.scale(norm);
        let mut v: Vec<C<T>> = (col + 1..n).map(|i| a[(i, col)]).collect();
        v[0] = v[0] - alpha;
        let vnorm_sq = v.iter().fold(T::zero(), |acc, z| acc + z.norm_sqr());
        if vnorm_sq == T::zero() {
            continue;
        }
        let inv = T::one() / vnorm_sq.sqrt();
        for z in v.iter_mut() {
            *z = z.scale(inv);
        }
        // left: A <- (I - 2 v v^H) A on rows col+1..
        for j in col..n {
            let mut dot = Complex::new(T::zero(), T::zero());
            for (t, vi) in v.iter().enumerate() {
                dot = dot + vi.conj() * a[(col + 1 + t, j)];
            }
            let two_dot = dot.scale(re::<T>(2.0));
            for (t, vi) in v.iter().enumerate() {
                a[(col + 1 + t, j)] = a[(col + 1 + t, j)] - *vi * two_dot;
            }
        }
        // right: A <- A (I - 2 v v^H) on cols col+1..
        for i in 0..n {
            let mut dot = Complex::new(T::zero(), T::zero());
            for (t, vi) in v.iter().enumerate() {
                dot = dot + a[(i, col + 1 + t)] * *vi;
            }
            let two_dot = dot.scale(re::<T>(2.0));
            for (t, vi) in v.iter().enumerate() {
                a[(i, col + 1 + t)] = a[(i, col + 1 + t)] - two_dot * vi.conj();
            }
        }
        reflectors.push((col, v));
        // enforce exact zeros below the subdiagonal
        for i in col + 2..n {
            a[(i, col)] = Complex::new(T::zero(), T::zero());
        }
    }
    if let Some(q) = q {
        *q = ComplexMatrix::identity(n);
        // Q = P_0 P_1 ... P_m, accumulated by right-multiplication in order
        for (col, v) in reflectors.iter() {
            for i in 0..n {
                let mut dot = Complex::new(T::zero(), T::zero());
                for (t, vi) in v.iter().enumerate() {
                    dot = dot + q[(i, col + 1 + t)] * *vi;
                }
                let two_dot = dot.scale(re::<T>(2.0));
                for (t, vi) in v.iter().enumerate() {
                    q[(i, col + 1 + t)] = q[(i, col + 1 + t)] - two_dot * vi.conj();
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Shifted QR iteration on a Hessenberg matrix
// ---------------------------------------------------------------------------

/// Maximum QR sweeps charged per eigenvalue before giving up.
const MAX_SWEEPS_PER_EIGENVALUE: usize = 40;

#[inline]
fn givens<T: Real>(f: C<T>, g: C<T>) -> (T, C<T>) {
    let gn = g.norm();
    if gn == T::zero() {
        return (T::one(), Complex::new(T::zero(), T::zero()));
    }
    let fn_ = f.norm();
    if fn_ == T::zero() {
        return (T::zero(), g.conj() / creal(gn));
    }
    let d = fn_.hypot(gn);
    let c = fn_ / d;
    let s = (f / creal(fn_)) * g.conj() / creal(d);
    (c, s)
}

struct QrWork<T: Real> {
    h: ComplexMatrix<T>,
    q: Option<ComplexMatrix<T>>,
}

impl<T: Real> QrWork<T> {
    /// Apply the rotation on rows (i, j) over columns lo..hi.
    fn rotate_rows(&mut self, i: usize, j: usize, c: T, s: C<T>, lo: usize, hi: usize) {
        for col in lo..hi {
            let a = self.h[(i, col)];
            let b = self.h[(j, col)];
            self.h[(i, col)] = a.scale(c) + s * b;
            self.h[(j, col)] = b.scale(c) - s.conj() * a;
        }
    }

    /// Apply the rotation on columns (i, j) over rows lo..hi, and on Q.
    fn rotate_cols(&mut self, i: usize, j: usize, c: T, s: C<T>, lo: usize, hi: usize) {
        for row in lo..hi {
            let a = self.h[(row, i)];
            let b = self.h[(row, j)];
            self.h[(row, i)] = a.scale(c) + b * s.conj();
            self.h[(row, j)] = b.scale(c) - a * s;
        }
        if let Some(q) = self.q.as_mut() {
            let n = q.dim();
            for row in 0..n {
                let a = q[(row, i)];
                let b = q[(row, j)];
                q[(row, i)] = a.scale(c) + b * s.conj();
                q[(row, j)] = b.scale(c) - a * s;
            }
        }
    }
}

/// Wilkinson shift: the eigenvalue of the trailing 2x2 closest to its
/// bottom-right entry.
fn wilkinson_shift<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = re::<T>(0.5);
    let t = (a - d).scale(half);
    let disc = (t * t + b * c).sqrt();
    let r1 = d + t + disc;
    let r2 = d + t - disc;
    if (r1 - d).norm() < (r2 - d).norm() {
        r1
    } else {
        r2
    }
}

/// Reduce a Hessenberg matrix to upper-triangular (complex Schur) form.
fn schur_from_hessenberg<T: Real>(work: &mut QrWork<T>) -> Result<(), MatError> {
    let n = work.h.dim();
    if n == 0 {
        return Ok(());
    }
    let eps = T::epsilon();
    let tiny = T::min_positive_value() * re::<T>(n as f64);
    let hnorm = work.h.one_norm();
    let mut hi = n - 1;
    let mut since_deflation = 0usize;
    let mut total_sweeps = 0usize;
    let budget = MAX_SWEEPS_PER_EIGENVALUE * n;
    loop {
        // deflate converged subdiagonals: local criterion keeps graded
        // matrices accurate in their small blocks
        let mut lo = hi;
        while lo > 0 {
            let sub = work.h[(lo, lo - 1)].norm();
            let local = work.h[(lo - 1, lo - 1)].norm() + work.h[(lo, lo)].norm();
            let thresh = if local > T::zero() { eps * local } else { eps * hnorm };
            if sub <= thresh.max(tiny) {
                work.h[(lo, lo - 1)] = Complex::new(T::zero(), T::zero());
                since_deflation = 0;
                break;
            }
            lo -= 1;
        }
        if lo == hi {
            // eigenvalue converged at hi
            if hi == 0 {
                return Ok(());
            }
            hi -= 1;
            since_deflation = 0;
            continue;
        }
        since_deflation += 1;
        total_sweeps += 1;
        if since_deflation > 4 * MAX_SWEEPS_PER_EIGENVALUE || total_sweeps > budget {
            return Err(MatError::NoConvergence);
        }
        // shift
        let shift = if since_deflation % 10 == 0 {
            // exceptional shift to break symmetry-induced cycles
            let mag = work.h[(hi, hi - 1)].norm() + work.h[(hi, hi)].norm();
            work.h[(hi, hi)] + creal(mag).scale(re::<T>(0.75))
        } else {
            wilkinson_shift(
                work.h[(hi - 1, hi - 1)],
                work.h[(hi - 1, hi)],
                work.h[(hi, hi - 1)],
                work.h[(hi, hi)],
            )
        };
        // implicit single-shift bulge chase over [lo, hi]
        let n_all = n;
        let mut x = work.h[(lo, lo)] - shift;
        let mut y = work.h[(lo + 1, lo)];
        for i in lo..hi {
            let (c, s) = givens(x, y);
            let row_from = i.saturating_sub(1).max(lo);
            work.rotate_rows(i, i + 1, c, s, row_from, n_all);
            let col_to = (i + 2).min(hi) + 1;
            work.rotate_cols(i, i + 1, c, s, 0, col_to.min(n_all));
            if i + 2 <= hi {
                x = work.h[(i + 1, i)];
                y = work.h[(i + 2, i)];
            }
        }
    }
}

#[doc(hidden)]
pub fn schur_debug<T: Real>(
    m: &ComplexMatrix<T>,
) -> Result<(ComplexMatrix<T>, ComplexMatrix<T>), MatError> {
    let mut a = m.clone();
    let mut q = ComplexMatrix::zeros(m.dim());
    hessenberg(&mut a, Some(&mut q));
    let mut work = QrWork { h: a, q: Some(q) };
    schur_from_hessenberg(&mut work)?;
    Ok((work.h, work.q.unwrap()))
}

/// Eigenvalues of a general complex matrix (balanced Hessenberg + shifted QR).
pub fn eigenvalues<T: Real>(m: &ComplexMatrix<T>) -> Result<Vec<C<T>>, MatError> {
    m.validate_finite()?;
    let mut a = m.clone();
    balance(&mut a);
    hessenberg(&mut a, None);
    let mut work = QrWork { h: a, q: None };
    schur_from_hessenberg(&mut work)?;
    Ok((0..m.dim()).map(|i| work.h[(i, i)]).collect())
}

/// Paired left/right eigenvector families with `left * right = I`.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    pub values: Vec<C<T>>,
    /// Right eigenvectors as columns.
    pub right: ComplexMatrix<T>,
    /// Left eigenvectors as rows; exactly the inverse of `right`.
    pub left: ComplexMatrix<T>,
    /// One-norm condition estimate of the right-eigenvector matrix.
    pub cond: T,
}

/// Condition threshold beyond which a matrix is reported defective.
pub const DEFECTIVE_COND: f64 = 1e12;

/// Full eigendecomposition. Right eigenvectors come from back-substitution
/// on the triangular Schur factor; left eigenvectors from inverting the
/// right-eigenvector matrix. Errors with [`MatError::DefectiveMatrix`] when
/// that matrix is numerically singular.
pub fn eig_general<T: Real>(m: &ComplexMatrix<T>) -> Result<SpectralDecomposition<T>, MatError> {
    m.validate_finite()?;
    let n = m.dim();
    if n == 0 {
        return Ok(SpectralDecomposition {
            values: vec![],
            right: ComplexMatrix::zeros(0),
            left: ComplexMatrix::zeros(0),
            cond: T::one(),
        });
    }
    let mut a = m.clone();
    let scale = balance(&mut a);
    let mut q = ComplexMatrix::zeros(n);
    hessenberg(&mut a, Some(&mut q));
    let mut work = QrWork { h: a, q: Some(q) };
    schur_from_hessenberg(&mut work)?;
    let t = work.h;
    let q = work.q.unwrap();
    let values: Vec<C<T>> = (0..n).map(|i| t[(i, i)]).collect();

    // Eigenvectors of the triangular factor by back-substitution, with
    // guarded divisors and column rescaling against overflow.
    let eps = T::epsilon();
    let tnorm = t.one_norm().max(T::min_positive_value());
    let mut x = ComplexMatrix::zeros(n);
    for j in 0..n {
        let lambda = values[j];
        x[(j, j)] = creal(T::one());
        for i in (0..j).rev() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for l in i + 1..=j {
                acc = acc + t[(i, l)] * x[(l, j)];
            }
            let mut denom = t[(i, i)] - lambda;
            if denom.norm() < eps * tnorm {
                denom = creal(eps * tnorm);
            }
            x[(i, j)] = -acc / denom;
            let mag = x[(i, j)].norm();
            if mag > T::one() / eps {
                let inv = T::one() / mag;
                for l in i..=j {
                    x[(l, j)] = x[(l, j)].scale(inv);
                }
            }
        }
        let nrm = (0..=j).fold(T::zero(), |acc, l| acc + x[(l, j)].norm_sqr()).sqrt();
        if nrm > T::zero() {
            let inv = T::one() / nrm;
            for l in 0..=j {
                x[(l, j)] = x[(l, j)].scale(inv);
            }
        }
    }

    // Orthonormalize within numerically coincident eigenvalue groups so that
    // exactly degenerate (semisimple) clusters yield well-conditioned bases.
    let coincide = re::<T>(1e-12) * (T::one() + tnorm);
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        values[i]
            .re
            .partial_cmp(&values[j].re)
            .unwrap()
            .then(values[i].im.partial_cmp(&values[j].im).unwrap())
    });
    for &i in &order {
        if let Some(g) = groups.last_mut() {
            let last = *g.last().unwrap();
            if (values[i] - values[last]).norm() <= coincide {
                g.push(i);
                continue;
            }
        }
        groups.push(vec![i]);
    }
    for g in groups.iter().filter(|g| g.len() > 1) {
        for (t_idx, &j) in g.iter().enumerate() {
            for &prev in &g[..t_idx] {
                let mut dot = Complex::new(T::zero(), T::zero());
                for l in 0..n {
                    dot = dot + x[(l, prev)].conj() * x[(l, j)];
                }
                for l in 0..n {
                    let sub = dot * x[(l, prev)];
                    x[(l, j)] = x[(l, j)] - sub;
                }
            }
            let nrm = (0..n).fold(T::zero(), |acc, l| acc + x[(l, j)].norm_sqr()).sqrt();
            if nrm < re::<T>(1e-8) {
                // the column lay inside the span of its degenerate partners:
                // a genuine Jordan structure, not a semisimple cluster
                return Err(MatError::DefectiveMatrix { cond: f64::INFINITY });
            }
            let inv = T::one() / nrm;
            for l in 0..n {
                x[(l, j)] = x[(l, j)].scale(inv);
            }
        }
    }

    // back-transform: V = Q X, then undo balancing (row scaling)
    let mut right = q.mul(&x);
    for i in 0..n {
        for j in 0..n {
            right[(i, j)] = right[(i, j)].scale(scale[i]);
        }
    }
    for j in 0..n {
        let nrm = (0..n).fold(T::zero(), |acc, l| acc + right[(l, j)].norm_sqr()).sqrt();
        if nrm > T::zero() {
            let inv = T::one() / nrm;
            for l in 0..n {
                right[(l, j)] = right[(l, j)].scale(inv);
            }
        }
    }

    let left = match inverse(&right) {
        Ok(inv) => inv,
        Err(_) => return Err(MatError::DefectiveMatrix { cond: f64::INFINITY }),
    };
    let cond = right.one_norm() * left.one_norm();
    if as_f64(cond) > DEFECTIVE_COND {
        return Err(MatError::DefectiveMatrix { cond: as_f64(cond) });
    }
    Ok(SpectralDecomposition { values, right, left, cond })
}

// ---------------------------------------------------------------------------
// Spectral matrix functions
// ---------------------------------------------------------------------------

/// Distance-to-branch-cut threshold for the flag on sqrt/log-type maps.
pub const BRANCH_CUT_TOL: f64 = 1e-12;

fn near_negative_axis<T: Real>(z: C<T>, scale: T) -> bool {
    z.re < T::zero() && z.im.abs() <= re::<T>(BRANCH_CUT_TOL) * scale.max(T::one())
}

/// `f(M)` via the spectral decomposition: `right diag(f(values)) left`.
/// The boolean flags eigenvalues hugging the negative real axis, where
/// principal sqrt/log branches are discontinuous.
pub fn mat_func<T: Real>(
    m: &ComplexMatrix<T>,
    f: impl Fn(C<T>) -> C<T>,
) -> Result<(ComplexMatrix<T>, bool), MatError> {
    let dec = eig_general(m)?;
    let scale = m.one_norm();
    let branch_cut = dec.values.iter().any(|&z| near_negative_axis(z, scale));
    let n = m.dim();
    let mut fd = ComplexMatrix::zeros(n);
    for (i, &v) in dec.values.iter().enumerate() {
        let fv = f(v);
        for j in 0..n {
            fd[(i, j)] = fv * dec.left[(i, j)];
        }
    }
    Ok((dec.right.mul(&fd), branch_cut))
}

/// `exp(M - s I)` together with the shift that was removed, so callers can
/// renormalize without overflow. Computed by Pade approximation with scaling
/// and squaring; does not require diagonalizability.
pub fn expm_shifted<T: Real>(
    m: &ComplexMatrix<T>,
    s: C<T>,
) -> Result<(ComplexMatrix<T>, C<T>), MatError> {
    m.validate_finite()?;
    let n = m.dim();
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] = a[(i, i)] - s;
    }
    Ok((expm(&a)?, s))
}

/// Matrix exponential, degree-13 Pade with scaling and squaring.
pub fn expm<T: Real>(m: &ComplexMatrix<T>) -> Result<ComplexMatrix<T>, MatError> {
    let n = m.dim();
    let theta13 = 5.371920351148152;
    let norm = as_f64(m.one_norm());
    if !norm.is_finite() {
        return Err(MatError::NotFinite);
    }
    let squarings = if norm > theta13 {
        (norm / theta13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a = m.scale(creal(re::<T>(0.5f64.powi(squarings as i32))));
    const B: [f64; 14] = [
        64764752532480000.0,
        32382376266240000.0,
        7771770303897600.0,
        1187353796428800.0,
        129060195264000.0,
        10559470521600.0,
        670442572800.0,
        33522128640.0,
        1323241920.0,
        40840800.0,
        960960.0,
        16380.0,
        182.0,
        1.0,
    ];
    let b = |i: usize| creal(re::<T>(B[i]));
    let id = ComplexMatrix::identity(n);
    let a2 = a.mul(&a);
    let a4 = a2.mul(&a2);
    let a6 = a2.mul(&a4);
    let w1 = a6.scale(b(13)).add(&a4.scale(b(11))).add(&a2.scale(b(9)));
    let w2 = a6.scale(b(7)).add(&a4.scale(b(5))).add(&a2.scale(b(3))).add(&id.scale(b(1)));
    let u = a.mul(&a6.mul(&w1).add(&w2));
    let z1 = a6.scale(b(12)).add(&a4.scale(b(10))).add(&a2.scale(b(8)));
    let v = a6.mul(&z1).add(&a6.scale(b(6))).add(&a4.scale(b(4))).add(&a2.scale(b(2))).add(&id.scale(b(0)));
    let lhs = v.sub(&u);
    let rhs = v.add(&u);
    let lu = Lu::decompose(&lhs)?;
    let mut r = ComplexMatrix::zeros(n);
    for j in 0..n {
        let col = lu.solve_vec(&rhs.column(j));
        for i in 0..n {
            r[(i, j)] = col[i];
        }
    }
    for _ in 0..squarings {
        r = r.mul(&r);
    }
    Ok(r)
}

// ---------------------------------------------------------------------------
// trace of sqrt of a product
// ---------------------------------------------------------------------------

/// Outcome of [`trace_sqrt_product`]: the complex trace and a flag set when
/// any eigenvalue of the product hugged the principal branch cut.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceSqrt<T: Real> {
    pub value: C<T>,
    pub branch_cut: bool,
}

/// `sum_i sqrt(lambda_i(A B))` with principal-branch square roots.
///
/// By similarity this equals `tr sqrt(B^{1/2} A B^{1/2})` whenever the
/// square root of `B` is invertible, i.e. it evaluates the mixed-state
/// fidelity without forming any matrix square root.
///
/// When both factors admit healthy eigendecompositions the eigenvalues of
/// the product are extracted from a scale-graded similarity built out of
/// the two spectral factorizations; exponentially small eigenvalues then
/// come out with relative rather than absolute accuracy. Otherwise the
/// routine falls back to QR on the formed product.
pub fn trace_sqrt_product<T: Real>(
    a: &ComplexMatrix<T>,
    b: &ComplexMatrix<T>,
) -> Result<TraceSqrt<T>, MatError> {
    if a.dim() != b.dim() {
        return Err(MatError::DimensionMismatch(a.dim(), b.dim()));
    }
    let graded_cond_cap = re::<T>(1e8);
    if let (Ok(da), Ok(db)) = (eig_general(a), eig_general(b)) {
        if da.cond < graded_cond_cap && db.cond < graded_cond_cap {
            if let Ok(lam) = graded_product_eigenvalues(
                &da.values, &da.right, &da.left, &db.values, &db.right, &db.left,
            ) {
                return Ok(sum_principal_sqrt(&lam));
            }
        }
    }
    let lam = eigenvalues(&a.mul(b))?;
    Ok(sum_principal_sqrt(&lam))
}

/// Eigenvalues of `A B` given spectral factorizations `A = Ra Wa La`,
/// `B = Rb Wb Lb`: the similarity `sqrt(Wa) (La Rb) Wb (Lb Ra) sqrt(Wa)`
/// keeps every scale multiplicative so tiny products stay accurate.
pub fn graded_product_eigenvalues<T: Real>(
    wa: &[C<T>],
    ra: &ComplexMatrix<T>,
    la: &ComplexMatrix<T>,
    wb: &[C<T>],
    rb: &ComplexMatrix<T>,
    lb: &ComplexMatrix<T>,
) -> Result<Vec<C<T>>, MatError> {
    let n = wa.len();
    let x = la.mul(rb);
    let y = lb.mul(ra);
    let sqrt_wa: Vec<C<T>> = wa.iter().map(|z| z.sqrt()).collect();
    let mut g = ComplexMatrix::zeros(n);
    // G = sqrt(Wa) X Wb Y sqrt(Wa)
    let mut xw = ComplexMatrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            xw[(i, j)] = sqrt_wa[i] * x[(i, j)] * wb[j];
        }
    }
    let xwy = xw.mul(&y);
    for i in 0..n {
        for j in 0..n {
            g[(i, j)] = xwy[(i, j)] * sqrt_wa[j];
        }
    }
    if let Ok(lam) = eigenvalues(&g) {
        return Ok(lam);
    }
    // rare: fall back to the plainly formed product
    let zero = Complex::new(T::zero(), T::zero());
    let wa_m = ComplexMatrix::from_fn(n, |i, j| if i == j { wa[i] } else { zero });
    let wb_m = ComplexMatrix::from_fn(n, |i, j| if i == j { wb[i] } else { zero });
    let prod = ra.mul(&wa_m).mul(la).mul(&rb.mul(&wb_m).mul(lb));
    eigenvalues(&prod)
}

pub(crate) fn sum_principal_sqrt<T: Real>(lam: &[C<T>]) -> TraceSqrt<T> {
    let scale = lam.iter().map(|z| z.norm()).fold(T::zero(), T::max);
    let mut value = Complex::new(T::zero(), T::zero());
    let mut branch_cut = false;
    for &z in lam {
        if near_negative_axis(z, scale) {
            branch_cut = true;
        }
        value = value + z.sqrt();
    }
    TraceSqrt { value, branch_cut }
}

/// Sort eigenvalues by real part then imaginary part, with fuzzy real-part
/// comparison so that conjugate pairs order deterministically.
pub fn canonical_sort<T: Real>(values: &mut [C<T>], fuzz: T) {
    values.sort_by(|a, b| {
        let dre = a.re - b.re;
        if dre.abs() <= fuzz {
            a.im.partial_cmp(&b.im).unwrap()
        } else {
            a.re.partial_cmp(&b.re).unwrap()
        }
    });
}
