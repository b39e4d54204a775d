//! Complex matrices and vectors of dimension 2 or 3, and a Jacobi eigensolver
//! for Hermitian matrices with deterministic ordering and gauge.
//!
//! Storage is a fixed `3 x 3` array regardless of the logical dimension, so
//! every value is `Copy` and nothing here allocates.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Shorthand for a complex scalar.
pub type C64 = Complex64;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// Relative tolerance on `max|A - A^H| / max|A|` for a matrix to count as Hermitian.
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

const MAX_SWEEPS: usize = 64;

fn check_dim(dim: usize) {
    assert!(dim == 2 || dim == 3, "dimension must be 2 or 3, got {dim}");
}

/// A dense complex square matrix of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq)]
pub struct CMatrix {
    dim: usize,
    data: [[C64; 3]; 3],
}

impl CMatrix {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        CMatrix { dim, data: [[ZERO; 3]; 3] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for k in 0..dim {
            m.data[k][k] = ONE;
        }
        m
    }

    /// Builds a matrix from its rows. Panics unless the rows form a 2x2 or 3x3 square.
    pub fn from_rows(rows: &[&[C64]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "row {i} has wrong length");
            m.data[i][..dim].copy_from_slice(row);
        }
        m
    }

    pub fn from_real_rows(rows: &[&[f64]]) -> Self {
        let dim = rows.len();
        let mut m = Self::zeros(dim);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), dim, "row {i} has wrong length");
            for (j, &x) in row.iter().enumerate() {
                m.data[i][j] = C64::new(x, 0.0);
            }
        }
        m
    }

    pub fn diag(values: &[f64]) -> Self {
        let mut m = Self::zeros(values.len());
        for (k, &x) in values.iter().enumerate() {
            m.data[k][k] = C64::new(x, 0.0);
        }
        m
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[i][j] = self.data[j][i].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|k| self.data[k][k]).sum()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest entrywise modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        assert_eq!(self.dim, other.dim);
        (*self - *other).max_abs()
    }

    /// `max|A - A^H|`.
    pub fn hermitian_defect(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    pub fn is_hermitian(&self) -> bool {
        let scale = self.max_abs();
        let defect = self.hermitian_defect();
        defect == 0.0 || defect < HERMITIAN_TOLERANCE * scale
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, other: &CMatrix) -> Self {
        *self * *other - *other * *self
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut m = *self;
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[i][j] *= factor;
            }
        }
        m
    }

    pub fn mul_vec(&self, v: &CVector) -> CVector {
        assert_eq!(self.dim, v.dim);
        let mut out = CVector::zeros(self.dim);
        for i in 0..self.dim {
            let mut acc = ZERO;
            for j in 0..self.dim {
                acc += self.data[i][j] * v.data[j];
            }
            out.data[i] = acc;
        }
        out
    }

    /// Iterates the `dim * dim` logical entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = C64> + '_ {
        (0..self.dim).flat_map(move |i| (0..self.dim).map(move |j| self.data[i][j]))
    }

    /// Permutes rows and columns by exchanging the first and last basis states.
    pub fn swap_outer(&self) -> Self {
        let n = self.dim - 1;
        let mut m = Self::zeros(self.dim);
        let p = |k: usize| if k == 0 { n } else if k == n { 0 } else { k };
        for i in 0..self.dim {
            for j in 0..self.dim {
                m.data[p(i)][p(j)] = self.data[i][j];
            }
        }
        m
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &self.data[i][j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.dim && j < self.dim);
        &mut self.data[i][j]
    }
}

impl Add for CMatrix {
    type Output = CMatrix;
    fn add(mut self, rhs: CMatrix) -> CMatrix {
        self += rhs;
        self
    }
}

impl AddAssign for CMatrix {
    fn add_assign(&mut self, rhs: CMatrix) {
        assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] += rhs.data[i][j];
            }
        }
    }
}

impl Sub for CMatrix {
    type Output = CMatrix;
    fn sub(mut self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                self.data[i][j] -= rhs.data[i][j];
            }
        }
        self
    }
}

impl Neg for CMatrix {
    type Output = CMatrix;
    fn neg(self) -> CMatrix {
        self.scale(-ONE)
    }
}

impl Mul for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        assert_eq!(self.dim, rhs.dim);
        let mut m = CMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                let mut acc = ZERO;
                for k in 0..self.dim {
                    acc += self.data[i][k] * rhs.data[k][j];
                }
                m.data[i][j] = acc;
            }
        }
        m
    }
}

impl Mul<f64> for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: f64) -> CMatrix {
        self.scale(C64::new(rhs, 0.0))
    }
}

impl Mul<C64> for CMatrix {
    type Output = CMatrix;
    fn mul(self, rhs: C64) -> CMatrix {
        self.scale(rhs)
    }
}

impl Mul<CMatrix> for f64 {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        rhs.scale(C64::new(self, 0.0))
    }
}

impl Mul<CMatrix> for C64 {
    type Output = CMatrix;
    fn mul(self, rhs: CMatrix) -> CMatrix {
        rhs.scale(self)
    }
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.data[i][j];
                write!(f, "{:>12.6e}{:+.6e}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A complex column vector of dimension 2 or 3.
#[derive(Clone, Copy, PartialEq, Debug)]
pub struct CVector {
    dim: usize,
    data: [C64; 3],
}

impl CVector {
    pub fn zeros(dim: usize) -> Self {
        check_dim(dim);
        CVector { dim, data: [ZERO; 3] }
    }

    /// The `k`-th standard basis vector (zero-based).
    pub fn basis(dim: usize, k: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.data[k] = ONE;
        v
    }

    pub fn from_slice(values: &[C64]) -> Self {
        let mut v = Self::zeros(values.len());
        v.data[..values.len()].copy_from_slice(values);
        v
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data[..self.dim]
    }

    /// Hermitian inner product `<self|other>` (conjugate-linear in `self`).
    pub fn inner(&self, other: &CVector) -> C64 {
        assert_eq!(self.dim, other.dim);
        (0..self.dim).map(|k| self.data[k].conj() * other.data[k]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.as_slice().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scale(&self, factor: C64) -> Self {
        let mut v = *self;
        for z in &mut v.data[..self.dim] {
            *z *= factor;
        }
        v
    }

    /// Largest entry modulus of `self - other`.
    pub fn max_abs_diff(&self, other: &CVector) -> f64 {
        assert_eq!(self.dim, other.dim);
        (0..self.dim)
            .map(|k| (self.data[k] - other.data[k]).norm())
            .fold(0.0, f64::max)
    }

    /// Euclidean distance to `other`.
    pub fn distance(&self, other: &CVector) -> f64 {
        assert_eq!(self.dim, other.dim);
        (0..self.dim)
            .map(|k| (self.data[k] - other.data[k]).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Outer product `|self><other|`.
    pub fn outer(&self, other: &CVector) -> CMatrix {
        assert_eq!(self.dim, other.dim);
        let mut m = CMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                m[(i, j)] = self.data[i] * other.data[j].conj();
            }
        }
        m
    }
}

impl Index<usize> for CVector {
    type Output = C64;
    #[inline]
    fn index(&self, k: usize) -> &C64 {
        debug_assert!(k < self.dim);
        &self.data[k]
    }
}

impl IndexMut<usize> for CVector {
    #[inline]
    fn index_mut(&mut self, k: usize) -> &mut C64 {
        debug_assert!(k < self.dim);
        &mut self.data[k]
    }
}

/// Instantaneous spectrum of a Hermitian matrix at one time.
///
/// Eigenvalues are ascending. Each eigenvector is normalized and its
/// largest-modulus entry is real and positive (first such entry on ties).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenFrame {
    pub tau: f64,
    dim: usize,
    values: [f64; 3],
    vectors: [CVector; 3],
}

impl EigenFrame {
    /// Assembles a frame from explicit eigenpairs, without reordering or gauge fixing.
    pub fn from_parts(tau: f64, values: &[f64], vectors: &[CVector]) -> Self {
        let dim = values.len();
        check_dim(dim);
        assert_eq!(vectors.len(), dim);
        let mut v = [CVector::zeros(dim); 3];
        let mut e = [0.0; 3];
        e[..dim].copy_from_slice(values);
        v[..dim].copy_from_slice(vectors);
        EigenFrame { tau, dim, values: e, vectors: v }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.values[..self.dim]
    }

    pub fn eigenvectors(&self) -> &[CVector] {
        &self.vectors[..self.dim]
    }

    pub fn eigenvector(&self, k: usize) -> &CVector {
        &self.eigenvectors()[k]
    }

    /// Smallest distance between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues()
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Matrix whose columns are the eigenvectors.
    pub fn eigenvector_matrix(&self) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim);
        for (j, v) in self.eigenvectors().iter().enumerate() {
            for i in 0..self.dim {
                m[(i, j)] = v[i];
            }
        }
        m
    }
}

/// Diagonalizes a Hermitian matrix with cyclic complex Jacobi rotations.
///
/// Rotations continue until every off-diagonal entry is negligible against
/// both diagonal entries it couples, which keeps small eigenvector components
/// accurate to working precision relative to their own size.
pub fn hermitian_eigen(h: &CMatrix, tau: f64) -> Result<EigenFrame> {
    if !h.is_hermitian() {
        return Err(Error::NotHermitian { asymmetry: h.hermitian_defect() });
    }
    let dim = h.dim();
    let mut a = *h;
    // exact Hermitian symmetry from here on
    for i in 0..dim {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..dim {
            let avg = (a[(i, j)] + a[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = CMatrix::identity(dim);

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..dim - 1 {
            for q in (p + 1)..dim {
                rotated |= jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }

    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| a[(x, x)].re.total_cmp(&a[(y, y)].re));

    let mut values = [0.0; 3];
    let mut vectors = [CVector::zeros(dim); 3];
    for (slot, &k) in order.iter().enumerate() {
        values[slot] = a[(k, k)].re;
        let mut col = CVector::zeros(dim);
        for i in 0..dim {
            col[i] = v[(i, k)];
        }
        vectors[slot] = fix_gauge(col);
    }
    Ok(EigenFrame { tau, dim, values, vectors })
}

/// One complex Jacobi rotation annihilating `a[p][q]`. Returns false when the
/// entry was already negligible and has simply been zeroed.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) -> bool {
    let apq = a[(p, q)];
    let r = apq.norm();
    if r == 0.0 {
        return false;
    }
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let small = 100.0 * r;
    if (app.abs() + small == app.abs() && aqq.abs() + small == aqq.abs()) || r < f64::MIN_POSITIVE {
        a[(p, q)] = ZERO;
        a[(q, p)] = ZERO;
        return false;
    }

    // a_pq = r e^{i phi}; G = diag(1, e^{-i phi}) R with R the real rotation.
    let phase = apq / r;
    let phase_conj = phase.conj();
    let theta = (aqq - app) / (2.0 * r);
    let t = if theta == 0.0 {
        1.0
    } else {
        theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt())
    };
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;

    let dim = a.dim();
    for k in 0..dim {
        if k == p || k == q {
            continue;
        }
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        let new_kp = akp * c - akq * phase_conj * s;
        let new_kq = akp * s + akq * phase_conj * c;
        a[(k, p)] = new_kp;
        a[(p, k)] = new_kp.conj();
        a[(k, q)] = new_kq;
        a[(q, k)] = new_kq.conj();
    }
    a[(p, p)] = C64::new(app - t * r, 0.0);
    a[(q, q)] = C64::new(aqq + t * r, 0.0);
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;

    for k in 0..dim {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c - vkq * phase_conj * s;
        v[(k, q)] = vkp * s + vkq * phase_conj * c;
    }
    true
}

fn fix_gauge(mut col: CVector) -> CVector {
    let norm = col.norm();
    let mut best = 0;
    for k in 1..col.dim() {
        if col[k].norm() > col[best].norm() {
            best = k;
        }
    }
    let pivot = col[best];
    let factor = pivot.conj() / (pivot.norm() * norm);
    col = col.scale(factor);
    col[best] = C64::new(col[best].re, 0.0);
    col
}

/// Spin-1 operators `(Sx, Sy, Sz)` in the basis `m = +1, 0, -1`.
pub fn spin1_operators() -> (CMatrix, CMatrix, CMatrix) {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    let sx = CMatrix::from_real_rows(&[&[0.0, r, 0.0], &[r, 0.0, r], &[0.0, r, 0.0]]);
    let a = I * r;
    let sy = CMatrix::from_rows(&[&[ZERO, -a, ZERO], &[a, ZERO, -a], &[ZERO, a, ZERO]]);
    let sz = CMatrix::diag(&[1.0, 0.0, -1.0]);
    (sx, sy, sz)
}

/// Pauli matrices `(sigma_x, sigma_y, sigma_z)`.
pub fn pauli_operators() -> (CMatrix, CMatrix, CMatrix) {
    let sx = CMatrix::from_real_rows(&[&[0.0, 1.0], &[1.0, 0.0]]);
    let sy = CMatrix::from_rows(&[&[ZERO, -I], &[I, ZERO]]);
    let sz = CMatrix::diag(&[1.0, -1.0]);
    (sx, sy, sz)
}
