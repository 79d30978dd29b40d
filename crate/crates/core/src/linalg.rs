//! Dense complex linear algebra for the small Hilbert spaces used here
//! (dimension 3 for one spin-1 particle, 9 for two).
//!
//! Basis order is fixed globally as `(+, 0, −)` ↔ indices `(0, 1, 2)`.
//! Two-particle vectors follow the Kronecker convention, so `|a⟩⊗|b⟩`
//! lives at index `3·a + b`.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerance::Tolerances;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Row-major dense complex matrix.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            entries: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = Complex64::new(d, 0.0);
        }
        m
    }

    pub fn from_diagonal(diag: &[Complex64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &d) in diag.iter().enumerate() {
            m[(i, i)] = d;
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_entries(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self> {
        if rows == 0 || cols == 0 || entries.len() != rows * cols {
            return Err(Error::Dimension(format!(
                "{} entries do not fill a {rows}x{cols} matrix",
                entries.len()
            )));
        }
        Ok(Self {
            rows,
            cols,
            entries,
        })
    }

    pub fn from_rows<R: AsRef<[Complex64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        if rows.iter().any(|r| r.as_ref().len() != n_cols) {
            return Err(Error::Dimension("ragged rows".into()));
        }
        let entries = rows
            .iter()
            .flat_map(|r| r.as_ref().iter().copied())
            .collect();
        Self::from_entries(n_rows, n_cols, entries)
    }

    /// Column vector holding the ket's amplitudes.
    pub fn column(v: &StateVector) -> Self {
        Self {
            rows: v.dim(),
            cols: 1,
            entries: v.amplitudes().to_vec(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn scale(&self, factor: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|&z| z * factor).collect(),
        }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(Complex64::new(factor, 0.0))
    }

    pub fn adjoint(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out[(j, i)] = self[(i, j)].conj();
            }
        }
        out
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Frobenius norm of the difference. Panics on shape mismatch.
    pub fn distance(&self, other: &Self) -> f64 {
        (self - other).frobenius_norm()
    }

    /// Largest entrywise `|a_ij − conj(a_ji)|`.
    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst = 0.0_f64;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermitian_deviation() <= tol
    }

    pub fn is_finite(&self) -> bool {
        self.entries
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Deviation of `A†A` from the identity in Frobenius norm.
    pub fn unitarity_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        (&self.adjoint() * self).distance(&Self::identity(self.rows))
    }

    /// `A·B − B·A`.
    pub fn commutator(&self, other: &Self) -> Self {
        &(self * other) - &(other * self)
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(self.cols, v.dim(), "matrix-vector dimension mismatch");
        let amps = (0..self.rows)
            .map(|i| {
                (0..self.cols)
                    .map(|j| self[(i, j)] * v.amplitudes()[j])
                    .sum()
            })
            .collect();
        StateVector::new(amps)
    }

    /// `⟨v|A|v⟩`.
    pub fn expectation(&self, v: &StateVector) -> Complex64 {
        v.inner(&self.apply(v))
    }

    fn check_same_shape(&self, other: &Self) {
        assert!(
            self.rows == other.rows && self.cols == other.cols,
            "shape mismatch: {}x{} vs {}x{}",
            self.rows,
            self.cols,
            other.rows,
            other.cols
        );
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;

    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &self.entries[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds"
        );
        &mut self.entries[i * self.cols + j]
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.cols, rhs.rows, "matrix product dimension mismatch");
        let mut out = ComplexMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == ZERO {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.check_same_shape(rhs);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.check_same_shape(rhs);
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self
                .entries
                .iter()
                .zip(&rhs.entries)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:>+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// A ket. Constructors that take user data either validate or normalize;
/// [`StateVector::new`] wraps raw amplitudes as-is.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        assert!(!amplitudes.is_empty(), "state vector must be nonempty");
        Self { amplitudes }
    }

    /// Scales the amplitudes to unit norm.
    pub fn normalized(amplitudes: Vec<Complex64>) -> Result<Self> {
        let v = Self::new(amplitudes);
        let norm = v.norm();
        if !norm.is_finite() {
            return Err(Error::NonFinite("state vector amplitude".into()));
        }
        if norm == 0.0 {
            return Err(Error::ZeroVector);
        }
        Ok(v.scaled(Complex64::new(1.0 / norm, 0.0)))
    }

    pub fn from_real(amplitudes: &[f64]) -> Self {
        Self::new(amplitudes.iter().map(|&x| Complex64::new(x, 0.0)).collect())
    }

    pub fn basis(dim: usize, index: usize) -> Self {
        assert!(index < dim, "basis index out of range");
        let mut amps = vec![ZERO; dim];
        amps[index] = ONE;
        Self::new(amps)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn norm_deviation(&self) -> f64 {
        (self.norm() - 1.0).abs()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        self.norm_deviation() <= tol
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        Self::new(self.amplitudes.iter().map(|&z| z * factor).collect())
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        assert_eq!(self.dim(), other.dim(), "inner product dimension mismatch");
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn kron(&self, other: &Self) -> Self {
        let amps = self
            .amplitudes
            .iter()
            .flat_map(|&a| other.amplitudes.iter().map(move |&b| a * b))
            .collect();
        Self::new(amps)
    }

    /// Largest entrywise distance to another ket of the same dimension.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.dim(), other.dim());
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Multiplies by a global phase so that the first component with
    /// magnitude above `threshold` is real and positive.
    pub fn phase_fixed(&self, threshold: f64) -> Self {
        match self.amplitudes.iter().find(|z| z.norm() > threshold) {
            Some(&lead) => {
                let mut v = self.scaled(lead.conj() / lead.norm());
                let k = v
                    .amplitudes
                    .iter()
                    .position(|z| z.norm() > threshold)
                    .expect("lead component survives a phase rotation");
                v.amplitudes[k] = Complex64::new(v.amplitudes[k].norm(), 0.0);
                v
            }
            None => self.clone(),
        }
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Same order as `eigenvalues`, orthonormal, phase-fixed.
    pub eigenvectors: Vec<StateVector>,
}

impl EigenSystem {
    /// `Σ λᵢ |vᵢ⟩⟨vᵢ|`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let n = self.eigenvectors[0].dim();
        let mut acc = ComplexMatrix::zeros(n, n);
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            acc = &acc + &outer(v, v).scale_real(*lambda);
        }
        acc
    }

    /// Largest `|⟨vᵢ|vⱼ⟩ − δᵢⱼ|` over all pairs.
    pub fn orthonormality_deviation(&self) -> f64 {
        let mut worst = 0.0_f64;
        for (i, a) in self.eigenvectors.iter().enumerate() {
            for (j, b) in self.eigenvectors.iter().enumerate() {
                let target = if i == j { ONE } else { ZERO };
                worst = worst.max((a.inner(b) - target).norm());
            }
        }
        worst
    }

    /// Smallest gap between consecutive eigenvalues.
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }
}

/// Kronecker product: `(a⊗b)[i·rows_b + k][j·cols_b + l] = a[i][j]·b[k][l]`.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(a.rows * b.rows, a.cols * b.cols);
    for i in 0..a.rows {
        for j in 0..a.cols {
            let aij = a[(i, j)];
            for k in 0..b.rows {
                for l in 0..b.cols {
                    out[(i * b.rows + k, j * b.cols + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

pub fn adjoint(a: &ComplexMatrix) -> ComplexMatrix {
    a.adjoint()
}

/// `|u⟩⟨v|`.
pub fn outer(u: &StateVector, v: &StateVector) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(u.dim(), v.dim());
    for (i, a) in u.amplitudes().iter().enumerate() {
        for (j, b) in v.amplitudes().iter().enumerate() {
            out[(i, j)] = a * b.conj();
        }
    }
    out
}

/// Rank-one projector `|v⟩⟨v|`; rejects kets whose norm is off by more than
/// the normalization tolerance.
pub fn projector(v: &StateVector) -> Result<ComplexMatrix> {
    let deviation = v.norm_deviation();
    if deviation > Tolerances::DEFAULT.normalization || deviation.is_nan() {
        return Err(Error::NotNormalized { deviation });
    }
    Ok(outer(v, v))
}

pub fn hermitian_eigen(a: &ComplexMatrix) -> Result<EigenSystem> {
    hermitian_eigen_with(a, &Tolerances::DEFAULT)
}

/// Cyclic complex Jacobi eigensolver.
///
/// Each rotation first removes the phase of the pivot `a_pq` with a
/// diagonal unitary, then applies the real symmetric Jacobi rotation that
/// annihilates it. Sweeps stop when the off-diagonal Frobenius norm is
/// below `tol.eigen_offdiag` or after `tol.eigen_max_sweeps` sweeps.
pub fn hermitian_eigen_with(a: &ComplexMatrix, tol: &Tolerances) -> Result<EigenSystem> {
    if !a.is_square() {
        return Err(Error::NotSquare {
            rows: a.rows,
            cols: a.cols,
        });
    }
    if !a.is_finite() {
        return Err(Error::NonFinite("matrix entry".into()));
    }
    let deviation = a.hermitian_deviation();
    if deviation > tol.hermitian {
        return Err(Error::NotHermitian { deviation });
    }
    let n = a.rows;

    // Work on the exactly Hermitian part so rounding in the input cannot
    // leave a non-real diagonal behind.
    let mut m = (a + &a.adjoint()).scale_real(0.5);
    for i in 0..n {
        m[(i, i)] = Complex64::new(m[(i, i)].re, 0.0);
    }
    let mut vecs = ComplexMatrix::identity(n);

    for _ in 0..tol.eigen_max_sweeps {
        if off_diagonal_norm(&m) < tol.eigen_offdiag {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut m, &mut vecs, p, q);
            }
        }
    }

    let mut pairs: Vec<(f64, StateVector)> = (0..n)
        .map(|k| {
            let col = (0..n).map(|i| vecs[(i, k)]).collect();
            (m[(k, k)].re, StateVector::new(col))
        })
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = Vec::with_capacity(n);
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 < tol.degeneracy_gap {
            end += 1;
        }
        let cluster = &pairs[start..end];
        let mut basis = if cluster.len() > 1 {
            orthonormalize(cluster.iter().map(|(_, v)| v.clone()).collect())
        } else {
            vec![cluster[0].1.clone()]
        };
        basis = basis
            .into_iter()
            .map(|v| v.phase_fixed(tol.phase_threshold))
            .collect();
        basis.sort_by(|x, y| {
            lead_key(x, tol.phase_threshold)
                .partial_cmp(&lead_key(y, tol.phase_threshold))
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        for (k, v) in basis.into_iter().enumerate() {
            eigenvalues.push(cluster[k].0);
            eigenvectors.push(v);
        }
        start = end;
    }

    Ok(EigenSystem {
        eigenvalues,
        eigenvectors,
    })
}

/// `exp(−i·angle·h)` built from the spectral decomposition of `h`.
pub fn unitary_from_generator(h: &ComplexMatrix, angle: f64) -> Result<ComplexMatrix> {
    if !angle.is_finite() {
        return Err(Error::NonFinite("rotation angle".into()));
    }
    let eig = hermitian_eigen(h)?;
    let n = h.rows;
    let mut u = ComplexMatrix::zeros(n, n);
    for (lambda, v) in eig.eigenvalues.iter().zip(&eig.eigenvectors) {
        let phase = Complex64::from_polar(1.0, -angle * lambda);
        u = &u + &outer(v, v).scale(phase);
    }
    Ok(u)
}

fn off_diagonal_norm(m: &ComplexMatrix) -> f64 {
    let mut acc = 0.0;
    for i in 0..m.rows {
        for j in 0..m.cols {
            if i != j {
                acc += m[(i, j)].norm_sqr();
            }
        }
    }
    acc.sqrt()
}

fn jacobi_rotate(m: &mut ComplexMatrix, vecs: &mut ComplexMatrix, p: usize, q: usize) {
    let g = m[(p, q)];
    let g_abs = g.norm();
    if g_abs == 0.0 {
        return;
    }
    let phase = g / g_abs;
    let app = m[(p, p)].re;
    let aqq = m[(q, q)].re;
    let tau = (aqq - app) / (2.0 * g_abs);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // U = diag-phase · real rotation, restricted to the (p, q) plane.
    let u_pp = Complex64::new(c, 0.0);
    let u_pq = Complex64::new(s, 0.0);
    let u_qp = -phase.conj() * s;
    let u_qq = phase.conj() * c;

    let n = m.rows;
    for k in 0..n {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = mkp * u_pp + mkq * u_qp;
        m[(k, q)] = mkp * u_pq + mkq * u_qq;
    }
    for k in 0..n {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = u_pp.conj() * mpk + u_qp.conj() * mqk;
        m[(q, k)] = u_pq.conj() * mpk + u_qq.conj() * mqk;
    }
    m[(p, q)] = ZERO;
    m[(q, p)] = ZERO;
    m[(p, p)] = Complex64::new(app - t * g_abs, 0.0);
    m[(q, q)] = Complex64::new(aqq + t * g_abs, 0.0);

    for k in 0..n {
        let vkp = vecs[(k, p)];
        let vkq = vecs[(k, q)];
        vecs[(k, p)] = vkp * u_pp + vkq * u_qp;
        vecs[(k, q)] = vkp * u_pq + vkq * u_qq;
    }
}

/// Sequential Gram-Schmidt with a second projection pass.
fn orthonormalize(vectors: Vec<StateVector>) -> Vec<StateVector> {
    let mut out: Vec<StateVector> = Vec::with_capacity(vectors.len());
    for v in vectors {
        let mut w = v.amplitudes().to_vec();
        for _ in 0..2 {
            for b in &out {
                let c = b.inner(&StateVector::new(w.clone()));
                for (wi, bi) in w.iter_mut().zip(b.amplitudes()) {
                    *wi -= c * bi;
                }
            }
        }
        if let Ok(nv) = StateVector::normalized(w) {
            out.push(nv);
        }
    }
    out
}

/// Ordering key inside a degenerate eigenspace: position of the leading
/// component, then larger leading magnitude first.
fn lead_key(v: &StateVector, threshold: f64) -> (usize, f64) {
    v.amplitudes()
        .iter()
        .enumerate()
        .find(|(_, z)| z.norm() > threshold)
        .map(|(i, z)| (i, -z.re))
        .unwrap_or((usize::MAX, 0.0))
}
