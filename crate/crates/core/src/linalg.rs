//! Dense complex matrices sized for two qudits (at most 16×16).
//!
//! Storage is row-major and every operation is a pure function of its
//! inputs. Approximate comparisons always take an explicit absolute
//! tolerance; the defaults below are what the rest of the crate uses.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Sub};

pub use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Tolerance for identities that hold algebraically (unitarity, Hermiticity,
/// reconstruction).
pub const ALGEBRAIC_TOL: f64 = 1e-12;

/// Tolerance for physical validity checks (positivity of states).
pub const PHYSICAL_TOL: f64 = 1e-10;

/// Sweep budget of the cyclic Jacobi eigensolver.
pub const JACOBI_MAX_SWEEPS: usize = 100;

#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![C64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = C64::new(1.0, 0.0);
        }
        m
    }

    /// Builds a matrix from row-major entries.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {rows}×{cols} matrix",
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows. Panics on ragged input.
    pub fn from_rows(rows: &[Vec<C64>]) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for row in rows {
            assert_eq!(row.len(), n_cols, "ragged rows");
            data.extend_from_slice(row);
        }
        Self { rows: n_rows, cols: n_cols, data }
    }

    pub fn from_real_rows(rows: &[Vec<f64>]) -> Self {
        let rows: Vec<Vec<C64>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| C64::new(x, 0.0)).collect())
            .collect();
        Self::from_rows(&rows)
    }

    pub fn from_diag(diag: &[C64]) -> Self {
        let mut m = Self::zeros(diag.len(), diag.len());
        for (i, &x) in diag.iter().enumerate() {
            m[(i, i)] = x;
        }
        m
    }

    pub fn from_real_diag(diag: &[f64]) -> Self {
        let diag: Vec<C64> = diag.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::from_diag(&diag)
    }

    /// The projector `|v⟩⟨v|`.
    pub fn outer(v: &[C64]) -> Self {
        let n = v.len();
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = v[i] * v[j].conj();
            }
        }
        m
    }

    /// Places `columns` side by side.
    pub fn from_columns(columns: &[Vec<C64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut m = Self::zeros(rows, cols);
        for (j, c) in columns.iter().enumerate() {
            assert_eq!(c.len(), rows, "ragged columns");
            for (i, &x) in c.iter().enumerate() {
                m[(i, j)] = x;
            }
        }
        m
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

    pub fn entries(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn diagonal(&self) -> Vec<C64> {
        (0..self.rows.min(self.cols)).map(|i| self[(i, i)]).collect()
    }

    /// Real parts of the diagonal.
    pub fn real_diagonal(&self) -> Vec<f64> {
        self.diagonal().into_iter().map(|z| z.re).collect()
    }

    pub fn adjoint(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                m[(j, i)] = self[(i, j)].conj();
            }
        }
        m
    }

    pub fn trace(&self) -> C64 {
        self.diagonal().into_iter().sum()
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x * factor).collect() }
    }

    pub fn scale_real(&self, factor: f64) -> Self {
        self.scale(C64::new(factor, 0.0))
    }

    pub fn matmul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch(format!(
                "cannot multiply {}×{} by {}×{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == C64::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..other.cols {
                    out[(i, j)] += a * other[(k, j)];
                }
            }
        }
        Ok(out)
    }

    pub fn mat_vec(&self, v: &[C64]) -> Result<Vec<C64>> {
        if self.cols != v.len() {
            return Err(Error::DimensionMismatch(format!(
                "cannot apply {}×{} matrix to vector of length {}",
                self.rows,
                self.cols,
                v.len()
            )));
        }
        Ok((0..self.rows)
            .map(|i| (0..self.cols).map(|j| self[(i, j)] * v[j]).sum())
            .collect())
    }

    /// `U · self · U†`.
    pub fn conjugate_by(&self, u: &Self) -> Result<Self> {
        u.matmul(self)?.matmul(&u.adjoint())
    }

    /// `self · other - other · self`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        Ok(&self.matmul(other)? - &other.matmul(self)?)
    }

    /// Largest entrywise modulus.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest entrywise modulus of `self - other`; infinite when shapes differ.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        if self.rows != other.rows || self.cols != other.cols {
            return f64::INFINITY;
        }
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn approx_eq(&self, other: &Self, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    /// Largest `|M_ij - conj(M_ji)|`.
    pub fn hermiticity_residual(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in i..self.cols {
                worst = worst.max((self[(i, j)] - self[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() <= tol
    }

    /// Largest off-diagonal modulus.
    pub fn max_off_diagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.rows {
            for j in 0..self.cols {
                if i != j {
                    worst = worst.max(self[(i, j)].norm());
                }
            }
        }
        worst
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = C64;

    fn index(&self, (i, j): (usize, usize)) -> &C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in add");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;

    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "shape mismatch in sub");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;

    /// Panics on incompatible shapes; use [`ComplexMatrix::matmul`] for a
    /// checked product.
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs).expect("shape mismatch in mul")
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}×{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            write!(f, "  ")?;
            for j in 0..self.cols {
                let z = self[(i, j)];
                write!(f, "{:+.6}{:+.6}i  ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Kronecker product; the index of `b` runs fastest.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let rows = a.rows * b.rows;
    let cols = a.cols * b.cols;
    let mut out = ComplexMatrix::zeros(rows, cols);
    for ai in 0..a.rows {
        for aj in 0..a.cols {
            let x = a[(ai, aj)];
            for bi in 0..b.rows {
                for bj in 0..b.cols {
                    out[(ai * b.rows + bi, aj * b.cols + bj)] = x * b[(bi, bj)];
                }
            }
        }
    }
    out
}

/// Kronecker product of two vectors.
pub fn kron_vec(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().flat_map(|&x| b.iter().map(move |&y| x * y)).collect()
}

/// Which factor of a bipartite system survives a partial trace.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subsystem {
    A,
    B,
}

/// Reduced matrix of the kept subsystem of a `(dim_a·dim_b)`-square matrix.
///
/// Keeping `A` gives `α_ij = Σ_k ρ_{ik,jk}`; keeping `B` sums over the first
/// index instead.
pub fn partial_trace(
    rho: &ComplexMatrix,
    dim_a: usize,
    dim_b: usize,
    keep: Subsystem,
) -> Result<ComplexMatrix> {
    let n = dim_a * dim_b;
    if rho.rows != n || rho.cols != n {
        return Err(Error::DimensionMismatch(format!(
            "partial trace of {}×{} matrix over {dim_a}×{dim_b} subsystems",
            rho.rows, rho.cols
        )));
    }
    let out = match keep {
        Subsystem::A => {
            let mut out = ComplexMatrix::zeros(dim_a, dim_a);
            for i in 0..dim_a {
                for j in 0..dim_a {
                    out[(i, j)] = (0..dim_b).map(|k| rho[(i * dim_b + k, j * dim_b + k)]).sum();
                }
            }
            out
        }
        Subsystem::B => {
            let mut out = ComplexMatrix::zeros(dim_b, dim_b);
            for i in 0..dim_b {
                for j in 0..dim_b {
                    out[(i, j)] = (0..dim_a).map(|k| rho[(k * dim_b + i, k * dim_b + j)]).sum();
                }
            }
            out
        }
    };
    Ok(out)
}

#[derive(Clone, Debug)]
pub struct HermitianEigenResult {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `k` is the eigenvector of `eigenvalues[k]`.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianEigenResult {
    /// `V · diag(λ) · V†`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let v = &self.eigenvectors;
        let lambda = ComplexMatrix::from_real_diag(&self.eigenvalues);
        &(v * &lambda) * &v.adjoint()
    }
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Iterates until every off-diagonal modulus is below `tol · max(1, max|m|)`,
/// giving up after [`JACOBI_MAX_SWEEPS`] sweeps. Inputs whose Hermiticity
/// residual exceeds `tol` are rejected.
pub fn hermitian_eig(m: &ComplexMatrix, tol: f64) -> Result<HermitianEigenResult> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("eigenproblem of {}×{} matrix", m.rows, m.cols)));
    }
    let residual = m.hermiticity_residual();
    if residual > tol {
        return Err(Error::NotHermitian { residual });
    }
    let n = m.rows;
    let threshold = tol * m.max_abs().max(1.0);

    // Symmetrize so rounding noise in the input cannot stall convergence.
    let mut a = m.clone();
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)].conj()) * 0.5;
            a[(i, j)] = avg;
            a[(j, i)] = avg.conj();
        }
    }
    let mut v = ComplexMatrix::identity(n);

    let mut sweeps = 0;
    loop {
        let off = a.max_off_diagonal();
        if off < threshold {
            break;
        }
        if sweeps == JACOBI_MAX_SWEEPS {
            return Err(Error::NotConverged { sweeps, off_diagonal: off });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let eigenvalues = order.iter().map(|&i| a[(i, i)].re).collect();
    let columns: Vec<Vec<C64>> = order.iter().map(|&i| v.column(i)).collect();
    Ok(HermitianEigenResult { eigenvalues, eigenvectors: ComplexMatrix::from_columns(&columns) })
}

/// Annihilates `a[p][q]` with `a ← J† a J`, `v ← v J`.
///
/// `J = D·R` where `D = diag(.., e^{-iα} at q, ..)` makes the pivot real and
/// `R` is the classic real plane rotation.
fn jacobi_rotate(a: &mut ComplexMatrix, v: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let mag = apq.norm();
    if mag == 0.0 {
        return;
    }
    let phase = apq / mag;
    let app = a[(p, p)].re;
    let aqq = a[(q, q)].re;
    let zeta = (aqq - app) / (2.0 * mag);
    let t = if zeta >= 0.0 {
        1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
    } else {
        -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;

    // Columns of J: J_pp = c, J_qp = -s e^{-iα}, J_pq = s, J_qq = c e^{-iα}.
    let conj_phase = phase.conj();
    let j_pp = C64::new(c, 0.0);
    let j_qp = -conj_phase * s;
    let j_pq = C64::new(s, 0.0);
    let j_qq = conj_phase * c;

    let n = a.rows;
    // a ← a J
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * j_pp + akq * j_qp;
        a[(k, q)] = akp * j_pq + akq * j_qq;
    }
    // a ← J† a
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = j_pp.conj() * apk + j_qp.conj() * aqk;
        a[(q, k)] = j_pq.conj() * apk + j_qq.conj() * aqk;
    }
    a[(p, q)] = C64::new(0.0, 0.0);
    a[(q, p)] = C64::new(0.0, 0.0);
    a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
    a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
    // v ← v J
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * j_pp + vkq * j_qp;
        v[(k, q)] = vkp * j_pq + vkq * j_qq;
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct UnitarityReport {
    /// Largest entry of `|U†U - I|`.
    pub residual: f64,
    pub tol: f64,
    pub passed: bool,
}

pub fn validate_unitary(u: &ComplexMatrix, tol: f64) -> UnitarityReport {
    let residual = if u.is_square() {
        (&u.adjoint() * u).max_abs_diff(&ComplexMatrix::identity(u.rows))
    } else {
        f64::INFINITY
    };
    UnitarityReport { residual, tol, passed: residual < tol }
}

pub(crate) fn ensure_unitary(u: &ComplexMatrix, tol: f64) -> Result<()> {
    let report = validate_unitary(u, tol);
    if report.passed {
        Ok(())
    } else {
        Err(Error::NotUnitary { residual: report.residual })
    }
}

/// Solves the real square system `a·x = b` by Gaussian elimination with
/// partial pivoting. Returns `None` when a pivot falls below `1e-14` times the
/// largest entry of `a`.
pub fn solve_real(a: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    let n = b.len();
    let scale = a.iter().flatten().fold(0.0_f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(row, &bi)| {
        let mut r = row.clone();
        r.push(bi);
        r
    }).collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-14 * scale {
            return None;
        }
        m.swap(col, pivot);
        for row in (col + 1)..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                let (upper, lower) = m.split_at_mut(row);
                for (a, b) in lower[0][col..].iter_mut().zip(&upper[col][col..]) {
                    *a -= f * b;
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = ((row + 1)..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (m[row][n] - tail) / m[row][row];
    }
    Some(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sigma_x() -> ComplexMatrix {
        ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]])
    }

    #[test]
    fn kron_identities_and_diagonals() {
        let i2 = ComplexMatrix::identity(2);
        assert!(kron(&i2, &i2).approx_eq(&ComplexMatrix::identity(4), 0.0));

        let a = ComplexMatrix::from_real_diag(&[1.0, 2.0]);
        let b = ComplexMatrix::from_real_diag(&[3.0, 4.0]);
        assert!(kron(&a, &b).approx_eq(&ComplexMatrix::from_real_diag(&[3.0, 4.0, 6.0, 8.0]), 0.0));
    }

    #[test]
    fn kron_xx_flips_both_qubits() {
        let xx = kron(&sigma_x(), &sigma_x());
        let ket00 = vec![c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)];
        let out = xx.mat_vec(&ket00).unwrap();
        assert_eq!(out, vec![c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = vec![c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)];
        let rho = ComplexMatrix::outer(&bell);
        for keep in [Subsystem::A, Subsystem::B] {
            let local = partial_trace(&rho, 2, 2, keep).unwrap();
            assert!(local.approx_eq(&ComplexMatrix::identity(2).scale_real(0.5), 1e-15));
        }
    }

    #[test]
    fn partial_trace_of_product_recovers_factors() {
        let ra = ComplexMatrix::from_rows(&[vec![c(0.7, 0.0), c(0.1, 0.2)], vec![c(0.1, -0.2), c(0.3, 0.0)]]);
        let rb = ComplexMatrix::from_real_diag(&[0.2, 0.5, 0.3]);
        let rho = kron(&ra, &rb);
        assert!(partial_trace(&rho, 2, 3, Subsystem::A).unwrap().approx_eq(&ra, 1e-14));
        assert!(partial_trace(&rho, 2, 3, Subsystem::B).unwrap().approx_eq(&rb, 1e-14));
    }

    #[test]
    fn partial_trace_rejects_bad_dimensions() {
        let rho = ComplexMatrix::identity(4);
        assert!(matches!(partial_trace(&rho, 2, 3, Subsystem::A), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn eig_of_diagonal_and_pauli_x() {
        let r = hermitian_eig(&ComplexMatrix::from_real_diag(&[2.0, 1.0]), ALGEBRAIC_TOL).unwrap();
        assert_eq!(r.eigenvalues, vec![1.0, 2.0]);

        let r = hermitian_eig(&sigma_x(), ALGEBRAIC_TOL).unwrap();
        assert!((r.eigenvalues[0] + 1.0).abs() < 1e-15);
        assert!((r.eigenvalues[1] - 1.0).abs() < 1e-15);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // Up to a global phase: |⟨expected|v⟩| = 1.
        for (k, expected) in [[s, -s], [s, s]].iter().enumerate() {
            let v = r.eigenvectors.column(k);
            let overlap: C64 = v.iter().zip(expected).map(|(a, &b)| a.conj() * b).sum();
            assert!((overlap.norm() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn eig_complex_hermitian_reconstructs() {
        let m = ComplexMatrix::from_rows(&[
            vec![c(1.0, 0.0), c(0.5, 0.5), c(0.0, -0.3), c(0.2, 0.0)],
            vec![c(0.5, -0.5), c(-0.4, 0.0), c(0.1, 0.1), c(0.0, 0.7)],
            vec![c(0.0, 0.3), c(0.1, -0.1), c(2.0, 0.0), c(-0.6, 0.2)],
            vec![c(0.2, 0.0), c(0.0, -0.7), c(-0.6, -0.2), c(0.3, 0.0)],
        ]);
        let r = hermitian_eig(&m, ALGEBRAIC_TOL).unwrap();
        assert!(r.reconstruct().max_abs_diff(&m) < 1e-12);
        let v = &r.eigenvectors;
        assert!((&v.adjoint() * v).max_abs_diff(&ComplexMatrix::identity(4)) < 1e-12);
        assert!(r.eigenvalues.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_real_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]);
        assert!(matches!(hermitian_eig(&m, ALGEBRAIC_TOL), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn unitarity_reports() {
        let r = validate_unitary(&ComplexMatrix::identity(4), ALGEBRAIC_TOL);
        assert!(r.passed);
        assert_eq!(r.residual, 0.0);

        let r = validate_unitary(&ComplexMatrix::identity(4).scale_real(2.0), ALGEBRAIC_TOL);
        assert!(!r.passed);
        assert_eq!(r.residual, 3.0);
    }

    #[test]
    fn solve_real_small_system() {
        let a = vec![vec![2.0, 1.0], vec![1.0, 3.0]];
        let x = solve_real(&a, &[3.0, 5.0]).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
        assert!(solve_real(&[vec![1.0, 2.0], vec![2.0, 4.0]], &[1.0, 2.0]).is_none());
    }
}
