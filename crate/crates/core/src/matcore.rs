//! Dense complex linear algebra kernel.
//!
//! Everything in the crate is built on [`CMatrix`], a dense `nalgebra` matrix of
//! `Complex64`. Tensor products follow the Kronecker convention: the left
//! factor owns the coarse (most significant) index, so factor 0 of a
//! [`TensorShape`] is the leftmost one.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

/// Default absolute entrywise hermiticity tolerance.
pub const HERMITIAN_TOL: f64 = 1e-10;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[inline]
pub fn real(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

pub fn identity(d: usize) -> CMatrix {
    CMatrix::identity(d, d)
}

/// Entrywise max-norm `max |m_ij|`.
pub fn max_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius_norm(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Hilbert–Schmidt inner product `Tr(a* b)`.
pub fn hs_inner(a: &CMatrix, b: &CMatrix) -> Complex64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn commutator(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a * b - b * a
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.trace()
}

pub fn ensure_finite(m: &CMatrix) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::ShapeMismatch(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(m.nrows())
}

/// `‖m − m*‖_max`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    if m.nrows() != m.ncols() {
        return f64::INFINITY;
    }
    max_norm(&(m - m.adjoint()))
}

/// Unitarity residual `‖u u* − I‖_max`.
pub fn unitarity_defect(u: &CMatrix) -> f64 {
    if u.nrows() != u.ncols() {
        return f64::INFINITY;
    }
    if u.iter().all(|z| z.im == 0.0) {
        let r = u.map(|z| z.re);
        let g = &r * r.transpose() - DMatrix::<f64>::identity(r.nrows(), r.nrows());
        return g.iter().fold(0.0, |m, x| m.max(x.abs()));
    }
    max_norm(&(u * u.adjoint() - identity(u.nrows())))
}

/// Kronecker product `a ⊗ b`.
pub fn tensor(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Left-to-right Kronecker product of a list; the empty list gives the 1×1 identity.
pub fn tensor_all<'a, I>(factors: I) -> CMatrix
where
    I: IntoIterator<Item = &'a CMatrix>,
{
    factors
        .into_iter()
        .fold(identity(1), |acc, f| acc.kronecker(f))
}

pub fn ket_tensor(a: &CVector, b: &CVector) -> CVector {
    a.kronecker(b)
}

/// Outer product `|u⟩⟨v|`.
pub fn outer(u: &CVector, v: &CVector) -> CMatrix {
    u * v.adjoint()
}

/// Ordered local dimensions of a tensor-product space.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct TensorShape {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for TensorShape {
    type Error = Error;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        TensorShape::new(dims)
    }
}

impl From<TensorShape> for Vec<usize> {
    fn from(s: TensorShape) -> Self {
        s.dims
    }
}

impl TensorShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(Error::ShapeMismatch(format!(
                "local dimensions must be positive: {dims:?}"
            )));
        }
        Ok(Self { dims })
    }

    pub fn qubits(n: usize) -> Self {
        Self { dims: vec![2; n] }
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn len(&self) -> usize {
        self.dims.len()
    }

    pub fn is_empty(&self) -> bool {
        self.dims.is_empty()
    }

    /// Ambient dimension: product of the local dimensions.
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn sub(&self, factors: &[usize]) -> Result<TensorShape> {
        let dims = factors
            .iter()
            .map(|&f| {
                self.dims.get(f).copied().ok_or_else(|| {
                    Error::ShapeMismatch(format!("factor {f} out of range for {:?}", self.dims))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        TensorShape::new(dims)
    }

    pub fn complement(&self, factors: &[usize]) -> Vec<usize> {
        (0..self.len()).filter(|i| !factors.contains(i)).collect()
    }

    fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.len()];
        for k in (0..self.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    /// Digits of a flat index, factor 0 first.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.len()];
        for k in (0..self.len()).rev() {
            out[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        out
    }

    /// `factors` must be strictly ascending and in range.
    pub(crate) fn check_subset(&self, factors: &[usize]) -> Result<()> {
        for w in factors.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::ShapeMismatch(format!(
                    "factor list must be strictly ascending: {factors:?}"
                )));
            }
        }
        if let Some(&f) = factors.last() {
            if f >= self.len() {
                return Err(Error::ShapeMismatch(format!(
                    "factor {f} out of range for {:?}",
                    self.dims
                )));
            }
        }
        Ok(())
    }

    /// Table `full[a][b]` giving the flat index whose digits on `factors`
    /// spell subsystem index `a` and on the complement spell `b`.
    pub(crate) fn split_table(&self, factors: &[usize]) -> Vec<Vec<usize>> {
        let strides = self.strides();
        let rest = self.complement(factors);
        let sub = |list: &[usize], mut idx: usize| -> usize {
            let mut flat = 0;
            for &f in list.iter().rev() {
                flat += (idx % self.dims[f]) * strides[f];
                idx /= self.dims[f];
            }
            flat
        };
        let da: usize = factors.iter().map(|&f| self.dims[f]).product();
        let db: usize = rest.iter().map(|&f| self.dims[f]).product();
        (0..da)
            .map(|a| {
                let base = sub(factors, a);
                (0..db).map(|b| base + sub(&rest, b)).collect()
            })
            .collect()
    }

    fn check_matrix(&self, m: &CMatrix) -> Result<()> {
        let d = self.dim();
        if m.nrows() != d || m.ncols() != d {
            return Err(Error::ShapeMismatch(format!(
                "matrix is {}x{} but shape {:?} has dimension {d}",
                m.nrows(),
                m.ncols(),
                self.dims
            )));
        }
        Ok(())
    }
}

/// Partial trace keeping the factors listed in `keep` (ascending order).
pub fn partial_trace(m: &CMatrix, shape: &TensorShape, keep: &[usize]) -> Result<CMatrix> {
    shape.check_matrix(m)?;
    shape.check_subset(keep)?;
    let table = shape.split_table(keep);
    let dk = table.len();
    let mut out = CMatrix::zeros(dk, dk);
    for (r, row_idx) in table.iter().enumerate() {
        for (c, col_idx) in table.iter().enumerate() {
            out[(r, c)] = row_idx
                .iter()
                .zip(col_idx)
                .map(|(&i, &j)| m[(i, j)])
                .sum();
        }
    }
    Ok(out)
}

/// Partial transpose on the listed factors.
pub fn partial_transpose(m: &CMatrix, shape: &TensorShape, factors: &[usize]) -> Result<CMatrix> {
    shape.check_matrix(m)?;
    shape.check_subset(factors)?;
    let table = shape.split_table(factors);
    let mut out = CMatrix::zeros(m.nrows(), m.ncols());
    for (a, row_a) in table.iter().enumerate() {
        for (a2, row_a2) in table.iter().enumerate() {
            for (b, &i) in row_a.iter().enumerate() {
                for (b2, &j) in row_a2.iter().enumerate() {
                    // ⟨a b|ρ^T|a' b'⟩ = ⟨a' b|ρ|a b'⟩
                    out[(i, j)] = m[(table[a2][b], table[a][b2])];
                }
            }
        }
    }
    Ok(out)
}

/// Places `op` on the listed factors (ascending) of `shape`, identity elsewhere.
pub fn embed_operator(op: &CMatrix, shape: &TensorShape, factors: &[usize]) -> Result<CMatrix> {
    shape.check_subset(factors)?;
    let table = shape.split_table(factors);
    let da = table.len();
    if op.nrows() != da || op.ncols() != da {
        return Err(Error::ShapeMismatch(format!(
            "operator is {}x{} but factors {factors:?} span dimension {da}",
            op.nrows(),
            op.ncols()
        )));
    }
    let d = shape.dim();
    let mut out = CMatrix::zeros(d, d);
    for a in 0..da {
        for a2 in 0..da {
            let v = op[(a, a2)];
            if v == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (&i, &j) in table[a].iter().zip(&table[a2]) {
                out[(i, j)] = v;
            }
        }
    }
    Ok(out)
}

/// Hermitian operator with its hermiticity tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOp {
    matrix: CMatrix,
    tol: f64,
}

impl HermitianOp {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, HERMITIAN_TOL)
    }

    pub fn with_tolerance(matrix: CMatrix, tol: f64) -> Result<Self> {
        ensure_square(&matrix)?;
        ensure_finite(&matrix)?;
        let deviation = hermiticity_defect(&matrix);
        if deviation > tol {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { matrix, tol })
    }

    /// Symmetrizes `(m + m*)/2`; only for matrices Hermitian by construction.
    pub(crate) fn from_hermitian_part(matrix: CMatrix) -> Self {
        let sym = (&matrix + matrix.adjoint()).scale(0.5);
        Self {
            matrix: sym,
            tol: HERMITIAN_TOL,
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> CMatrix {
        self.matrix
    }

    pub fn tolerance(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Real expectation value `Tr(ρ H)`.
    pub fn expectation(&self, rho: &CMatrix) -> Complex64 {
        (rho * &self.matrix).trace()
    }
}

/// Spectral decomposition `H = V diag(λ) V*`.
#[derive(Debug, Clone)]
pub struct Eigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Columns are eigenvectors, first non-negligible component real positive.
    pub vectors: CMatrix,
}

impl Eigen {
    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }

    /// `V diag(f(λ)) V*` as a complex matrix.
    pub fn map_complex<F: Fn(f64) -> Complex64>(&self, f: F) -> CMatrix {
        let mut scaled = self.vectors.clone();
        for (k, &lam) in self.values.iter().enumerate() {
            let w = f(lam);
            for r in 0..scaled.nrows() {
                scaled[(r, k)] *= w;
            }
        }
        scaled * self.vectors.adjoint()
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> CMatrix {
        self.map_complex(|x| real(f(x)))
    }

    /// `exp(−i H t) ψ` without forming the propagator.
    pub fn evolve_ket(&self, t: f64, psi: &CVector) -> CVector {
        let mut c = self.vectors.adjoint() * psi;
        for (z, &lam) in c.iter_mut().zip(&self.values) {
            *z *= Complex64::from_polar(1.0, -lam * t);
        }
        &self.vectors * c
    }

    pub fn min(&self) -> f64 {
        self.values.first().copied().unwrap_or(f64::NAN)
    }

    pub fn max(&self) -> f64 {
        self.values.last().copied().unwrap_or(f64::NAN)
    }
}

pub fn eig_hermitian(h: &HermitianOp) -> Eigen {
    eig_unchecked(h.matrix())
}

/// Eigendecomposition of a matrix already known to be Hermitian; the
/// anti-Hermitian part, if any, is discarded.
pub(crate) fn eig_unchecked(m: &CMatrix) -> Eigen {
    let d = m.nrows();
    if d == 0 {
        return Eigen {
            values: vec![],
            vectors: CMatrix::zeros(0, 0),
        };
    }
    let sym = (m + m.adjoint()).scale(0.5);
    if sym.iter().all(|z| z.im == 0.0) {
        return eig_real(&sym.map(|z| z.re));
    }
    let se = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = se.eigenvectors.column(src);
        let phase = col
            .iter()
            .find(|z| z.norm() > 1e-12)
            .map(|z| z.conj() / z.norm())
            .unwrap_or(real(1.0));
        for r in 0..d {
            vectors[(r, dst)] = col[r] * phase;
        }
    }
    Eigen { values, vectors }
}

/// Real symmetric path: same ordering and sign convention, roughly four
/// times cheaper than the complex solver.
fn eig_real(sym: &DMatrix<f64>) -> Eigen {
    let d = sym.nrows();
    let se = SymmetricEigen::new(sym.clone());
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMatrix::zeros(d, d);
    for (dst, &src) in order.iter().enumerate() {
        let col = se.eigenvectors.column(src);
        let sign = col.iter().find(|x| x.abs() > 1e-12).map(|x| x.signum()).unwrap_or(1.0);
        for r in 0..d {
            vectors[(r, dst)] = real(col[r] * sign);
        }
    }
    Eigen { values, vectors }
}

/// Eigenvalues only, ascending.
pub(crate) fn eigenvalues_unchecked(m: &CMatrix) -> Vec<f64> {
    if m.nrows() == 0 {
        return vec![];
    }
    let sym = (m + m.adjoint()).scale(0.5);
    let mut v: Vec<f64> = sym.symmetric_eigenvalues().iter().copied().collect();
    v.sort_by(f64::total_cmp);
    v
}

/// `exp(−i H t)` through the spectral decomposition.
pub fn expm_i(h: &HermitianOp, t: f64) -> CMatrix {
    eig_hermitian(h).map_complex(|lam| Complex64::from_polar(1.0, -lam * t))
}

/// Trace norm of a Hermitian matrix: sum of absolute eigenvalues.
pub fn trace_norm_hermitian(m: &CMatrix) -> f64 {
    eigenvalues_unchecked(m).iter().map(|x| x.abs()).sum()
}

/// Trace norm of an arbitrary matrix: sum of singular values.
pub fn trace_norm(m: &CMatrix) -> f64 {
    m.clone().singular_values().iter().sum()
}

/// Operator (spectral) norm.
pub fn operator_norm(m: &CMatrix) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// Wire format of a matrix: `{"rows", "cols", "entries": [[re, im], ...]}`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatrixRecord {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<[f64; 2]>,
}

impl From<&CMatrix> for MatrixRecord {
    fn from(m: &CMatrix) -> Self {
        let mut entries = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let z = m[(r, c)];
                entries.push([z.re, z.im]);
            }
        }
        Self {
            rows: m.nrows(),
            cols: m.ncols(),
            entries,
        }
    }
}

impl MatrixRecord {
    pub fn to_matrix(&self) -> Result<CMatrix> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::Invalid("matrix must have positive dimensions".into()));
        }
        if self.entries.len() != self.rows * self.cols {
            return Err(Error::ShapeMismatch(format!(
                "{} entries for a {}x{} matrix",
                self.entries.len(),
                self.rows,
                self.cols
            )));
        }
        let m = CMatrix::from_row_iterator(
            self.rows,
            self.cols,
            self.entries.iter().map(|&[re, im]| c64(re, im)),
        );
        ensure_finite(&m)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates;
    use std::f64::consts::PI;

    #[test]
    fn identity_tensor_identity() {
        assert_eq!(tensor(&identity(2), &identity(2)), identity(4));
    }

    #[test]
    fn x_tensor_i_flips_first_qubit() {
        let op = tensor(&gates::x(), &identity(2));
        let out = op * gates::basis_ket(4, 0);
        assert_eq!(out, gates::basis_ket(4, 2));
    }

    #[test]
    fn tensor_shapes_multiply() {
        let m = tensor(&CMatrix::zeros(2, 2), &CMatrix::zeros(3, 3));
        assert_eq!((m.nrows(), m.ncols()), (6, 6));
    }

    #[test]
    fn partial_trace_of_product_state() {
        let a = gates::projector(&gates::ket_plus());
        let b = CMatrix::from_diagonal(&CVector::from_vec(vec![real(0.3), real(0.7)])) * real(2.0);
        let shape = TensorShape::qubits(2);
        let out = partial_trace(&tensor(&a, &b), &shape, &[0]).unwrap();
        assert!(max_norm(&(out - a.scale(2.0))) < 1e-15);
    }

    #[test]
    fn partial_trace_of_bell_is_maximally_mixed() {
        let bell = gates::projector(&gates::bell_phi_plus());
        let shape = TensorShape::qubits(2);
        for keep in [[0], [1]] {
            let out = partial_trace(&bell, &shape, &keep).unwrap();
            assert!(max_norm(&(out - identity(2).scale(0.5))) < 1e-15);
        }
    }

    #[test]
    fn partial_trace_keep_all_is_identity_map() {
        let m = CMatrix::from_fn(6, 6, |r, c| c64(r as f64, c as f64 * 0.5));
        let shape = TensorShape::new(vec![2, 3]).unwrap();
        assert_eq!(partial_trace(&m, &shape, &[0, 1]).unwrap(), m);
    }

    #[test]
    fn partial_trace_rejects_bad_shape() {
        let shape = TensorShape::qubits(2);
        assert!(partial_trace(&identity(3), &shape, &[0]).is_err());
        assert!(partial_trace(&identity(4), &shape, &[2]).is_err());
        assert!(partial_trace(&identity(4), &shape, &[1, 0]).is_err());
    }

    #[test]
    fn partial_trace_middle_factor() {
        // ρ = a ⊗ b ⊗ c, trace out the middle factor.
        let a = gates::z();
        let b = CMatrix::from_fn(3, 3, |r, c| c64((r + c) as f64, (r as f64) - (c as f64)));
        let c = gates::x();
        let shape = TensorShape::new(vec![2, 3, 2]).unwrap();
        let m = tensor_all([&a, &b, &c]);
        let out = partial_trace(&m, &shape, &[0, 2]).unwrap();
        let expected = tensor(&a, &c) * b.trace();
        assert!(max_norm(&(out - expected)) < 1e-13);
    }

    #[test]
    fn embed_operator_matches_kronecker() {
        let shape = TensorShape::new(vec![2, 3, 2]).unwrap();
        let op = tensor(&gates::y(), &gates::z());
        let placed = embed_operator(&op, &shape, &[0, 2]).unwrap();
        // Y ⊗ I3 ⊗ Z
        let expected = tensor_all([&gates::y(), &identity(3), &gates::z()]);
        assert!(max_norm(&(placed - expected)) < 1e-15);
    }

    #[test]
    fn partial_transpose_of_product_transposes_factor() {
        let a = gates::y();
        let b = CMatrix::from_fn(2, 2, |r, c| c64(r as f64 + 1.0, 2.0 * c as f64));
        let shape = TensorShape::qubits(2);
        let pt = partial_transpose(&tensor(&a, &b), &shape, &[0]).unwrap();
        assert!(max_norm(&(pt - tensor(&a.transpose(), &b))) < 1e-15);
    }

    #[test]
    fn eig_pauli_z_and_identity() {
        let e = eig_hermitian(&HermitianOp::new(gates::z()).unwrap());
        assert_eq!(e.values, vec![-1.0, 1.0]);
        let e = eig_hermitian(&HermitianOp::new(identity(5)).unwrap());
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-14));
    }

    #[test]
    fn eig_pauli_x_closed_form() {
        // Characteristic polynomial λ² − 1: roots ∓1 with (|0⟩ ∓ |1⟩)/√2.
        let e = eig_hermitian(&HermitianOp::new(gates::x()).unwrap());
        assert!((e.values[0] + 1.0).abs() < 1e-14 && (e.values[1] - 1.0).abs() < 1e-14);
        let s = 1.0 / 2f64.sqrt();
        let minus = CVector::from_vec(vec![real(s), real(-s)]);
        let plus = CVector::from_vec(vec![real(s), real(s)]);
        assert!((e.vectors.column(0) - minus).norm() < 1e-14);
        assert!((e.vectors.column(1) - plus).norm() < 1e-14);
    }

    #[test]
    fn eig_rejects_non_hermitian() {
        let m = CMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        assert!(matches!(HermitianOp::new(m), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn expm_zero_time_is_identity() {
        let h = HermitianOp::new(gates::x() + gates::z()).unwrap();
        assert!(max_norm(&(expm_i(&h, 0.0) - identity(2))) < 1e-15);
    }

    #[test]
    fn expm_half_pi_x() {
        // e^{−iθX} = cos θ I − i sin θ X at θ = π/2.
        let h = HermitianOp::new(gates::x()).unwrap();
        let u = expm_i(&h, PI / 2.0);
        assert!(max_norm(&(u - gates::x() * c64(0.0, -1.0))) < 1e-14);
    }

    #[test]
    fn matrix_record_round_trip_is_bit_exact() {
        let m = CMatrix::from_fn(3, 2, |r, c| c64(0.1 * r as f64 + 1e-17, -(c as f64) / 3.0));
        let json = serde_json::to_string(&MatrixRecord::from(&m)).unwrap();
        let back: MatrixRecord = serde_json::from_str(&json).unwrap();
        let m2 = back.to_matrix().unwrap();
        for (a, b) in m.iter().zip(m2.iter()) {
            assert_eq!(a.re.to_bits(), b.re.to_bits());
            assert_eq!(a.im.to_bits(), b.im.to_bits());
        }
    }

    #[test]
    fn real_and_complex_paths_agree() {
        let h = tensor(&gates::x(), &gates::z()) + tensor(&gates::z(), &identity(2)) * real(0.3);
        let real_eig = eig_hermitian(&HermitianOp::new(h.clone()).unwrap());
        assert!(real_eig.vectors.iter().all(|z| z.im == 0.0));
        // A tiny imaginary perturbation forces the complex solver.
        let mut hc = h.clone();
        hc[(0, 1)] += c64(0.0, 1e-14);
        hc[(1, 0)] -= c64(0.0, 1e-14);
        let complex_eig = eig_hermitian(&HermitianOp::new(hc).unwrap());
        for (a, b) in real_eig.values.iter().zip(&complex_eig.values) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(max_norm(&(real_eig.reconstruct() - &h)) < 1e-12);
        assert!(unitarity_defect(&real_eig.vectors) < 1e-12);
    }

    #[test]
    fn evolve_ket_matches_propagator() {
        let h = HermitianOp::new(gates::x() + gates::y() * real(0.4) + gates::z() * real(-0.7)).unwrap();
        let psi = CVector::from_vec(vec![c64(0.6, 0.0), c64(0.0, 0.8)]);
        let direct = expm_i(&h, 1.3) * &psi;
        let via = eig_hermitian(&h).evolve_ket(1.3, &psi);
        assert!((direct - via).norm() < 1e-12);
    }
}
