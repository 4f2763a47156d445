//! Dense complex linear algebra shared by every other module.
//!
//! Matrices are `nalgebra::DMatrix<Complex64>`. Operators on `B(H)` are
//! vectorized by column stacking, which is exactly nalgebra's storage order:
//! `vec(X)[i + j*d] = X[(i, j)]`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type ComplexMatrix = DMatrix<Complex64>;

const MAX_SWEEPS: usize = 10_000;

/// Cutoff policy shared by every rank, support and containment decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Relative cutoff for eigenvalue-1 multiplicity and numerical rank.
    pub rank: f64,
    /// Eigenvalue cutoff, relative to the largest one, defining the support of a state.
    pub support: f64,
    /// Norm bound for containment/orthogonality/enclosure tests on computed subspaces.
    pub subspace: f64,
    /// Relative gap separating eigenvalue clusters during spectral splitting.
    pub cluster: f64,
    /// Cauchy-Schwarz slack for Kraus proportionality.
    pub proportionality: f64,
    /// Absolute threshold for a digraph edge in a stochastic matrix.
    pub edge: f64,
    /// Condition number of `L†R` above which the spectral projector is rejected.
    pub max_condition: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            rank: 1e-9,
            support: 1e-8,
            subspace: 1e-7,
            cluster: 1e-6,
            proportionality: 1e-9,
            edge: 1e-12,
            max_condition: 1e8,
        }
    }
}

impl Tolerances {
    pub fn with_rank(rank: f64) -> Self {
        Tolerances {
            rank,
            ..Default::default()
        }
    }
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn real(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn identity(n: usize) -> ComplexMatrix {
    ComplexMatrix::identity(n, n)
}

/// Column vector `e_i` in `C^n`.
pub fn basis_vector(n: usize, i: usize) -> ComplexMatrix {
    let mut v = ComplexMatrix::zeros(n, 1);
    v[(i, 0)] = real(1.0);
    v
}

pub fn from_real(m: &DMatrix<f64>) -> ComplexMatrix {
    m.map(real)
}

pub fn diag(entries: &[C64]) -> ComplexMatrix {
    ComplexMatrix::from_diagonal(&DVector::from_column_slice(entries))
}

pub fn max_abs(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn frobenius(m: &ComplexMatrix) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn trace(m: &ComplexMatrix) -> C64 {
    m.diagonal().iter().sum()
}

/// Hilbert-Schmidt inner product `tr(A† B)`.
pub fn hs_inner(a: &ComplexMatrix, b: &ComplexMatrix) -> C64 {
    a.iter().zip(b.iter()).map(|(x, y)| x.conj() * y).sum()
}

pub fn is_finite(m: &ComplexMatrix) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

pub fn hermitian_part(m: &ComplexMatrix) -> ComplexMatrix {
    (m + m.adjoint()).scale(0.5)
}

pub fn hermitian_residual(m: &ComplexMatrix) -> f64 {
    max_abs(&(m - m.adjoint()))
}

/// Column-stacking vectorization of a square or rectangular matrix.
pub fn vectorize(m: &ComplexMatrix) -> ComplexMatrix {
    ComplexMatrix::from_column_slice(m.len(), 1, m.as_slice())
}

/// Inverse of [`vectorize`] for a `d × d` operator.
pub fn unvectorize(v: &ComplexMatrix, d: usize) -> Result<ComplexMatrix> {
    if v.len() != d * d {
        return Err(Error::dims(d * d, v.len()));
    }
    Ok(ComplexMatrix::from_column_slice(d, d, v.as_slice()))
}

fn require_square(m: &ComplexMatrix) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::dims(
            format!("square matrix, {} rows", m.nrows()),
            format!("{} columns", m.ncols()),
        ));
    }
    Ok(())
}

/// Eigendecomposition of a Hermitian matrix, eigenvalues ascending.
pub fn hermitian_eig(m: &ComplexMatrix) -> Result<(Vec<f64>, ComplexMatrix)> {
    require_square(m)?;
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let residual = hermitian_residual(m);
    if residual > 1e-9 * max_abs(m).max(1.0) {
        return Err(Error::NonHermitian { residual });
    }
    let n = m.nrows();
    if n == 0 {
        return Ok((Vec::new(), ComplexMatrix::zeros(0, 0)));
    }
    let eig = hermitian_part(m)
        .try_symmetric_eigen(f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure("Hermitian eigensolver"))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Singular value decomposition with singular values in descending order.
///
/// Returns `(U, s, V)` with `M = U diag(s) V†`. For square input both factors
/// are unitary; otherwise they are thin.
pub fn svd(m: &ComplexMatrix) -> Result<(ComplexMatrix, Vec<f64>, ComplexMatrix)> {
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Ok((
            ComplexMatrix::zeros(m.nrows(), 0),
            Vec::new(),
            ComplexMatrix::zeros(m.ncols(), 0),
        ));
    }
    let dec = m
        .clone()
        .try_svd(true, true, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure("singular value decomposition"))?;
    let u = dec.u.expect("requested U");
    let v = dec.v_t.expect("requested V^T").adjoint();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let s = order.iter().map(|&i| dec.singular_values[i]).collect();
    let mut us = ComplexMatrix::zeros(u.nrows(), k);
    let mut vs = ComplexMatrix::zeros(v.nrows(), k);
    for (dst, &src) in order.iter().enumerate() {
        us.set_column(dst, &u.column(src));
        vs.set_column(dst, &v.column(src));
    }
    Ok((us, s, vs))
}

pub fn singular_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    if m.is_empty() {
        return Ok(Vec::new());
    }
    if !is_finite(m) {
        return Err(Error::NonFinite);
    }
    let mut s: Vec<f64> = m
        .clone()
        .try_svd(false, false, f64::EPSILON, MAX_SWEEPS)
        .ok_or(Error::ConvergenceFailure("singular value decomposition"))?
        .singular_values
        .iter()
        .copied()
        .collect();
    s.sort_by(|a, b| b.total_cmp(a));
    Ok(s)
}

/// Operator 2-norm.
pub fn spectral_norm(m: &ComplexMatrix) -> Result<f64> {
    Ok(singular_values(m)?.first().copied().unwrap_or(0.0))
}

/// Null space of `m`: right singular vectors whose singular value is at most `cutoff`.
pub fn null_space(m: &ComplexMatrix, cutoff: f64) -> Result<Subspace> {
    let (rows, cols) = m.shape();
    if cols == 0 {
        return Ok(Subspace::zero(0));
    }
    // Pad wide matrices so the decomposition returns a full set of right vectors.
    let padded = if rows < cols {
        let mut p = ComplexMatrix::zeros(cols, cols);
        p.view_mut((0, 0), (rows, cols)).copy_from(m);
        p
    } else {
        m.clone()
    };
    let (_, s, v) = svd(&padded)?;
    let keep: Vec<usize> = (0..s.len()).filter(|&i| s[i] <= cutoff).collect();
    let mut basis = ComplexMatrix::zeros(cols, keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &v.column(src));
    }
    Ok(Subspace::from_orthonormal(basis))
}

/// A subspace of `C^n` held as an orthonormal column basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Subspace {
    basis: ComplexMatrix,
}

impl Subspace {
    pub fn zero(ambient_dim: usize) -> Self {
        Subspace {
            basis: ComplexMatrix::zeros(ambient_dim, 0),
        }
    }

    pub fn full(ambient_dim: usize) -> Self {
        Subspace {
            basis: identity(ambient_dim),
        }
    }

    /// Wraps a basis already known to be orthonormal.
    pub fn from_orthonormal(basis: ComplexMatrix) -> Self {
        debug_assert!(
            basis.ncols() == 0
                || max_abs(&(basis.adjoint() * &basis - identity(basis.ncols()))) < 1e-8
        );
        Subspace { basis }
    }

    /// Checked constructor enforcing `‖B†B − I‖_max ≤ 1e-10`.
    pub fn new(basis: ComplexMatrix) -> Result<Self> {
        if !is_finite(&basis) {
            return Err(Error::NonFinite);
        }
        if basis.ncols() > basis.nrows() {
            return Err(Error::dims(
                format!("at most {} basis vectors", basis.nrows()),
                basis.ncols(),
            ));
        }
        let residual = max_abs(&(basis.adjoint() * &basis - identity(basis.ncols())));
        if residual > 1e-10 {
            return Err(Error::InvalidArgument(format!(
                "basis not orthonormal (residual {residual:.3e})"
            )));
        }
        Ok(Subspace { basis })
    }

    pub fn ambient_dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_zero(&self) -> bool {
        self.dim() == 0
    }

    pub fn basis(&self) -> &ComplexMatrix {
        &self.basis
    }

    pub fn into_basis(self) -> ComplexMatrix {
        self.basis
    }

    /// Orthogonal projector `B B†`.
    pub fn projector(&self) -> ComplexMatrix {
        &self.basis * self.basis.adjoint()
    }

    pub fn complement(&self) -> Result<Subspace> {
        let n = self.ambient_dim();
        if self.dim() == 0 {
            return Ok(Subspace::full(n));
        }
        null_space(&self.basis.adjoint(), 0.5)
    }

    /// Maps a subspace expressed in this subspace's coordinates back to the ambient space.
    pub fn embed(&self, inner: &Subspace) -> Result<Subspace> {
        if inner.ambient_dim() != self.dim() {
            return Err(Error::dims(self.dim(), inner.ambient_dim()));
        }
        Ok(Subspace {
            basis: &self.basis * &inner.basis,
        })
    }

    /// `‖(I − P) v‖` for each column of `vectors`, maximized.
    pub fn leakage(&self, vectors: &ComplexMatrix) -> Result<f64> {
        if vectors.nrows() != self.ambient_dim() {
            return Err(Error::dims(self.ambient_dim(), vectors.nrows()));
        }
        let outside = vectors - &self.basis * (self.basis.adjoint() * vectors);
        spectral_norm(&outside)
    }
}

/// Orthonormal basis for the span of the given columns.
///
/// Directions with singular value at most `tol · s_max` are dropped.
pub fn orthonormal_span(vectors: &[ComplexMatrix], tol: f64) -> Result<Subspace> {
    let first = vectors
        .first()
        .ok_or(Error::EmptyInput("orthonormal_span needs at least one vector"))?;
    orthonormal_span_in(first.nrows(), vectors, tol)
}

/// Like [`orthonormal_span`], but an empty list yields the zero subspace of `C^ambient_dim`.
pub fn orthonormal_span_in(
    ambient_dim: usize,
    vectors: &[ComplexMatrix],
    tol: f64,
) -> Result<Subspace> {
    if tol <= 0.0 {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let total: usize = vectors.iter().map(|v| v.ncols()).sum();
    let mut stacked = ComplexMatrix::zeros(ambient_dim, total);
    let mut col = 0;
    for v in vectors {
        if v.nrows() != ambient_dim {
            return Err(Error::dims(ambient_dim, v.nrows()));
        }
        stacked.view_mut((0, col), (ambient_dim, v.ncols())).copy_from(v);
        col += v.ncols();
    }
    if total == 0 {
        return Ok(Subspace::zero(ambient_dim));
    }
    let (u, s, _) = svd(&stacked)?;
    let top = s[0];
    if top == 0.0 {
        return Ok(Subspace::zero(ambient_dim));
    }
    let rank = s.iter().take_while(|&&x| x > tol * top).count();
    Ok(Subspace::from_orthonormal(u.columns(0, rank).into_owned()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceRelation {
    Equal,
    /// First argument lies inside the second.
    Contained,
    Orthogonal,
    Neither,
}

pub fn is_contained(v: &Subspace, w: &Subspace, tol: f64) -> Result<bool> {
    if v.ambient_dim() != w.ambient_dim() {
        return Err(Error::dims(w.ambient_dim(), v.ambient_dim()));
    }
    Ok(w.leakage(v.basis())? <= tol)
}

pub fn is_orthogonal(v: &Subspace, w: &Subspace, tol: f64) -> Result<bool> {
    if v.ambient_dim() != w.ambient_dim() {
        return Err(Error::dims(w.ambient_dim(), v.ambient_dim()));
    }
    Ok(spectral_norm(&(w.basis().adjoint() * v.basis()))? <= tol)
}

/// Classifies `v` against `w`: `‖(I − P_W) P_V‖₂ ≤ tol` is containment and
/// `‖P_W P_V‖₂ ≤ tol` is orthogonality.
pub fn subspace_relation(v: &Subspace, w: &Subspace, tol: f64) -> Result<SubspaceRelation> {
    let inside = is_contained(v, w, tol)?;
    if inside && is_contained(w, v, tol)? {
        return Ok(SubspaceRelation::Equal);
    }
    if inside {
        return Ok(SubspaceRelation::Contained);
    }
    if is_orthogonal(v, w, tol)? {
        return Ok(SubspaceRelation::Orthogonal);
    }
    Ok(SubspaceRelation::Neither)
}

/// Eigenvalue-1 eigenspace of `m`, i.e. the null space of `m − I` with
/// singular values below `tol · max(1, ‖m‖₂)` counted as zero.
pub fn eigenspace_one(m: &ComplexMatrix, tol: f64) -> Result<Subspace> {
    require_square(m)?;
    let scale = spectral_norm(m)?.max(1.0);
    null_space(&(m - identity(m.nrows())), tol * scale)
}

/// Principal square root and inverse square root of a positive definite Hermitian matrix.
pub(crate) fn inverse_sqrt(m: &ComplexMatrix, floor: f64) -> Result<ComplexMatrix> {
    let (values, vectors) = hermitian_eig(m)?;
    let top = values.last().copied().unwrap_or(0.0);
    if values.iter().any(|&x| x <= floor * top) {
        return Err(Error::InvalidArgument(
            "matrix is not positive definite".into(),
        ));
    }
    let scaled = DVector::from_iterator(values.len(), values.iter().map(|&x| real(x.powf(-0.5))));
    Ok(&vectors * ComplexMatrix::from_diagonal(&scaled) * vectors.adjoint())
}

/// Unitary polar factor `U V†` of `m = U Σ V†`, with the ratio of extreme singular values.
pub(crate) fn polar_unitary(m: &ComplexMatrix) -> Result<(ComplexMatrix, f64)> {
    let (u, s, v) = svd(m)?;
    let spread = match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        _ => 0.0,
    };
    Ok((u * v.adjoint(), spread))
}

/// Eigenvalues of a general complex square matrix, via Schur form.
pub fn eigenvalues(m: &ComplexMatrix) -> Result<Vec<C64>> {
    require_square(m)?;
    if m.nrows() == 0 {
        return Ok(Vec::new());
    }
    // Clustered unimodular spectra (unitary channels) can stall the QR iteration at
    // machine precision; looser deflation thresholds still give eigenvalues far
    // below the tolerances used downstream.
    let schur = [f64::EPSILON, 1e-14, 1e-13, 1e-12]
        .into_iter()
        .find_map(|eps| m.clone().try_schur(eps, MAX_SWEEPS))
        .ok_or(Error::ConvergenceFailure("Schur decomposition"))?;
    let (_, t) = schur.unpack();
    Ok(t.diagonal().iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn col(entries: &[C64]) -> ComplexMatrix {
        ComplexMatrix::from_column_slice(entries.len(), 1, entries)
    }

    #[test]
    fn hermitian_eig_of_identity() {
        let (vals, vecs) = hermitian_eig(&identity(2)).unwrap();
        assert_eq!(vals.len(), 2);
        assert!(vals.iter().all(|v| (v - 1.0).abs() < 1e-12));
        assert!(max_abs(&(vecs.adjoint() * &vecs - identity(2))) < 1e-12);
    }

    #[test]
    fn hermitian_eig_sorts_diagonal() {
        let m = diag(&[real(3.0), real(-1.0)]);
        let (vals, _) = hermitian_eig(&m).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 3.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eig_pauli_x() {
        let x = ComplexMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(1.0), real(0.0)]);
        let (vals, vecs) = hermitian_eig(&x).unwrap();
        assert!((vals[0] + 1.0).abs() < 1e-12 && (vals[1] - 1.0).abs() < 1e-12);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        // eigenvectors up to phase: (1,-1)/√2 and (1,1)/√2
        let minus = col(&[real(s), real(-s)]);
        let plus = col(&[real(s), real(s)]);
        assert!((hs_inner(&minus, &vecs.columns(0, 1).into_owned()).norm() - 1.0).abs() < 1e-12);
        assert!((hs_inner(&plus, &vecs.columns(1, 1).into_owned()).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hermitian_eig_residual_complex() {
        let m = ComplexMatrix::from_row_slice(
            3,
            3,
            &[
                real(2.0),
                c(1.0, 1.0),
                c(0.0, -0.5),
                c(1.0, -1.0),
                real(-1.0),
                c(0.3, 0.2),
                c(0.0, 0.5),
                c(0.3, -0.2),
                real(0.5),
            ],
        );
        let (vals, v) = hermitian_eig(&m).unwrap();
        let lam = diag(&vals.iter().map(|&x| real(x)).collect::<Vec<_>>());
        let norm = spectral_norm(&m).unwrap();
        assert!(max_abs(&(&m * &v - &v * lam)) <= 1e-8 * norm);
        assert!(max_abs(&(v.adjoint() * &v - identity(3))) <= 1e-9);
    }

    #[test]
    fn hermitian_eig_rejects_non_hermitian() {
        let m = ComplexMatrix::from_row_slice(2, 2, &[real(0.0), real(1.0), real(0.0), real(0.0)]);
        assert!(matches!(hermitian_eig(&m), Err(Error::NonHermitian { .. })));
    }

    #[test]
    fn span_examples() {
        let e1 = basis_vector(2, 0);
        let e2 = basis_vector(2, 1);
        assert_eq!(orthonormal_span(&[e1.clone(), e1.clone()], 1e-10).unwrap().dim(), 1);
        assert_eq!(orthonormal_span(&[e1.clone(), e2.clone()], 1e-10).unwrap().dim(), 2);
        let nearly = &e1 + e2.scale(1e-14);
        assert_eq!(orthonormal_span(&[e1.clone(), nearly], 1e-10).unwrap().dim(), 1);
        assert!(matches!(orthonormal_span(&[], 1e-10), Err(Error::EmptyInput(_))));
        assert_eq!(orthonormal_span_in(3, &[], 1e-10).unwrap().dim(), 0);
    }

    #[test]
    fn relation_examples() {
        let e1 = Subspace::new(basis_vector(2, 0)).unwrap();
        let e2 = Subspace::new(basis_vector(2, 1)).unwrap();
        let full = Subspace::full(2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let diag_line = Subspace::new(col(&[real(s), real(s)])).unwrap();
        assert_eq!(subspace_relation(&e1, &full, 1e-9).unwrap(), SubspaceRelation::Contained);
        assert_eq!(subspace_relation(&e1, &e2, 1e-9).unwrap(), SubspaceRelation::Orthogonal);
        assert_eq!(subspace_relation(&diag_line, &e1, 1e-9).unwrap(), SubspaceRelation::Neither);
        assert_eq!(subspace_relation(&full, &full, 1e-9).unwrap(), SubspaceRelation::Equal);
        let other = Subspace::zero(3);
        assert!(matches!(
            subspace_relation(&e1, &other, 1e-9),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn eigenspace_one_examples() {
        assert_eq!(eigenspace_one(&identity(3), 1e-9).unwrap().dim(), 3);
        let fix = eigenspace_one(&diag(&[real(1.0), real(0.5)]), 1e-9).unwrap();
        assert_eq!(fix.dim(), 1);
        assert!((fix.basis()[(0, 0)].norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn complement_and_null_space() {
        let e1 = Subspace::new(basis_vector(3, 0)).unwrap();
        let rest = e1.complement().unwrap();
        assert_eq!(rest.dim(), 2);
        assert!(is_orthogonal(&e1, &rest, 1e-12).unwrap());
        assert_eq!(Subspace::zero(3).complement().unwrap().dim(), 3);
        assert_eq!(Subspace::full(3).complement().unwrap().dim(), 0);
    }

    #[test]
    fn vectorization_is_column_stacking() {
        let x = ComplexMatrix::from_row_slice(2, 2, &[real(1.0), real(2.0), real(3.0), real(4.0)]);
        let v = vectorize(&x);
        assert_eq!(v[(1, 0)], real(3.0));
        assert_eq!(v[(2, 0)], real(2.0));
        assert_eq!(unvectorize(&v, 2).unwrap(), x);
    }

    #[test]
    fn schur_eigenvalues_of_diagonal_unitary() {
        let m = diag(&[real(1.0), c(0.0, 1.0)]);
        let mut ev = eigenvalues(&m).unwrap();
        ev.sort_by(|a, b| a.im.total_cmp(&b.im));
        assert!((ev[0] - real(1.0)).norm() < 1e-12);
        assert!((ev[1] - c(0.0, 1.0)).norm() < 1e-12);
    }
}
