//! Quantum channels in Kraus form.

use crate::error::{Error, Result};
use crate::linalg::{
    self, hermitian_eig, hermitian_residual, identity, is_finite, max_abs, real, trace,
    unvectorize, vectorize, ComplexMatrix, C64,
};

/// Trace-preservation residual accepted by [`KrausChannel::new`].
pub const TP_STRICT: f64 = 1e-9;
/// Residual above which [`KrausChannel::validate`] rejects a channel.
pub const TP_LENIENT: f64 = 1e-6;
/// Minimum Choi eigenvalue accepted for loaded channels.
pub const CHOI_FLOOR: f64 = -1e-7;

const ZERO_OPERATOR: f64 = 1e-12;

/// A channel `ρ ↦ Σ K_i ρ K_i†` on `C^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel {
    dim: usize,
    kraus: Vec<ComplexMatrix>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    pub tp_residual: f64,
    pub cp_min_choi_eigenvalue: f64,
}

impl KrausChannel {
    /// Builds a channel after checking shapes and trace preservation to [`TP_STRICT`].
    pub fn new(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let ch = Self::from_kraus(kraus)?;
        let residual = ch.tp_residual();
        if residual > TP_STRICT {
            return Err(Error::InvalidChannel(format!(
                "Σ K†K deviates from identity by {residual:.3e}"
            )));
        }
        Ok(ch)
    }

    /// Shape-checked but not trace-checked; use [`KrausChannel::validate`] afterwards.
    pub fn from_kraus(kraus: Vec<ComplexMatrix>) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidChannel("no Kraus operators".into()))?;
        let dim = first.nrows();
        if dim == 0 {
            return Err(Error::InvalidChannel("zero-dimensional space".into()));
        }
        for (i, k) in kraus.iter().enumerate() {
            if k.shape() != (dim, dim) {
                return Err(Error::dims(
                    format!("{dim}x{dim} Kraus operator"),
                    format!("{}x{} at index {i}", k.nrows(), k.ncols()),
                ));
            }
            if !is_finite(k) {
                return Err(Error::NonFinite);
            }
        }
        Ok(KrausChannel { dim, kraus })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kraus(&self) -> &[ComplexMatrix] {
        &self.kraus
    }

    pub fn num_kraus(&self) -> usize {
        self.kraus.len()
    }

    fn tp_residual(&self) -> f64 {
        let sum = self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| {
                acc + k.adjoint() * k
            });
        max_abs(&(sum - identity(self.dim)))
    }

    /// Choi matrix `Σ_i vec(K_i) vec(K_i)†`.
    pub fn choi(&self) -> ComplexMatrix {
        let n = self.dim * self.dim;
        self.kraus.iter().fold(ComplexMatrix::zeros(n, n), |acc, k| {
            let v = vectorize(k);
            acc + &v * v.adjoint()
        })
    }

    /// Reports trace-preservation and complete-positivity residuals.
    pub fn validate(&self) -> Result<ValidationReport> {
        let tp_residual = self.tp_residual();
        let (choi_eigs, _) = hermitian_eig(&self.choi())?;
        let report = ValidationReport {
            tp_residual,
            cp_min_choi_eigenvalue: choi_eigs[0],
        };
        if tp_residual > TP_LENIENT {
            return Err(Error::InvalidChannel(format!(
                "not trace preserving (residual {tp_residual:.3e})"
            )));
        }
        if report.cp_min_choi_eigenvalue < CHOI_FLOOR {
            return Err(Error::InvalidChannel(format!(
                "Choi matrix has eigenvalue {:.3e}",
                report.cp_min_choi_eigenvalue
            )));
        }
        Ok(report)
    }

    /// `Σ K_i X K_i†`.
    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::dims(
                format!("{0}x{0}", self.dim),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        Ok(self
            .kraus
            .iter()
            .fold(ComplexMatrix::zeros(self.dim, self.dim), |acc, k| {
                acc + k * x * k.adjoint()
            }))
    }

    /// Matrix of the channel acting on column-stacked operators: `Σ conj(K_i) ⊗ K_i`.
    pub fn superoperator(&self) -> Superoperator {
        let n = self.dim * self.dim;
        let matrix = self.kraus.iter().fold(ComplexMatrix::zeros(n, n), |acc, k| {
            acc + k.conjugate().kronecker(k)
        });
        Superoperator {
            dim: self.dim,
            matrix,
        }
    }

    /// Kraus operators whose Hilbert-Schmidt norm exceeds the zero cutoff.
    pub fn nonzero_kraus(&self) -> impl Iterator<Item = (usize, &ComplexMatrix)> {
        self.kraus
            .iter()
            .enumerate()
            .filter(|(_, k)| linalg::frobenius(k) > ZERO_OPERATOR)
    }

    pub fn identity(dim: usize) -> Self {
        KrausChannel {
            dim,
            kraus: vec![identity(dim)],
        }
    }

    /// Completely depolarizing channel `ρ ↦ tr(ρ) I/d`, Kraus `{|i⟩⟨j|/√d}`.
    pub fn depolarizing(dim: usize) -> Self {
        let scale = real(1.0 / (dim as f64).sqrt());
        let mut kraus = Vec::with_capacity(dim * dim);
        for j in 0..dim {
            for i in 0..dim {
                let mut k = ComplexMatrix::zeros(dim, dim);
                k[(i, j)] = scale;
                kraus.push(k);
            }
        }
        KrausChannel { dim, kraus }
    }

    /// Qubit amplitude damping with decay probability `gamma`.
    pub fn amplitude_damping(gamma: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidProbability(gamma));
        }
        let k0 = ComplexMatrix::from_row_slice(
            2,
            2,
            &[real(1.0), real(0.0), real(0.0), real((1.0 - gamma).sqrt())],
        );
        let k1 = ComplexMatrix::from_row_slice(
            2,
            2,
            &[real(0.0), real(gamma.sqrt()), real(0.0), real(0.0)],
        );
        Self::new(vec![k0, k1])
    }

    pub fn unitary(u: ComplexMatrix) -> Result<Self> {
        Self::new(vec![u])
    }
}

/// The mixture `p·Φ_1 + (1−p)·Φ_0` as the Kraus list `{√(1−p) K⁽⁰⁾} ∪ {√p K⁽¹⁾}`.
///
/// At `p ∈ {0, 1}` the zero-weighted operators are dropped.
pub fn mix(ch0: &KrausChannel, ch1: &KrausChannel, p: f64) -> Result<KrausChannel> {
    if ch0.dim != ch1.dim {
        return Err(Error::dims(ch0.dim, ch1.dim));
    }
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        return Err(Error::InvalidProbability(p));
    }
    if p == 0.0 {
        return Ok(ch0.clone());
    }
    if p == 1.0 {
        return Ok(ch1.clone());
    }
    let w0 = real((1.0 - p).sqrt());
    let w1 = real(p.sqrt());
    let kraus = ch0
        .kraus
        .iter()
        .map(|k| k * w0)
        .chain(ch1.kraus.iter().map(|k| k * w1))
        .collect();
    Ok(KrausChannel {
        dim: ch0.dim,
        kraus,
    })
}

/// A positive semidefinite operator of unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

const STATE_TOL: f64 = 1e-9;

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        Self::with_tolerance(matrix, STATE_TOL)
    }

    /// Checks Hermiticity, positivity and unit trace to `tol`.
    pub fn with_tolerance(matrix: ComplexMatrix, tol: f64) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidState(format!(
                "shape {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        if !is_finite(&matrix) {
            return Err(Error::NonFinite);
        }
        let residual = hermitian_residual(&matrix);
        if residual > tol {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {residual:.3e})"
            )));
        }
        let tr = trace(&matrix);
        if (tr - real(1.0)).norm() > tol {
            return Err(Error::InvalidState(format!("trace {tr}")));
        }
        let (eigs, _) = hermitian_eig(&matrix)?;
        if eigs[0] < -tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:.3e}",
                eigs[0]
            )));
        }
        Ok(DensityOperator { matrix })
    }

    /// Hermitizes and renormalizes a numerically computed state, then checks it.
    pub(crate) fn from_numerical(matrix: &ComplexMatrix, tol: f64) -> Result<Self> {
        let h = linalg::hermitian_part(matrix);
        let tr = trace(&h).re;
        if tr.abs() < f64::MIN_POSITIVE {
            return Err(Error::InvalidState("zero trace".into()));
        }
        Self::with_tolerance(h.unscale(tr), tol)
    }

    pub fn pure(psi: &ComplexMatrix) -> Result<Self> {
        let norm = linalg::frobenius(psi);
        if psi.ncols() != 1 || norm == 0.0 {
            return Err(Error::InvalidState("pure state needs a nonzero column".into()));
        }
        let v = psi.unscale(norm);
        Ok(DensityOperator {
            matrix: &v * v.adjoint(),
        })
    }

    /// `|i⟩⟨i|` in dimension `d`.
    pub fn basis(dim: usize, i: usize) -> Self {
        let mut matrix = ComplexMatrix::zeros(dim, dim);
        matrix[(i, i)] = real(1.0);
        DensityOperator { matrix }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityOperator {
            matrix: identity(dim).unscale(dim as f64),
        }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }
}

/// Matrix of a channel on the column-stacked operator space `C^{d²}`.
#[derive(Debug, Clone, PartialEq)]
pub struct Superoperator {
    dim: usize,
    matrix: ComplexMatrix,
}

impl Superoperator {
    pub fn from_matrix(dim: usize, matrix: ComplexMatrix) -> Result<Self> {
        if matrix.shape() != (dim * dim, dim * dim) {
            return Err(Error::dims(
                format!("{0}x{0}", dim * dim),
                format!("{}x{}", matrix.nrows(), matrix.ncols()),
            ));
        }
        Ok(Superoperator { dim, matrix })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        if x.shape() != (self.dim, self.dim) {
            return Err(Error::dims(
                format!("{0}x{0}", self.dim),
                format!("{}x{}", x.nrows(), x.ncols()),
            ));
        }
        unvectorize(&(&self.matrix * vectorize(x)), self.dim)
    }

    pub fn eigenvalues(&self) -> Result<Vec<C64>> {
        linalg::eigenvalues(&self.matrix)
    }

    pub fn spectral_radius(&self) -> Result<f64> {
        Ok(self
            .eigenvalues()?
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, diag};

    fn amplitude(g: f64) -> KrausChannel {
        KrausChannel::amplitude_damping(g).unwrap()
    }

    fn sample_state() -> ComplexMatrix {
        ComplexMatrix::from_row_slice(2, 2, &[real(0.7), c(0.1, 0.2), c(0.1, -0.2), real(0.3)])
    }

    #[test]
    fn validate_identity_and_damping() {
        let r = KrausChannel::identity(2).validate().unwrap();
        assert_eq!(r.tp_residual, 0.0);
        assert!(r.cp_min_choi_eigenvalue >= -1e-12);
        let r = amplitude(0.3).validate().unwrap();
        assert!(r.tp_residual < 1e-15);
    }

    #[test]
    fn validate_rejects_half_identity() {
        let ch = KrausChannel::from_kraus(vec![identity(2).unscale(2.0)]).unwrap();
        assert!(matches!(ch.validate(), Err(Error::InvalidChannel(_))));
        assert!(KrausChannel::new(vec![identity(2).unscale(2.0)]).is_err());
    }

    #[test]
    fn from_kraus_rejects_bad_shapes() {
        assert!(KrausChannel::from_kraus(vec![]).is_err());
        let bad = vec![identity(2), ComplexMatrix::zeros(3, 3)];
        assert!(matches!(
            KrausChannel::from_kraus(bad),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn apply_examples() {
        let rho = sample_state();
        let out = KrausChannel::depolarizing(2).apply(&rho).unwrap();
        assert!(max_abs(&(out - identity(2).unscale(2.0))) < 1e-15);
        let out = KrausChannel::identity(2).apply(&rho).unwrap();
        assert_eq!(out, rho);
        let out = amplitude(1.0)
            .apply(DensityOperator::basis(2, 1).matrix())
            .unwrap();
        assert!(max_abs(&(out - DensityOperator::basis(2, 0).into_matrix())) < 1e-15);
        assert!(KrausChannel::identity(2).apply(&identity(3)).is_err());
    }

    #[test]
    fn superoperator_examples() {
        assert_eq!(KrausChannel::identity(2).superoperator().matrix(), &identity(4));
        let u = diag(&[real(1.0), c(0.0, 1.0)]);
        let s = KrausChannel::unitary(u).unwrap().superoperator();
        // column stacking: X10 picks up i, X01 picks up -i
        let expected = diag(&[real(1.0), c(0.0, 1.0), c(0.0, -1.0), real(1.0)]);
        assert!(max_abs(&(s.matrix() - expected)) < 1e-15);
    }

    #[test]
    fn superoperator_matches_apply() {
        let ch = amplitude(0.4);
        let x = sample_state();
        let via_super = ch.superoperator().apply(&x).unwrap();
        assert!(max_abs(&(via_super - ch.apply(&x).unwrap())) < 1e-14);
    }

    #[test]
    fn mix_examples() {
        let a = amplitude(0.3);
        let b = KrausChannel::depolarizing(2);
        assert_eq!(mix(&a, &b, 0.0).unwrap(), a);
        assert_eq!(mix(&a, &b, 1.0).unwrap(), b);
        let id = KrausChannel::identity(2);
        let half = mix(&id, &id, 0.5).unwrap();
        let x = sample_state();
        assert!(max_abs(&(half.apply(&x).unwrap() - &x)) < 1e-15);
        assert!(matches!(mix(&a, &b, 1.5), Err(Error::InvalidProbability(_))));
        assert!(matches!(
            mix(&a, &KrausChannel::identity(3), 0.5),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn density_operator_checks() {
        assert!(DensityOperator::new(sample_state()).is_ok());
        assert!(DensityOperator::new(identity(2)).is_err());
        let neg = diag(&[real(1.5), real(-0.5)]);
        assert!(DensityOperator::new(neg).is_err());
    }
}
