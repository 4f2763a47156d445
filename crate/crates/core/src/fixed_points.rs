//! Fixed points of a channel: the space `Fix(Φ)`, the Cesàro limit `Φ^∞`,
//! invariant states and the recurrent/decaying split of the Hilbert space.
//!
//! `Φ^∞` is computed as the spectral projector onto the eigenvalue-1
//! eigenspace, `P = R (L†R)⁻¹ L†` with `R`/`L` orthonormal bases of the right
//! and left null spaces of `S − I`. Channels have no Jordan blocks at 1, so
//! this coincides with the time average; peripheral eigenvalues other than 1
//! are annihilated by the average and play no role here.

use crate::channel::{DensityOperator, KrausChannel, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{
    self, eigenspace_one, hermitian_eig, identity, max_abs, null_space, orthonormal_span_in,
    singular_values, spectral_norm, unvectorize, vectorize, ComplexMatrix, Subspace, Tolerances,
    C64,
};

/// Doublings used by the averaging fallback, i.e. `T = 2^20`.
const FALLBACK_DOUBLINGS: u32 = 20;
const IDEMPOTENCY_TOL: f64 = 1e-7;

/// `Fix(Φ)` as an orthonormal (Hilbert-Schmidt) basis of vectorized operators.
#[derive(Debug, Clone)]
pub struct FixSpace {
    channel_dim: usize,
    basis: Subspace,
}

impl FixSpace {
    pub fn channel_dim(&self) -> usize {
        self.channel_dim
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> &Subspace {
        &self.basis
    }

    /// The `i`-th basis element as a `d × d` operator.
    pub fn element(&self, i: usize) -> ComplexMatrix {
        let col = self.basis.basis().columns(i, 1).into_owned();
        unvectorize(&col, self.channel_dim).expect("basis vectors have length d²")
    }
}

pub fn fix_space(ch: &KrausChannel, tol: f64) -> Result<FixSpace> {
    let basis = eigenspace_one(ch.superoperator().matrix(), tol)?;
    Ok(FixSpace {
        channel_dim: ch.dim(),
        basis,
    })
}

/// Spectral projector onto the eigenvalue-1 eigenspace of `m` along the other
/// generalized eigenspaces. Falls back to time averaging when `L†R` is
/// ill-conditioned and fails if the fallback is not idempotent either.
pub fn spectral_projector(m: &ComplexMatrix, tols: &Tolerances) -> Result<ComplexMatrix> {
    let n = m.nrows();
    let shifted = m - identity(n);
    let cutoff = tols.rank * spectral_norm(m)?.max(1.0);
    let right = null_space(&shifted, cutoff)?;
    let left = null_space(&shifted.adjoint(), cutoff)?;
    if right.dim() == 0 && left.dim() == 0 {
        return Ok(ComplexMatrix::zeros(n, n));
    }
    let mut condition = f64::INFINITY;
    if right.dim() == left.dim() {
        let gram = left.basis().adjoint() * right.basis();
        let s = singular_values(&gram)?;
        let (hi, lo) = (s[0], s[s.len() - 1]);
        condition = if lo > 0.0 { hi / lo } else { f64::INFINITY };
        if condition <= tols.max_condition {
            let inv = gram
                .try_inverse()
                .ok_or(Error::IllConditionedProjector { condition })?;
            return Ok(right.basis() * inv * left.basis().adjoint());
        }
    }
    let averaged = doubling_average(m, FALLBACK_DOUBLINGS);
    if max_abs(&(&averaged * &averaged - &averaged)) > 1e-6 {
        return Err(Error::IllConditionedProjector { condition });
    }
    Ok(averaged)
}

/// `(1/T) Σ_{t=1}^{T} M^t` for `T = 2^doublings`, using `A(2T) = A(T) + M^T A(T)`.
pub fn doubling_average(m: &ComplexMatrix, doublings: u32) -> ComplexMatrix {
    let mut sum = m.clone();
    let mut power = m.clone();
    for _ in 0..doublings {
        sum = &sum + &power * &sum;
        power = &power * &power;
    }
    sum.unscale(2f64.powi(doublings as i32))
}

/// `Φ^∞ = lim (1/T) Σ_{t=1}^T Φ^t` as a superoperator.
pub fn cesaro_limit(ch: &KrausChannel, tols: &Tolerances) -> Result<Superoperator> {
    let s = ch.superoperator();
    let p = spectral_projector(s.matrix(), tols)?;
    debug_assert!(max_abs(&(&p * &p - &p)) < IDEMPOTENCY_TOL);
    Superoperator::from_matrix(ch.dim(), p)
}

/// `(1/T) Σ_{t=1}^T Φ^t(ρ₀)`.
pub fn cesaro_finite(
    ch: &KrausChannel,
    rho0: &DensityOperator,
    steps: usize,
) -> Result<DensityOperator> {
    if steps == 0 {
        return Err(Error::InvalidArgument("T must be at least 1".into()));
    }
    if rho0.dim() != ch.dim() {
        return Err(Error::dims(ch.dim(), rho0.dim()));
    }
    let mut rho = rho0.matrix().clone();
    let mut sum = ComplexMatrix::zeros(ch.dim(), ch.dim());
    for _ in 0..steps {
        rho = ch.apply(&rho)?;
        sum += &rho;
    }
    DensityOperator::from_numerical(&sum.unscale(steps as f64), 1e-9)
}

/// The `d²` states `|i⟩⟨i|`, `(|i⟩+|j⟩)(⟨i|+⟨j|)/2`, `(|i⟩+i|j⟩)(⟨i|−i⟨j|)/2`, which span `B(H)`.
pub fn spanning_states(dim: usize) -> Vec<DensityOperator> {
    let mut out = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        out.push(DensityOperator::basis(dim, i));
    }
    for i in 0..dim {
        for j in (i + 1)..dim {
            for phase in [C64::new(1.0, 0.0), C64::new(0.0, 1.0)] {
                let mut v = ComplexMatrix::zeros(dim, 1);
                v[(i, 0)] = C64::new(1.0, 0.0);
                v[(j, 0)] = phase;
                out.push(DensityOperator::pure(&v).expect("nonzero vector"));
            }
        }
    }
    out
}

/// A basis of `Fix(Φ)` made of density operators.
///
/// Applies `Φ^∞` to [`spanning_states`] and keeps a maximal independent subset,
/// each time taking the candidate with the largest component outside the span
/// collected so far.
pub fn invariant_state_basis(ch: &KrausChannel, tols: &Tolerances) -> Result<Vec<DensityOperator>> {
    let m = fix_space(ch, tols.rank)?.dim();
    let projector = cesaro_limit(ch, tols)?;
    let mut candidates: Vec<ComplexMatrix> = spanning_states(ch.dim())
        .iter()
        .map(|s| projector.apply(s.matrix()))
        .collect::<Result<_>>()?;
    let mut chosen: Vec<ComplexMatrix> = Vec::with_capacity(m);
    let mut frame: Vec<ComplexMatrix> = Vec::with_capacity(m);
    while chosen.len() < m {
        let mut best: Option<(usize, f64, ComplexMatrix)> = None;
        for (idx, cand) in candidates.iter().enumerate() {
            let v = vectorize(cand);
            let norm = linalg::frobenius(&v);
            if norm == 0.0 {
                continue;
            }
            let mut resid = v.clone();
            for q in &frame {
                let overlap = linalg::hs_inner(q, &resid);
                resid -= q * overlap;
            }
            let score = linalg::frobenius(&resid) / norm;
            if best.as_ref().is_none_or(|(_, s, _)| score > *s) {
                best = Some((idx, score, resid));
            }
        }
        match best {
            Some((idx, score, resid)) if score > tols.subspace => {
                let norm = linalg::frobenius(&resid);
                frame.push(resid.unscale(norm));
                chosen.push(candidates.swap_remove(idx));
            }
            _ => {
                return Err(Error::SpanDeficit {
                    expected: m,
                    found: chosen.len(),
                })
            }
        }
    }
    chosen
        .iter()
        .map(|x| DensityOperator::from_numerical(x, 1e-9))
        .collect()
}

/// Support of a positive operator: eigenvectors whose eigenvalue exceeds
/// `cutoff` times the largest eigenvalue.
pub fn support(x: &ComplexMatrix, cutoff: f64) -> Result<Subspace> {
    let (values, vectors) = hermitian_eig(&linalg::hermitian_part(x))?;
    let top = values.last().copied().unwrap_or(0.0);
    if top <= 0.0 {
        return Ok(Subspace::zero(x.nrows()));
    }
    let keep: Vec<usize> = (0..values.len())
        .filter(|&i| values[i] > cutoff * top)
        .collect();
    let mut basis = ComplexMatrix::zeros(x.nrows(), keep.len());
    for (dst, &src) in keep.iter().enumerate() {
        basis.set_column(dst, &vectors.column(src));
    }
    Ok(Subspace::from_orthonormal(basis))
}

/// Recurrent subspace `R` (span of supports of invariant states) and its
/// orthogonal complement, the decaying subspace `D`.
pub fn recurrent_and_decaying(
    ch: &KrausChannel,
    tols: &Tolerances,
) -> Result<(Subspace, Subspace)> {
    let states = invariant_state_basis(ch, tols)?;
    let supports = states
        .iter()
        .map(|s| support(s.matrix(), tols.support).map(Subspace::into_basis))
        .collect::<Result<Vec<_>>>()?;
    let recurrent = orthonormal_span_in(ch.dim(), &supports, tols.rank)?;
    let decaying = recurrent.complement()?;
    Ok((recurrent, decaying))
}
