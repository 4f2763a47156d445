//! Random test instances: channels, states, subspaces, stochastic matrices and automata.
//!
//! Structured channels are built from a [`BlockLayout`] so that their fixed-point
//! structure is known in advance: on `W_i = C^{m_i} ⊗ C^{d_i}` the channel acts
//! as `id ⊗ ψ_i` with `ψ_i` a generic (primitive) channel, and the decaying part
//! drains into the recurrent one through a strict contraction.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::automaton::{ClassicalCoinAutomaton, QuantumCoinAutomaton};
use crate::channel::{DensityOperator, KrausChannel};
use crate::linalg::{c, hermitian_eig, hermitian_part, identity, real, trace, ComplexMatrix, Subspace};

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Orthonormalizes the columns of a full-rank matrix (thin QR with a positive diagonal in R).
fn orthonormal_columns(m: ComplexMatrix) -> ComplexMatrix {
    let qr = m.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..q.ncols() {
        let d = r[(j, j)];
        if d.norm() > 0.0 {
            let phase = d / d.norm();
            let mut col = q.column_mut(j);
            col *= phase;
        }
    }
    q
}

/// Channel with `num_kraus` operators obtained by splitting an isometry `C^d → C^{rd}`
/// drawn from stacked complex Gaussian blocks.
pub fn random_channel(dim: usize, num_kraus: usize, rng: &mut impl Rng) -> KrausChannel {
    let stacked = gaussian_matrix(num_kraus * dim, dim, rng);
    let mut q = orthonormal_columns(stacked);
    // A common phase on all Kraus operators leaves the channel unchanged; fix it
    // so that the leading entry is real and nonnegative.
    let lead = q[(0, 0)];
    if lead.norm() > 0.0 {
        q *= lead.conj() / lead.norm();
    }
    let kraus = (0..num_kraus)
        .map(|l| q.view((l * dim, 0), (dim, dim)).into_owned())
        .collect();
    KrausChannel::new(kraus).expect("isometry blocks form a channel")
}

pub fn random_unitary(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    orthonormal_columns(gaussian_matrix(dim, dim, rng))
}

pub fn random_density(dim: usize, rng: &mut impl Rng) -> DensityOperator {
    let g = gaussian_matrix(dim, dim, rng);
    let rho = &g * g.adjoint();
    let tr = trace(&rho).re;
    DensityOperator::new(hermitian_part(&rho.unscale(tr))).expect("G G† / tr is a state")
}

/// Random state supported exactly on `v`.
pub fn random_density_in(v: &Subspace, rng: &mut impl Rng) -> DensityOperator {
    let inner = random_density(v.dim(), rng);
    let rho = v.basis() * inner.matrix() * v.basis().adjoint();
    DensityOperator::new(hermitian_part(&rho)).expect("isometric image of a state")
}

/// `U diag(u) U†` with `u_i` uniform in `[0, 1]`.
pub fn random_povm_element(dim: usize, rng: &mut impl Rng) -> ComplexMatrix {
    let u = random_unitary(dim, rng);
    let weights: Vec<_> = (0..dim).map(|_| real(rng.random::<f64>())).collect();
    let d = ComplexMatrix::from_diagonal(&DVector::from_vec(weights));
    hermitian_part(&(&u * d * u.adjoint()))
}

pub fn random_subspace(ambient: usize, dim: usize, rng: &mut impl Rng) -> Subspace {
    if dim == 0 {
        return Subspace::zero(ambient);
    }
    Subspace::from_orthonormal(orthonormal_columns(gaussian_matrix(ambient, dim, rng)))
}

/// Shape of `H = D ⊕ ⊕_i C^{m_i} ⊗ C^{d_i}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockLayout {
    pub decaying: usize,
    /// `(m_i, d_i)` per block.
    pub blocks: Vec<(usize, usize)>,
}

impl BlockLayout {
    pub fn dim(&self) -> usize {
        self.decaying + self.recurrent_dim()
    }

    pub fn recurrent_dim(&self) -> usize {
        self.blocks.iter().map(|(m, d)| m * d).sum()
    }

    /// `Σ m_i²`, the dimension of the fixed-point space.
    pub fn fix_dim(&self) -> usize {
        self.blocks.iter().map(|(m, _)| m * m).sum()
    }

    /// Random layout with total dimension at most `max_dim` (and at least 1).
    pub fn random(max_dim: usize, rng: &mut impl Rng) -> Self {
        loop {
            let k = rng.random_range(1..=3);
            let blocks: Vec<(usize, usize)> = (0..k)
                .map(|_| (rng.random_range(1..=2), rng.random_range(1..=2)))
                .collect();
            let decaying = rng.random_range(0..=1);
            let layout = BlockLayout { decaying, blocks };
            if layout.dim() <= max_dim {
                return layout;
            }
        }
    }
}

/// Kraus operators `⊕_i (I_{m_i} ⊗ L_{i,l})` padded with decaying-part drains,
/// conjugated by the unitary `frame`.
pub fn structured_channel(
    layout: &BlockLayout,
    frame: &ComplexMatrix,
    num_kraus: usize,
    rng: &mut impl Rng,
) -> KrausChannel {
    let n = layout.dim();
    let rdim = layout.recurrent_dim();
    assert!(rdim > 0, "layout needs at least one recurrent block");
    assert_eq!(frame.shape(), (n, n));
    let num_kraus = num_kraus.max(2);

    let mut kraus = vec![ComplexMatrix::zeros(n, n); num_kraus];
    let mut offset = 0;
    for &(m, d) in &layout.blocks {
        let local = random_channel(d, num_kraus, rng);
        for (k, l) in kraus.iter_mut().zip(local.kraus()) {
            let block = identity(m).kronecker(l);
            k.view_mut((offset, offset), (m * d, m * d)).copy_from(&block);
        }
        offset += m * d;
    }

    let q = layout.decaying;
    if q > 0 {
        // D → D through a strict contraction A, and D → R through rank-one drains
        // carrying the rest of I − A†A.
        let mut a = gaussian_matrix(q, q, rng);
        let norm = crate::linalg::spectral_norm(&a).expect("finite");
        a = a.scale(0.7 / norm);
        let mut stay = ComplexMatrix::zeros(n, n);
        stay.view_mut((rdim, rdim), (q, q)).copy_from(&a);
        kraus.push(stay);
        let rest = hermitian_part(&(identity(q) - a.adjoint() * &a));
        let (values, vectors) = hermitian_eig(&rest).expect("Hermitian");
        let target = orthonormal_columns(gaussian_matrix(rdim, 1, rng));
        for (j, &lam) in values.iter().enumerate() {
            if lam <= 0.0 {
                continue;
            }
            let mut drain = ComplexMatrix::zeros(n, n);
            let piece = &target * vectors.column(j).adjoint() * real(lam.sqrt());
            drain.view_mut((0, rdim), (rdim, q)).copy_from(&piece);
            kraus.push(drain);
        }
    }

    let kraus = kraus
        .into_iter()
        .map(|k| frame * k * frame.adjoint())
        .collect();
    KrausChannel::new(kraus).expect("block construction is trace preserving")
}

/// Two channels sharing one layout and one frame, with independent block dynamics.
pub fn structured_pair(
    layout: &BlockLayout,
    rng: &mut impl Rng,
) -> (KrausChannel, KrausChannel) {
    let frame = random_unitary(layout.dim(), rng);
    let a = structured_channel(layout, &frame, rng.random_range(2..=3), rng);
    let b = structured_channel(layout, &frame, rng.random_range(2..=3), rng);
    (a, b)
}

/// Column-stochastic matrix whose off-diagonal entries are present with probability
/// `density`; the diagonal is always present.
pub fn random_stochastic(dim: usize, density: f64, rng: &mut impl Rng) -> DMatrix<f64> {
    let mut s = DMatrix::from_fn(dim, dim, |i, j| {
        if i == j || rng.random::<f64>() < density {
            rng.random::<f64>() + 0.05
        } else {
            0.0
        }
    });
    for mut col in s.column_iter_mut() {
        let sum = col.sum();
        col /= sum;
    }
    s
}

/// Block-diagonal stochastic matrix with the given block sizes, each block dense.
pub fn random_block_stochastic(sizes: &[usize], rng: &mut impl Rng) -> DMatrix<f64> {
    let n: usize = sizes.iter().sum();
    let mut s = DMatrix::zeros(n, n);
    let mut off = 0;
    for &k in sizes {
        let block = random_stochastic(k, 1.0, rng);
        s.view_mut((off, off), (k, k)).copy_from(&block);
        off += k;
    }
    s
}

/// One of several families of channel pairs, chosen by `kind`:
/// generic, structured with a shared layout, structured against generic,
/// and diagonal embeddings of sparse stochastic pairs.
pub fn random_channel_pair(
    dim: usize,
    kind: usize,
    rng: &mut impl Rng,
) -> (KrausChannel, KrausChannel) {
    match kind % 4 {
        0 => (
            random_channel(dim, rng.random_range(1..=3), rng),
            random_channel(dim, rng.random_range(1..=3), rng),
        ),
        1 => {
            let layout = layout_of_dim(dim, rng);
            structured_pair(&layout, rng)
        }
        2 => {
            let layout = layout_of_dim(dim, rng);
            let (a, _) = structured_pair(&layout, rng);
            (a, random_channel(dim, 2, rng))
        }
        _ => {
            let s0 = random_stochastic(dim, 0.3, rng);
            let s1 = random_stochastic(dim, 0.3, rng);
            (
                crate::automaton::stochastic_channel(&s0).expect("stochastic"),
                crate::automaton::stochastic_channel(&s1).expect("stochastic"),
            )
        }
    }
}

/// Random layout with total dimension exactly `dim`.
pub fn layout_of_dim(dim: usize, rng: &mut impl Rng) -> BlockLayout {
    loop {
        let layout = BlockLayout::random(dim, rng);
        if layout.dim() == dim {
            return layout;
        }
    }
}

/// Automaton over a structured pair with random initial state and acceptance element.
pub fn random_quantum_automaton(dim: usize, kind: usize, rng: &mut impl Rng) -> QuantumCoinAutomaton {
    let (phi0, phi1) = random_channel_pair(dim, kind, rng);
    let rho0 = random_density(dim, rng);
    let e_fair = random_povm_element(dim, rng);
    QuantumCoinAutomaton::new(phi0, phi1, rho0, e_fair).expect("consistent dimensions")
}

pub fn random_classical_automaton(dim: usize, density: f64, rng: &mut impl Rng) -> ClassicalCoinAutomaton {
    let s0 = random_stochastic(dim, density, rng);
    let s1 = random_stochastic(dim, density, rng);
    let mut pi0 = DVector::from_fn(dim, |_, _| rng.random::<f64>());
    pi0 /= pi0.sum();
    let mut e_fair = DVector::from_fn(dim, |_, _| if rng.random::<bool>() { 1.0 } else { 0.0 });
    e_fair[0] = 1.0;
    ClassicalCoinAutomaton::new(s0, s1, pi0, e_fair).expect("valid by construction")
}
