//! Enclosures, minimal enclosure decompositions and combinatorial equivalence.
//!
//! A subspace `V` is an enclosure when every Kraus operator maps `V` into
//! itself. The decomposition `H = D ⊕ ⊕_i W_i`, `W_i = ⊕_j V_{i,j}` is found by
//! randomized spectral splitting: on the recurrent subspace, with `σ` a
//! faithful invariant state and `X` a random Hermitian fixed point, the
//! operator `σ^{-1/2} X σ^{-1/2}` has the form `⊕_i B_i ⊗ I_{d_i}`, so its
//! eigenspaces are sums of minimal enclosures (generically single ones).
//! Clusters that are not minimal are split again on the restricted channel.
//! Blocks are then recovered from a second, independent split by grouping
//! every minimal enclosure found with all enclosures it is not orthogonal to.

use petgraph::unionfind::UnionFind;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::channel::{DensityOperator, KrausChannel};
use crate::error::{Error, Result};
use crate::fixed_points::{cesaro_limit, fix_space, recurrent_and_decaying, support};
use crate::linalg::{
    self, c, frobenius, hermitian_eig, hermitian_part, identity, inverse_sqrt, is_orthogonal,
    max_abs, orthonormal_span, orthonormal_span_in, polar_unitary, ComplexMatrix, Subspace,
    Tolerances, C64,
};

/// Attempts made by [`minimal_enclosure_decomposition`]: the first plus five retries.
pub const DECOMPOSITION_ATTEMPTS: u64 = 6;
const DRAWS_PER_SPLIT: usize = 3;
const ISOMORPHISM_TOL: f64 = 1e-6;

/// `true` iff `‖(I − P_V) K_i P_V‖₂ ≤ tol` for every Kraus operator.
pub fn is_enclosure(ch: &KrausChannel, v: &Subspace, tol: f64) -> Result<bool> {
    if v.ambient_dim() != ch.dim() {
        return Err(Error::dims(ch.dim(), v.ambient_dim()));
    }
    if v.is_zero() {
        return Ok(true);
    }
    for k in ch.kraus() {
        if v.leakage(&(k * v.basis()))? > tol {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Smallest enclosure containing `w`.
pub fn enclosure_closure(ch: &KrausChannel, w: &Subspace, tols: &Tolerances) -> Result<Subspace> {
    if w.ambient_dim() != ch.dim() {
        return Err(Error::dims(ch.dim(), w.ambient_dim()));
    }
    let mut current = w.clone();
    loop {
        let mut vectors = Vec::with_capacity(ch.num_kraus() + 1);
        vectors.push(current.basis().clone());
        vectors.extend(ch.kraus().iter().map(|k| k * current.basis()));
        let next = orthonormal_span_in(ch.dim(), &vectors, tols.rank)?;
        if next.dim() == current.dim() {
            return Ok(next);
        }
        current = next;
    }
}

/// The channel compressed to an enclosure, written in the enclosure's basis.
pub fn restricted_channel(ch: &KrausChannel, v: &Subspace) -> Result<KrausChannel> {
    if v.ambient_dim() != ch.dim() {
        return Err(Error::dims(ch.dim(), v.ambient_dim()));
    }
    if v.is_zero() {
        return Err(Error::InvalidArgument("cannot restrict to the zero subspace".into()));
    }
    let b = v.basis();
    let kraus = ch.kraus().iter().map(|k| b.adjoint() * k * b).collect();
    let restricted = KrausChannel::from_kraus(kraus)?;
    restricted.validate().map_err(|_| Error::NotAnEnclosure)?;
    Ok(restricted)
}

/// A nonzero enclosure is minimal iff the restricted channel has a unique
/// invariant state and that state has full support.
pub fn is_minimal_enclosure(ch: &KrausChannel, v: &Subspace, tols: &Tolerances) -> Result<bool> {
    if v.is_zero() {
        return Err(Error::InvalidArgument("minimal enclosures are nonzero".into()));
    }
    if !is_enclosure(ch, v, tols.subspace)? {
        return Err(Error::NotAnEnclosure);
    }
    let restricted = restricted_channel(ch, v)?;
    Ok(unique_faithful_state(&restricted, tols)?.is_some())
}

/// The invariant state of `ch` if it is unique and faithful.
fn unique_faithful_state(ch: &KrausChannel, tols: &Tolerances) -> Result<Option<DensityOperator>> {
    if fix_space(ch, tols.rank)?.dim() != 1 {
        return Ok(None);
    }
    let n = ch.dim();
    let state = cesaro_limit(ch, tols)?.apply(&identity(n).unscale(n as f64))?;
    if support(&state, tols.support)?.dim() != n {
        return Ok(None);
    }
    Ok(Some(DensityOperator::from_numerical(&state, 1e-8)?))
}

/// One group `W_i = V_{i,1} ⊕ … ⊕ V_{i,m_i}` of isomorphic minimal enclosures.
///
/// Enclosure bases are aligned so that every fixed point restricted to `W_i`
/// reads `A_i ⊗ ρ_i` with `ρ_i` written in the basis of `V_{i,1}`.
#[derive(Debug, Clone)]
pub struct EnclosureBlock {
    enclosures: Vec<Subspace>,
    rho: DensityOperator,
}

impl EnclosureBlock {
    pub fn m(&self) -> usize {
        self.enclosures.len()
    }

    pub fn d(&self) -> usize {
        self.rho.dim()
    }

    pub fn enclosures(&self) -> &[Subspace] {
        &self.enclosures
    }

    pub fn rho(&self) -> &DensityOperator {
        &self.rho
    }

    /// Orthonormal basis of `W_i`, enclosure by enclosure.
    pub fn basis(&self) -> ComplexMatrix {
        let n = self.enclosures[0].ambient_dim();
        let mut out = ComplexMatrix::zeros(n, self.m() * self.d());
        for (j, v) in self.enclosures.iter().enumerate() {
            out.view_mut((0, j * self.d()), (n, self.d())).copy_from(v.basis());
        }
        out
    }

    pub fn span(&self) -> Subspace {
        Subspace::from_orthonormal(self.basis())
    }
}

/// `H = D ⊕ ⊕_i W_i`.
#[derive(Debug, Clone)]
pub struct EnclosureDecomposition {
    decaying: Subspace,
    blocks: Vec<EnclosureBlock>,
}

impl EnclosureDecomposition {
    pub fn ambient_dim(&self) -> usize {
        self.decaying.ambient_dim()
    }

    pub fn decaying(&self) -> &Subspace {
        &self.decaying
    }

    pub fn blocks(&self) -> &[EnclosureBlock] {
        &self.blocks
    }

    /// `Σ_i m_i²`.
    pub fn sum_m_squared(&self) -> usize {
        self.blocks.iter().map(|b| b.m() * b.m()).sum()
    }

    /// Every minimal enclosure of the decomposition, block by block.
    pub fn enclosures(&self) -> impl Iterator<Item = &Subspace> {
        self.blocks.iter().flat_map(|b| b.enclosures.iter())
    }

    /// Unitary whose columns are a basis of `D` followed by the aligned bases of each `W_i`.
    pub fn compatible_basis(&self) -> ComplexMatrix {
        let n = self.ambient_dim();
        let mut out = ComplexMatrix::zeros(n, n);
        let mut col = 0;
        let dd = self.decaying.dim();
        out.view_mut((0, 0), (n, dd)).copy_from(self.decaying.basis());
        col += dd;
        for block in &self.blocks {
            let b = block.basis();
            out.view_mut((0, col), (n, b.ncols())).copy_from(&b);
            col += b.ncols();
        }
        out
    }

    pub(crate) fn from_parts(decaying: Subspace, blocks: Vec<(Vec<Subspace>, DensityOperator)>) -> Self {
        EnclosureDecomposition {
            decaying,
            blocks: blocks
                .into_iter()
                .map(|(enclosures, rho)| EnclosureBlock { enclosures, rho })
                .collect(),
        }
    }
}

fn random_gaussian(n: usize, rng: &mut impl Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(n, n, |_, _| {
        c(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// Eigenspaces of a Hermitian matrix, merging eigenvalues closer than `rel · max|λ|`.
fn eigen_clusters(y: &ComplexMatrix, rel: f64) -> Result<Vec<ComplexMatrix>> {
    let (values, vectors) = hermitian_eig(y)?;
    let scale = values.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut clusters = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > rel * scale {
            clusters.push(vectors.columns(start, i - start).into_owned());
            start = i;
        }
    }
    Ok(clusters)
}

/// Invariant data of a channel whose whole space is recurrent.
struct Whitened {
    projector: crate::channel::Superoperator,
    whiten: ComplexMatrix,
}

impl Whitened {
    fn new(ch: &KrausChannel, tols: &Tolerances) -> Result<Self> {
        let n = ch.dim();
        let projector = cesaro_limit(ch, tols)?;
        let sigma = hermitian_part(&projector.apply(&identity(n).unscale(n as f64))?);
        let whiten = inverse_sqrt(&sigma, tols.support).map_err(|_| {
            Error::DecompositionFailure("recurrent part has no faithful invariant state".into())
        })?;
        Ok(Whitened { projector, whiten })
    }

    /// `σ^{-1/2} Φ^∞(G) σ^{-1/2}` for a Gaussian `G`, Hermitian if requested.
    fn draw(&self, hermitian: bool, rng: &mut impl Rng) -> Result<ComplexMatrix> {
        let n = self.whiten.nrows();
        let mut g = random_gaussian(n, rng);
        if hermitian {
            g = hermitian_part(&g);
        }
        let x = self.projector.apply(&g)?;
        let y = &self.whiten * x * &self.whiten;
        Ok(if hermitian { hermitian_part(&y) } else { y })
    }
}

/// Splits the space of a channel with no decaying part into mutually
/// orthogonal minimal enclosures (bases in the channel's coordinates).
fn split_into_minimal(
    ch: &KrausChannel,
    rng: &mut impl Rng,
    tols: &Tolerances,
    depth: usize,
) -> Result<Vec<ComplexMatrix>> {
    let n = ch.dim();
    if n == 1 || fix_space(ch, tols.rank)?.dim() == 1 {
        return Ok(vec![identity(n)]);
    }
    if depth > n {
        return Err(Error::DecompositionFailure("splitting recursion too deep".into()));
    }
    let whitened = Whitened::new(ch, tols)?;
    for _ in 0..DRAWS_PER_SPLIT {
        let y = whitened.draw(true, rng)?;
        let clusters = eigen_clusters(&y, tols.cluster)?;
        if clusters.len() < 2 {
            continue;
        }
        let mut out = Vec::new();
        for b in clusters {
            let part = Subspace::from_orthonormal(b);
            if !is_enclosure(ch, &part, tols.subspace)? {
                return Err(Error::DecompositionFailure(
                    "spectral cluster is not an enclosure".into(),
                ));
            }
            if is_minimal_enclosure(ch, &part, tols)? {
                out.push(part.into_basis());
            } else {
                let inner = restricted_channel(ch, &part)?;
                for sub in split_into_minimal(&inner, rng, tols, depth + 1)? {
                    out.push(part.basis() * sub);
                }
            }
        }
        return Ok(out);
    }
    Err(Error::DecompositionFailure(
        "random fixed points did not split a non-minimal enclosure".into(),
    ))
}

/// Rotates each basis so that `B_1† Y B_j ∝ I` for the generic whitened fixed point `Y`.
fn align_block(bases: &[ComplexMatrix], y: &ComplexMatrix) -> Result<Vec<ComplexMatrix>> {
    let first = &bases[0];
    let mut out = vec![first.clone()];
    for b in &bases[1..] {
        let (w, spread) = polar_unitary(&(first.adjoint() * y * b))?;
        if spread < 1.0 - 1e-4 {
            return Err(Error::DecompositionFailure(
                "enclosures grouped into one block are not isomorphic".into(),
            ));
        }
        out.push(b * w.adjoint());
    }
    Ok(out)
}

/// Finds `H = D ⊕ ⊕_i W_i` with `W_i = ⊕_j V_{i,j}` minimal enclosures.
///
/// The result is checked against `Σ m_i² = dim Fix(Φ)`; a failed check is
/// retried with the next seed, up to [`DECOMPOSITION_ATTEMPTS`] in total.
pub fn minimal_enclosure_decomposition(
    ch: &KrausChannel,
    seed: u64,
    tols: &Tolerances,
) -> Result<EnclosureDecomposition> {
    let m = fix_space(ch, tols.rank)?.dim();
    let (recurrent, decaying) = recurrent_and_decaying(ch, tols)?;
    if !is_enclosure(ch, &recurrent, tols.subspace)? {
        return Err(Error::DecompositionFailure(
            "recurrent subspace is not an enclosure".into(),
        ));
    }
    let mut failure = None;
    for attempt in 0..DECOMPOSITION_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt));
        match decompose_once(ch, &recurrent, &decaying, m, &mut rng, tols) {
            Ok(dec) => return Ok(dec),
            Err(e @ Error::DecompositionFailure(_)) => failure = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(failure.expect("at least one attempt"))
}

fn decompose_once(
    ch: &KrausChannel,
    recurrent: &Subspace,
    decaying: &Subspace,
    m: usize,
    rng: &mut ChaCha8Rng,
    tols: &Tolerances,
) -> Result<EnclosureDecomposition> {
    let inner = restricted_channel(ch, recurrent)?;
    let first = split_into_minimal(&inner, rng, tols, 0)?;
    let second = split_into_minimal(&inner, rng, tols, 0)?;
    let found: Vec<Subspace> = first
        .iter()
        .chain(second.iter())
        .cloned()
        .map(Subspace::from_orthonormal)
        .collect();

    let mut groups = UnionFind::<usize>::new(found.len());
    for i in 0..found.len() {
        for j in (i + 1)..found.len() {
            if !is_orthogonal(&found[i], &found[j], tols.subspace)? {
                groups.union(i, j);
            }
        }
    }

    let generic = Whitened::new(&inner, tols)?.draw(false, rng)?;
    let mut roots: Vec<usize> = Vec::new();
    let mut blocks = Vec::new();
    for i in 0..first.len() {
        let root = groups.find(i);
        if roots.contains(&root) {
            continue;
        }
        roots.push(root);
        let members: Vec<ComplexMatrix> = (0..first.len())
            .filter(|&j| groups.find(j) == root)
            .map(|j| first[j].clone())
            .collect();
        let d = members[0].ncols();
        if members.iter().any(|b| b.ncols() != d) {
            return Err(Error::DecompositionFailure(
                "block contains minimal enclosures of different dimensions".into(),
            ));
        }
        let span = orthonormal_span(&members, tols.rank)?;
        for (j, other) in found.iter().enumerate() {
            if groups.find(j) == root && !linalg::is_contained(other, &span, tols.subspace)? {
                return Err(Error::DecompositionFailure(
                    "a minimal enclosure meets a block without lying inside it".into(),
                ));
            }
        }
        let aligned = align_block(&members, &generic)?;
        let mut rho: Option<DensityOperator> = None;
        for b in &aligned {
            let part = Subspace::from_orthonormal(b.clone());
            let state = unique_faithful_state(&restricted_channel(&inner, &part)?, tols)?
                .ok_or_else(|| {
                    Error::DecompositionFailure("block member is not a minimal enclosure".into())
                })?;
            match &rho {
                None => rho = Some(state),
                Some(r) if max_abs(&(r.matrix() - state.matrix())) > ISOMORPHISM_TOL => {
                    return Err(Error::DecompositionFailure(
                        "block members carry different invariant states".into(),
                    ))
                }
                Some(_) => {}
            }
        }
        let enclosures: Vec<Subspace> = aligned
            .iter()
            .map(|b| Subspace::from_orthonormal(recurrent.basis() * b))
            .collect();
        blocks.push((enclosures, rho.expect("nonempty block")));
    }

    let covered: usize = blocks.iter().map(|(e, r)| e.len() * r.dim()).sum();
    if covered != recurrent.dim() {
        return Err(Error::DecompositionFailure(format!(
            "minimal enclosures cover {covered} of {} recurrent dimensions",
            recurrent.dim()
        )));
    }
    let dec = EnclosureDecomposition::from_parts(decaying.clone(), blocks);
    if dec.sum_m_squared() != m {
        return Err(Error::DecompositionFailure(format!(
            "sum of m_i^2 is {} but dim Fix is {m}",
            dec.sum_m_squared()
        )));
    }
    Ok(dec)
}

/// Largest deviation of `x` from the form `0 ⊕ ⊕_i A_i ⊗ ρ_i`, relative to `‖x‖_F`.
///
/// `A_i` is recovered as the partial trace of the `W_i` block over the `ρ_i` factor.
pub fn respects_residual(x: &ComplexMatrix, dec: &EnclosureDecomposition) -> Result<f64> {
    let n = dec.ambient_dim();
    if x.shape() != (n, n) {
        return Err(Error::dims(
            format!("{n}x{n}"),
            format!("{}x{}", x.nrows(), x.ncols()),
        ));
    }
    let scale = frobenius(x);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let q = dec.compatible_basis();
    let y = q.adjoint() * x * &q;

    // block label per coordinate: 0 for D, i+1 for W_i
    let mut label = vec![0usize; n];
    let mut offsets = Vec::with_capacity(dec.blocks.len());
    let mut pos = dec.decaying.dim();
    for (i, block) in dec.blocks.iter().enumerate() {
        let size = block.m() * block.d();
        offsets.push(pos);
        label[pos..pos + size].fill(i + 1);
        pos += size;
    }

    let mut worst: f64 = 0.0;
    for r in 0..n {
        for col in 0..n {
            if label[r] != label[col] || label[r] == 0 {
                worst = worst.max(y[(r, col)].norm());
            }
        }
    }
    for (block, &off) in dec.blocks.iter().zip(&offsets) {
        let (m, d) = (block.m(), block.d());
        let sub = y.view((off, off), (m * d, m * d));
        let mut a = ComplexMatrix::zeros(m, m);
        for j in 0..m {
            for k in 0..m {
                a[(j, k)] = (0..d).map(|s| sub[(j * d + s, k * d + s)]).sum::<C64>();
            }
        }
        let model = a.kronecker(block.rho.matrix());
        worst = worst.max(max_abs(&(sub.into_owned() - model)));
    }
    Ok(worst / scale)
}

/// `true` iff `x` is block diagonal, zero on `D`, and of the form `A_i ⊗ ρ_i`
/// on every `W_i`, all to within `tol · ‖x‖_F`.
pub fn respects(x: &ComplexMatrix, dec: &EnclosureDecomposition, tol: f64) -> Result<bool> {
    Ok(respects_residual(x, dec)? <= tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    First,
    Second,
}

/// `K_from = ratio · K̂_to`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KrausMatch {
    pub from: usize,
    pub to: usize,
    pub ratio: C64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub forward: Vec<KrausMatch>,
    pub backward: Vec<KrausMatch>,
    /// First nonzero Kraus operator with no proportional partner.
    pub unmatched: Option<(Side, usize)>,
}

impl EquivalenceReport {
    pub fn equivalent(&self) -> bool {
        self.unmatched.is_none()
    }
}

fn proportional_partner(
    k: &ComplexMatrix,
    others: &KrausChannel,
    tol: f64,
) -> Option<(usize, C64)> {
    let nk = frobenius(k);
    others.nonzero_kraus().find_map(|(j, other)| {
        let no = frobenius(other);
        let overlap = linalg::hs_inner(other, k);
        (overlap.norm() >= (1.0 - tol) * nk * no).then(|| (j, overlap / (no * no)))
    })
}

fn match_side(
    a: &KrausChannel,
    b: &KrausChannel,
    tol: f64,
) -> (Vec<KrausMatch>, Option<usize>) {
    let mut matches = Vec::new();
    for (i, k) in a.nonzero_kraus() {
        match proportional_partner(k, b, tol) {
            Some((to, ratio)) => matches.push(KrausMatch { from: i, to, ratio }),
            None => return (matches, Some(i)),
        }
    }
    (matches, None)
}

/// Matches every nonzero Kraus operator of each channel with a proportional one of the other.
///
/// Proportionality is the Cauchy-Schwarz equality case
/// `|⟨K, K̂⟩| ≥ (1 − tol) ‖K‖ ‖K̂‖`; operators with norm ≤ 1e-12 are ignored.
pub fn equivalence_report(
    a: &KrausChannel,
    b: &KrausChannel,
    tol: f64,
) -> Result<EquivalenceReport> {
    if a.dim() != b.dim() {
        return Err(Error::dims(a.dim(), b.dim()));
    }
    let (forward, missing) = match_side(a, b, tol);
    if let Some(i) = missing {
        return Ok(EquivalenceReport {
            forward,
            backward: Vec::new(),
            unmatched: Some((Side::First, i)),
        });
    }
    let (backward, missing) = match_side(b, a, tol);
    Ok(EquivalenceReport {
        forward,
        backward,
        unmatched: missing.map(|j| (Side::Second, j)),
    })
}

pub fn combinatorially_equivalent(a: &KrausChannel, b: &KrausChannel, tol: f64) -> Result<bool> {
    Ok(equivalence_report(a, b, tol)?.equivalent())
}
