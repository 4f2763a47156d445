//! Automata reading i.i.d. `p`-biased bits.
//!
//! Reading a random bit applies `Φ_1` with probability `p` and `Φ_0`
//! otherwise, which is the same as applying `Φ_p = pΦ_1 + (1−p)Φ_0`. The
//! limiting acceptance probability is `f(p) = ⟨E_fair, Φ_p^∞(ρ₀)⟩`. The
//! classical model uses column-stochastic matrices acting as `π ↦ S π`.

use nalgebra::{DMatrix, DVector};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::channel::{mix, DensityOperator, KrausChannel};
use crate::error::{Error, Result};
use crate::fixed_points::{cesaro_finite, cesaro_limit, spectral_projector};
use crate::linalg::{
    eigenspace_one, from_real, hermitian_eig, hermitian_residual, real, trace, ComplexMatrix,
    Tolerances,
};

/// Slack applied at the verdict thresholds so that exact boundary values are not
/// lost to rounding.
pub const VERDICT_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum VerdictKind {
    Fair,
    Biased,
    Indecisive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerdictThresholds {
    pub fair: f64,
    pub biased: f64,
}

impl Default for VerdictThresholds {
    fn default() -> Self {
        VerdictThresholds {
            fair: 2.0 / 3.0,
            biased: 1.0 / 3.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub f_value: f64,
}

impl Verdict {
    pub fn from_value(f_value: f64, thresholds: &VerdictThresholds) -> Self {
        let kind = if f_value >= thresholds.fair - VERDICT_SLACK {
            VerdictKind::Fair
        } else if f_value <= thresholds.biased + VERDICT_SLACK {
            VerdictKind::Biased
        } else {
            VerdictKind::Indecisive
        };
        Verdict { kind, f_value }
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::InvalidProbability(p))
    }
}

fn acceptance(e_fair: &ComplexMatrix, rho: &ComplexMatrix) -> f64 {
    trace(&(e_fair.adjoint() * rho)).re
}

/// Quantum automaton `(Φ_0, Φ_1, ρ₀, E_fair)`.
#[derive(Debug, Clone)]
pub struct QuantumCoinAutomaton {
    phi0: KrausChannel,
    phi1: KrausChannel,
    rho0: DensityOperator,
    e_fair: ComplexMatrix,
}

impl QuantumCoinAutomaton {
    pub fn new(
        phi0: KrausChannel,
        phi1: KrausChannel,
        rho0: DensityOperator,
        e_fair: ComplexMatrix,
    ) -> Result<Self> {
        let d = phi0.dim();
        if phi1.dim() != d || rho0.dim() != d || e_fair.shape() != (d, d) {
            return Err(Error::dims(
                format!("all components of dimension {d}"),
                format!(
                    "phi1 {}, rho0 {}, e_fair {}x{}",
                    phi1.dim(),
                    rho0.dim(),
                    e_fair.nrows(),
                    e_fair.ncols()
                ),
            ));
        }
        if hermitian_residual(&e_fair) > 1e-9 {
            return Err(Error::InvalidAutomaton("E_fair is not Hermitian".into()));
        }
        let (eigs, _) = hermitian_eig(&e_fair)?;
        if eigs[0] < -1e-9 || eigs[d - 1] > 1.0 + 1e-9 {
            return Err(Error::InvalidAutomaton(format!(
                "E_fair eigenvalues [{:.3e}, {:.3e}] outside [0, 1]",
                eigs[0],
                eigs[d - 1]
            )));
        }
        Ok(QuantumCoinAutomaton {
            phi0,
            phi1,
            rho0,
            e_fair,
        })
    }

    pub fn dim(&self) -> usize {
        self.phi0.dim()
    }

    pub fn phi0(&self) -> &KrausChannel {
        &self.phi0
    }

    pub fn phi1(&self) -> &KrausChannel {
        &self.phi1
    }

    pub fn rho0(&self) -> &DensityOperator {
        &self.rho0
    }

    pub fn e_fair(&self) -> &ComplexMatrix {
        &self.e_fair
    }

    /// `Φ_p = pΦ_1 + (1−p)Φ_0`.
    pub fn averaged_channel(&self, p: f64) -> Result<KrausChannel> {
        mix(&self.phi0, &self.phi1, p)
    }

    /// `f_T(p) = (1/T) Σ_{t=1}^T ⟨E_fair, Φ_p^t(ρ₀)⟩`, clamped to `[0, 1]`.
    pub fn f_t(&self, p: f64, steps: usize) -> Result<f64> {
        check_probability(p)?;
        let avg = cesaro_finite(&self.averaged_channel(p)?, &self.rho0, steps)?;
        Ok(acceptance(&self.e_fair, avg.matrix()).clamp(0.0, 1.0))
    }

    /// `f(p) = ⟨E_fair, Φ_p^∞(ρ₀)⟩` and the verdict it implies.
    pub fn f_limit(&self, p: f64, tols: &Tolerances) -> Result<Verdict> {
        self.f_limit_with(p, tols, &VerdictThresholds::default())
    }

    pub fn f_limit_with(
        &self,
        p: f64,
        tols: &Tolerances,
        thresholds: &VerdictThresholds,
    ) -> Result<Verdict> {
        check_probability(p)?;
        let limit = cesaro_limit(&self.averaged_channel(p)?, tols)?;
        let rho = limit.apply(self.rho0.matrix())?;
        let f = acceptance(&self.e_fair, &rho).clamp(0.0, 1.0);
        Ok(Verdict::from_value(f, thresholds))
    }

    /// Time-averaged acceptance along one sampled bit string `w_1 … w_T`.
    pub fn simulate_trajectory(&self, p: f64, steps: usize, seed: u64) -> Result<f64> {
        check_probability(p)?;
        if steps == 0 {
            return Err(Error::InvalidArgument("T must be at least 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut rho = self.rho0.matrix().clone();
        let mut total = 0.0;
        for _ in 0..steps {
            let heads = rng.random::<f64>() < p;
            let ch = if heads { &self.phi1 } else { &self.phi0 };
            rho = ch.apply(&rho)?;
            total += acceptance(&self.e_fair, &rho);
        }
        Ok(total / steps as f64)
    }
}

/// Column-stochastic check: entries ≥ −1e-12 and column sums within 1e-9 of 1.
pub fn check_stochastic(s: &DMatrix<f64>) -> Result<()> {
    if !s.is_square() || s.nrows() == 0 {
        return Err(Error::InvalidAutomaton(format!(
            "stochastic matrix must be square, got {}x{}",
            s.nrows(),
            s.ncols()
        )));
    }
    if s.iter().any(|x| !x.is_finite() || *x < -1e-12) {
        return Err(Error::InvalidAutomaton("negative or non-finite entry".into()));
    }
    for (j, col) in s.column_iter().enumerate() {
        let sum: f64 = col.sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidAutomaton(format!(
                "column {j} sums to {sum}"
            )));
        }
    }
    Ok(())
}

/// `pS_1 + (1−p)S_0`.
pub fn stochastic_mix(s0: &DMatrix<f64>, s1: &DMatrix<f64>, p: f64) -> Result<DMatrix<f64>> {
    check_probability(p)?;
    if s0.shape() != s1.shape() {
        return Err(Error::dims(s0.nrows(), s1.nrows()));
    }
    Ok(s1 * p + s0 * (1.0 - p))
}

/// Channel `{√S_ji |j⟩⟨i|}` that acts on diagonal states as `S` acts on distributions.
pub fn stochastic_channel(s: &DMatrix<f64>) -> Result<KrausChannel> {
    check_stochastic(s)?;
    let d = s.nrows();
    let mut kraus = Vec::new();
    for i in 0..d {
        for j in 0..d {
            let w = s[(j, i)];
            if w > 0.0 {
                let mut k = ComplexMatrix::zeros(d, d);
                k[(j, i)] = real(w.sqrt());
                kraus.push(k);
            }
        }
    }
    KrausChannel::new(kraus)
}

/// Classical automaton `(S_0, S_1, π₀, e_fair)`.
#[derive(Debug, Clone)]
pub struct ClassicalCoinAutomaton {
    s0: DMatrix<f64>,
    s1: DMatrix<f64>,
    pi0: DVector<f64>,
    e_fair: DVector<f64>,
}

impl ClassicalCoinAutomaton {
    pub fn new(
        s0: DMatrix<f64>,
        s1: DMatrix<f64>,
        pi0: DVector<f64>,
        e_fair: DVector<f64>,
    ) -> Result<Self> {
        check_stochastic(&s0)?;
        check_stochastic(&s1)?;
        let d = s0.nrows();
        if s1.nrows() != d || pi0.len() != d || e_fair.len() != d {
            return Err(Error::dims(
                d,
                format!("s1 {}, pi0 {}, e_fair {}", s1.nrows(), pi0.len(), e_fair.len()),
            ));
        }
        if pi0.iter().any(|&x| x < -1e-12) || (pi0.sum() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidAutomaton("pi0 is not a probability vector".into()));
        }
        if e_fair.iter().any(|&x| x != 0.0 && x != 1.0) {
            return Err(Error::InvalidAutomaton("e_fair must be a 0-1 indicator".into()));
        }
        Ok(ClassicalCoinAutomaton {
            s0,
            s1,
            pi0,
            e_fair,
        })
    }

    pub fn dim(&self) -> usize {
        self.s0.nrows()
    }

    pub fn s0(&self) -> &DMatrix<f64> {
        &self.s0
    }

    pub fn s1(&self) -> &DMatrix<f64> {
        &self.s1
    }

    pub fn pi0(&self) -> &DVector<f64> {
        &self.pi0
    }

    pub fn e_fair(&self) -> &DVector<f64> {
        &self.e_fair
    }

    pub fn averaged_matrix(&self, p: f64) -> Result<DMatrix<f64>> {
        stochastic_mix(&self.s0, &self.s1, p)
    }

    /// `f(p) = ⟨e_fair, S_p^∞ π₀⟩`.
    pub fn f_limit(&self, p: f64, tols: &Tolerances) -> Result<Verdict> {
        let sp = self.averaged_matrix(p)?;
        let limit = spectral_projector(&from_real(&sp), tols)?;
        let dist = limit * from_real(&DMatrix::from_column_slice(self.dim(), 1, self.pi0.as_slice()));
        let f: f64 = (0..self.dim())
            .map(|i| self.e_fair[i] * dist[(i, 0)].re)
            .sum();
        Ok(Verdict::from_value(
            f.clamp(0.0, 1.0),
            &VerdictThresholds::default(),
        ))
    }

    /// Diagonal embedding as a quantum automaton.
    pub fn to_quantum(&self) -> Result<QuantumCoinAutomaton> {
        let rho0 = DensityOperator::new(ComplexMatrix::from_diagonal(
            &self.pi0.map(real),
        ))?;
        let e_fair = ComplexMatrix::from_diagonal(&self.e_fair.map(real));
        QuantumCoinAutomaton::new(
            stochastic_channel(&self.s0)?,
            stochastic_channel(&self.s1)?,
            rho0,
            e_fair,
        )
    }

    /// Two basic-states; symbol 0 keeps state 1, symbol 1 moves 1 → 2, and 2 is absorbing.
    /// Starts in state 1, which is the only Fair state.
    pub fn absorbing_example() -> Self {
        let s0 = DMatrix::identity(2, 2);
        let s1 = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 1.0, 1.0]);
        ClassicalCoinAutomaton::new(
            s0,
            s1,
            DVector::from_column_slice(&[1.0, 0.0]),
            DVector::from_column_slice(&[1.0, 0.0]),
        )
        .expect("valid by construction")
    }
}

/// Strongly connected components of the transition digraph of a stochastic matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommunicationStructure {
    /// Each class sorted; classes ordered by their smallest state.
    pub classes: Vec<Vec<usize>>,
    /// `closed[k]` is true when no transition leaves class `k`.
    pub closed: Vec<bool>,
}

impl CommunicationStructure {
    pub fn closed_classes(&self) -> usize {
        self.closed.iter().filter(|&&c| c).count()
    }
}

/// Communication classes of `S`: the digraph has an edge `i → j` iff `S_ji > tol`.
pub fn communication_structure(s: &DMatrix<f64>, tol: f64) -> Result<CommunicationStructure> {
    check_stochastic(s)?;
    let d = s.nrows();
    let mut graph = DiGraph::<(), ()>::with_capacity(d, d * d);
    let nodes: Vec<_> = (0..d).map(|_| graph.add_node(())).collect();
    for i in 0..d {
        for j in 0..d {
            if i != j && s[(j, i)] > tol {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = tarjan_scc(&graph)
        .into_iter()
        .map(|comp| {
            let mut c: Vec<usize> = comp.into_iter().map(|n| n.index()).collect();
            c.sort_unstable();
            c
        })
        .collect();
    classes.sort_by_key(|c| c[0]);
    let mut class_of = vec![0; d];
    for (k, class) in classes.iter().enumerate() {
        for &i in class {
            class_of[i] = k;
        }
    }
    let closed = classes
        .iter()
        .enumerate()
        .map(|(k, class)| {
            class.iter().all(|&i| {
                (0..d).all(|j| class_of[j] == k || s[(j, i)] <= tol)
            })
        })
        .collect();
    Ok(CommunicationStructure { classes, closed })
}

/// `dim Fix(S)` for a stochastic matrix.
pub fn classical_fix_dim(s: &DMatrix<f64>, tol: f64) -> Result<usize> {
    check_stochastic(s)?;
    Ok(eigenspace_one(&from_real(s), tol)?.dim())
}
