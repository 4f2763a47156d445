//! JSON formats for channels, automata and decompositions.
//!
//! Complex numbers are `[re, im]` pairs and matrices are lists of rows. Floats are
//! written in serde_json's shortest round-trip form, so write-then-read is exact.

use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::automaton::{ClassicalCoinAutomaton, QuantumCoinAutomaton};
use crate::channel::{DensityOperator, KrausChannel};
use crate::enclosures::EnclosureDecomposition;
use crate::error::{Error, Result};
use crate::linalg::{c, ComplexMatrix};

pub type ComplexRows = Vec<Vec<[f64; 2]>>;

pub fn matrix_to_rows(m: &ComplexMatrix) -> ComplexRows {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

pub fn rows_to_matrix(rows: &ComplexRows) -> Result<ComplexMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::dims(format!("{ncols} columns"), format!("{} columns", bad.len())));
    }
    Ok(ComplexMatrix::from_fn(nrows, ncols, |i, j| {
        let [re, im] = rows[i][j];
        c(re, im)
    }))
}

fn real_to_rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|i| m.row(i).iter().copied().collect()).collect()
}

fn rows_to_real(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if let Some(bad) = rows.iter().find(|r| r.len() != ncols) {
        return Err(Error::dims(format!("{ncols} columns"), format!("{} columns", bad.len())));
    }
    Ok(DMatrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelJson {
    pub dim: usize,
    pub kraus: Vec<ComplexRows>,
}

impl ChannelJson {
    pub fn from_channel(ch: &KrausChannel) -> Self {
        ChannelJson {
            dim: ch.dim(),
            kraus: ch.kraus().iter().map(matrix_to_rows).collect(),
        }
    }

    /// Rebuilds the channel and re-runs the CPTP validation.
    pub fn into_channel(self) -> Result<KrausChannel> {
        let kraus = self
            .kraus
            .iter()
            .map(rows_to_matrix)
            .collect::<Result<Vec<_>>>()
            .map_err(|e| Error::InvalidChannel(e.to_string()))?;
        if let Some(k) = kraus.iter().find(|k| k.shape() != (self.dim, self.dim)) {
            return Err(Error::InvalidChannel(format!(
                "Kraus operator of shape {:?} in a channel of dim {}",
                k.shape(),
                self.dim
            )));
        }
        let ch = KrausChannel::from_kraus(kraus)?;
        ch.validate()?;
        Ok(ch)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum AutomatonJson {
    Quantum {
        phi0: ChannelJson,
        phi1: ChannelJson,
        rho0: ComplexRows,
        e_fair: ComplexRows,
    },
    Classical {
        s0: Vec<Vec<f64>>,
        s1: Vec<Vec<f64>>,
        pi0: Vec<f64>,
        e_fair: Vec<f64>,
    },
}

/// Either kind of automaton, as loaded from a file.
#[derive(Debug, Clone)]
pub enum Automaton {
    Quantum(QuantumCoinAutomaton),
    Classical(ClassicalCoinAutomaton),
}

impl Automaton {
    /// Classical automata are replaced by their diagonal embedding.
    pub fn into_quantum(self) -> Result<QuantumCoinAutomaton> {
        match self {
            Automaton::Quantum(q) => Ok(q),
            Automaton::Classical(c) => c.to_quantum(),
        }
    }
}

impl AutomatonJson {
    pub fn from_quantum(a: &QuantumCoinAutomaton) -> Self {
        AutomatonJson::Quantum {
            phi0: ChannelJson::from_channel(a.phi0()),
            phi1: ChannelJson::from_channel(a.phi1()),
            rho0: matrix_to_rows(a.rho0().matrix()),
            e_fair: matrix_to_rows(a.e_fair()),
        }
    }

    pub fn from_classical(a: &ClassicalCoinAutomaton) -> Self {
        AutomatonJson::Classical {
            s0: real_to_rows(a.s0()),
            s1: real_to_rows(a.s1()),
            pi0: a.pi0().iter().copied().collect(),
            e_fair: a.e_fair().iter().copied().collect(),
        }
    }

    pub fn into_automaton(self) -> Result<Automaton> {
        match self {
            AutomatonJson::Quantum { phi0, phi1, rho0, e_fair } => {
                let rho0 = DensityOperator::new(rows_to_matrix(&rho0)?)?;
                Ok(Automaton::Quantum(QuantumCoinAutomaton::new(
                    phi0.into_channel()?,
                    phi1.into_channel()?,
                    rho0,
                    rows_to_matrix(&e_fair)?,
                )?))
            }
            AutomatonJson::Classical { s0, s1, pi0, e_fair } => {
                Ok(Automaton::Classical(ClassicalCoinAutomaton::new(
                    rows_to_real(&s0)?,
                    rows_to_real(&s1)?,
                    DVector::from_vec(pi0),
                    DVector::from_vec(e_fair),
                )?))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BlockJson {
    pub m: usize,
    pub d: usize,
    /// One `n × d` isometry per minimal enclosure.
    pub enclosure_bases: Vec<ComplexRows>,
    pub rho: ComplexRows,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecompositionJson {
    pub decaying_dim: usize,
    pub blocks: Vec<BlockJson>,
}

impl DecompositionJson {
    pub fn from_decomposition(dec: &EnclosureDecomposition) -> Self {
        DecompositionJson {
            decaying_dim: dec.decaying().dim(),
            blocks: dec
                .blocks()
                .iter()
                .map(|b| BlockJson {
                    m: b.m(),
                    d: b.d(),
                    enclosure_bases: b.enclosures().iter().map(|v| matrix_to_rows(v.basis())).collect(),
                    rho: matrix_to_rows(b.rho().matrix()),
                })
                .collect(),
        }
    }
}

pub fn channel_to_json(ch: &KrausChannel) -> Result<String> {
    Ok(serde_json::to_string_pretty(&ChannelJson::from_channel(ch))?)
}

pub fn channel_from_json(text: &str) -> Result<KrausChannel> {
    let parsed: ChannelJson =
        serde_json::from_str(text).map_err(|e| Error::InvalidChannel(e.to_string()))?;
    parsed.into_channel()
}

pub fn read_channel(path: &Path) -> Result<KrausChannel> {
    channel_from_json(&fs::read_to_string(path)?)
}

pub fn write_channel(path: &Path, ch: &KrausChannel) -> Result<()> {
    fs::write(path, channel_to_json(ch)?)?;
    Ok(())
}

pub fn automaton_from_json(text: &str) -> Result<Automaton> {
    let parsed: AutomatonJson =
        serde_json::from_str(text).map_err(|e| Error::InvalidAutomaton(e.to_string()))?;
    parsed.into_automaton()
}

pub fn read_automaton(path: &Path) -> Result<Automaton> {
    automaton_from_json(&fs::read_to_string(path)?)
}

pub fn write_automaton(path: &Path, a: &AutomatonJson) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(a)?)?;
    Ok(())
}
