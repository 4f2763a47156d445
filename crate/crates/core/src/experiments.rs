//! Analyses and parameter sweeps behind the command-line front end.

use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::automaton::QuantumCoinAutomaton;
use crate::channel::KrausChannel;
use crate::enclosures::{equivalence_report, minimal_enclosure_decomposition, Side};
use crate::error::{Error, Result};
use crate::fixed_points::{fix_space, recurrent_and_decaying};
use crate::io::DecompositionJson;
use crate::linalg::Tolerances;

/// Evenly spaced grid `start, …, end` with `steps` points, written `start:end:steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl Default for Grid {
    fn default() -> Self {
        Grid {
            start: 0.05,
            end: 0.95,
            steps: 19,
        }
    }
}

impl Grid {
    pub fn new(start: f64, end: f64, steps: usize) -> Result<Self> {
        if steps < 2 {
            return Err(Error::InvalidArgument(format!("grid needs at least 2 points, got {steps}")));
        }
        if !(0.0..=1.0).contains(&start) || !(0.0..=1.0).contains(&end) || start >= end {
            return Err(Error::InvalidArgument(format!(
                "grid must satisfy 0 <= start < end <= 1, got {start}:{end}"
            )));
        }
        Ok(Grid { start, end, steps })
    }

    pub fn points(&self) -> Vec<f64> {
        let h = (self.end - self.start) / (self.steps - 1) as f64;
        (0..self.steps)
            .map(|i| if i + 1 == self.steps { self.end } else { self.start + h * i as f64 })
            .collect()
    }
}

impl FromStr for Grid {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::InvalidArgument(format!("grid must look like start:end:steps, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let start = parts[0].trim().parse().map_err(|_| bad())?;
        let end = parts[1].trim().parse().map_err(|_| bad())?;
        let steps = parts[2].trim().parse().map_err(|_| bad())?;
        Grid::new(start, end, steps)
    }
}

/// Largest `|f_{k+1} − f_k|` over consecutive values.
pub fn max_adjacent_jump(values: &[f64]) -> f64 {
    values
        .windows(2)
        .map(|w| (w[1] - w[0]).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepResult {
    pub p_grid: Vec<f64>,
    pub fix_dims: Vec<usize>,
    pub f_values: Vec<f64>,
    pub max_adjacent_jump: f64,
}

impl SweepResult {
    /// Whether `dim Fix(Φ_p)` agrees at every grid point strictly inside `(0, 1)`.
    pub fn constant_dim(&self) -> bool {
        let mut inner = self
            .p_grid
            .iter()
            .zip(&self.fix_dims)
            .filter(|(p, _)| **p > 0.0 && **p < 1.0)
            .map(|(_, d)| *d);
        match inner.next() {
            Some(first) => inner.all(|d| d == first),
            None => true,
        }
    }

    /// CSV with header `p,fix_dim,f`, followed by `#` comment lines carrying the summary.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        {
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["p", "fix_dim", "f"])?;
            for ((p, d), f) in self.p_grid.iter().zip(&self.fix_dims).zip(&self.f_values) {
                w.write_record([format!("{p:.16e}"), d.to_string(), format!("{f:.16e}")])?;
            }
            w.flush()?;
        }
        writeln!(out, "# max_adjacent_jump={:.16e}", self.max_adjacent_jump)?;
        writeln!(out, "# constant_dim={}", self.constant_dim())?;
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Out<'a> {
            #[serde(flatten)]
            result: &'a SweepResult,
            constant_dim: bool,
        }
        Ok(serde_json::to_string_pretty(&Out {
            result: self,
            constant_dim: self.constant_dim(),
        })?)
    }
}

/// `dim Fix(Φ_p)` and `f(p)` at every grid point; a failing point aborts with its `p`.
pub fn sweep(a: &QuantumCoinAutomaton, grid: &Grid, tols: &Tolerances) -> Result<SweepResult> {
    let p_grid = grid.points();
    let mut fix_dims = Vec::with_capacity(p_grid.len());
    let mut f_values = Vec::with_capacity(p_grid.len());
    for &p in &p_grid {
        let point = || -> Result<(usize, f64)> {
            let ch = a.averaged_channel(p)?;
            let dim = fix_space(&ch, tols.rank)?.dim();
            Ok((dim, a.f_limit(p, tols)?.f_value))
        };
        let (dim, f) = point().map_err(|e| Error::AtGridPoint {
            p,
            source: Box::new(e),
        })?;
        fix_dims.push(dim);
        f_values.push(f);
    }
    let max_adjacent_jump = max_adjacent_jump(&f_values);
    Ok(SweepResult {
        p_grid,
        fix_dims,
        f_values,
        max_adjacent_jump,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockShape {
    pub m: usize,
    pub d: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Analysis {
    pub m: usize,
    #[serde(rename = "dim_R")]
    pub dim_r: usize,
    #[serde(rename = "dim_D")]
    pub dim_d: usize,
    pub blocks: Vec<BlockShape>,
    pub sum_mi_squared: usize,
    pub check_bn: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decomposition: Option<DecompositionJson>,
}

/// Fixed-point dimension, recurrent/decaying split and block structure of a channel.
pub fn analyze(
    ch: &KrausChannel,
    seed: u64,
    tols: &Tolerances,
    with_decomposition: bool,
) -> Result<Analysis> {
    let m = fix_space(ch, tols.rank)?.dim();
    let (recurrent, decaying) = recurrent_and_decaying(ch, tols)?;
    let dec = minimal_enclosure_decomposition(ch, seed, tols)?;
    let blocks: Vec<BlockShape> = dec
        .blocks()
        .iter()
        .map(|b| BlockShape { m: b.m(), d: b.d() })
        .collect();
    let sum_mi_squared = dec.sum_m_squared();
    Ok(Analysis {
        m,
        dim_r: recurrent.dim(),
        dim_d: decaying.dim(),
        blocks,
        sum_mi_squared,
        check_bn: sum_mi_squared == m,
        decomposition: with_decomposition.then(|| DecompositionJson::from_decomposition(&dec)),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MatchJson {
    pub from: usize,
    pub to: usize,
    /// `[re, im]` of the constant `c` in `K_from = c · K̂_to`.
    pub ratio: [f64; 2],
}

#[derive(Debug, Clone, Serialize)]
pub struct UnmatchedJson {
    pub channel: &'static str,
    pub index: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceJson {
    pub equivalent: bool,
    pub forward: Vec<MatchJson>,
    pub backward: Vec<MatchJson>,
    pub unmatched: Option<UnmatchedJson>,
}

pub fn equivalence(a: &KrausChannel, b: &KrausChannel, tol: f64) -> Result<EquivalenceJson> {
    let report = equivalence_report(a, b, tol)?;
    let convert = |ms: &[crate::enclosures::KrausMatch]| {
        ms.iter()
            .map(|m| MatchJson {
                from: m.from,
                to: m.to,
                ratio: [m.ratio.re, m.ratio.im],
            })
            .collect()
    };
    Ok(EquivalenceJson {
        equivalent: report.equivalent(),
        forward: convert(&report.forward),
        backward: convert(&report.backward),
        unmatched: report.unmatched.map(|(side, index)| UnmatchedJson {
            channel: match side {
                Side::First => "first",
                Side::Second => "second",
            },
            index,
        }),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub p: f64,
    pub steps: usize,
    pub runs: usize,
    pub mean: f64,
    pub std_error: f64,
    pub f_t: f64,
}

impl SimulationSummary {
    pub fn within_standard_errors(&self, k: f64) -> bool {
        (self.mean - self.f_t).abs() <= k * self.std_error
    }
}

/// Mean and standard error of `runs` sampled trajectories (seeds `seed, seed+1, …`)
/// next to the averaged-channel value `f_T(p)`.
pub fn simulate(
    a: &QuantumCoinAutomaton,
    p: f64,
    steps: usize,
    runs: usize,
    seed: u64,
) -> Result<SimulationSummary> {
    if runs < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 runs, got {runs}")));
    }
    let samples = (0..runs as u64)
        .map(|k| a.simulate_trajectory(p, steps, seed.wrapping_add(k)))
        .collect::<Result<Vec<_>>>()?;
    let n = runs as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(SimulationSummary {
        p,
        steps,
        runs,
        mean,
        std_error: (var / n).sqrt(),
        f_t: a.f_t(p, steps)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automaton::ClassicalCoinAutomaton;

    #[test]
    fn grid_parsing() {
        let g: Grid = "0.05:0.95:19".parse().unwrap();
        assert_eq!(g, Grid::default());
        let pts = g.points();
        assert_eq!(pts.len(), 19);
        assert!((pts[1] - 0.1).abs() < 1e-15);
        assert_eq!(pts[18], 0.95);
        assert!("0.5:0.2:3".parse::<Grid>().is_err());
        assert!("0.1:0.2:1".parse::<Grid>().is_err());
        assert!("0.1:0.2".parse::<Grid>().is_err());
    }

    #[test]
    fn jump_of_constant_is_zero() {
        assert_eq!(max_adjacent_jump(&[0.3, 0.3, 0.3]), 0.0);
        assert_eq!(max_adjacent_jump(&[0.0, 0.5, 0.25]), 0.5);
        assert_eq!(max_adjacent_jump(&[]), 0.0);
    }

    #[test]
    fn absorbing_chain_jumps_only_at_endpoint() {
        let a = ClassicalCoinAutomaton::absorbing_example().to_quantum().unwrap();
        let tols = Tolerances::default();
        let with_zero = sweep(&a, &Grid::new(0.0, 0.95, 20).unwrap(), &tols).unwrap();
        assert!((with_zero.f_values[0] - 1.0).abs() < 1e-9);
        assert!(with_zero.f_values[1..].iter().all(|f| f.abs() < 1e-9));
        let open = sweep(&a, &Grid::default(), &tols).unwrap();
        assert!(open.max_adjacent_jump < 1e-9);
        assert!(open.constant_dim());
    }

    #[test]
    fn equal_channels_give_flat_f() {
        let phi = KrausChannel::amplitude_damping(0.4).unwrap();
        let rho0 = crate::channel::DensityOperator::basis(2, 1);
        let e = crate::linalg::identity(2).scale(0.5);
        let a = QuantumCoinAutomaton::new(phi.clone(), phi, rho0, e).unwrap();
        let r = sweep(&a, &Grid::default(), &Tolerances::default()).unwrap();
        assert!(r.max_adjacent_jump < 1e-12);
    }

    #[test]
    fn csv_has_header_and_summary() {
        let r = SweepResult {
            p_grid: vec![0.25, 0.75],
            fix_dims: vec![1, 1],
            f_values: vec![0.5, 0.5],
            max_adjacent_jump: 0.0,
        };
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("p,fix_dim,f\n2.5000000000000000e-1,1,5.0000000000000000e-1\n"));
        assert!(text.contains("# constant_dim=true"));
    }

    #[test]
    fn depolarizing_analysis() {
        let a = analyze(&KrausChannel::depolarizing(2), 0, &Tolerances::default(), false).unwrap();
        assert_eq!((a.m, a.dim_r, a.dim_d, a.sum_mi_squared), (1, 2, 0, 1));
        assert_eq!(a.blocks, vec![BlockShape { m: 1, d: 2 }]);
        assert!(a.check_bn);
        let json = serde_json::to_string(&a).unwrap();
        assert!(json.contains(r#""dim_R":2"#));
    }
}
