//! Solver front end shared by the exogenous- and endogenous-quality models:
//! options, reports, deterministic tie-break normalization and the
//! multi-start simplex polish.

pub mod endogenous;
pub mod exogenous;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::majorization::StepQuantile;
use crate::mechanism::{Mechanism, VerifyReport};
use crate::simplex::{self, SimplexOptions};

/// Knobs for both solvers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveOptions {
    /// Equal-mass grid size for the DP stage.
    pub grid_n: usize,
    /// Run the continuous local polish after the DP.
    pub polish: bool,
    /// Profit ties within this tolerance resolve to fewer positive items,
    /// then to the DP's deterministic scan order.
    pub profit_tol: f64,
    /// Multi-start count for the polish.
    pub multistarts: usize,
    /// Seed for the polish jitter.
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            grid_n: 200,
            polish: true,
            profit_tol: 1e-9,
            multistarts: 8,
            seed: 0,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if self.grid_n < 2 {
            return Err(Error::InvalidInput(format!(
                "grid size must be at least 2, got {}",
                self.grid_n
            )));
        }
        if !(self.profit_tol.is_finite() && self.profit_tol >= 0.0) {
            return Err(Error::InvalidInput("profit tolerance must be nonnegative".into()));
        }
        Ok(())
    }
}

/// Solver output: the mechanism plus enough trace to audit it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub mechanism: Mechanism,
    pub verify: VerifyReport,
    /// Grid resolution the DP ran at; near-ties at this resolution are
    /// visible through `dp_value` vs `mechanism.profit`.
    pub grid_n: usize,
    /// Exact optimum of the discretized problem.
    pub dp_value: f64,
    /// Normalized grid solution the polish started from.
    pub dp_breakpoints: Vec<f64>,
    pub dp_exclusion: f64,
    /// Continuous profit gained by the polish (zero when disabled or when
    /// the polish could not improve on the grid solution).
    pub polish_gain: f64,
    /// `dp_value − oracle profit` when the grid is small enough to
    /// enumerate exhaustively.
    pub oracle_gap: Option<f64>,
}

/// One row of the quantile-trace table `(t, F⁻¹, G⁻¹, Q⁻¹, R⁻¹)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub t: f64,
    pub f_inv: f64,
    pub g_inv: f64,
    /// Absent in the endogenous model, which has no supply distribution.
    pub q_inv: Option<f64>,
    pub r_inv: f64,
}

/// Sample the solved quantile functions on a uniform grid for plotting.
pub fn quantile_trace(
    f: &Dist,
    q: Option<&Dist>,
    m: &Mechanism,
    step: f64,
) -> Result<Vec<TraceRow>> {
    if !(step > 0.0 && step <= 0.5) {
        return Err(Error::InvalidInput(format!("bad trace spacing {step}")));
    }
    let g_step = StepQuantile::from_levels(
        m.partition.breakpoints().to_vec(),
        m.cells.iter().map(|c| c.expected_value).collect(),
    )?;
    let r_step = StepQuantile::from_levels(
        m.partition.breakpoints().to_vec(),
        m.cells.iter().map(|c| c.expected_quality).collect(),
    )?;
    let count = (1.0 / step).round() as usize;
    let mut rows = Vec::with_capacity(count + 1);
    for i in 0..=count {
        let t = (i as f64 * step).min(1.0);
        rows.push(TraceRow {
            t,
            f_inv: f.quantile(t)?,
            g_inv: g_step.value(t),
            q_inv: match q {
                Some(q) => Some(q.quantile(t)?),
                None => None,
            },
            r_inv: r_step.value(t),
        });
    }
    Ok(rows)
}

/// Multi-start Nelder-Mead around `x0`: one start at `x0` itself plus
/// seeded jitters, reduced deterministically by (value, start index).
pub(crate) fn polish_multistart<F>(
    objective: &F,
    x0: &[f64],
    step: f64,
    multistarts: usize,
    seed: u64,
) -> (Vec<f64>, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let opts = SimplexOptions { max_iters: 300 * x0.len().max(1), ..Default::default() };
    let mut starts = vec![x0.to_vec()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 1..multistarts.max(1) {
        let jittered: Vec<f64> = x0
            .iter()
            .map(|&v| v + rng.gen_range(-1.5 * step..1.5 * step))
            .collect();
        starts.push(jittered);
    }
    let results: Vec<(Vec<f64>, f64)> = starts
        .par_iter()
        .map(|s| simplex::maximize(objective, s, step, &opts))
        .collect();
    let mut best = results[0].clone();
    for cand in results.into_iter().skip(1) {
        if cand.1 > best.1 {
            best = cand;
        }
    }
    best
}

/// Greedy profit-preserving coarsening: repeatedly drop interior
/// breakpoints while the objective stays within `tol` of `anchor`. This is
/// the "fewer items on ties" rule; it also collapses the zero-quality
/// bottom cells into one.
pub(crate) fn merge_breakpoints<E>(breaks: Vec<usize>, anchor: f64, tol: f64, eval: E) -> Vec<usize>
where
    E: Fn(&[usize]) -> Option<f64>,
{
    let mut current = breaks;
    'outer: loop {
        if current.len() <= 2 {
            return current;
        }
        for k in 1..current.len() - 1 {
            let mut cand = current.clone();
            cand.remove(k);
            if let Some(v) = eval(&cand) {
                if v >= anchor - tol {
                    current = cand;
                    continue 'outer;
                }
            }
        }
        return current;
    }
}

/// Same rule over continuous breakpoints.
pub(crate) fn merge_breakpoints_continuous<E>(
    breaks: Vec<f64>,
    anchor: f64,
    tol: f64,
    eval: E,
) -> Vec<f64>
where
    E: Fn(&[f64]) -> Option<f64>,
{
    let mut current = breaks;
    'outer: loop {
        if current.len() <= 2 {
            return current;
        }
        for k in 1..current.len() - 1 {
            let mut cand = current.clone();
            cand.remove(k);
            if let Some(v) = eval(&cand) {
                if v >= anchor - tol {
                    current = cand;
                    continue 'outer;
                }
            }
        }
        return current;
    }
}
