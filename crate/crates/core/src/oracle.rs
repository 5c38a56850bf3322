//! Exhaustive ground truth on tiny grids.
//!
//! Enumerates every consecutive-cell partition (and every grid exclusion
//! level in the exogenous model) and maximizes the same per-partition
//! profit functions the DP solvers use, so agreement is exact rather than
//! approximate. Partitions that split a run of equal value atoms are
//! excluded from the search space on both paths: the allocation is a
//! function of the induced expected value, so such a split denotes the same
//! mechanism as its merge.
//!
//! Only consecutive-cell (monotone pooling, common support) candidates are
//! enumerated; optimal mechanisms take this form, so the restriction loses
//! nothing while keeping the space at `2^{n−1}` partitions.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dist::GridDist;
use crate::error::{Error, Result};
use crate::grid::GridProblem;
use crate::solver::endogenous::validate_eta;

/// Hard cap on the grid size: `2^{n−1}` partitions times `n+1` exclusion
/// levels.
pub const MAX_ORACLE_GRID: usize = 14;

/// One enumerated candidate. Bit `b` of `mask` set means a breakpoint at
/// atom index `b + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleRow {
    pub mask: u64,
    pub exclusion_index: usize,
    pub profit: f64,
}

/// Exhaustive maximizer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OracleResult {
    pub breakpoints: Vec<usize>,
    pub exclusion_index: usize,
    pub profit: f64,
    /// Full enumeration table when requested.
    pub table: Option<Vec<OracleRow>>,
}

fn check_size(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidInput("empty grid".into()));
    }
    if n > MAX_ORACLE_GRID {
        return Err(Error::Unsupported(format!(
            "exhaustive enumeration refuses n = {n} > {MAX_ORACLE_GRID}"
        )));
    }
    Ok(())
}

fn mask_to_breaks(mask: u64, n: usize) -> Vec<usize> {
    let mut breaks = Vec::with_capacity(mask.count_ones() as usize + 2);
    breaks.push(0);
    for b in 0..n - 1 {
        if mask & (1 << b) != 0 {
            breaks.push(b + 1);
        }
    }
    breaks.push(n);
    breaks
}

struct Best {
    profit: f64,
    mask: u64,
    ex: usize,
}

impl Best {
    /// Deterministic preference: higher profit, then smaller mask, then
    /// smaller exclusion. Total order, so the parallel reduction is
    /// schedule-independent.
    fn better_than(&self, other: &Best) -> bool {
        if self.profit != other.profit {
            return self.profit > other.profit;
        }
        (self.mask, self.ex) < (other.mask, other.ex)
    }
}

/// Exact maximum of the exogenous objective over all consecutive-block
/// partitions of the grid and all grid exclusion levels.
pub fn oracle_exo(fg: &GridDist, qg: &GridDist, with_table: bool) -> Result<OracleResult> {
    if fg.n() != qg.n() {
        return Err(Error::InvalidInput("grids must have equal length".into()));
    }
    check_size(fg.n())?;
    let n = fg.n();
    let g = GridProblem::exogenous(fg, qg);
    let masks: u64 = 1 << (n - 1);

    let evaluate = |mask: u64| -> (Option<Best>, Vec<OracleRow>) {
        let breaks = mask_to_breaks(mask, n);
        if !g.partition_feasible(&breaks) {
            return (None, Vec::new());
        }
        let mut rows = Vec::new();
        let mut local: Option<Best> = None;
        for ex in 0..=n {
            let profit = g.profit_exo(&breaks, ex);
            if with_table {
                rows.push(OracleRow { mask, exclusion_index: ex, profit });
            }
            let cand = Best { profit, mask, ex };
            if local.as_ref().is_none_or(|b| cand.better_than(b)) {
                local = Some(cand);
            }
        }
        (local, rows)
    };

    let per_mask: Vec<(Option<Best>, Vec<OracleRow>)> =
        (0..masks).into_par_iter().map(evaluate).collect();

    finish(per_mask, n, with_table)
}

/// Exact maximum of the endogenous objective over all consecutive-block
/// partitions of the grid.
pub fn oracle_endo(fg: &GridDist, eta: f64, with_table: bool) -> Result<OracleResult> {
    check_size(fg.n())?;
    validate_eta(eta)?;
    let n = fg.n();
    let g = GridProblem::endogenous(fg);
    let masks: u64 = 1 << (n - 1);

    let evaluate = |mask: u64| -> (Option<Best>, Vec<OracleRow>) {
        let breaks = mask_to_breaks(mask, n);
        if !g.feasible_endo(&breaks) {
            return (None, Vec::new());
        }
        let profit = g.profit_endo(&breaks, eta);
        let row = OracleRow { mask, exclusion_index: 0, profit };
        (
            Some(Best { profit, mask, ex: 0 }),
            if with_table { vec![row] } else { Vec::new() },
        )
    };

    let per_mask: Vec<(Option<Best>, Vec<OracleRow>)> =
        (0..masks).into_par_iter().map(evaluate).collect();

    finish(per_mask, n, with_table)
}

fn finish(
    per_mask: Vec<(Option<Best>, Vec<OracleRow>)>,
    n: usize,
    with_table: bool,
) -> Result<OracleResult> {
    let mut best: Option<Best> = None;
    let mut table = Vec::new();
    for (local, rows) in per_mask {
        if let Some(cand) = local {
            if best.as_ref().is_none_or(|b| cand.better_than(b)) {
                best = Some(cand);
            }
        }
        if with_table {
            table.extend(rows);
        }
    }
    let best = best.ok_or_else(|| Error::Internal("no feasible partition enumerated".into()))?;
    Ok(OracleResult {
        breakpoints: mask_to_breaks(best.mask, n),
        exclusion_index: best.ex,
        profit: best.profit,
        table: with_table.then_some(table),
    })
}

/// Evaluate one partition through the oracle's arithmetic path (shared with
/// the DP), for agreement tests on candidate argmaxes.
pub fn eval_exo(fg: &GridDist, qg: &GridDist, breaks: &[usize], ex: usize) -> Result<f64> {
    if fg.n() != qg.n() {
        return Err(Error::InvalidInput("grids must have equal length".into()));
    }
    let g = GridProblem::exogenous(fg, qg);
    if !g.partition_feasible(breaks) {
        return Err(Error::InvalidPartition("partition splits equal atoms".into()));
    }
    Ok(g.profit_exo(breaks, ex))
}

/// Endogenous counterpart of [`eval_exo`].
pub fn eval_endo(fg: &GridDist, eta: f64, breaks: &[usize]) -> Result<f64> {
    validate_eta(eta)?;
    let g = GridProblem::endogenous(fg);
    if !g.feasible_endo(breaks) {
        return Err(Error::InvalidPartition(
            "partition splits equal atoms or has non-monotone clipped virtual values".into(),
        ));
    }
    Ok(g.profit_endo(breaks, eta))
}
