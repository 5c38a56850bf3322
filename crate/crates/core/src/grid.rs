//! Profit arithmetic on equal-mass grids.
//!
//! Both the DP solvers and the exhaustive oracle evaluate candidate
//! partitions through the functions here, so a partition is worth exactly
//! the same floating-point number on either path: cell statistics come from
//! shared prefix sums and cell terms accumulate in a fixed order (bottom-up
//! for the exogenous objective, top-down for the endogenous one, matching
//! the direction in which each DP composes partial sums).

use crate::dist::GridDist;
use crate::solver::endogenous::pointwise_profit;

/// Prefix-sum view of a value grid and, for the exogenous model, a quality
/// grid of the same length.
pub(crate) struct GridProblem<'a> {
    pub n: usize,
    values: &'a [f64],
    value_prefix: Vec<f64>,
    quality_prefix: Option<Vec<f64>>,
}

fn prefix(xs: &[f64]) -> Vec<f64> {
    let mut p = Vec::with_capacity(xs.len() + 1);
    p.push(0.0);
    let mut acc = 0.0;
    for &x in xs {
        acc += x;
        p.push(acc);
    }
    p
}

impl<'a> GridProblem<'a> {
    pub fn exogenous(fg: &'a GridDist, qg: &'a GridDist) -> Self {
        assert_eq!(fg.n(), qg.n(), "grids must have equal length");
        GridProblem {
            n: fg.n(),
            values: fg.values(),
            value_prefix: prefix(fg.values()),
            quality_prefix: Some(prefix(qg.values())),
        }
    }

    pub fn endogenous(fg: &'a GridDist) -> Self {
        GridProblem {
            n: fg.n(),
            values: fg.values(),
            value_prefix: prefix(fg.values()),
            quality_prefix: None,
        }
    }

    /// Expected value of cell `[j, i)` (atom indices).
    #[inline]
    pub fn w(&self, j: usize, i: usize) -> f64 {
        (self.value_prefix[i] - self.value_prefix[j]) / (i - j) as f64
    }

    /// Value atom at index `i`.
    #[inline]
    pub fn values_at(&self, i: usize) -> f64 {
        self.values[i]
    }

    /// Expected quality of cell `[j, i)` with atoms below `ex` zeroed.
    #[inline]
    pub fn r(&self, j: usize, i: usize, ex: usize) -> f64 {
        let pq = self.quality_prefix.as_ref().expect("exogenous grid");
        let from = j.max(ex);
        if from >= i {
            return 0.0;
        }
        (pq[i] - pq[from]) / (i - j) as f64
    }

    /// Exogenous profit term of cell `[j, i)` given the previous cell's
    /// expected quality: `w_k (r_k − r_{k−1}) (1 − G_{k−1})`.
    #[inline]
    pub fn term_exo(&self, prev_r: f64, j: usize, i: usize, ex: usize) -> f64 {
        self.w(j, i) * (self.r(j, i, ex) - prev_r) * (self.n - j) as f64 / self.n as f64
    }

    /// Discrete virtual value of cell `[h, i)` whose successor cell is
    /// `[i, j)`: `w_k − (w_{k+1} − w_k)(1 − G_k)/g_k`.
    #[inline]
    pub fn phi(&self, h: usize, i: usize, j: usize) -> f64 {
        let w = self.w(h, i);
        w - (self.w(i, j) - w) * (self.n - i) as f64 / (i - h) as f64
    }

    /// Endogenous profit term `g_k π(φ_k)` of cell `[h, i)` with successor
    /// `[i, j)`; the top cell (`i == n`) uses the convention `φ_K = w_K`.
    #[inline]
    pub fn term_endo(&self, h: usize, i: usize, j: usize, eta: f64) -> f64 {
        let phi = if i == self.n { self.w(h, i) } else { self.phi(h, i, j) };
        (i - h) as f64 / self.n as f64 * pointwise_profit(phi, eta).1
    }

    /// Can cells `[h, j)` and `[j, i)` be adjacent? Splitting a run of equal
    /// atoms would give two cells the same expected value, and equal
    /// expected values must receive equal allocations (the allocation is a
    /// function of the signal), so such a split is the same mechanism as its
    /// merge and is excluded from the search space.
    #[inline]
    pub fn split_allowed(&self, h: usize, j: usize, i: usize) -> bool {
        debug_assert!(h < j && j < i);
        self.values[h] != self.values[i - 1]
    }

    /// Is the whole partition free of equal-value adjacent cells?
    pub fn partition_feasible(&self, breaks: &[usize]) -> bool {
        breaks
            .windows(3)
            .all(|w| self.split_allowed(w[0], w[1], w[2]))
    }

    /// Implementability of the pointwise-optimal endogenous qualities:
    /// `max(φ_k, 0)` must be non-decreasing, or the induced quality schedule
    /// is not monotone and the menu cannot be incentive compatible. The
    /// pair against the top cell holds identically (`φ_k ≤ w_k < w_K`) and
    /// is skipped, mirroring the DP transitions. Independent of the cost
    /// elasticity since `φ` depends only on the partition.
    pub fn feasible_endo(&self, breaks: &[usize]) -> bool {
        if !self.partition_feasible(breaks) {
            return false;
        }
        let k = breaks.len() - 1;
        if k < 3 {
            return true;
        }
        let mut prev_plus = self.phi(breaks[0], breaks[1], breaks[2]).max(0.0);
        for c in 1..k - 1 {
            let plus = self.phi(breaks[c], breaks[c + 1], breaks[c + 2]).max(0.0);
            if plus < prev_plus {
                return false;
            }
            prev_plus = plus;
        }
        true
    }

    /// Exogenous objective of a full partition (`breaks` includes 0 and n),
    /// accumulated bottom-up.
    pub fn profit_exo(&self, breaks: &[usize], ex: usize) -> f64 {
        let mut total = 0.0;
        let mut prev_r = 0.0;
        for w in breaks.windows(2) {
            total += self.term_exo(prev_r, w[0], w[1], ex);
            prev_r = self.r(w[0], w[1], ex);
        }
        total
    }

    /// Endogenous objective of a full partition, accumulated top-down.
    pub fn profit_endo(&self, breaks: &[usize], eta: f64) -> f64 {
        let mut total = 0.0;
        let k = breaks.len() - 1;
        for c in (0..k).rev() {
            let (h, i) = (breaks[c], breaks[c + 1]);
            let j = if c + 2 <= k { breaks[c + 2] } else { i };
            total += self.term_endo(h, i, j, eta);
        }
        total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::Dist;

    #[test]
    fn binary_instance_profits() {
        let fg = Dist::discrete(vec![2.0, 3.0]).unwrap().discretize(2).unwrap();
        let qg = Dist::discrete(vec![1.0, 4.0]).unwrap().discretize(2).unwrap();
        let g = GridProblem::exogenous(&fg, &qg);
        // separated: 2*1*1 + 3*3*(1/2) = 6.5
        assert_eq!(g.profit_exo(&[0, 1, 2], 0), 6.5);
        // pooled: 2.5 * 2.5 = 6.25
        assert_eq!(g.profit_exo(&[0, 2], 0), 6.25);
        // exclude the low type: 3*4*(1/2) = 6
        assert_eq!(g.profit_exo(&[0, 1, 2], 1), 6.0);
    }

    #[test]
    fn equal_atom_splits_are_infeasible() {
        let fg = Dist::discrete(vec![1.0, 1.0, 2.0]).unwrap().discretize(3).unwrap();
        let qg = Dist::discrete(vec![1.0, 2.0, 3.0]).unwrap().discretize(3).unwrap();
        let g = GridProblem::exogenous(&fg, &qg);
        assert!(!g.partition_feasible(&[0, 1, 2, 3]));
        assert!(!g.partition_feasible(&[0, 1, 2]));
        assert!(g.partition_feasible(&[0, 2, 3]));
        assert!(g.partition_feasible(&[0, 3]));
    }
}
