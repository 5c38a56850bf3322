//! Endogenous-quality solver for the constant-elasticity cost
//! `c(q) = q^η/η`, `η > 1`.
//!
//! Conditional on the information structure, the per-segment problem is
//! pointwise: the seller supplies `r* = max(φ, 0)^{1/(η−1)}` and earns
//! `π(φ) = ((η−1)/η) max(φ, 0)^{η/(η−1)}`, so the objective over partitions
//! is `Σ g_k π(φ_k)`. Because `φ_k` depends on the *next* cell's expected
//! value, the DP scans cells from the top with the pair of the two highest
//! remaining boundaries as state; the top cell uses `φ_K = w_K`.

use serde::{Deserialize, Serialize};

use crate::dist::{Dist, GridDist};
use crate::error::{Error, Result};
use crate::grid::GridProblem;
use crate::majorization::{pool_values, QuantilePartition};
use crate::mechanism::{assemble, discrete_virtual_values, verify_mechanism, Mechanism};
use crate::oracle;
use crate::quad;
use crate::solver::{
    merge_breakpoints, merge_breakpoints_continuous, polish_multistart, SolveOptions, SolveReport,
};

/// Quality supply model: an exogenous distribution or a constant cost
/// elasticity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CostSpec {
    Exogenous { quality_dist: Dist },
    Elasticity { eta: f64 },
}

impl CostSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            CostSpec::Exogenous { quality_dist } => quality_dist.validate(),
            CostSpec::Elasticity { eta } => validate_eta(*eta),
        }
    }
}

pub(crate) fn validate_eta(eta: f64) -> Result<()> {
    if !(eta.is_finite() && eta > 1.0) {
        return Err(Error::Domain(format!(
            "elasticity must exceed 1, got {eta} (linear cost allows unbounded profit)"
        )));
    }
    Ok(())
}

/// Optimal quality and profit for one segment with virtual value `phi`:
/// `r* = max(φ, 0)^{1/(η−1)}` and `π = ((η−1)/η) max(φ, 0)^{η/(η−1)}`.
pub fn pointwise_profit(phi: f64, eta: f64) -> (f64, f64) {
    debug_assert!(eta > 1.0);
    if phi <= 0.0 {
        return (0.0, 0.0);
    }
    let r = phi.powf(1.0 / (eta - 1.0));
    let pi = (eta - 1.0) / eta * phi.powf(eta / (eta - 1.0));
    (r, pi)
}

/// Constant-elasticity production cost `c(q) = q^η/η`.
pub fn cost(q: f64, eta: f64) -> f64 {
    if q <= 0.0 {
        0.0
    } else {
        q.powf(eta) / eta
    }
}

/// Exact optimum of `Σ g_k π(φ_k)` over consecutive-cell partitions of the
/// grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndoDpResult {
    pub breakpoints: Vec<usize>,
    pub value: f64,
}

/// Top-down DP over implementable partitions.
///
/// The state is the boundary triple `(a, b, c)` of the two lowest placed
/// cells `[a, b)` and `[b, c)`: the lowest cell's virtual value is then
/// pinned down, which lets the transition to a new lowest cell `[z, a)`
/// enforce `max(φ, 0)` non-decreasing between adjacent cells. Without the
/// constraint the clipped objective would reward infeasible schedules that sandwich a
/// zero-quality cell between served ones. `O(n⁴)` time, `O(n³)` memory on
/// the triangular state set.
pub fn dp_grid(fg: &GridDist, eta: f64) -> Result<EndoDpResult> {
    validate_eta(eta)?;
    let n = fg.n();
    let g = GridProblem::endogenous(fg);

    // single-cell baseline
    let mut best_value = g.term_endo(0, n, n, eta);
    let mut best_state: Option<(usize, usize)> = None; // (b, c) of the best (0, b, c)
    if n == 1 {
        return Ok(EndoDpResult { breakpoints: vec![0, 1], value: best_value });
    }

    // triangular storage for states (a, b, c), 0 <= a < b < c <= n
    let stride = n + 1;
    let mut offset = vec![usize::MAX; stride * stride];
    let mut total = 0usize;
    for b in 1..n {
        for c in (b + 1)..=n {
            offset[b * stride + c] = total;
            total += b; // a ranges over 0..b
        }
    }
    let mut value = vec![f64::NEG_INFINITY; total];
    let mut above = vec![u32::MAX; total];
    let at = |offset: &[usize], a: usize, b: usize, c: usize| offset[b * stride + c] + a;

    // two-cell bases: cells [a, b) and the top cell [b, n)
    for b in 1..n {
        for a in 0..b {
            if g.values_at(a) == g.values_at(n - 1) {
                continue;
            }
            let i = at(&offset, a, b, n);
            value[i] = g.term_endo(b, n, n, eta) + g.term_endo(a, b, n, eta);
            above[i] = n as u32;
        }
    }

    // extend downward; states grouped by the first coordinate descending so
    // every successor state (b, c, d) is final before it is read
    for a in (0..n.saturating_sub(2)).rev() {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                if g.values_at(a) == g.values_at(c - 1) {
                    continue; // splitting a run of equal atoms
                }
                let phi_new_plus = g.phi(a, b, c).max(0.0);
                let mut bv = f64::NEG_INFINITY;
                let mut arg = u32::MAX;
                for d in (c + 1)..=n {
                    let upper = value[at(&offset, b, c, d)];
                    if upper == f64::NEG_INFINITY {
                        continue;
                    }
                    if g.phi(b, c, d).max(0.0) < phi_new_plus {
                        continue; // qualities would decrease going up
                    }
                    let cand = upper + g.term_endo(a, b, c, eta);
                    if cand > bv {
                        bv = cand;
                        arg = d as u32;
                    }
                }
                let i = at(&offset, a, b, c);
                value[i] = bv;
                above[i] = arg;
            }
        }
    }

    for b in 1..n {
        for c in (b + 1)..=n {
            let v = value[at(&offset, 0, b, c)];
            if v > best_value {
                best_value = v;
                best_state = Some((b, c));
            }
        }
    }

    let breakpoints = match best_state {
        None => vec![0, n],
        Some((b, c)) => {
            let mut breaks = vec![0, b, c];
            let (mut a, mut b, mut c) = (0, b, c);
            while c != n {
                let d = above[at(&offset, a, b, c)] as usize;
                breaks.push(d);
                (a, b, c) = (b, c, d);
            }
            breaks
        }
    };
    Ok(EndoDpResult { breakpoints, value: best_value })
}

/// Endogenous profit of a continuous partition: pooled expected values,
/// discrete virtual values, then `Σ g_k π(φ_k)`. Partitions whose clipped
/// virtual values decrease anywhere are rejected: their pointwise-optimal
/// qualities are not monotone, so the formula does not price a real menu.
pub fn continuous_profit_endo(f: &Dist, breaks: &[f64], eta: f64) -> Result<f64> {
    let mut gw = Vec::with_capacity(breaks.len() - 1);
    let mut prev_w = f64::NEG_INFINITY;
    for win in breaks.windows(2) {
        let w = f.conditional_mean(win[0], win[1])?;
        if w <= prev_w {
            return Err(Error::Domain("pooled values not strictly increasing".into()));
        }
        prev_w = w;
        gw.push((win[1] - win[0], w));
    }
    let phis = discrete_virtual_values(&gw)?;
    if phis.windows(2).any(|w| w[1].max(0.0) < w[0].max(0.0)) {
        return Err(Error::Domain(
            "clipped virtual values decrease; qualities would not be monotone".into(),
        ));
    }
    // top-down accumulation, matching the DP
    let mut total = 0.0;
    for (k, &(g, _)) in gw.iter().enumerate().rev() {
        total += g * pointwise_profit(phis[k], eta).1;
    }
    Ok(total)
}

/// Assemble the menu induced by a partition under elasticity `eta`.
pub fn build_mechanism_endo(f: &Dist, eta: f64, breaks: &[f64]) -> Result<Mechanism> {
    validate_eta(eta)?;
    let partition = QuantilePartition::all_pooled(breaks.to_vec(), 0.0)?;
    let g_step = pool_values(f, &partition)?;
    let ws = g_step.pooled_levels().expect("all pooled");
    let gw: Vec<(f64, f64)> = partition
        .cells()
        .zip(&ws)
        .map(|((lo, hi, _), &w)| (hi - lo, w))
        .collect();
    let phis = discrete_virtual_values(&gw)?;
    let gwr: Vec<(f64, f64, f64)> = gw
        .iter()
        .zip(&phis)
        .map(|(&(g, w), &phi)| (g, w, pointwise_profit(phi, eta).0))
        .collect();
    let total_cost: f64 = gwr.iter().map(|&(g, _, r)| g * cost(r, eta)).sum();
    assemble(partition, &gwr, total_cost)
}

/// Solve the endogenous-quality model.
pub fn solve_endogenous(f: &Dist, eta: f64, opts: &SolveOptions) -> Result<SolveReport> {
    opts.validate()?;
    f.validate()?;
    validate_eta(eta)?;
    let n = opts.grid_n;
    let fg = f.discretize(n)?;
    let problem = GridProblem::endogenous(&fg);
    let dp = dp_grid(&fg, eta)?;

    let breaks_idx = merge_breakpoints(dp.breakpoints.clone(), dp.value, opts.profit_tol, |cand| {
        problem
            .feasible_endo(cand)
            .then(|| problem.profit_endo(cand, eta))
    });

    let scale = n as f64;
    let mut breaks: Vec<f64> = breaks_idx.iter().map(|&i| i as f64 / scale).collect();
    let dp_breakpoints = breaks.clone();
    let grid_profit = continuous_profit_endo(f, &breaks, eta)?;

    let mut polish_gain = 0.0;
    if opts.polish && breaks.len() > 2 {
        if let Some((pb, pv)) = polish_endo(f, eta, &breaks, opts, grid_profit) {
            polish_gain = pv - grid_profit;
            breaks = pb;
        }
    }

    let mechanism = build_mechanism_endo(f, eta, &breaks)?;
    debug_assert!(
        (mechanism.profit - continuous_profit_endo(f, &breaks, eta)?).abs()
            < 1e-9 * mechanism.profit.abs().max(1.0),
        "menu profit must match the partition objective"
    );
    let verify = verify_mechanism(&mechanism, f, None);

    let oracle_gap = if n <= 12 {
        Some(dp.value - oracle::oracle_endo(&fg, eta, false)?.profit)
    } else {
        None
    };

    Ok(SolveReport {
        mechanism,
        verify,
        grid_n: n,
        dp_value: dp.value,
        dp_breakpoints,
        dp_exclusion: 0.0,
        polish_gain,
        oracle_gap,
    })
}

fn polish_endo(
    f: &Dist,
    eta: f64,
    breaks: &[f64],
    opts: &SolveOptions,
    grid_profit: f64,
) -> Option<(Vec<f64>, f64)> {
    let x0: Vec<f64> = breaks[1..breaks.len() - 1].to_vec();
    let objective = |x: &[f64]| -> f64 {
        let b = unpack_breaks(x);
        continuous_profit_endo(f, &b, eta).unwrap_or(f64::NEG_INFINITY)
    };
    let step = 1.0 / opts.grid_n as f64;
    let (best_x, best_v) = polish_multistart(&objective, &x0, step, opts.multistarts, opts.seed);
    if best_v <= grid_profit + opts.profit_tol {
        return None;
    }
    let b = merge_breakpoints_continuous(unpack_breaks(&best_x), best_v, opts.profit_tol, |cand| {
        continuous_profit_endo(f, cand, eta).ok()
    });
    let final_v = continuous_profit_endo(f, &b, eta).ok()?;
    if final_v <= grid_profit {
        return None; // normalization gave the improvement back
    }
    let mech = build_mechanism_endo(f, eta, &b).ok()?;
    if verify_mechanism(&mech, f, None).hard_passed {
        Some((b, final_v))
    } else {
        None
    }
}

fn unpack_breaks(x: &[f64]) -> Vec<f64> {
    const GAP: f64 = 1e-7;
    let mut inner: Vec<f64> = x.iter().map(|&v| v.clamp(GAP, 1.0 - GAP)).collect();
    inner.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut breaks = Vec::with_capacity(inner.len() + 2);
    breaks.push(0.0);
    for v in inner {
        if v - breaks[breaks.len() - 1] >= GAP {
            breaks.push(v);
        }
    }
    if 1.0 - breaks[breaks.len() - 1] < GAP {
        breaks.pop();
    }
    breaks.push(1.0);
    breaks
}

/// The two reference profits: complete pooling `Π_P = π(E[v])` and complete
/// disclosure `Π̂ = ∫ π(max(φ(v), 0)) f(v) dv`.
///
/// The disclosure benchmark uses the continuous virtual value without
/// ironing, which is exactly the comparison expression; for irregular value
/// distributions it understates the true full-disclosure optimum.
pub fn benchmark_profits(f: &Dist, eta: f64) -> Result<(f64, f64)> {
    validate_eta(eta)?;
    let pi_pool = pointwise_profit(f.mean(), eta).1;
    if !f.is_continuous() {
        return Err(Error::Unsupported(
            "complete-disclosure benchmark needs a continuous value distribution".into(),
        ));
    }
    let (lo, hi) = f.support();
    let integrand = |v: f64| {
        let phi = f.virtual_value(v).expect("open support");
        pointwise_profit(phi, eta).1 * f.density(v).expect("in support")
    };
    // split at density jumps and at sign changes of phi so each piece is
    // smooth
    let mut cuts: Vec<f64> = match f {
        Dist::PiecewiseLinear { knots } => knots.iter().map(|k| k.0).collect(),
        _ => Vec::new(),
    };
    cuts.extend(phi_roots(f));
    let eps = (hi - lo) * 1e-12;
    let pi_hat = quad::integrate_with_breaks(&integrand, lo + eps, hi, &cuts, 1e-12);
    Ok((pi_pool, pi_hat))
}

/// Sign changes of the continuous virtual value, located by bisection on a
/// scan grid.
fn phi_roots(f: &Dist) -> Vec<f64> {
    let (lo, hi) = f.support();
    let scan = 256;
    let at = |i: usize| lo + (hi - lo) * i as f64 / scan as f64;
    let phi = |v: f64| f.virtual_value(v).expect("open support");
    let mut roots = Vec::new();
    let mut prev = at(0) + (hi - lo) * 1e-9;
    let mut prev_phi = phi(prev);
    for i in 1..=scan {
        let v = at(i);
        let cur = phi(v);
        if prev_phi < 0.0 && cur >= 0.0 {
            let (mut a, mut b) = (prev, v);
            for _ in 0..80 {
                let m = 0.5 * (a + b);
                if phi(m) >= 0.0 {
                    b = m;
                } else {
                    a = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
        prev = v;
        prev_phi = cur;
    }
    roots
}

/// Elasticity thresholds of a fixed finite information structure `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaThresholds {
    /// Unique elasticity at which `Π_S = Π_P`; pooling dominates above it.
    pub eta_upper: f64,
    /// `|Π_S − Π_P|` achieved at `eta_upper`.
    pub upper_gap: f64,
    /// Best-effort estimate of the largest elasticity at which complete
    /// disclosure still dominates `S`: the supremum over a log-spaced scan
    /// of `{η : Π_S(η) ≤ Π̂(η)}`, refined by bisection. Only one direction
    /// is guaranteed, so this is reported as an estimate with its window.
    pub eta_lower_estimate: Option<f64>,
    pub scan_lo: f64,
    pub scan_hi: f64,
    /// Whether the scan bracketed a sign change for the lower threshold.
    pub lower_bracketed: bool,
}

/// Profit of the fixed structure `S = {(g_k, w_k)}` at elasticity `eta`.
pub fn structure_profit(cells: &[(f64, f64)], eta: f64) -> Result<f64> {
    validate_eta(eta)?;
    let phis = discrete_virtual_values(cells)?;
    Ok(cells
        .iter()
        .zip(&phis)
        .map(|(&(g, _), &phi)| g * pointwise_profit(phi, eta).1)
        .sum())
}

/// Locate the elasticity thresholds of structure `S` against the pooling
/// and disclosure benchmarks.
///
/// The upper threshold is the root of `Π_S(η) − Π_P(η)`, found by bisection
/// in `β = η/(η−1)` coordinates where both sides are exponential families
/// (`π(φ) = φ^β/β`), so the `η → 1` singularity never enters. Signs are
/// guaranteed by `Σ g_k φ_k = w_1 < μ_v` and `φ_K = w_K > μ_v`.
pub fn eta_thresholds(cells: &[(f64, f64)], f: &Dist) -> Result<EtaThresholds> {
    if cells.len() < 2 {
        return Err(Error::Domain(
            "thresholds need a structure with at least two signals".into(),
        ));
    }
    let phis = discrete_virtual_values(cells)?;
    if phis[1] <= 0.0 {
        return Err(Error::Domain(
            "second virtual value must be positive (exclusion only in the bottom cell)".into(),
        ));
    }
    let mu: f64 = cells.iter().map(|&(g, w)| g * w).sum();
    if phis[cells.len() - 1] <= mu {
        return Err(Error::Internal(
            "top virtual value must exceed the mean for a multi-signal structure".into(),
        ));
    }
    // normalized sign function: D(beta) = sum_k g_k (phi_k+/mu)^beta - 1
    let sign = |beta: f64| -> f64 {
        cells
            .iter()
            .zip(&phis)
            .map(|(&(g, _), &phi)| g * (phi.max(0.0) / mu).powf(beta))
            .sum::<f64>()
            - 1.0
    };
    let mut b_lo = 1.0;
    if sign(b_lo) >= 0.0 {
        // at beta = 1 (risk neutrality) the structure earns the mean of
        // its clipped virtual values, which is strictly below the pooled
        // mean for any multi-signal structure
        return Err(Error::Internal(
            "pooling must dominate at high elasticity; sign check failed at beta = 1".into(),
        ));
    }
    let mut b_hi = 2.0;
    let mut guard = 0;
    while sign(b_hi) <= 0.0 {
        b_hi *= 2.0;
        guard += 1;
        if guard > 60 {
            return Err(Error::Internal("no pooling crossover found".into()));
        }
    }
    for _ in 0..200 {
        let m = 0.5 * (b_lo + b_hi);
        if sign(m) > 0.0 {
            b_hi = m;
        } else {
            b_lo = m;
        }
        if b_hi - b_lo < 1e-13 * b_hi {
            break;
        }
    }
    let beta_star = 0.5 * (b_lo + b_hi);
    let eta_upper = beta_star / (beta_star - 1.0);
    let pi_s = structure_profit(cells, eta_upper)?;
    let pi_p = pointwise_profit(mu, eta_upper).1;

    // lower threshold: scan eta on a log grid and refine the last point
    // where complete disclosure still dominates
    let (scan_lo, scan_hi) = (1.02, 8.0);
    let mut estimate = None;
    let mut bracketed = false;
    if f.is_continuous() {
        let diff = |eta: f64| -> Result<f64> {
            let (_, pi_hat) = benchmark_profits(f, eta)?;
            Ok(structure_profit(cells, eta)? - pi_hat)
        };
        let m = 64;
        let log_lo = (scan_lo - 1.0f64).ln();
        let log_hi = (scan_hi - 1.0f64).ln();
        let grid: Vec<f64> = (0..=m)
            .map(|i| 1.0 + (log_lo + (log_hi - log_lo) * i as f64 / m as f64).exp())
            .collect();
        let mut last_dominated: Option<usize> = None;
        for (i, &eta) in grid.iter().enumerate() {
            if diff(eta)? <= 0.0 {
                last_dominated = Some(i);
            }
        }
        if let Some(i) = last_dominated {
            if i < m && diff(grid[i + 1])? > 0.0 {
                bracketed = true;
                let (mut lo, mut hi) = (grid[i], grid[i + 1]);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    if diff(mid)? <= 0.0 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                estimate = Some(0.5 * (lo + hi));
            } else {
                // dominated through the end of the scan window
                estimate = Some(grid[i]);
            }
        }
    }

    Ok(EtaThresholds {
        eta_upper,
        upper_gap: (pi_s - pi_p).abs(),
        eta_lower_estimate: estimate,
        scan_lo,
        scan_hi,
        lower_bracketed: bracketed,
    })
}

/// Outcome of the narrow-support pooling condition `v̄/v̲ < η`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct S3Check {
    /// True exactly when `v̄/v̲ < η` strictly; the solver is then expected
    /// to pool completely for every value distribution on that support.
    pub holds: bool,
    pub ratio: Option<f64>,
    pub reason: String,
}

/// Does the support-width condition guarantee complete pooling at `eta`?
pub fn check_s3(f: &Dist, eta: f64) -> S3Check {
    let (lo, hi) = f.support();
    if lo <= 0.0 {
        return S3Check {
            holds: false,
            ratio: None,
            reason: "lower support is zero; the support-ratio condition does not apply".into(),
        };
    }
    let ratio = hi / lo;
    S3Check {
        holds: ratio < eta,
        ratio: Some(ratio),
        reason: format!("support ratio {ratio} vs elasticity {eta} (strict inequality required)"),
    }
}
