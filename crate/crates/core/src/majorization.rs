//! Majorization predicates and monotone pooling constructions.
//!
//! The feasible information structures are the distributions of expected
//! values that are mean-preserving contractions of the prior, and the
//! feasible quality allocations are the quantile functions weakly majorized
//! by the supply. Both conditions are tail-integral inequalities on the
//! quantile side:
//!
//! * mean-preserving contraction: `∫_x^1 G⁻¹ ≤ ∫_x^1 F⁻¹` for all `x` with
//!   equality of total means (equivalently `∫_v F ≤ ∫_v G` on the CDF side),
//! * weak majorization: `∫_x^1 R⁻¹ ≤ ∫_x^1 Q⁻¹` for all `x`, no equality
//!   required at `x = 0`.
//!
//! Pooling replaces the quantile function on an interval by its conditional
//! mean; the quality side first zeroes all quantiles below the exclusion
//! threshold and then pools.

use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};

/// Absolute tolerance for majorization checks.
pub const MAJORIZATION_TOL: f64 = 1e-9;

/// Disclosure regime of a partition cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CellMode {
    /// Buyers in the cell learn only the conditional expectation.
    Pool,
    /// Buyers in the cell learn their exact value.
    Disclose,
}

/// A partition of the quantile interval `[0, 1]` into cells
/// `[x_{k-1}, x_k)` plus the exclusion threshold below which allocated
/// quality is zeroed before pooling.
///
/// The exclusion threshold is a free scalar: it need not coincide with a
/// breakpoint, so a cell may average zeroed and positive qualities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantilePartition {
    breakpoints: Vec<f64>,
    exclusion: f64,
    modes: Vec<CellMode>,
}

impl QuantilePartition {
    pub fn new(breakpoints: Vec<f64>, exclusion: f64, modes: Vec<CellMode>) -> Result<Self> {
        let p = QuantilePartition { breakpoints, exclusion, modes };
        p.validate()?;
        Ok(p)
    }

    /// All-pooled partition, the shape every solver output takes.
    pub fn all_pooled(breakpoints: Vec<f64>, exclusion: f64) -> Result<Self> {
        let modes = vec![CellMode::Pool; breakpoints.len().saturating_sub(1)];
        Self::new(breakpoints, exclusion, modes)
    }

    pub fn validate(&self) -> Result<()> {
        if self.breakpoints.len() < 2 {
            return Err(Error::InvalidInput("partition needs at least one cell".into()));
        }
        if self.breakpoints[0] != 0.0 || self.breakpoints[self.breakpoints.len() - 1] != 1.0 {
            return Err(Error::InvalidInput(
                "breakpoints must start at 0 and end at 1".into(),
            ));
        }
        if self.breakpoints.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "breakpoints must be strictly increasing".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.exclusion) {
            return Err(Error::InvalidInput(format!(
                "exclusion threshold {} outside [0, 1]",
                self.exclusion
            )));
        }
        if self.modes.len() != self.breakpoints.len() - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} cell modes, got {}",
                self.breakpoints.len() - 1,
                self.modes.len()
            )));
        }
        Ok(())
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn exclusion(&self) -> f64 {
        self.exclusion
    }

    pub fn modes(&self) -> &[CellMode] {
        &self.modes
    }

    pub fn cell_count(&self) -> usize {
        self.modes.len()
    }

    pub fn all_cells_pooled(&self) -> bool {
        self.modes.iter().all(|m| *m == CellMode::Pool)
    }

    /// Iterate cells as `(lo, hi, mode)`.
    pub fn cells(&self) -> impl Iterator<Item = (f64, f64, CellMode)> + '_ {
        self.breakpoints
            .windows(2)
            .zip(&self.modes)
            .map(|(w, m)| (w[0], w[1], *m))
    }
}

/// Per-cell level of a step quantile function.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CellLevel {
    /// Constant quantile value on the cell.
    Pooled(f64),
    /// The base distribution's quantile on the cell (with the exclusion
    /// indicator applied on the quality side).
    Disclosed,
}

/// A quantile function that is piecewise either constant (pooled cells) or
/// equal to a base distribution's quantile (disclosure cells).
#[derive(Debug, Clone, PartialEq)]
pub struct StepQuantile {
    breakpoints: Vec<f64>,
    levels: Vec<CellLevel>,
    base: Option<Dist>,
    exclusion: f64,
}

impl StepQuantile {
    /// Fully pooled step function with explicit levels; no base needed.
    pub fn from_levels(breakpoints: Vec<f64>, levels: Vec<f64>) -> Result<Self> {
        // reuse partition validation for the breakpoint shape
        QuantilePartition::all_pooled(breakpoints.clone(), 0.0)?;
        if levels.len() != breakpoints.len() - 1 {
            return Err(Error::InvalidInput(format!(
                "expected {} levels, got {}",
                breakpoints.len() - 1,
                levels.len()
            )));
        }
        Ok(StepQuantile {
            breakpoints,
            levels: levels.into_iter().map(CellLevel::Pooled).collect(),
            base: None,
            exclusion: 0.0,
        })
    }

    fn new_mixed(
        breakpoints: Vec<f64>,
        levels: Vec<CellLevel>,
        base: Dist,
        exclusion: f64,
    ) -> Self {
        StepQuantile { breakpoints, levels, base: Some(base), exclusion }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn levels(&self) -> &[CellLevel] {
        &self.levels
    }

    /// Constant levels of a fully pooled step function.
    pub fn pooled_levels(&self) -> Option<Vec<f64>> {
        self.levels
            .iter()
            .map(|l| match l {
                CellLevel::Pooled(x) => Some(*x),
                CellLevel::Disclosed => None,
            })
            .collect()
    }

    fn disclosed_value(&self, t: f64) -> f64 {
        let base = self.base.as_ref().expect("disclosure cell requires a base");
        if t < self.exclusion {
            0.0
        } else {
            base.quantile(t).expect("probe within [0,1]")
        }
    }

    /// Evaluate the step quantile at `t ∈ [0, 1]`.
    pub fn value(&self, t: f64) -> f64 {
        let k = self
            .breakpoints
            .partition_point(|&b| b <= t)
            .clamp(1, self.levels.len());
        match self.levels[k - 1] {
            CellLevel::Pooled(w) => w,
            CellLevel::Disclosed => self.disclosed_value(t),
        }
    }

    /// `∫_x^1` of the step quantile, exact cell by cell.
    pub fn tail_integral(&self, x: f64) -> f64 {
        let mut total = 0.0;
        for (w, level) in self.breakpoints.windows(2).zip(&self.levels) {
            let (lo, hi) = (w[0], w[1]);
            if hi <= x {
                continue;
            }
            let a = lo.max(x);
            match level {
                CellLevel::Pooled(v) => total += v * (hi - a),
                CellLevel::Disclosed => {
                    let base = self.base.as_ref().expect("disclosure cell requires a base");
                    let from = a.max(self.exclusion);
                    if hi > from {
                        total += base
                            .integrate_quantile(from, hi)
                            .expect("valid cell bounds");
                    }
                }
            }
        }
        total
    }

    pub fn mean(&self) -> f64 {
        self.tail_integral(0.0)
    }

    /// Quantile probe points where the step function can kink or jump.
    fn probe_points(&self) -> Vec<f64> {
        let mut pts = self.breakpoints.clone();
        pts.push(self.exclusion);
        pts
    }
}

/// Anything that behaves as a quantile function with exact tail integrals.
pub trait QuantileFn {
    fn quantile_at(&self, t: f64) -> f64;
    fn tail_integral_at(&self, x: f64) -> f64;
    fn total_mean(&self) -> f64 {
        self.tail_integral_at(0.0)
    }
    /// Points worth probing in addition to a uniform grid.
    fn probe_hints(&self) -> Vec<f64>;
}

impl QuantileFn for StepQuantile {
    fn quantile_at(&self, t: f64) -> f64 {
        self.value(t)
    }
    fn tail_integral_at(&self, x: f64) -> f64 {
        self.tail_integral(x)
    }
    fn probe_hints(&self) -> Vec<f64> {
        self.probe_points()
    }
}

impl QuantileFn for Dist {
    fn quantile_at(&self, t: f64) -> f64 {
        self.quantile(t).expect("probe within [0,1]")
    }
    fn tail_integral_at(&self, x: f64) -> f64 {
        self.integrate_quantile(x, 1.0).expect("probe within [0,1]")
    }
    fn probe_hints(&self) -> Vec<f64> {
        match self {
            Dist::PiecewiseLinear { knots } => knots.iter().map(|k| k.1).collect(),
            Dist::Discrete { atoms } => {
                let n = atoms.len();
                (0..=n).map(|i| i as f64 / n as f64).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// Outcome of a majorization test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MajorizationCheck {
    pub ok: bool,
    /// Largest signed tail-integral violation over the probe set; negative
    /// values mean slack everywhere.
    pub max_violation: f64,
    /// `|mean(g) − mean(f)|` for the mean-preserving-contraction test; the
    /// weak-majorization test has no equality clause.
    pub mean_gap: Option<f64>,
}

const PROBE_GRID: usize = 1000;

fn probe_set(extra: &[f64]) -> Vec<f64> {
    let mut pts: Vec<f64> = (0..=PROBE_GRID).map(|i| i as f64 / PROBE_GRID as f64).collect();
    pts.extend(extra.iter().copied().filter(|x| (0.0..=1.0).contains(x)));
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup();
    pts
}

fn max_tail_gap(g: &impl QuantileFn, f: &impl QuantileFn) -> f64 {
    let mut extra = g.probe_hints();
    extra.extend(f.probe_hints());
    probe_set(&extra)
        .into_iter()
        .map(|x| g.tail_integral_at(x) - f.tail_integral_at(x))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Mean-preserving-contraction test: is `g` (a candidate distribution of
/// expected values) inducible from prior `f` by some information structure?
///
/// Probes `∫_x^1 G⁻¹ ≤ ∫_x^1 F⁻¹` at all breakpoints plus a uniform grid
/// and compares total means for the equality clause, which is numerically
/// more stable than the boundary integral.
pub fn check_mpc(g: &impl QuantileFn, f: &Dist) -> MajorizationCheck {
    let max_violation = max_tail_gap(g, f);
    let mean_gap = (g.total_mean() - f.mean()).abs();
    MajorizationCheck {
        ok: max_violation <= MAJORIZATION_TOL && mean_gap <= MAJORIZATION_TOL,
        max_violation,
        mean_gap: Some(mean_gap),
    }
}

/// Weak majorization test: is `r` a feasible quality allocation from supply
/// `q`? Tail-integral dominance only; quality destruction is allowed, so
/// there is no equality clause at `x = 0`.
pub fn check_weak_major(r: &impl QuantileFn, q: &Dist) -> MajorizationCheck {
    let max_violation = max_tail_gap(r, q);
    MajorizationCheck {
        ok: max_violation <= MAJORIZATION_TOL,
        max_violation,
        mean_gap: None,
    }
}

/// Pool the value distribution `f` over partition `p`: the result equals
/// `F⁻¹` on disclosure cells and the cell conditional mean on pooled cells.
pub fn pool_values(f: &Dist, p: &QuantilePartition) -> Result<StepQuantile> {
    p.validate()?;
    let mut levels = Vec::with_capacity(p.cell_count());
    for (lo, hi, mode) in p.cells() {
        levels.push(match mode {
            CellMode::Pool => CellLevel::Pooled(f.conditional_mean(lo, hi)?),
            CellMode::Disclose => CellLevel::Disclosed,
        });
    }
    Ok(StepQuantile::new_mixed(
        p.breakpoints().to_vec(),
        levels,
        f.clone(),
        0.0,
    ))
}

/// Pool the quality distribution `q` over partition `p`, zeroing quantiles
/// below the exclusion threshold *before* pooling:
/// `r_k = ∫ Q⁻¹(t)·1{t ≥ x̂} dt / (x_k − x_{k−1})` on pooled cells.
pub fn pool_qualities(q: &Dist, p: &QuantilePartition) -> Result<StepQuantile> {
    p.validate()?;
    let xhat = p.exclusion();
    let mut levels = Vec::with_capacity(p.cell_count());
    for (lo, hi, mode) in p.cells() {
        levels.push(match mode {
            CellMode::Pool => {
                let from = lo.max(xhat);
                let mass = if hi > from {
                    q.integrate_quantile(from, hi)?
                } else {
                    0.0
                };
                CellLevel::Pooled(mass / (hi - lo))
            }
            CellMode::Disclose => CellLevel::Disclosed,
        });
    }
    Ok(StepQuantile::new_mixed(
        p.breakpoints().to_vec(),
        levels,
        q.clone(),
        xhat,
    ))
}


#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn arb_continuous_dist() -> impl Strategy<Value = Dist> {
        let power = (0.3f64..3.0, 0.0f64..2.0, 0.5f64..3.0)
            .prop_map(|(a, lo, w)| Dist::power_cdf(a, lo, lo + w).unwrap());
        let uniform =
            (0.0f64..2.0, 0.5f64..3.0).prop_map(|(lo, w)| Dist::uniform(lo, lo + w).unwrap());
        prop_oneof![power, uniform]
    }

    fn arb_dist() -> impl Strategy<Value = Dist> {
        let discrete = proptest::collection::vec(0.0f64..5.0, 1..8).prop_map(|mut v| {
            v.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Dist::discrete(v).unwrap()
        });
        prop_oneof![arb_continuous_dist(), discrete]
    }

    prop_compose! {
        fn arb_breakpoints()(raw in proptest::collection::vec(0.01f64..0.99, 0..6)) -> Vec<f64> {
            let mut b = vec![0.0];
            let mut sorted = raw;
            sorted.sort_by(|a, c| a.partial_cmp(c).unwrap());
            for x in sorted {
                if x - b[b.len() - 1] > 1e-3 && 1.0 - x > 1e-3 {
                    b.push(x);
                }
            }
            b.push(1.0);
            b
        }
    }

    prop_compose! {
        fn arb_partition()(b in arb_breakpoints(), xhat in 0.0f64..=1.0) -> QuantilePartition {
            QuantilePartition::all_pooled(b, xhat).unwrap()
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(150))]

        #[test]
        fn pooled_values_are_mpc(f in arb_dist(), p in arb_partition()) {
            let g = pool_values(&f, &p).unwrap();
            let chk = check_mpc(&g, &f);
            prop_assert!(chk.ok, "violation {} mean gap {:?}", chk.max_violation, chk.mean_gap);
        }

        #[test]
        fn pooled_qualities_are_weakly_majorized(q in arb_dist(), p in arb_partition()) {
            let r = pool_qualities(&q, &p).unwrap();
            let chk = check_weak_major(&r, &q);
            prop_assert!(chk.ok, "violation {}", chk.max_violation);
        }

        #[test]
        fn pooling_preserves_mean(f in arb_dist(), b in arb_breakpoints()) {
            let p = QuantilePartition::all_pooled(b, 0.0).unwrap();
            let g = pool_values(&f, &p).unwrap();
            let total: f64 = p
                .cells()
                .zip(g.pooled_levels().unwrap())
                .map(|((lo, hi, _), w)| (hi - lo) * w)
                .sum();
            prop_assert!((total - f.mean()).abs() < 1e-12);
        }

        #[test]
        fn levels_monotone(d in arb_dist(), p in arb_partition()) {
            for sq in [pool_values(&d, &p).unwrap(), pool_qualities(&d, &p).unwrap()] {
                let levels = sq.pooled_levels().unwrap();
                prop_assert!(levels.windows(2).all(|w| w[1] >= w[0] - 1e-12),
                    "levels not monotone: {levels:?}");
            }
        }

        #[test]
        fn raising_exclusion_lowers_qualities(
            q in arb_continuous_dist(), b in arb_breakpoints(),
            x1 in 0.0f64..0.5, dx in 0.05f64..0.5
        ) {
            let x2 = (x1 + dx).min(1.0);
            let p1 = QuantilePartition::all_pooled(b.clone(), x1).unwrap();
            let p2 = QuantilePartition::all_pooled(b.clone(), x2).unwrap();
            let r1 = pool_qualities(&q, &p1).unwrap();
            let r2 = pool_qualities(&q, &p2).unwrap();
            let l1 = r1.pooled_levels().unwrap();
            let l2 = r2.pooled_levels().unwrap();
            for (k, (lo, hi, _)) in p1.cells().enumerate() {
                prop_assert!(l2[k] <= l1[k] + 1e-12);
                // cells that lose positive quality mass drop strictly
                let from = lo.max(x1);
                let to = hi.min(x2);
                if to > from && q.integrate_quantile(from, to).unwrap() > 1e-9 {
                    prop_assert!(l2[k] < l1[k]);
                }
            }
        }
    }
}
