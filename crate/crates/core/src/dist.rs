//! One-dimensional value and quality distributions with exact quantile
//! calculus.
//!
//! Everything downstream (pooling, majorization checks, the grid DP, the
//! profit accounting) is written in terms of the quantile function, so the
//! distribution types expose the CDF/quantile pair together with *exact*
//! partial quantile integrals `∫_a^b F⁻¹(t) dt` and conditional means. All
//! four built-in families integrate in closed form; quadrature is reserved
//! for value-space diagnostics elsewhere.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A distribution on a compact subset of the nonnegative reals.
///
/// The quantile function is the generalized inverse
/// `F⁻¹(t) = inf {v : F(v) ≥ t}`; flat CDF regions therefore resolve to the
/// left endpoint, which keeps pooling compositions well-defined.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Dist {
    /// `F(v) = ((v - lo)/(hi - lo))^exponent` on `support = [lo, hi]`.
    PowerCdf { exponent: f64, support: (f64, f64) },
    /// Uniform on `support = [lo, hi]`.
    Uniform { support: (f64, f64) },
    /// Piecewise-linear CDF through `knots = [(v, F(v)), ...]`; the CDF is
    /// strictly increasing between knots so the density is piecewise
    /// constant and strictly positive.
    PiecewiseLinear { knots: Vec<(f64, f64)> },
    /// `n` atoms of mass `1/n` each, sorted non-decreasing.
    Discrete { atoms: Vec<f64> },
}

impl Dist {
    pub fn power_cdf(exponent: f64, lo: f64, hi: f64) -> Result<Self> {
        let d = Dist::PowerCdf { exponent, support: (lo, hi) };
        d.validate()?;
        Ok(d)
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        let d = Dist::Uniform { support: (lo, hi) };
        d.validate()?;
        Ok(d)
    }

    pub fn piecewise_linear(knots: Vec<(f64, f64)>) -> Result<Self> {
        let d = Dist::PiecewiseLinear { knots };
        d.validate()?;
        Ok(d)
    }

    pub fn discrete(atoms: Vec<f64>) -> Result<Self> {
        let d = Dist::Discrete { atoms };
        d.validate()?;
        Ok(d)
    }

    /// Construction-time invariants. Also called by consumers that obtain a
    /// `Dist` through deserialization.
    pub fn validate(&self) -> Result<()> {
        let check_support = |lo: f64, hi: f64| -> Result<()> {
            if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo >= hi {
                return Err(Error::InvalidInput(format!(
                    "support must satisfy 0 <= lo < hi < inf, got [{lo}, {hi}]"
                )));
            }
            Ok(())
        };
        match self {
            Dist::PowerCdf { exponent, support } => {
                check_support(support.0, support.1)?;
                if !exponent.is_finite() || *exponent <= 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "power-cdf exponent must be positive, got {exponent}"
                    )));
                }
            }
            Dist::Uniform { support } => check_support(support.0, support.1)?,
            Dist::PiecewiseLinear { knots } => {
                if knots.len() < 2 {
                    return Err(Error::InvalidInput(
                        "piecewise-linear cdf needs at least two knots".into(),
                    ));
                }
                if knots[0].1 != 0.0 || knots[knots.len() - 1].1 != 1.0 {
                    return Err(Error::InvalidInput(
                        "piecewise-linear cdf must start at 0 and end at 1".into(),
                    ));
                }
                check_support(knots[0].0, knots[knots.len() - 1].0)?;
                for w in knots.windows(2) {
                    if !(w[1].0 > w[0].0 && w[1].1 > w[0].1)
                        || !w[1].0.is_finite()
                        || !w[1].1.is_finite()
                    {
                        return Err(Error::InvalidInput(
                            "piecewise-linear knots must be strictly increasing in both \
                             value and cdf (positive density)"
                                .into(),
                        ));
                    }
                }
            }
            Dist::Discrete { atoms } => {
                if atoms.is_empty() {
                    return Err(Error::InvalidInput("discrete family needs atoms".into()));
                }
                for a in atoms {
                    if !a.is_finite() || *a < 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "atoms must be finite and nonnegative, got {a}"
                        )));
                    }
                }
                if atoms.windows(2).any(|w| w[1] < w[0]) {
                    return Err(Error::InvalidInput("atoms must be sorted".into()));
                }
            }
        }
        Ok(())
    }

    /// Support bounds `[lo, hi]`.
    pub fn support(&self) -> (f64, f64) {
        match self {
            Dist::PowerCdf { support, .. } | Dist::Uniform { support } => *support,
            Dist::PiecewiseLinear { knots } => (knots[0].0, knots[knots.len() - 1].0),
            Dist::Discrete { atoms } => (atoms[0], atoms[atoms.len() - 1]),
        }
    }

    pub fn is_continuous(&self) -> bool {
        !matches!(self, Dist::Discrete { .. })
    }

    /// `F(v)` for `v` in the support.
    pub fn cdf(&self, v: f64) -> Result<f64> {
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&v) {
            return Err(Error::Domain(format!(
                "cdf probe {v} outside support [{lo}, {hi}]"
            )));
        }
        Ok(match self {
            Dist::PowerCdf { exponent, .. } => ((v - lo) / (hi - lo)).powf(*exponent),
            Dist::Uniform { .. } => (v - lo) / (hi - lo),
            Dist::PiecewiseLinear { knots } => {
                let i = knots.partition_point(|k| k.0 <= v);
                if i == knots.len() {
                    1.0
                } else {
                    let (v0, c0) = knots[i - 1];
                    let (v1, c1) = knots[i];
                    c0 + (c1 - c0) * (v - v0) / (v1 - v0)
                }
            }
            Dist::Discrete { atoms } => {
                let count = atoms.partition_point(|&a| a <= v);
                count as f64 / atoms.len() as f64
            }
        })
    }

    /// Generalized inverse `F⁻¹(t) = inf {v : F(v) ≥ t}` for `t ∈ [0, 1]`.
    pub fn quantile(&self, t: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::Domain(format!("quantile probe {t} outside [0, 1]")));
        }
        let (lo, hi) = self.support();
        Ok(match self {
            Dist::PowerCdf { exponent, .. } => lo + (hi - lo) * t.powf(1.0 / exponent),
            Dist::Uniform { .. } => lo + (hi - lo) * t,
            Dist::PiecewiseLinear { knots } => {
                let i = knots.partition_point(|k| k.1 < t);
                if i == 0 {
                    lo
                } else {
                    let (v0, c0) = knots[i - 1];
                    let (v1, c1) = knots[i];
                    v0 + (v1 - v0) * (t - c0) / (c1 - c0)
                }
            }
            Dist::Discrete { atoms } => {
                let n = atoms.len();
                let idx = if t <= 0.0 {
                    0
                } else {
                    ((t * n as f64).ceil() as usize).clamp(1, n) - 1
                };
                atoms[idx]
            }
        })
    }

    /// Density `f(v)` on the open support. Not defined for the discrete
    /// family.
    pub fn density(&self, v: f64) -> Result<f64> {
        if !self.is_continuous() {
            return Err(Error::Unsupported(
                "density of a discrete distribution".into(),
            ));
        }
        let (lo, hi) = self.support();
        if !(lo..=hi).contains(&v) {
            return Err(Error::Domain(format!(
                "density probe {v} outside support [{lo}, {hi}]"
            )));
        }
        Ok(match self {
            Dist::PowerCdf { exponent, .. } => {
                let u = (v - lo) / (hi - lo);
                exponent * u.powf(exponent - 1.0) / (hi - lo)
            }
            Dist::Uniform { .. } => 1.0 / (hi - lo),
            Dist::PiecewiseLinear { knots } => {
                let i = knots.partition_point(|k| k.0 <= v).clamp(1, knots.len() - 1);
                let (v0, c0) = knots[i - 1];
                let (v1, c1) = knots[i];
                (c1 - c0) / (v1 - v0)
            }
            Dist::Discrete { .. } => unreachable!("discrete handled above"),
        })
    }

    /// `∫_a^b F⁻¹(t) dt` in closed form, `0 ≤ a ≤ b ≤ 1`.
    pub fn integrate_quantile(&self, a: f64, b: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) || a > b {
            return Err(Error::Domain(format!(
                "quantile integration bounds must satisfy 0 <= a <= b <= 1, got [{a}, {b}]"
            )));
        }
        if a == b {
            return Ok(0.0);
        }
        let (lo, hi) = self.support();
        Ok(match self {
            Dist::PowerCdf { exponent, .. } => {
                let p = (exponent + 1.0) / exponent;
                lo * (b - a) + (hi - lo) * (b.powf(p) - a.powf(p)) / p
            }
            Dist::Uniform { .. } => lo * (b - a) + (hi - lo) * 0.5 * (b * b - a * a),
            Dist::PiecewiseLinear { knots } => {
                // The quantile function is piecewise linear with breakpoints
                // at the knot cdf values; trapezoid rule is exact segment by
                // segment.
                let mut total = 0.0;
                for w in knots.windows(2) {
                    let (c0, c1) = (w[0].1, w[1].1);
                    let x = a.max(c0);
                    let y = b.min(c1);
                    if y > x {
                        let q = |t: f64| w[0].0 + (w[1].0 - w[0].0) * (t - c0) / (c1 - c0);
                        total += (y - x) * 0.5 * (q(x) + q(y));
                    }
                }
                total
            }
            Dist::Discrete { atoms } => {
                let n = atoms.len() as f64;
                let mut total = 0.0;
                for (i, &atom) in atoms.iter().enumerate() {
                    let c0 = i as f64 / n;
                    let c1 = (i + 1) as f64 / n;
                    let width = b.min(c1) - a.max(c0);
                    if width > 0.0 {
                        total += atom * width;
                    }
                }
                total
            }
        })
    }

    /// `E[v | F(v) ∈ [a, b]] = ∫_a^b F⁻¹ / (b − a)`, `0 ≤ a < b ≤ 1`.
    pub fn conditional_mean(&self, a: f64, b: f64) -> Result<f64> {
        if b <= a {
            return Err(Error::Domain(format!(
                "conditional mean needs a < b, got [{a}, {b}]"
            )));
        }
        Ok(self.integrate_quantile(a, b)? / (b - a))
    }

    pub fn mean(&self) -> f64 {
        self.integrate_quantile(0.0, 1.0)
            .expect("full-interval quantile integral")
    }

    /// Virtual value `φ(v) = v − (1 − F(v))/f(v)` for continuous families.
    ///
    /// At the upper support `φ(v̄) = v̄` exactly since `1 − F(v̄) = 0`; below
    /// the lower support or at it the density-weighted term is not defined.
    pub fn virtual_value(&self, v: f64) -> Result<f64> {
        if !self.is_continuous() {
            return Err(Error::Unsupported(
                "virtual value of a discrete distribution".into(),
            ));
        }
        let (lo, hi) = self.support();
        if v == hi {
            return Ok(hi);
        }
        if v <= lo || v > hi {
            return Err(Error::Domain(format!(
                "virtual value needs v in the open support ({lo}, {hi}], got {v}"
            )));
        }
        let f = self.density(v)?;
        if !(f.is_finite() && f > 0.0) {
            return Err(Error::Domain(format!("density vanishes at {v}")));
        }
        Ok(v - (1.0 - self.cdf(v)?) / f)
    }

    /// Equal-mass discretization: atom `i` (1-based) is the conditional mean
    /// of the quantile cell `[(i−1)/n, i/n]`, so the grid mean matches the
    /// source mean exactly.
    pub fn discretize(&self, n: usize) -> Result<GridDist> {
        if n == 0 {
            return Err(Error::InvalidInput("grid size must be at least 1".into()));
        }
        let mut values: Vec<f64> = Vec::with_capacity(n);
        for i in 0..n {
            let a = i as f64 / n as f64;
            let b = (i + 1) as f64 / n as f64;
            let mut v = self.conditional_mean(a, b)?;
            // consecutive cell means are non-decreasing; clamp away the
            // sub-ulp division wobble on flat quantile regions
            if let Some(&prev) = values.last() {
                debug_assert!(v >= prev - 1e-9 * (1.0 + prev.abs()));
                if v < prev {
                    v = prev;
                }
            }
            values.push(v);
        }
        GridDist::from_values(values)
    }
}

/// Equal-mass grid: `n` sorted atoms of mass `1/n` each. The working
/// representation for the DP solvers and the exhaustive oracle; quantile
/// partitions of the grid and value partitions coincide by construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDist {
    values: Vec<f64>,
}

impl GridDist {
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let d = Dist::discrete(values)?;
        match d {
            Dist::Discrete { atoms } => Ok(GridDist { values: atoms }),
            _ => unreachable!(),
        }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// View the grid as a discrete equal-mass distribution.
    pub fn to_dist(&self) -> Dist {
        Dist::Discrete { atoms: self.values.clone() }
    }
}
