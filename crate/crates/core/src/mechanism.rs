//! Menu assembly and verification.
//!
//! A partition of the quantile interval plus the two pooled step functions
//! pin down the whole mechanism: per-cell masses `g_k`, expected values
//! `w_k`, expected qualities `r_k`, prices from the binding downward
//! incentive constraint (`p_1 = w_1 r_1`, `p_k = p_{k−1} + w_k Δr_k`),
//! discrete virtual values and profit. Profit is computed three ways
//! (`Σ g_k p_k`, `Σ w_k Δr_k (1 − G_{k−1})`, `Σ g_k φ_k r_k`) and the
//! assembly fails loudly if they disagree.

use serde::{Deserialize, Serialize};

use crate::dist::Dist;
use crate::error::{Error, Result};
use crate::majorization::{
    check_mpc, check_weak_major, pool_qualities, pool_values, CellMode, QuantilePartition,
    StepQuantile, MAJORIZATION_TOL,
};
use crate::quad;

/// Tolerance for the profit accounting identities, relative to
/// `max(1, scale)` so it is the stated absolute tolerance on unit-scale
/// instances and stays meaningful when a near-unit cost elasticity blows
/// profits up by orders of magnitude.
pub const ACCOUNTING_TOL: f64 = 1e-9;

fn accounting_tol(scale: f64) -> f64 {
    ACCOUNTING_TOL * scale.abs().max(1.0)
}

/// One menu item together with the buyer segment it serves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MenuCell {
    /// Segment mass `g_k = x_k − x_{k−1}`.
    pub mass: f64,
    /// Expected value `w_k` of buyers in the segment.
    pub expected_value: f64,
    /// Expected quality `r_k` of the item.
    pub expected_quality: f64,
    /// Price `p_k`.
    pub price: f64,
    /// Discrete virtual value `φ_k`.
    pub virtual_value: f64,
}

/// A complete direct mechanism over a monotone pooling partition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mechanism {
    pub cells: Vec<MenuCell>,
    pub partition: QuantilePartition,
    /// `Σ g_k p_k`.
    pub revenue: f64,
    /// Total production cost (zero in the exogenous-supply model).
    pub cost: f64,
    /// `revenue − cost`.
    pub profit: f64,
    /// Number of cells with strictly positive expected quality.
    pub k_positive: usize,
}

/// Discrete virtual values `φ_k = w_k − (w_{k+1} − w_k)(1 − G_k)/g_k` with
/// the top convention `w_{K+1} = w_K` (so `φ_K = w_K`).
pub fn discrete_virtual_values(cells: &[(f64, f64)]) -> Result<Vec<f64>> {
    if cells.is_empty() {
        return Err(Error::Domain("no cells".into()));
    }
    let total: f64 = cells.iter().map(|c| c.0).sum();
    if cells.iter().any(|c| c.0 <= 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::Domain(format!(
            "masses must be positive and sum to 1, got total {total}"
        )));
    }
    if cells.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(Error::Domain(
            "expected values must be strictly increasing".into(),
        ));
    }
    let k = cells.len();
    let mut upper_mass = 0.0; // 1 - G_k after the running cell
    let mut phis = vec![0.0; k];
    phis[k - 1] = cells[k - 1].1;
    for i in (0..k - 1).rev() {
        upper_mass += cells[i + 1].0;
        let (g, w) = cells[i];
        phis[i] = w - (cells[i + 1].1 - w) * upper_mass / g;
    }
    Ok(phis)
}

/// Internal assembly from per-cell `(g, w, r)` triples. Prices follow the
/// binding-IC recursion exactly; the three profit routes are reconciled.
pub(crate) fn assemble(
    partition: QuantilePartition,
    gwr: &[(f64, f64, f64)],
    cost: f64,
) -> Result<Mechanism> {
    if gwr.windows(2).any(|w| w[1].1 <= w[0].1) {
        return Err(Error::InvalidPartition(
            "pooled expected values are not strictly increasing \
             (degenerate partition on an atom)"
                .into(),
        ));
    }
    if gwr.windows(2).any(|w| w[1].2 < w[0].2 - 1e-12 * w[0].2.abs().max(1.0)) {
        return Err(Error::InvalidPartition(
            "expected qualities are not non-decreasing".into(),
        ));
    }
    let gw: Vec<(f64, f64)> = gwr.iter().map(|c| (c.0, c.1)).collect();
    let phis = discrete_virtual_values(&gw)?;

    let mut cells = Vec::with_capacity(gwr.len());
    let mut price = 0.0;
    let mut prev_r = 0.0;
    for (&(g, w, r), &phi) in gwr.iter().zip(&phis) {
        price += w * (r - prev_r);
        prev_r = r;
        cells.push(MenuCell {
            mass: g,
            expected_value: w,
            expected_quality: r,
            price,
            virtual_value: phi,
        });
    }

    let revenue: f64 = cells.iter().map(|c| c.mass * c.price).sum();
    let threshold = profit_threshold_form(&cells);
    let virtual_form: f64 = cells
        .iter()
        .map(|c| c.mass * c.virtual_value * c.expected_quality)
        .sum();
    for (name, v) in [("threshold", threshold), ("virtual", virtual_form)] {
        if (v - revenue).abs() > accounting_tol(revenue) {
            return Err(Error::Internal(format!(
                "profit accounting mismatch: price form {revenue} vs {name} form {v}"
            )));
        }
    }

    let k_positive = cells.iter().filter(|c| c.expected_quality > 0.0).count();
    Ok(Mechanism {
        cells,
        partition,
        revenue,
        cost,
        profit: revenue - cost,
        k_positive,
    })
}

/// `Σ_k w_k Δr_k (1 − G_{k−1})` with `G_0 = 0` and `r_0 = 0`.
fn profit_threshold_form(cells: &[MenuCell]) -> f64 {
    let mut total = 0.0;
    let mut prev_r = 0.0;
    let mut below = 0.0;
    for c in cells {
        total += c.expected_value * (c.expected_quality - prev_r) * (1.0 - below);
        prev_r = c.expected_quality;
        below += c.mass;
    }
    total
}

/// Build the mechanism induced by partition `p` in the exogenous-supply
/// model: expected values and qualities from pooling, prices from the
/// binding-IC recursion. All cells must be pooled.
pub fn build_mechanism(f: &Dist, q: &Dist, p: &QuantilePartition) -> Result<Mechanism> {
    p.validate()?;
    if !p.all_cells_pooled() {
        return Err(Error::InvalidInput(
            "mechanism assembly requires a fully pooled partition".into(),
        ));
    }
    let g_step = pool_values(f, p)?;
    let r_step = pool_qualities(q, p)?;
    let ws = g_step.pooled_levels().expect("all pooled");
    let rs = r_step.pooled_levels().expect("all pooled");
    let gwr: Vec<(f64, f64, f64)> = p
        .cells()
        .zip(ws.iter().zip(&rs))
        .map(|((lo, hi, _), (&w, &r))| (hi - lo, w, r))
        .collect();
    assemble(p.clone(), &gwr, 0.0)
}

/// Recompute profit from the menu cells, asserting that the three
/// accounting routes agree.
pub fn profit(m: &Mechanism) -> Result<f64> {
    let revenue: f64 = m.cells.iter().map(|c| c.mass * c.price).sum();
    let threshold = profit_threshold_form(&m.cells);
    let virtual_form: f64 = m
        .cells
        .iter()
        .map(|c| c.mass * c.virtual_value * c.expected_quality)
        .sum();
    if (threshold - revenue).abs() > accounting_tol(revenue)
        || (virtual_form - revenue).abs() > accounting_tol(revenue)
    {
        return Err(Error::Internal(format!(
            "profit accounting mismatch: {revenue} / {threshold} / {virtual_form}"
        )));
    }
    Ok(threshold - m.cost)
}

/// One verification finding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    /// Hard checks are required of every valid mechanism; soft checks are
    /// structural properties of *optimal* mechanisms and reported as flags.
    pub hard: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, hard: bool, detail: String) -> Self {
        CheckOutcome { name: name.into(), passed, hard, detail }
    }
}

/// Conditional moments of virtual values and the allocation on a disclosure
/// interval, with the Cauchy-Schwarz and Bhatia-Davis bounds on the pooling
/// loss. Diagnostic quantities only, never hard checks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisclosureDiagnostics {
    pub v_lo: f64,
    pub v_hi: f64,
    pub mass: f64,
    pub mu_v: f64,
    pub mu_phi: f64,
    pub sigma_phi: f64,
    pub mu_q: f64,
    pub sigma_q: f64,
    /// `σ_φ σ_q (F(v2) − F(v1))`, the Cauchy-Schwarz bound on the profit
    /// loss from pooling the allocation on the interval.
    pub cauchy_schwarz_bound: f64,
    /// `sqrt((μ_q − q*(v1))(q*(v2) − μ_q))`, the Bhatia-Davis bound on σ_q.
    pub bhatia_davis_sigma_q: f64,
    /// Same bound for σ_φ.
    pub bhatia_davis_sigma_phi: f64,
}

/// Moments of `φ` and of the full-separation allocation `q*(v) = Q⁻¹(F(v))`
/// on a value interval `[v1, v2]`, by adaptive quadrature.
pub fn disclosure_diagnostics(
    f: &Dist,
    q: &Dist,
    v1: f64,
    v2: f64,
) -> Result<DisclosureDiagnostics> {
    if !(f.is_continuous() && q.is_continuous()) {
        return Err(Error::Unsupported(
            "disclosure diagnostics need continuous distributions".into(),
        ));
    }
    let (lo, hi) = f.support();
    if !(lo <= v1 && v1 < v2 && v2 <= hi) {
        return Err(Error::Domain(format!(
            "interval [{v1}, {v2}] not inside the value support [{lo}, {hi}]"
        )));
    }
    let tol = 1e-12;
    let qstar = |v: f64| {
        q.quantile(f.cdf(v).expect("v in support"))
            .expect("cdf in [0,1]")
    };
    let phi = |v: f64| f.virtual_value(v).expect("v in open support");
    let dens = |v: f64| f.density(v).expect("v in support");
    let mass = f.cdf(v2)? - f.cdf(v1)?;
    if mass <= 0.0 {
        return Err(Error::Domain("interval carries no mass".into()));
    }
    let avg = |g: &dyn Fn(f64) -> f64| {
        quad::integrate(&|v| g(v) * dens(v), v1, v2, tol) / mass
    };
    let mu_v = avg(&|v| v);
    let mu_phi = avg(&|v| phi(v));
    let mu_q = avg(&|v| qstar(v));
    let var_phi = avg(&|v| (phi(v) - mu_phi).powi(2)).max(0.0);
    let var_q = avg(&|v| (qstar(v) - mu_q).powi(2)).max(0.0);
    let (sigma_phi, sigma_q) = (var_phi.sqrt(), var_q.sqrt());
    let bd = |mu: f64, at1: f64, at2: f64| ((mu - at1).max(0.0) * (at2 - mu).max(0.0)).sqrt();
    Ok(DisclosureDiagnostics {
        v_lo: v1,
        v_hi: v2,
        mass,
        mu_v,
        mu_phi,
        sigma_phi,
        mu_q,
        sigma_q,
        cauchy_schwarz_bound: sigma_phi * sigma_q * mass,
        bhatia_davis_sigma_q: bd(mu_q, qstar(v1), qstar(v2)),
        bhatia_davis_sigma_phi: bd(mu_phi, phi(v1), phi(v2)),
    })
}

/// Full diagnostic report for a mechanism.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckOutcome>,
    pub disclosure: Vec<DisclosureDiagnostics>,
    pub hard_passed: bool,
    pub all_passed: bool,
}

impl VerifyReport {
    fn from_checks(checks: Vec<CheckOutcome>, disclosure: Vec<DisclosureDiagnostics>) -> Self {
        let hard_passed = checks.iter().all(|c| c.passed || !c.hard);
        let all_passed = checks.iter().all(|c| c.passed);
        VerifyReport { checks, disclosure, hard_passed, all_passed }
    }

    pub fn check(&self, name: &str) -> Option<&CheckOutcome> {
        self.checks.iter().find(|c| c.name == name)
    }
}

const IC_TOL: f64 = 1e-9;

/// Verify a mechanism against the model primitives.
///
/// Hard checks: structural well-formedness, global incentive compatibility
/// over all cell pairs, participation, price monotonicity, the profit
/// accounting identities, the virtual-value identities
/// (`Σ g_k φ_k = w_1`, `φ_K = w_K`), feasibility of the value side
/// (mean-preserving contraction) and, when the quality supply is given, of
/// the quality side (weak majorization).
///
/// Soft flags: weakly increasing quality increments, the menu-size bound
/// `K ≤ q̄/q̲` when `q̲ > 0`, and exclusion sitting below the first
/// breakpoint when only the bottom cell is unserved. These hold for optimal
/// mechanisms but not for arbitrary valid ones.
pub fn verify_mechanism(m: &Mechanism, f: &Dist, q: Option<&Dist>) -> VerifyReport {
    let mut checks = Vec::new();

    let structural = structural_check(m, f);
    let structural_ok = structural.passed;
    checks.push(structural);
    if !structural_ok {
        return VerifyReport::from_checks(checks, Vec::new());
    }

    // tolerances are relative to the menu's own magnitude, which a
    // near-unit cost elasticity can push far beyond unit scale
    let scale = m
        .cells
        .iter()
        .map(|c| (c.expected_value * c.expected_quality).abs().max(c.price.abs()))
        .fold(1.0, f64::max);
    let ic_tol = IC_TOL * scale;

    // (a) global IC over all cell pairs
    let mut worst_ic = f64::INFINITY;
    let mut worst_pair = (0, 0);
    for (k, ck) in m.cells.iter().enumerate() {
        let own = ck.expected_value * ck.expected_quality - ck.price;
        for (j, cj) in m.cells.iter().enumerate() {
            if j == k {
                continue;
            }
            let slack = own - (ck.expected_value * cj.expected_quality - cj.price);
            if slack < worst_ic {
                worst_ic = slack;
                worst_pair = (k, j);
            }
        }
    }
    let single = m.cells.len() == 1;
    checks.push(CheckOutcome::new(
        "global_ic",
        single || worst_ic >= -ic_tol,
        true,
        if single {
            "single item, nothing to deviate to".into()
        } else {
            format!(
                "worst slack {worst_ic:.3e} at cell {} deviating to item {}",
                worst_pair.0, worst_pair.1
            )
        },
    ));

    // (b) participation
    let (worst_k, worst_ir) = m
        .cells
        .iter()
        .enumerate()
        .map(|(k, c)| (k, c.expected_value * c.expected_quality - c.price))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap();
    checks.push(CheckOutcome::new(
        "participation",
        worst_ir >= -ic_tol,
        true,
        format!("worst surplus {worst_ir:.3e} at cell {worst_k}"),
    ));

    checks.push(CheckOutcome::new(
        "prices_monotone",
        m.cells.windows(2).all(|w| w[1].price >= w[0].price - ic_tol),
        true,
        "prices must be non-decreasing in the menu".into(),
    ));

    // accounting identities
    checks.push(match profit(m) {
        Ok(p) => CheckOutcome::new(
            "profit_accounting",
            (p - m.profit).abs() <= accounting_tol(m.profit),
            true,
            format!("recomputed {p}, stored {}", m.profit),
        ),
        Err(e) => CheckOutcome::new("profit_accounting", false, true, e.to_string()),
    });

    let gw: Vec<(f64, f64)> = m.cells.iter().map(|c| (c.mass, c.expected_value)).collect();
    checks.push(match discrete_virtual_values(&gw) {
        Ok(phis) => {
            let w_scale = m.cells[m.cells.len() - 1].expected_value.abs().max(1.0);
            let stored_ok = phis
                .iter()
                .zip(&m.cells)
                .all(|(p, c)| (p - c.virtual_value).abs() <= 1e-9 * w_scale);
            let mean_phi: f64 = m.cells.iter().map(|c| c.mass * c.virtual_value).sum();
            let w1 = m.cells[0].expected_value;
            let wk = m.cells[m.cells.len() - 1].expected_value;
            let phik = m.cells[m.cells.len() - 1].virtual_value;
            let ident_ok =
                (mean_phi - w1).abs() <= 1e-12 * w_scale && (phik - wk).abs() <= 1e-12 * w_scale;
            CheckOutcome::new(
                "virtual_values",
                stored_ok && ident_ok,
                true,
                format!(
                    "sum g_k phi_k = {mean_phi} vs w_1 = {w1}; phi_K = {phik} vs w_K = {wk}"
                ),
            )
        }
        Err(e) => CheckOutcome::new("virtual_values", false, true, e.to_string()),
    });

    // (f) information feasibility: the cells' expected values against f
    let g_step = StepQuantile::from_levels(
        m.partition.breakpoints().to_vec(),
        m.cells.iter().map(|c| c.expected_value).collect(),
    );
    checks.push(match g_step {
        Ok(step) => {
            let chk = check_mpc(&step, f);
            CheckOutcome::new(
                "value_mpc",
                chk.ok,
                true,
                format!(
                    "max tail violation {:.3e}, mean gap {:.3e}",
                    chk.max_violation,
                    chk.mean_gap.unwrap_or(0.0)
                ),
            )
        }
        Err(e) => CheckOutcome::new("value_mpc", false, true, e.to_string()),
    });

    // (e) quality feasibility when the supply is exogenous
    if let Some(q) = q {
        let r_step = StepQuantile::from_levels(
            m.partition.breakpoints().to_vec(),
            m.cells.iter().map(|c| c.expected_quality).collect(),
        );
        checks.push(match r_step {
            Ok(step) => {
                let chk = check_weak_major(&step, q);
                CheckOutcome::new(
                    "quality_weak_majorization",
                    chk.ok,
                    true,
                    format!("max tail violation {:.3e}", chk.max_violation),
                )
            }
            Err(e) => CheckOutcome::new("quality_weak_majorization", false, true, e.to_string()),
        });
    }

    // (c) weakly increasing quality increments, a property of optima
    let mut incr_ok = true;
    let mut prev = 0.0;
    let mut prev_dr = 0.0;
    let r_scale = m.cells[m.cells.len() - 1].expected_quality.abs().max(1.0);
    for c in &m.cells {
        let dr = c.expected_quality - prev;
        if dr < prev_dr - MAJORIZATION_TOL * r_scale {
            incr_ok = false;
        }
        prev = c.expected_quality;
        prev_dr = dr;
    }
    checks.push(CheckOutcome::new(
        "quality_increments_increasing",
        incr_ok,
        false,
        "quality increments of an optimal menu are weakly increasing".into(),
    ));

    // (d) menu-size bound when the quality floor is positive
    if let Some(q) = q {
        let (qlo, qhi) = q.support();
        if qlo > 0.0 {
            let bound = (qhi / qlo).floor() as usize;
            checks.push(CheckOutcome::new(
                "menu_size_bound",
                m.k_positive <= bound,
                false,
                format!("{} positive items vs bound {bound}", m.k_positive),
            ));
        }
    }

    // exclusion normalization: values that get nothing pool at the bottom
    let has_zero = m.cells.iter().any(|c| c.expected_quality <= 0.0);
    if has_zero || m.partition.exclusion() > 0.0 {
        let x1 = m.partition.breakpoints()[1];
        checks.push(CheckOutcome::new(
            "exclusion_normalized",
            m.partition.exclusion() <= x1 + 1e-12,
            false,
            format!(
                "exclusion {} vs first breakpoint {x1}",
                m.partition.exclusion()
            ),
        ));
    }

    // diagnostics on disclosure cells, when any and when computable
    let mut disclosure = Vec::new();
    if let Some(q) = q {
        if f.is_continuous() && q.is_continuous() {
            for (lo, hi, mode) in m.partition.cells() {
                if mode == CellMode::Disclose {
                    let v1 = f.quantile(lo).expect("in [0,1]");
                    let v2 = f.quantile(hi).expect("in [0,1]");
                    if let Ok(d) = disclosure_diagnostics(f, q, v1, v2) {
                        disclosure.push(d);
                    }
                }
            }
        }
    }

    VerifyReport::from_checks(checks, disclosure)
}

fn structural_check(m: &Mechanism, _f: &Dist) -> CheckOutcome {
    let fail = |detail: String| CheckOutcome::new("well_formed", false, true, detail);
    if let Err(e) = m.partition.validate() {
        return fail(e.to_string());
    }
    if m.cells.len() != m.partition.cell_count() {
        return fail(format!(
            "{} cells vs {} partition cells",
            m.cells.len(),
            m.partition.cell_count()
        ));
    }
    for (c, (lo, hi, _)) in m.cells.iter().zip(m.partition.cells()) {
        if (c.mass - (hi - lo)).abs() > 1e-9 {
            return fail(format!("cell mass {} vs breakpoint width {}", c.mass, hi - lo));
        }
        if !c.mass.is_finite() || c.mass <= 0.0 || c.expected_quality < -1e-12 {
            return fail("cell with nonpositive mass or negative quality".into());
        }
    }
    if m.cells.windows(2).any(|w| w[1].expected_value <= w[0].expected_value) {
        return fail("expected values not strictly increasing".into());
    }
    if m.cells.windows(2).any(|w| w[1].expected_quality < w[0].expected_quality - 1e-12) {
        return fail("expected qualities not non-decreasing".into());
    }
    let kp = m.cells.iter().filter(|c| c.expected_quality > 0.0).count();
    if kp != m.k_positive {
        return fail(format!("k_positive {} vs recount {kp}", m.k_positive));
    }
    CheckOutcome::new("well_formed", true, true, "structure valid".into())
}

/// One row of the recommendation-table view of a mechanism: buyers whose
/// expected value falls in the range are steered to the item at its posted
/// price.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecommendationRow {
    pub item: usize,
    pub value_lo: f64,
    pub value_hi: f64,
    pub expected_value: f64,
    pub expected_quality: f64,
    pub price: f64,
}

/// Indirect-implementation view: the menu is posted publicly and the signal
/// is a per-segment item recommendation.
pub fn recommendation_table(m: &Mechanism, f: &Dist) -> Result<Vec<RecommendationRow>> {
    let mut rows = Vec::with_capacity(m.cells.len());
    for (k, (c, (lo, hi, _))) in m.cells.iter().zip(m.partition.cells()).enumerate() {
        rows.push(RecommendationRow {
            item: k,
            value_lo: f.quantile(lo)?,
            value_hi: f.quantile(hi)?,
            expected_value: c.expected_value,
            expected_quality: c.expected_quality,
            price: c.price,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sqrt_f() -> Dist {
        Dist::power_cdf(2.0, 0.0, 1.0).unwrap()
    }

    fn quartic_q() -> Dist {
        Dist::power_cdf(0.25, 0.0, 1.0).unwrap()
    }

    fn two_cell() -> Mechanism {
        let p = QuantilePartition::all_pooled(vec![0.0, 0.5, 1.0], 0.0).unwrap();
        build_mechanism(&sqrt_f(), &quartic_q(), &p).unwrap()
    }

    #[test]
    fn two_cell_benchmark_menu() {
        let m = two_cell();
        assert!((m.cells[0].price - 0.005892556509887896).abs() < 1e-12);
        assert!((m.cells[1].price - 0.32911586121325104).abs() < 1e-12);
        assert!((m.profit - 0.16750420886156947).abs() < 1e-12);
        assert_eq!(m.k_positive, 2);
        assert!((profit(&m).unwrap() - m.profit).abs() < 1e-15);
    }

    #[test]
    fn single_cell_profit() {
        let p = QuantilePartition::all_pooled(vec![0.0, 1.0], 0.0).unwrap();
        let m = build_mechanism(&sqrt_f(), &quartic_q(), &p).unwrap();
        assert!((m.profit - 2.0 / 15.0).abs() < 1e-12);
    }

    #[test]
    fn full_exclusion_sells_nothing() {
        let p = QuantilePartition::all_pooled(vec![0.0, 0.5, 1.0], 1.0).unwrap();
        let m = build_mechanism(&sqrt_f(), &quartic_q(), &p).unwrap();
        assert_eq!(m.profit, 0.0);
        assert_eq!(m.k_positive, 0);
        assert!(m.cells.iter().all(|c| c.price == 0.0));
    }

    #[test]
    fn binary_separated_profit() {
        let f = Dist::discrete(vec![2.0, 3.0]).unwrap();
        let q = Dist::discrete(vec![1.0, 4.0]).unwrap();
        let p = QuantilePartition::all_pooled(vec![0.0, 0.5, 1.0], 0.0).unwrap();
        let m = build_mechanism(&f, &q, &p).unwrap();
        assert!((m.profit - 6.5).abs() < 1e-12);
        let rep = verify_mechanism(&m, &f, Some(&q));
        assert!(rep.all_passed, "{:#?}", rep.checks);
        // two positive items against the bound floor(4/1) = 4
        assert!(rep.check("menu_size_bound").unwrap().passed);
        assert_eq!(m.k_positive, 2);
    }

    #[test]
    fn virtual_value_examples() {
        let phis =
            discrete_virtual_values(&[(0.5, 0.4714045207910317), (0.5, 0.8619288125423017)])
                .unwrap();
        assert!((phis[0] - 0.08088022903976166).abs() < 1e-12);
        assert!((phis[1] - 0.8619288125423017).abs() < 1e-15);
        let phis = discrete_virtual_values(&[(1.0, 0.7)]).unwrap();
        assert_eq!(phis, vec![0.7]);
        let phis = discrete_virtual_values(&[(0.5, 1.25), (0.5, 1.75)]).unwrap();
        assert!((phis[0] - 0.75).abs() < 1e-15);
        assert!((phis[1] - 1.75).abs() < 1e-15);
        assert!(discrete_virtual_values(&[(0.5, 1.0), (0.5, 0.9)]).is_err());
    }

    #[test]
    fn degenerate_partition_rejected() {
        let f = Dist::discrete(vec![1.0, 1.0]).unwrap();
        let q = Dist::discrete(vec![1.0, 2.0]).unwrap();
        let p = QuantilePartition::all_pooled(vec![0.0, 0.5, 1.0], 0.0).unwrap();
        assert!(matches!(
            build_mechanism(&f, &q, &p),
            Err(Error::InvalidPartition(_))
        ));
    }

    #[test]
    fn disclosure_cells_rejected_by_assembly() {
        let p = QuantilePartition::new(
            vec![0.0, 0.5, 1.0],
            0.0,
            vec![CellMode::Pool, CellMode::Disclose],
        )
        .unwrap();
        assert!(matches!(
            build_mechanism(&sqrt_f(), &quartic_q(), &p),
            Err(Error::InvalidInput(_))
        ));
    }

    #[test]
    fn verify_passes_on_built_mechanism() {
        let m = two_cell();
        let rep = verify_mechanism(&m, &sqrt_f(), Some(&quartic_q()));
        assert!(rep.all_passed, "{:#?}", rep.checks);
    }

    #[test]
    fn verify_flags_decreasing_increments() {
        let mut m = two_cell();
        // hand-tamper: shrink the top increment below the bottom one while
        // keeping qualities feasible (weak majorization still holds)
        m.cells[0].expected_quality = 0.19;
        m.cells[1].expected_quality = 0.20;
        // rebuild prices so IC/IR/accounting still hold
        let mut price = 0.0;
        let mut prev_r = 0.0;
        for c in m.cells.iter_mut() {
            price += c.expected_value * (c.expected_quality - prev_r);
            prev_r = c.expected_quality;
            c.price = price;
        }
        m.revenue = m.cells.iter().map(|c| c.mass * c.price).sum();
        m.profit = m.revenue;
        let rep = verify_mechanism(&m, &sqrt_f(), Some(&quartic_q()));
        let flag = rep.check("quality_increments_increasing").unwrap();
        assert!(!flag.passed);
        assert!(!flag.hard);
        assert!(rep.hard_passed, "{:#?}", rep.checks);
    }

    #[test]
    fn verify_catches_broken_ic() {
        let mut m = two_cell();
        m.cells[1].price += 0.05; // top item overpriced: its buyers walk down
        m.revenue = m.cells.iter().map(|c| c.mass * c.price).sum();
        m.profit = m.revenue;
        let rep = verify_mechanism(&m, &sqrt_f(), Some(&quartic_q()));
        assert!(!rep.hard_passed);
        let ic = rep.check("global_ic").unwrap();
        assert!(!ic.passed);
        assert!(ic.detail.contains("cell 1 deviating to item 0"));
    }

    #[test]
    fn verify_catches_infeasible_quality() {
        let mut m = two_cell();
        m.cells[1].expected_quality = 0.9; // above what the supply supports
        let mut price = 0.0;
        let mut prev_r = 0.0;
        for c in m.cells.iter_mut() {
            price += c.expected_value * (c.expected_quality - prev_r);
            prev_r = c.expected_quality;
            c.price = price;
        }
        m.revenue = m.cells.iter().map(|c| c.mass * c.price).sum();
        m.profit = m.revenue;
        let rep = verify_mechanism(&m, &sqrt_f(), Some(&quartic_q()));
        assert!(!rep.check("quality_weak_majorization").unwrap().passed);
        assert!(!rep.hard_passed);
    }

    #[test]
    fn recommendation_table_rows() {
        let m = two_cell();
        let rows = recommendation_table(&m, &sqrt_f()).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].value_lo, 0.0);
        assert!((rows[0].value_hi - 0.5f64.sqrt()).abs() < 1e-15);
        assert_eq!(rows[1].value_hi, 1.0);
        assert_eq!(rows[1].price, m.cells[1].price);
    }
}
