//! Run configuration: a single structured-text schema shared by every
//! subcommand.
//!
//! ```json
//! {
//!   "schema_version": 1,
//!   "value_dist": { "family": "power_cdf", "exponent": 2.0, "support": [0.0, 1.0] },
//!   "cost": { "kind": "exogenous",
//!             "quality_dist": { "family": "power_cdf", "exponent": 0.25, "support": [0.0, 1.0] } },
//!   "solver": { "grid": 200, "polish": true, "multistarts": 8 },
//!   "seed": 0
//! }
//! ```
//!
//! The cost block is either `{"kind": "exogenous", "quality_dist": ...}` or
//! `{"kind": "elasticity", "eta": 2.0}`. Distribution families:
//! `power_cdf` (`exponent`, `support`), `uniform` (`support`),
//! `piecewise_linear` (`knots` as `[value, cdf]` pairs), `discrete`
//! (`atoms`).

use serde::{Deserialize, Serialize};

use screening::{CostSpec, Dist, SolveOptions};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema_version: u32,
    pub value_dist: Dist,
    pub cost: CostSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    #[serde(default = "default_grid")]
    pub grid: usize,
    #[serde(default = "default_polish")]
    pub polish: bool,
    #[serde(default = "default_multistarts")]
    pub multistarts: usize,
}

fn default_grid() -> usize {
    200
}
fn default_polish() -> bool {
    true
}
fn default_multistarts() -> usize {
    8
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            grid: default_grid(),
            polish: default_polish(),
            multistarts: default_multistarts(),
        }
    }
}

/// Elasticity sweep: either an explicit list or a uniform range, plus the
/// quantile breakpoints of the fixed information structure whose profit is
/// tracked across the sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub eta_values: Option<Vec<f64>>,
    #[serde(default)]
    pub eta_range: Option<EtaRange>,
    pub structure_breakpoints: Vec<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EtaRange {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(format!(
                "unsupported schema_version {}, expected {SCHEMA_VERSION}",
                self.schema_version
            ));
        }
        self.value_dist
            .validate()
            .map_err(|e| format!("value_dist: {e}"))?;
        self.cost.validate().map_err(|e| format!("cost: {e}"))?;
        if self.solver.grid < 2 {
            return Err(format!("solver.grid must be at least 2, got {}", self.solver.grid));
        }
        if let Some(sweep) = &self.sweep {
            sweep.validate()?;
        }
        Ok(())
    }

    pub fn solve_options(&self) -> SolveOptions {
        SolveOptions {
            grid_n: self.solver.grid,
            polish: self.solver.polish,
            multistarts: self.solver.multistarts,
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn quality_dist(&self) -> Option<&Dist> {
        match &self.cost {
            CostSpec::Exogenous { quality_dist } => Some(quality_dist),
            CostSpec::Elasticity { .. } => None,
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<(), String> {
        let etas = self.etas()?;
        if etas.is_empty() {
            return Err("sweep range is empty".into());
        }
        for eta in &etas {
            if !(eta.is_finite() && *eta > 1.0) {
                return Err(format!("sweep elasticity must exceed 1, got {eta}"));
            }
        }
        let b = &self.structure_breakpoints;
        if b.len() < 2 || b[0] != 0.0 || b[b.len() - 1] != 1.0 || b.windows(2).any(|w| w[1] <= w[0])
        {
            return Err("structure_breakpoints must be strictly increasing from 0 to 1".into());
        }
        Ok(())
    }

    pub fn etas(&self) -> Result<Vec<f64>, String> {
        match (&self.eta_values, &self.eta_range) {
            (Some(vals), None) => Ok(vals.clone()),
            (None, Some(r)) => {
                if r.count == 0 || !(r.start.is_finite() && r.stop >= r.start) {
                    return Err("eta_range is empty or reversed".into());
                }
                if r.count == 1 {
                    return Ok(vec![r.start]);
                }
                Ok((0..r.count)
                    .map(|i| r.start + (r.stop - r.start) * i as f64 / (r.count - 1) as f64)
                    .collect())
            }
            (Some(_), Some(_)) => Err("give either eta_values or eta_range, not both".into()),
            (None, None) => Err("sweep needs eta_values or eta_range".into()),
        }
    }
}
