//! Profit-maximizing joint information and menu design for a monopolist
//! screening buyers by willingness-to-pay for quality.
//!
//! Given a value distribution and either a fixed quality supply or a
//! constant-elasticity production cost, the solvers return the optimal
//! monotone pooling partition of the buyer's quantile space, the pooled
//! qualities, prices and profit, and verify the structural properties the
//! optimum must satisfy: feasibility of both distributions (mean-preserving
//! contraction on the value side, weak majorization on the quality side),
//! global incentive compatibility and participation, weakly increasing
//! quality increments, and the menu-size bound.
//!
//! Layout:
//! * [`dist`]: distributions with exact quantile calculus,
//! * [`majorization`]: feasibility predicates and pooling constructions,
//! * [`mechanism`]: menu assembly, accounting identities, verification,
//! * [`solver`]: grid DP plus continuous polish for both supply models,
//! * [`oracle`]: exhaustive enumeration on tiny grids.

pub mod dist;
pub mod error;
mod grid;
pub mod majorization;
pub mod mechanism;
pub mod oracle;
pub mod quad;
mod simplex;
pub mod solver;

pub use dist::{Dist, GridDist};
pub use error::{Error, Result};
pub use majorization::{
    check_mpc, check_weak_major, pool_qualities, pool_values, CellMode, MajorizationCheck,
    QuantilePartition, QuantileFn, StepQuantile,
};
pub use mechanism::{
    build_mechanism, discrete_virtual_values, disclosure_diagnostics, profit,
    recommendation_table, verify_mechanism, CheckOutcome, DisclosureDiagnostics, MenuCell,
    Mechanism, RecommendationRow, VerifyReport,
};
pub use oracle::{oracle_endo, oracle_exo, OracleResult, OracleRow};
pub use solver::endogenous::{
    benchmark_profits, build_mechanism_endo, check_s3, eta_thresholds, pointwise_profit,
    solve_endogenous, structure_profit, CostSpec, EtaThresholds, S3Check,
};
pub use solver::exogenous::{
    disclosure_improvement_test, dp_grid, solve_exogenous, DpGridResult, ImprovementPoint,
};
pub use solver::{quantile_trace, SolveOptions, SolveReport, TraceRow};
