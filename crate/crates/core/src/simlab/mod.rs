//! Monte Carlo laboratory: mixture-model oracles, the simulation scenarios,
//! study drivers and audits of the probabilistic guarantees.
//!
//! Every driver derives replication `r`'s randomness from
//! `derive_stream(seed, r)` and reduces results in replication order, so
//! outputs are bit-identical whatever the rayon thread count.

mod audit;
mod convergence;
mod dominance;
mod mixture;
mod scenario;
mod stats;
mod study;

pub use audit::{martingale_audit, AuditConfig, AuditQuantity, AuditRow};
pub use convergence::{run_convergence_study, ConvergenceRow};
pub use dominance::{check_conditional_dominance, DominanceCheck};
pub use mixture::{marginal_cdf, optimal_lambda, pi0_infty, Alternative, MixtureModel, NullDist};
pub use scenario::{sample_scenario, ScenarioId, ScenarioSpec, Signal};
pub use stats::{mean_and_se, quantile};
pub use study::{run_study, MethodSummary, StudySummary, CSV_HEADER as STUDY_CSV_HEADER};

/// CSV number format: 17 significant digits, round-trips exactly.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}
