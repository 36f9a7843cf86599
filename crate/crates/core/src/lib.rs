//! False-discovery-rate control with an adaptive Storey null-proportion
//! estimator whose hyper-parameter is chosen by a stopping time.
//!
//! The crate is organized bottom-up:
//!
//! - [`numerics`]: normal CDF/quantile, exact binomials, per-replication RNG streams.
//! - [`estimators`]: Storey's estimator, its variance and loss, the two-step BY estimator.
//! - [`stopping`]: the λ-grid and the plain/robust stopping rules.
//! - [`bh`]: step-up BH, the adaptive rejection threshold, the method roster, FDP/power.
//! - [`conformal`]: conformal p-values from negative controls and the exact rank probabilities.
//! - [`simlab`]: mixture-model oracles, simulation scenarios and Monte Carlo studies.

pub mod bh;
pub mod conformal;
pub mod error;
pub mod estimators;
pub mod numerics;
pub mod simlab;
pub mod stopping;

pub use bh::{adaptive_bh, bh_stepup, fdp_power, run_method, ErrorMetrics, MethodSpec, RejectionResult};
pub use error::{Error, Result};
pub use estimators::{by_pi0, loss, pi0_profile, storey_pi0, variance_estimate, NullProportionEstimate, PValueBatch};
pub use stopping::{
    adaptive_storey, delta_rule_of_thumb, stop_plain, stop_robust, DeltaChoice, GridSpec, RuleVariant,
    StoppingOutcome, StoppingRuleSpec,
};
