//! Spread of the stopping-time estimator as the number of hypotheses grows.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::numerics::{derive_seed, derive_stream};
use crate::stopping::{delta_rule_of_thumb, stop_plain, stop_robust, GridSpec, RuleVariant};

use super::fmt_num;
use super::scenario::{sample_scenario, ScenarioId, ScenarioSpec};
use super::stats::quantile;

/// Quartiles of π̂₀ at the stopped λ̂ for one (scenario, n, rule) cell.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub scenario: ScenarioId,
    pub n: usize,
    pub rule: RuleVariant,
    pub pi0_q25: f64,
    pub pi0_q50: f64,
    pub pi0_q75: f64,
    pub lambda_q50: f64,
    pub reps: usize,
    pub seed: u64,
}

impl ConvergenceRow {
    pub const CSV_HEADER: &'static str = "scenario,n,rule,pi0_q25,pi0_q50,pi0_q75,lambda_q50,reps,seed";

    pub fn csv_line(&self) -> String {
        let rule = match self.rule {
            RuleVariant::Plain => "plain",
            RuleVariant::Robust => "robust",
        };
        format!(
            "{},{},{},{},{},{},{},{},{}",
            self.scenario,
            self.n,
            rule,
            fmt_num(self.pi0_q25),
            fmt_num(self.pi0_q50),
            fmt_num(self.pi0_q75),
            fmt_num(self.lambda_q50),
            self.reps,
            self.seed
        )
    }
}

/// For every scenario and n, draws `reps` batches of the resized scenario and
/// stops both rules on the grid q, q+δ, … below 1 with
/// δ = `delta_target`/#{p ≥ q}. Both rules see the same batches; each cell
/// draws from its own seed derived from `master_seed`.
pub fn run_convergence_study(
    scenarios: &[ScenarioId],
    n_list: &[usize],
    reps: usize,
    delta_target: usize,
    master_seed: u64,
    q: f64,
) -> Result<Vec<ConvergenceRow>> {
    if scenarios.is_empty() || n_list.is_empty() {
        return Err(Error::InvalidInput("need at least one scenario and one n".into()));
    }
    if reps == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    let mut rows = Vec::new();
    for &id in scenarios {
        if id == ScenarioId::C {
            return Err(Error::InvalidInput("the screened scenario has a random size and cannot be resized".into()));
        }
        for &n in n_list {
            let spec = ScenarioSpec::scaled(id, n)?;
            let cell_seed = derive_seed(master_seed, ((id as u64) << 48) | n as u64);
            let draws: Vec<[(f64, f64); 2]> = (0..reps)
                .into_par_iter()
                .map(|r| {
                    let batch = sample_scenario(&spec, &mut derive_stream(cell_seed, r as u64))?;
                    let delta = delta_rule_of_thumb(&batch, q, delta_target)?;
                    let grid = GridSpec::new(q, delta, None)?;
                    let plain = stop_plain(&batch, &grid);
                    let robust = stop_robust(&batch, &grid);
                    Ok([(plain.pi0_hat, plain.lambda_hat), (robust.pi0_hat, robust.lambda_hat)])
                })
                .collect::<Result<_>>()?;
            for (k, rule) in [RuleVariant::Plain, RuleVariant::Robust].into_iter().enumerate() {
                let pi0: Vec<f64> = draws.iter().map(|d| d[k].0).collect();
                let lambda: Vec<f64> = draws.iter().map(|d| d[k].1).collect();
                rows.push(ConvergenceRow {
                    scenario: id,
                    n,
                    rule,
                    pi0_q25: quantile(&pi0, 0.25),
                    pi0_q50: quantile(&pi0, 0.5),
                    pi0_q75: quantile(&pi0, 0.75),
                    lambda_q50: quantile(&lambda, 0.5),
                    reps,
                    seed: master_seed,
                });
            }
        }
    }
    Ok(rows)
}
