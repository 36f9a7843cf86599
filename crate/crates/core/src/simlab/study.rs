//! Replicated comparison of the method roster on one scenario.

use rayon::prelude::*;

use crate::bh::{fdp_power, run_method, MethodSpec};
use crate::error::{Error, Result};
use crate::numerics::derive_stream;

use super::scenario::{sample_scenario, ScenarioSpec};
use super::stats::{mean_and_se, quantile};
use super::fmt_num;

/// Aggregates for one method over all replications.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub label: String,
    pub mean_fdr: f64,
    pub se_fdr: f64,
    pub mean_power: f64,
    pub se_power: f64,
    pub pi0_q25: f64,
    pub pi0_q50: f64,
    pub pi0_q75: f64,
    /// Median λ, for methods that use one.
    pub lambda_q50: Option<f64>,
    pub mean_rejections: f64,
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudySummary {
    pub scenario: String,
    pub seed: u64,
    pub reps: usize,
    pub q: f64,
    pub methods: Vec<MethodSummary>,
}

pub const CSV_HEADER: &str =
    "scenario,method,mean_fdr,se_fdr,mean_power,se_power,pi0_q25,pi0_q50,pi0_q75,lambda_q50,reps,seed";

impl StudySummary {
    pub fn get(&self, label: &str) -> Option<&MethodSummary> {
        self.methods.iter().find(|m| m.label == label)
    }

    /// CSV rows without the header line.
    pub fn csv_rows(&self) -> String {
        let mut out = String::new();
        for m in &self.methods {
            let lambda = m.lambda_q50.map_or_else(|| "NA".to_string(), fmt_num);
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{},{},{}\n",
                self.scenario,
                m.label,
                fmt_num(m.mean_fdr),
                fmt_num(m.se_fdr),
                fmt_num(m.mean_power),
                fmt_num(m.se_power),
                fmt_num(m.pi0_q25),
                fmt_num(m.pi0_q50),
                fmt_num(m.pi0_q75),
                lambda,
                self.reps,
                self.seed
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        format!("{CSV_HEADER}\n{}", self.csv_rows())
    }
}

#[derive(Debug, Clone, Copy)]
struct Record {
    fdp: f64,
    power: f64,
    pi0: f64,
    lambda: Option<f64>,
    rejections: usize,
}

/// Runs `reps` replications of `spec`, each on `derive_stream(master_seed, r)`,
/// and summarizes every method at level q.
pub fn run_study(
    spec: &ScenarioSpec,
    methods: &[MethodSpec],
    reps: usize,
    master_seed: u64,
    q: f64,
) -> Result<StudySummary> {
    if reps == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    if methods.is_empty() {
        return Err(Error::InvalidInput("need at least one method".into()));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    for m in methods {
        m.validate()?;
    }
    spec.validate()?;

    let per_rep: Vec<Vec<Record>> = (0..reps)
        .into_par_iter()
        .map(|r| {
            let mut stream = derive_stream(master_seed, r as u64);
            let batch = sample_scenario(spec, &mut stream)?;
            methods
                .iter()
                .map(|m| {
                    let res = run_method(&batch, q, m)?;
                    let metrics = fdp_power(&res, &batch)?;
                    Ok(Record {
                        fdp: metrics.fdp,
                        power: metrics.power,
                        pi0: res.pi0_used,
                        lambda: res.lambda_used,
                        rejections: metrics.rejections,
                    })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let summaries = methods
        .iter()
        .enumerate()
        .map(|(k, m)| {
            let col: Vec<Record> = per_rep.iter().map(|row| row[k]).collect();
            let pick = |f: fn(&Record) -> f64| col.iter().map(f).collect::<Vec<f64>>();
            let (mean_fdr, se_fdr) = mean_and_se(&pick(|r| r.fdp));
            let (mean_power, se_power) = mean_and_se(&pick(|r| r.power));
            let pi0 = pick(|r| r.pi0);
            let lambdas: Vec<f64> = col.iter().filter_map(|r| r.lambda).collect();
            MethodSummary {
                label: m.to_string(),
                mean_fdr,
                se_fdr,
                mean_power,
                se_power,
                pi0_q25: quantile(&pi0, 0.25),
                pi0_q50: quantile(&pi0, 0.5),
                pi0_q75: quantile(&pi0, 0.75),
                lambda_q50: (!lambdas.is_empty()).then(|| quantile(&lambdas, 0.5)),
                mean_rejections: mean_and_se(&pick(|r| r.rejections as f64)).0,
                reps,
            }
        })
        .collect();

    Ok(StudySummary { scenario: spec.id.to_string(), seed: master_seed, reps, q, methods: summaries })
}
