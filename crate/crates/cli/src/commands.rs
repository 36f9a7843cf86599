//! Subcommand implementations.

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use clap::ValueEnum;
use serde::Serialize;

use fdrlab::conformal::conformal_pvalues;
use fdrlab::numerics::derive_stream;
use fdrlab::simlab::{
    fmt_num, martingale_audit, run_convergence_study, run_study, sample_scenario, AuditConfig, ConvergenceRow,
    ScenarioId, ScenarioSpec, AuditRow,
};
use fdrlab::{adaptive_bh, pi0_profile, run_method, MethodSpec, PValueBatch, RejectionResult};

use crate::input::{read_pvalues, read_scores};
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    /// Summary object with the rejected indices.
    Json,
    /// One `index,pvalue,rejected` row per hypothesis.
    Csv,
}

#[derive(Serialize)]
struct Report<'a> {
    method: String,
    q: f64,
    n: usize,
    pi0_hat: f64,
    lambda_hat: Option<f64>,
    tau_hat: Option<f64>,
    #[serde(rename = "R")]
    r: usize,
    rejected: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    pvalues: Option<&'a [f64]>,
}

fn write_output(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::io(format!("writing {}: {e}", path.display()))),
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| CliError::io(format!("writing stdout: {e}"))),
    }
}

fn check_q(q: f64) -> Result<(), CliError> {
    if q > 0.0 && q < 1.0 {
        Ok(())
    } else {
        Err(CliError::input(format!("--q must lie in (0, 1), got {q}")))
    }
}

fn parse_method(s: &str) -> Result<MethodSpec, CliError> {
    Ok(s.parse::<MethodSpec>()?)
}

fn report(
    batch: &PValueBatch,
    result: &RejectionResult,
    method: &MethodSpec,
    q: f64,
    format: Format,
    include_pvalues: bool,
) -> Result<(), CliError> {
    let text = match format {
        Format::Json => {
            let rep = Report {
                method: method.to_string(),
                q,
                n: batch.len(),
                pi0_hat: result.pi0_used,
                lambda_hat: result.lambda_used,
                tau_hat: result.tau_hat,
                r: result.rejections(),
                rejected: &result.rejected,
                pvalues: include_pvalues.then_some(batch.pvalues()),
            };
            let mut s = serde_json::to_string_pretty(&rep).map_err(|e| CliError::io(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Csv => {
            let mut flags = vec![false; batch.len()];
            for &i in &result.rejected {
                flags[i] = true;
            }
            let mut s = String::from("index,pvalue,rejected\n");
            for (i, (&p, &rej)) in batch.pvalues().iter().zip(&flags).enumerate() {
                s.push_str(&format!("{i},{},{rej}\n", fmt_num(p)));
            }
            s
        }
    };
    write_output(None, &text)
}

pub fn reject(input: &Path, q: f64, method: &str, format: Format) -> Result<(), CliError> {
    check_q(q)?;
    let method = parse_method(method)?;
    let batch = read_pvalues(input)?;
    let result = run_method(&batch, q, &method)?;
    report(&batch, &result, &method, q, format, false)
}

pub fn conformal(input: &Path, q: f64, method: &str, format: Format) -> Result<(), CliError> {
    check_q(q)?;
    let method = parse_method(method)?;
    let batch = conformal_pvalues(&read_scores(input)?)?;
    let result = run_method(&batch, q, &method)?;
    report(&batch, &result, &method, q, format, true)
}

pub fn profile(input: &Path, q: f64, delta: f64, lambdas: Option<Vec<f64>>) -> Result<(), CliError> {
    check_q(q)?;
    let grid = match lambdas {
        Some(l) if l.is_empty() => return Err(CliError::input("--lambdas is empty")),
        Some(l) => l,
        None => {
            if !(delta > 0.0 && delta.is_finite()) {
                return Err(CliError::input(format!("--delta must be positive, got {delta}")));
            }
            (0..).map(|j| q + j as f64 * delta).take_while(|&l| l < 1.0 - 1e-12).collect()
        }
    };
    let batch = read_pvalues(input)?;
    let estimates = pi0_profile(&batch, &grid)?;
    let mut text = String::from("lambda,pi0,rejections\n");
    for (lambda, est) in grid.iter().zip(&estimates) {
        let r = adaptive_bh(&batch, q, est.value)?.rejections();
        text.push_str(&format!("{},{},{r}\n", fmt_num(*lambda), fmt_num(est.value)));
    }
    write_output(None, &text)
}

pub fn simulate(
    scenario: &str,
    reps: usize,
    seed: u64,
    q: f64,
    methods: Option<Vec<String>>,
    out: Option<&Path>,
    dump: Option<&Path>,
) -> Result<(), CliError> {
    check_q(q)?;
    let spec = ScenarioSpec::standard(scenario.parse::<ScenarioId>()?);
    let methods = match methods {
        Some(list) => list.iter().map(|m| parse_method(m)).collect::<Result<Vec<_>, _>>()?,
        None => MethodSpec::roster(),
    };
    if let Some(path) = dump {
        let batch = sample_scenario(&spec, &mut derive_stream(seed, 0))?;
        let labels = batch.labels().expect("scenario batches are labeled");
        let mut text = String::from("pvalue,is_null\n");
        for (p, null) in batch.pvalues().iter().zip(labels) {
            text.push_str(&format!("{},{null}\n", fmt_num(*p)));
        }
        write_output(Some(path), &text)?;
    }
    let summary = run_study(&spec, &methods, reps, seed, q)?;
    write_output(out, &summary.to_csv())
}

/// `start:stop:step` (inclusive) or a comma-separated list.
fn parse_sizes(spec: &str) -> Result<Vec<usize>, CliError> {
    let bad = || CliError::input(format!("bad size list `{spec}`"));
    let spec = spec.trim();
    let sizes: Vec<usize> = if spec.contains(':') {
        let parts: Vec<usize> =
            spec.split(':').map(|s| s.trim().parse::<usize>().map_err(|_| bad())).collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else { return Err(bad()) };
        if step == 0 {
            return Err(bad());
        }
        (start..=stop).step_by(step).collect()
    } else {
        spec.split(',')
            .filter(|s| !s.trim().is_empty())
            .map(|s| s.trim().parse::<usize>().map_err(|_| bad()))
            .collect::<Result<_, _>>()?
    };
    if sizes.is_empty() {
        return Err(CliError::input("the size list is empty"));
    }
    if sizes.contains(&0) {
        return Err(CliError::input("sizes must be positive"));
    }
    Ok(sizes)
}

pub fn convergence(
    scenarios: &[String],
    n: &str,
    reps: usize,
    delta_target: usize,
    seed: u64,
    q: f64,
    out: Option<&Path>,
) -> Result<(), CliError> {
    check_q(q)?;
    let ids = scenarios.iter().map(|s| s.parse::<ScenarioId>()).collect::<Result<Vec<_>, _>>()?;
    let sizes = parse_sizes(n)?;
    let rows = run_convergence_study(&ids, &sizes, reps, delta_target, seed, q)?;
    let mut text = format!("{}\n", ConvergenceRow::CSV_HEADER);
    for row in &rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    write_output(out, &text)
}

pub fn audit(n0: usize, t_grid: Vec<f64>, reps: usize, seed: u64, out: Option<&Path>) -> Result<(), CliError> {
    let rows = martingale_audit(&AuditConfig { n0, t_grid, reps, seed })?;
    let mut text = format!("{}\n", AuditRow::CSV_HEADER);
    for row in &rows {
        text.push_str(&row.csv_line());
        text.push('\n');
    }
    let flagged = rows.iter().filter(|r| r.flagged).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} audit row(s) flagged");
    }
    write_output(out, &text)
}
