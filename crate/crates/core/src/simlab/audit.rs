//! Monte Carlo audit of the supermartingale behind the FDR bound for
//! Storey's estimator at a stopping time, under uniform nulls.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::estimators::PValueBatch;
use crate::numerics::derive_stream;
use crate::stopping::{stop_plain, GridSpec};

use super::fmt_num;
use super::stats::mean_and_se;

#[derive(Debug, Clone, PartialEq)]
pub struct AuditConfig {
    /// Number of null p-values per replication (all hypotheses are null).
    pub n0: usize,
    /// Increasing grid in [q, 1); its first point plays the role of q.
    pub t_grid: Vec<f64>,
    pub reps: usize,
    pub seed: u64,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self { n0: 200, t_grid: (2..=9).map(|k| k as f64 / 10.0).collect(), reps: 50_000, seed: 1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AuditQuantity {
    /// E[M_t] with M_t = (1 − t)/(1 + #{null p ≥ t}).
    Martingale { t: f64 },
    /// E[n·M_q], bounded by n/(1 + n₀).
    ScaledStart,
    /// E[1/π̂₀] at the plain stopping rule's λ̂, bounded by n/(1 + n₀).
    InversePi0,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditRow {
    pub quantity: AuditQuantity,
    pub mean: f64,
    pub se: f64,
    /// Closed-form bound, where one applies.
    pub bound: Option<f64>,
    pub flagged: bool,
}

impl AuditRow {
    pub const CSV_HEADER: &'static str = "quantity,t,mean,se,bound,flagged";

    pub fn csv_line(&self) -> String {
        let (name, t) = match self.quantity {
            AuditQuantity::Martingale { t } => ("M_t", fmt_num(t)),
            AuditQuantity::ScaledStart => ("n_M_q", "NA".to_string()),
            AuditQuantity::InversePi0 => ("inv_pi0", "NA".to_string()),
        };
        let bound = self.bound.map_or_else(|| "NA".to_string(), fmt_num);
        format!("{name},{t},{},{},{bound},{}", fmt_num(self.mean), fmt_num(self.se), self.flagged)
    }
}

/// Estimates E[M_t] along the grid, E[n·M_q] and E[1/π̂₀^λ̂] for the plain
/// rule on the grid (q = first point, δ = grid spacing, last point as cap).
///
/// Flags an M_t row whose mean exceeds its predecessor's by more than 3 SE
/// of the paired difference, the n·M_q row if its mean exceeds the bound by
/// more than 3 relative SE, and the 1/π̂₀ row if its mean exceeds the bound
/// by more than 3 SE. Returns no 1/π̂₀ row when n₀ = 0.
pub fn martingale_audit(config: &AuditConfig) -> Result<Vec<AuditRow>> {
    let grid = &config.t_grid;
    if grid.is_empty() {
        return Err(Error::InvalidInput("t grid is empty".into()));
    }
    if grid.iter().any(|t| !(0.0..1.0).contains(t)) || grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("t grid must be strictly increasing in [0, 1)".into()));
    }
    if config.reps == 0 {
        return Err(Error::InvalidInput("need at least one replication".into()));
    }
    let n0 = config.n0;
    let q = grid[0];
    let stopping_grid = if grid.len() >= 2 {
        let delta = grid[1] - grid[0];
        GridSpec::new(q, delta, Some(grid[grid.len() - 1]))?
    } else {
        GridSpec::new(q, (1.0 - q) / 2.0, None)?
    };

    // per replication: M_t along the grid, then 1/π̂₀ (NaN when n₀ = 0)
    let samples: Vec<(Vec<f64>, f64)> = (0..config.reps)
        .into_par_iter()
        .map(|r| {
            let mut stream = derive_stream(config.seed, r as u64);
            let p: Vec<f64> = (0..n0).map(|_| stream.uniform_pvalue()).collect();
            let m: Vec<f64> =
                grid.iter().map(|&t| (1.0 - t) / (1 + p.iter().filter(|&&x| x >= t).count()) as f64).collect();
            let inv = if n0 == 0 {
                f64::NAN
            } else {
                let batch = PValueBatch::new(p).expect("uniform draws lie in (0, 1]");
                1.0 / stop_plain(&batch, &stopping_grid).pi0_hat
            };
            (m, inv)
        })
        .collect();

    let bound = n0.max(1) as f64 / (1 + n0) as f64;
    let mut rows = Vec::new();
    let column = |k: usize| samples.iter().map(|s| s.0[k]).collect::<Vec<f64>>();
    for (k, &t) in grid.iter().enumerate() {
        let values = column(k);
        let (mean, se) = mean_and_se(&values);
        let flagged = if k == 0 {
            false
        } else {
            let prev = column(k - 1);
            let diff: Vec<f64> = values.iter().zip(&prev).map(|(a, b)| a - b).collect();
            let (d, d_se) = mean_and_se(&diff);
            d > 3.0 * d_se + 1e-15
        };
        rows.push(AuditRow { quantity: AuditQuantity::Martingale { t }, mean, se, bound: None, flagged });
    }

    let n = n0.max(1) as f64;
    let scaled: Vec<f64> = column(0).iter().map(|m| n * m).collect();
    let (mean, se) = mean_and_se(&scaled);
    rows.push(AuditRow {
        quantity: AuditQuantity::ScaledStart,
        mean,
        se,
        bound: Some(bound),
        flagged: mean > bound * (1.0 + 3.0 * se / mean) + 1e-15,
    });

    if n0 > 0 {
        let inv: Vec<f64> = samples.iter().map(|s| s.1).collect();
        let (mean, se) = mean_and_se(&inv);
        rows.push(AuditRow {
            quantity: AuditQuantity::InversePi0,
            mean,
            se,
            bound: Some(bound),
            flagged: mean > bound + 3.0 * se,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn no_nulls_is_deterministic() {
        let cfg = AuditConfig { n0: 0, reps: 20, ..AuditConfig::default() };
        let rows = martingale_audit(&cfg).unwrap();
        assert_eq!(rows.len(), 9);
        for row in &rows[..8] {
            let AuditQuantity::Martingale { t } = row.quantity else { panic!() };
            assert!((row.mean - (1.0 - t)).abs() < 1e-15);
            assert!(row.se < 1e-15);
            assert!(!row.flagged);
        }
        assert!(!rows[8].flagged);
    }

    #[test]
    fn small_audit_passes() {
        let cfg = AuditConfig { n0: 50, reps: 4000, ..AuditConfig::default() };
        let rows = martingale_audit(&cfg).unwrap();
        assert_eq!(rows.len(), 10);
        assert!(rows.iter().all(|r| !r.flagged), "{rows:?}");
        assert_eq!(rows[9].quantity, AuditQuantity::InversePi0);
    }

    #[test]
    fn start_value_matches_closed_form() {
        // E[1/(1+Bin(n₀, 1−q))] = (1 − q^{n₀+1})/((n₀+1)(1−q))
        let (n0, q) = (10usize, 0.2f64);
        let cfg = AuditConfig { n0, t_grid: vec![q], reps: 200_000, seed: 4 };
        let rows = martingale_audit(&cfg).unwrap();
        let exact = (1.0 - q) * (1.0 - q.powi(n0 as i32 + 1)) / ((n0 + 1) as f64 * (1.0 - q));
        assert!((rows[0].mean - exact).abs() < 4.0 * rows[0].se);
    }

    #[test]
    fn rejects_bad_grids() {
        let bad = |g: Vec<f64>| martingale_audit(&AuditConfig { t_grid: g, reps: 5, ..AuditConfig::default() });
        assert!(bad(vec![]).is_err());
        assert!(bad(vec![0.5, 0.3]).is_err());
        assert!(bad(vec![0.2, 1.0]).is_err());
    }
}
