//! Null-proportion estimators: Storey's π̂₀^λ, its plug-in variance and loss,
//! the two-step BY estimator, and the π̂₀ profile over a λ-grid.

use crate::bh::bh_stepup;
use crate::error::{Error, Result};

/// An ordered collection of p-values in (0, 1], optionally carrying
/// ground-truth labels (`true` = null hypothesis).
#[derive(Debug, Clone, PartialEq)]
pub struct PValueBatch {
    pvalues: Vec<f64>,
    labels: Option<Vec<bool>>,
}

impl PValueBatch {
    pub fn new(pvalues: Vec<f64>) -> Result<Self> {
        Self::build(pvalues, None)
    }

    pub fn with_labels(pvalues: Vec<f64>, labels: Vec<bool>) -> Result<Self> {
        Self::build(pvalues, Some(labels))
    }

    fn build(pvalues: Vec<f64>, labels: Option<Vec<bool>>) -> Result<Self> {
        if pvalues.is_empty() {
            return Err(Error::InvalidInput("a p-value batch needs at least one value".into()));
        }
        if let Some((i, p)) = pvalues.iter().enumerate().find(|(_, p)| !(**p > 0.0 && **p <= 1.0)) {
            return Err(Error::InvalidInput(format!("p-value #{i} = {p} is outside (0, 1]")));
        }
        if let Some(l) = &labels {
            if l.len() != pvalues.len() {
                return Err(Error::InvalidInput(format!(
                    "{} labels for {} p-values",
                    l.len(),
                    pvalues.len()
                )));
            }
        }
        Ok(Self { pvalues, labels })
    }

    pub fn pvalues(&self) -> &[f64] {
        &self.pvalues
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }

    pub fn len(&self) -> usize {
        self.pvalues.len()
    }

    /// Always false; batches are non-empty by construction.
    pub fn is_empty(&self) -> bool {
        self.pvalues.is_empty()
    }

    /// Number of true nulls, when labels are known.
    pub fn null_count(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| l.iter().filter(|&&h| h).count())
    }

    /// #{i : p_i ≥ t}.
    pub fn count_at_least(&self, t: f64) -> usize {
        self.pvalues.iter().filter(|&&p| p >= t).count()
    }

    pub fn sorted(&self) -> SortedPValues {
        SortedPValues::new(&self.pvalues)
    }

    pub fn into_parts(self) -> (Vec<f64>, Option<Vec<bool>>) {
        (self.pvalues, self.labels)
    }
}

/// Ascending copy of a batch for repeated threshold counts.
#[derive(Debug, Clone)]
pub struct SortedPValues {
    values: Vec<f64>,
}

impl SortedPValues {
    pub fn new(pvalues: &[f64]) -> Self {
        let mut values = pvalues.to_vec();
        values.sort_by(f64::total_cmp);
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    /// #{p < t}
    pub fn count_below(&self, t: f64) -> usize {
        self.values.partition_point(|&p| p < t)
    }

    /// #{p ≥ t}
    pub fn count_at_least(&self, t: f64) -> usize {
        self.values.len() - self.count_below(t)
    }

    /// Storey's estimate at `lambda`; the caller guarantees `lambda < 1`.
    pub(crate) fn storey_value(&self, lambda: f64) -> (f64, usize) {
        let tail = self.count_at_least(lambda);
        (storey_formula(tail, self.values.len(), lambda), tail)
    }
}

/// A null-proportion estimate. `lambda` is absent for the BY estimator.
///
/// For Storey-type estimates `tail_count` is #{p ≥ λ}; for BY it is the
/// number of hypotheses not rejected by the first-stage BH run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NullProportionEstimate {
    pub value: f64,
    pub lambda: Option<f64>,
    pub tail_count: usize,
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("λ must lie in [0, 1), got {lambda}")));
    }
    Ok(())
}

#[inline]
pub(crate) fn storey_formula(tail: usize, n: usize, lambda: f64) -> f64 {
    (1 + tail) as f64 / (n as f64 * (1.0 - lambda))
}

#[inline]
pub(crate) fn variance_formula(pi0: f64, n: usize, lambda: f64) -> f64 {
    let raw = pi0 * (1.0 / (1.0 - lambda) - pi0) / n as f64;
    raw.max(0.0)
}

/// π̂₀^λ = (1 + #{p ≥ λ}) / (n(1 − λ)); values equal to λ count into the tail.
pub fn storey_pi0(batch: &PValueBatch, lambda: f64) -> Result<NullProportionEstimate> {
    check_lambda(lambda)?;
    let tail = batch.count_at_least(lambda);
    Ok(NullProportionEstimate {
        value: storey_formula(tail, batch.len(), lambda),
        lambda: Some(lambda),
        tail_count: tail,
    })
}

/// Binomial plug-in variance of π̂₀^λ, clamped at zero.
///
/// The raw expression goes negative only when every p-value is in the tail.
pub fn variance_estimate(batch: &PValueBatch, lambda: f64) -> Result<f64> {
    let est = storey_pi0(batch, lambda)?;
    Ok(variance_formula(est.value, batch.len(), lambda))
}

/// ℓ(λ) = π̂₀^λ + sqrt(V̂^λ).
pub fn loss(batch: &PValueBatch, lambda: f64) -> Result<f64> {
    let est = storey_pi0(batch, lambda)?;
    Ok(est.value + variance_formula(est.value, batch.len(), lambda).sqrt())
}

/// Two-step estimator: BH at level q/(1+q) gives R₁ rejections and
/// π̂₀ = (1+q)(1 − R₁/n).
///
/// When the first stage rejects everything, R₁ is taken as n − 1 so the
/// estimate stays positive; the second stage still rejects every p-value
/// below q in that case.
pub fn by_pi0(batch: &PValueBatch, q: f64) -> Result<NullProportionEstimate> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    let n = batch.len();
    let first = bh_stepup(batch, q / (1.0 + q))?;
    let kept = (n - first.rejections()).max(1);
    Ok(NullProportionEstimate {
        value: (1.0 + q) * (kept as f64 / n as f64),
        lambda: None,
        tail_count: kept,
    })
}

/// Storey's estimator over a strictly increasing grid, from one sort and a sweep.
pub fn pi0_profile(batch: &PValueBatch, grid: &[f64]) -> Result<Vec<NullProportionEstimate>> {
    for &lambda in grid {
        check_lambda(lambda)?;
    }
    if grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("λ-grid must be strictly increasing".into()));
    }
    let sorted = batch.sorted();
    let values = sorted.as_slice();
    let n = values.len();
    let mut below = 0;
    Ok(grid
        .iter()
        .map(|&lambda| {
            while below < n && values[below] < lambda {
                below += 1;
            }
            let tail = n - below;
            NullProportionEstimate {
                value: storey_formula(tail, n, lambda),
                lambda: Some(lambda),
                tail_count: tail,
            }
        })
        .collect())
}
