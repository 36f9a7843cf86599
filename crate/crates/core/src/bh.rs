//! Step-up BH, the adaptive BH threshold driven by a null-proportion
//! estimate, the method roster used in the simulation studies, and FDP/power.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::estimators::{by_pi0, storey_pi0, PValueBatch};
use crate::stopping::{AdaptiveRule, DeltaChoice, RuleVariant};

#[derive(Debug, Clone, PartialEq)]
pub struct RejectionResult {
    /// Rejection threshold; `None` when nothing is rejected.
    pub tau_hat: Option<f64>,
    /// Indices into the batch, ascending.
    pub rejected: Vec<usize>,
    pub pi0_used: f64,
    pub lambda_used: Option<f64>,
}

impl RejectionResult {
    pub fn rejections(&self) -> usize {
        self.rejected.len()
    }

    fn empty(pi0_used: f64) -> Self {
        Self { tau_hat: None, rejected: Vec::new(), pi0_used, lambda_used: None }
    }
}

fn order_by_pvalue(batch: &PValueBatch, keep: impl Fn(f64) -> bool) -> Vec<(f64, usize)> {
    let mut v: Vec<(f64, usize)> =
        batch.pvalues().iter().enumerate().filter(|(_, &p)| keep(p)).map(|(i, &p)| (p, i)).collect();
    v.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    v
}

fn take_smallest(sorted: &[(f64, usize)], r: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = sorted[..r].iter().map(|&(_, i)| i).collect();
    idx.sort_unstable();
    idx
}

/// Classic step-up BH: reject the R smallest p-values with
/// R = max{k : p_(k) ≤ k·level/n}.
pub fn bh_stepup(batch: &PValueBatch, level: f64) -> Result<RejectionResult> {
    if !(level > 0.0 && level.is_finite()) {
        return Err(Error::Domain(format!("BH level must be positive, got {level}")));
    }
    let n = batch.len() as f64;
    let sorted = order_by_pvalue(batch, |_| true);
    let r = (1..=sorted.len())
        .rev()
        .find(|&k| n * sorted[k - 1].0 / k as f64 <= level)
        .unwrap_or(0);
    if r == 0 {
        return Ok(RejectionResult::empty(1.0));
    }
    Ok(RejectionResult {
        tau_hat: Some((r as f64 * level / n).max(sorted[r - 1].0)),
        rejected: take_smallest(&sorted, r),
        pi0_used: 1.0,
        lambda_used: None,
    })
}

/// τ̂ = sup{t < q : π̂₀·n·t / #{p ≤ t} ≤ q} and rejection set {p ≤ τ̂, p < q}.
///
/// Between order statistics the ratio grows with t, so the supremum is found
/// by scanning the K order statistics below q together with the t ↑ q limit.
/// When the limit satisfies the condition all K are rejected and τ̂ = q;
/// a p-value equal to q is never rejected.
pub fn adaptive_bh(batch: &PValueBatch, q: f64, pi0: f64) -> Result<RejectionResult> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
    }
    if !(pi0 > 0.0 && pi0.is_finite()) {
        return Err(Error::Domain(format!("π̂₀ must be positive, got {pi0}")));
    }
    let n = batch.len() as f64;
    let below = order_by_pvalue(batch, |p| p < q);
    let k_max = below.len();
    if k_max == 0 {
        return Ok(RejectionResult::empty(pi0));
    }

    let (r, tau) = if pi0 * n * q / k_max as f64 <= q {
        (k_max, q)
    } else {
        let r = (1..=k_max)
            .rev()
            .find(|&k| pi0 * n * below[k - 1].0 / k as f64 <= q)
            .unwrap_or(0);
        if r == 0 {
            return Ok(RejectionResult::empty(pi0));
        }
        (r, (q * r as f64 / (pi0 * n)).max(below[r - 1].0))
    };
    Ok(RejectionResult { tau_hat: Some(tau), rejected: take_smallest(&below, r), pi0_used: pi0, lambda_used: None })
}

/// A multiple-testing method from the comparison roster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MethodSpec {
    /// Plain BH (π̂₀ = 1).
    Std,
    /// BH with a known π₀; `None` takes the realized null fraction from the labels.
    Oracle(Option<f64>),
    /// Two-step estimator.
    By,
    /// Storey's estimator at a fixed λ.
    StoreyFixed(f64),
    /// Storey's estimator at a stopping-time λ̂.
    AdaptiveStorey(AdaptiveRule),
}

impl MethodSpec {
    /// The seven methods compared in the simulation studies.
    pub fn roster() -> Vec<MethodSpec> {
        vec![
            MethodSpec::Std,
            MethodSpec::Oracle(None),
            MethodSpec::By,
            MethodSpec::StoreyFixed(0.2),
            MethodSpec::StoreyFixed(0.5),
            MethodSpec::StoreyFixed(0.8),
            MethodSpec::AdaptiveStorey(AdaptiveRule::default()),
        ]
    }
}

impl fmt::Display for MethodSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MethodSpec::Std => write!(f, "std"),
            MethodSpec::Oracle(None) => write!(f, "orc"),
            MethodSpec::Oracle(Some(pi0)) => write!(f, "orc:{pi0}"),
            MethodSpec::By => write!(f, "by"),
            MethodSpec::StoreyFixed(lambda) => write!(f, "storey:{lambda}"),
            MethodSpec::AdaptiveStorey(rule) if *rule == AdaptiveRule::default() => write!(f, "as"),
            MethodSpec::AdaptiveStorey(rule) => {
                let variant = match rule.variant {
                    RuleVariant::Plain => "plain",
                    RuleVariant::Robust => "robust",
                };
                write!(f, "as:{variant}")?;
                match rule.lambda_max {
                    Some(v) => write!(f, ":lmax={v}")?,
                    None => write!(f, ":lmax=none")?,
                }
                match rule.delta {
                    DeltaChoice::Fixed(d) => write!(f, ":delta={d}"),
                    DeltaChoice::RuleOfThumb { target: 50 } => write!(f, ":delta=auto"),
                    DeltaChoice::RuleOfThumb { target } => write!(f, ":delta=auto{target}"),
                }
            }
        }
    }
}

fn parse_number(field: &str, text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::InvalidInput(format!("cannot parse {field} value '{text}'")))
}

impl FromStr for MethodSpec {
    type Err = Error;

    /// `std | orc[:<pi0>] | by | storey:<lambda> | as[:plain|:robust][:lmax=<v|none>][:delta=<v|auto>]`
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        let mut parts = s.split(':');
        let head = parts.next().unwrap_or_default();
        let rest: Vec<&str> = parts.collect();
        let method = match (head, rest.as_slice()) {
            ("std", []) => MethodSpec::Std,
            ("by", []) => MethodSpec::By,
            ("orc", []) => MethodSpec::Oracle(None),
            ("orc", [v]) => MethodSpec::Oracle(Some(parse_number("orc", v)?)),
            ("storey", [v]) => MethodSpec::StoreyFixed(parse_number("storey", v)?),
            ("as", opts) => {
                let mut rule = AdaptiveRule::default();
                for opt in opts {
                    match *opt {
                        "plain" => rule.variant = RuleVariant::Plain,
                        "robust" => rule.variant = RuleVariant::Robust,
                        "lmax=none" => rule.lambda_max = None,
                        "delta=auto" => rule.delta = DeltaChoice::RuleOfThumb { target: 50 },
                        o if o.starts_with("lmax=") => rule.lambda_max = Some(parse_number("lmax", &o[5..])?),
                        o if o.starts_with("delta=auto") => {
                            let target = o[10..]
                                .parse::<usize>()
                                .map_err(|_| Error::InvalidInput(format!("bad δ target in '{o}'")))?;
                            rule.delta = DeltaChoice::RuleOfThumb { target };
                        }
                        o if o.starts_with("delta=") => rule.delta = DeltaChoice::Fixed(parse_number("delta", &o[6..])?),
                        o => return Err(Error::InvalidInput(format!("unknown AS option '{o}'"))),
                    }
                }
                MethodSpec::AdaptiveStorey(rule)
            }
            _ => return Err(Error::InvalidInput(format!("unknown method descriptor '{s}'"))),
        };
        method.validate()?;
        Ok(method)
    }
}

impl MethodSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            MethodSpec::Oracle(Some(pi0)) if !(pi0 > 0.0 && pi0 <= 1.0) => {
                Err(Error::Domain(format!("oracle π₀ must lie in (0, 1], got {pi0}")))
            }
            MethodSpec::StoreyFixed(lambda) if !(0.0..1.0).contains(&lambda) => {
                Err(Error::Domain(format!("Storey λ must lie in [0, 1), got {lambda}")))
            }
            MethodSpec::AdaptiveStorey(rule) => {
                if let Some(cap) = rule.lambda_max {
                    if !(cap > 0.0 && cap < 1.0) {
                        return Err(Error::Domain(format!("λ_max must lie in (0, 1), got {cap}")));
                    }
                }
                match rule.delta {
                    DeltaChoice::Fixed(d) if !(d > 0.0 && d < 1.0) => {
                        Err(Error::Domain(format!("δ must lie in (0, 1), got {d}")))
                    }
                    DeltaChoice::RuleOfThumb { target: 0 } => Err(Error::Domain("δ target must be positive".into())),
                    _ => Ok(()),
                }
            }
            _ => Ok(()),
        }
    }
}

/// Estimate π₀ with `method`, then run the adaptive BH step at level q.
pub fn run_method(batch: &PValueBatch, q: f64, method: &MethodSpec) -> Result<RejectionResult> {
    method.validate()?;
    let (pi0, lambda) = match *method {
        MethodSpec::Std => (1.0, None),
        MethodSpec::Oracle(Some(pi0)) => (pi0, None),
        MethodSpec::Oracle(None) => {
            let nulls = batch.null_count().ok_or(Error::MissingLabels)?;
            if nulls == 0 {
                return Err(Error::Degenerate("oracle π₀ is zero: the batch has no true nulls".into()));
            }
            (nulls as f64 / batch.len() as f64, None)
        }
        MethodSpec::By => (by_pi0(batch, q)?.value, None),
        MethodSpec::StoreyFixed(lambda) => (storey_pi0(batch, lambda)?.value, Some(lambda)),
        MethodSpec::AdaptiveStorey(rule) => {
            let spec = rule.resolve(batch, q)?;
            let out = crate::stopping::adaptive_storey(batch, q, &spec)?;
            (out.pi0_hat, Some(out.lambda_hat))
        }
    };
    let mut result = adaptive_bh(batch, q, pi0)?;
    result.lambda_used = lambda;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorMetrics {
    pub fdp: f64,
    pub power: f64,
    /// V: rejected true nulls.
    pub false_rejections: usize,
    /// R: total rejections.
    pub rejections: usize,
}

/// FDP = V/max(R,1) and power = (R−V)/max(#non-nulls,1).
pub fn fdp_power(result: &RejectionResult, batch: &PValueBatch) -> Result<ErrorMetrics> {
    let labels = batch.labels().ok_or(Error::MissingLabels)?;
    let r = result.rejections();
    let v = result.rejected.iter().filter(|&&i| labels[i]).count();
    let non_nulls = labels.iter().filter(|&&h| !h).count();
    Ok(ErrorMetrics {
        fdp: v as f64 / r.max(1) as f64,
        power: (r - v) as f64 / non_nulls.max(1) as f64,
        false_rejections: v,
        rejections: r,
    })
}
