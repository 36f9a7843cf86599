//! Two-group mixture model for p-values and its population Storey curve
//! g(λ) = (1 − F(λ))/(1 − λ).

use crate::error::{Error, Result};
use crate::estimators::PValueBatch;
use crate::numerics::{phi_inv, phi_upper, RandomStream};

/// Null p-value law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NullDist {
    Uniform,
    /// Beta with integer shapes, so the CDF has a finite binomial-sum form.
    Beta { a: u32, b: u32 },
}

fn binomial_coefficient(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

impl NullDist {
    fn validate(&self) -> Result<()> {
        match *self {
            NullDist::Beta { a, b } if a == 0 || b == 0 => {
                Err(Error::Domain(format!("Beta shapes must be positive, got ({a}, {b})")))
            }
            _ => Ok(()),
        }
    }

    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.survival(t)
    }

    /// 1 − F₀(t), summed over the terms that keep a (1 − t) factor.
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        match *self {
            NullDist::Uniform => 1.0 - t,
            NullDist::Beta { a, b } => {
                // X ~ Beta(a, b) ⇔ X is the a-th smallest of a+b−1 uniforms
                let n = a + b - 1;
                (0..a)
                    .map(|j| binomial_coefficient(n, j) * t.powi(j as i32) * (1.0 - t).powi((n - j) as i32))
                    .sum()
            }
        }
    }

    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        match *self {
            NullDist::Uniform => stream.uniform_pvalue(),
            NullDist::Beta { a, b: 1 } => stream.uniform_pvalue().powf(1.0 / a as f64),
            NullDist::Beta { a, b } => {
                let mut u: Vec<f64> = (0..a + b - 1).map(|_| stream.uniform_pvalue()).collect();
                u.sort_by(f64::total_cmp);
                u[a as usize - 1]
            }
        }
    }
}

/// Non-null p-values 1 − Φ(Z + μ), or a weighted mixture over several μ.
#[derive(Debug, Clone, PartialEq)]
pub enum Alternative {
    Shift(f64),
    Composite(Vec<(f64, f64)>),
}

/// p = 1 − Φ(z + μ), kept strictly positive.
pub(crate) fn shifted_pvalue(z: f64, shift: f64) -> f64 {
    phi_upper(z + shift).max(f64::MIN_POSITIVE)
}

impl Alternative {
    fn components(&self) -> Vec<(f64, f64)> {
        match self {
            Alternative::Shift(mu) => vec![(*mu, 1.0)],
            Alternative::Composite(parts) => {
                let total: f64 = parts.iter().map(|p| p.1).sum();
                parts.iter().map(|&(mu, w)| (mu, w / total)).collect()
            }
        }
    }

    fn validate(&self) -> Result<()> {
        let parts = match self {
            Alternative::Shift(mu) => vec![(*mu, 1.0)],
            Alternative::Composite(parts) => parts.clone(),
        };
        if parts.is_empty() {
            return Err(Error::Domain("composite alternative needs at least one component".into()));
        }
        for (mu, w) in parts {
            if !mu.is_finite() || !(w > 0.0 && w.is_finite()) {
                return Err(Error::Domain(format!("bad alternative component (μ={mu}, w={w})")));
            }
        }
        Ok(())
    }

    /// 1 − F₁(t) = Σ w Φ(−Φ⁻¹(t) − μ).
    pub fn survival(&self, t: f64) -> f64 {
        if t <= 0.0 {
            return 1.0;
        }
        if t >= 1.0 {
            return 0.0;
        }
        let z = phi_inv(t);
        self.components().iter().map(|&(mu, w)| w * phi_upper(z + mu)).sum()
    }

    pub fn sample(&self, stream: &mut RandomStream) -> f64 {
        let shift = match self {
            Alternative::Shift(mu) => *mu,
            Alternative::Composite(_) => {
                let parts = self.components();
                let u = stream.uniform();
                let mut acc = 0.0;
                let mut chosen = parts[parts.len() - 1].0;
                for (mu, w) in parts {
                    acc += w;
                    if u < acc {
                        chosen = mu;
                        break;
                    }
                }
                chosen
            }
        };
        shifted_pvalue(stream.standard_normal(), shift)
    }
}

/// F = π₀F₀ + (1 − π₀)F₁.
#[derive(Debug, Clone, PartialEq)]
pub struct MixtureModel {
    pi0: f64,
    null: NullDist,
    alt: Alternative,
}

impl MixtureModel {
    pub fn new(pi0: f64, null: NullDist, alt: Alternative) -> Result<Self> {
        if !(0.0..=1.0).contains(&pi0) {
            return Err(Error::Domain(format!("π₀ must lie in [0, 1], got {pi0}")));
        }
        null.validate()?;
        alt.validate()?;
        Ok(Self { pi0, null, alt })
    }

    pub fn pi0(&self) -> f64 {
        self.pi0
    }

    pub fn null_dist(&self) -> NullDist {
        self.null
    }

    pub fn alternative(&self) -> &Alternative {
        &self.alt
    }

    /// 1 − F(t), without cancellation near t = 1.
    pub fn survival(&self, t: f64) -> f64 {
        self.pi0 * self.null.survival(t) + (1.0 - self.pi0) * self.alt.survival(t)
    }

    fn g(&self, lambda: f64) -> f64 {
        self.survival(lambda) / (1.0 - lambda)
    }

    /// n i.i.d. draws: each hypothesis is null with probability π₀.
    pub fn sample(&self, n: usize, stream: &mut RandomStream) -> Result<PValueBatch> {
        let mut pvalues = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let null = stream.uniform() < self.pi0;
            pvalues.push(if null { self.null.sample(stream) } else { self.alt.sample(stream) });
            labels.push(null);
        }
        PValueBatch::with_labels(pvalues, labels)
    }
}

pub fn marginal_cdf(model: &MixtureModel, t: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("t must lie in [0, 1], got {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    Ok(model.pi0 * model.null.cdf(t) + (1.0 - model.pi0) * (1.0 - model.alt.survival(t)))
}

/// g(λ) = (1 − F(λ))/(1 − λ): Storey's estimator with infinitely many hypotheses.
pub fn pi0_infty(model: &MixtureModel, lambda: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::Domain(format!("λ must lie in [0, 1), got {lambda}")));
    }
    Ok(model.g(lambda))
}

const COARSE_POINTS: usize = 10_000;
const LIMIT_STEPS: i32 = 50;
const GOLDEN_ITERATIONS: usize = 200;

fn near_min(value: f64, best: f64) -> bool {
    value <= best + 1e-12 * best.abs().max(1.0)
}

/// (λ*, π₀*) with π₀* = inf_{q ≤ λ ≤ 1} g(λ) and λ* the smallest minimizer.
///
/// A 10⁴-point grid on [q, 1) plus the points 1 − 2⁻ᵏ locates the minimum,
/// golden-section search refines it to width `tol`, and g near λ = 1 is
/// compared as a numeric limit.
pub fn optimal_lambda(model: &MixtureModel, q: f64, tol: f64) -> Result<(f64, f64)> {
    if !(0.0..1.0).contains(&q) {
        return Err(Error::Domain(format!("q must lie in [0, 1), got {q}")));
    }
    if tol.is_nan() || tol <= 0.0 {
        return Err(Error::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let step = (1.0 - q) / COARSE_POINTS as f64;
    let mut candidates: Vec<f64> = (0..COARSE_POINTS).map(|i| q + i as f64 * step).collect();
    candidates.extend((1..=LIMIT_STEPS).map(|k| 1.0 - 0.5f64.powi(k)).filter(|&l| l > q));
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let values: Vec<f64> = candidates.iter().map(|&l| model.g(l)).collect();
    let best = values.iter().copied().fold(f64::INFINITY, f64::min);
    let idx = values.iter().position(|&v| near_min(v, best)).expect("non-empty grid");

    if idx + 1 == candidates.len() {
        return Ok((1.0, values[idx]));
    }
    let lo = candidates[idx.saturating_sub(1)];
    let hi = candidates[idx + 1];
    let (refined, refined_value) = golden_section(|l| model.g(l), lo, hi, tol)?;
    let coarse_wins = refined_value >= values[idx] || (candidates[idx] <= refined && near_min(values[idx], refined_value));
    let (mut lambda_star, mut pi0_star) =
        if coarse_wins { (candidates[idx], values[idx]) } else { (refined, refined_value) };

    let limit = *values.last().expect("non-empty grid");
    let limit_point = *candidates.last().expect("non-empty grid");
    if limit_point > lambda_star && !near_min(pi0_star, limit) {
        lambda_star = 1.0;
        pi0_star = limit;
    }
    Ok((lambda_star, pi0_star))
}

fn golden_section(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> Result<(f64, f64)> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    if b - a <= tol {
        let m = 0.5 * (a + b);
        return Ok((m, f(m)));
    }
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= tol {
            let (x, fx) = if fc <= fd { (c, fc) } else { (d, fd) };
            return Ok((x, fx));
        }
        // ties go left so the smaller minimizer survives
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    Err(Error::Numeric(format!(
        "golden-section search did not reach width {tol} within {GOLDEN_ITERATIONS} iterations"
    )))
}
