//! The λ-grid and the data-driven stopping rules.
//!
//! Starting from λ₀ = q, the scan walks λ_j = q + jδ upward and stops at the
//! first j ≥ 1 whose statistic is no smaller than at λ_{j−1}. The statistic is
//! π̂₀^λ for the plain rule and ℓ(λ) = π̂₀^λ + sqrt(V̂^λ) for the robust rule.
//! Every quantity the scan reads is a count of p-values at or above some
//! λ ≥ q, so the chosen λ̂ never depends on how the p-values below q are
//! arranged.

use crate::error::{Error, Result};
use crate::estimators::{variance_formula, PValueBatch, SortedPValues};

/// Grid points within this distance of the cap snap onto it, so that e.g.
/// 0.2 + 3·0.2 lands on 0.8.
const SNAP: f64 = 1e-9;

/// λ_j = q + jδ for j ≥ 1, truncated at `lambda_max` < 1.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    q: f64,
    delta: f64,
    lambda_max: f64,
    points: Vec<f64>,
}

impl GridSpec {
    /// Without `lambda_max` the grid runs up to the largest point below 1.
    pub fn new(q: f64, delta: f64, lambda_max: Option<f64>) -> Result<Self> {
        if !(q > 0.0 && q < 1.0) {
            return Err(Error::Domain(format!("q must lie in (0, 1), got {q}")));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::Domain(format!("δ must be positive, got {delta}")));
        }
        if let Some(cap) = lambda_max {
            if !(cap > q && cap < 1.0) {
                return Err(Error::Domain(format!("λ_max must lie in (q, 1), got {cap}")));
            }
        }
        let cap = lambda_max.unwrap_or(1.0);
        let mut points = Vec::new();
        for j in 1u64.. {
            let mut lambda = q + j as f64 * delta;
            if lambda_max.is_some() && (lambda - cap).abs() <= SNAP {
                lambda = cap;
            }
            if lambda > cap || (lambda_max.is_none() && lambda >= 1.0 - SNAP) {
                break;
            }
            points.push(lambda);
        }
        let Some(&last) = points.last() else {
            return Err(Error::Domain(format!(
                "no grid point q + jδ (j ≥ 1) fits below {cap} with q = {q}, δ = {delta}"
            )));
        };
        Ok(Self { q, delta, lambda_max: lambda_max.unwrap_or(last), points })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn lambda_max(&self) -> f64 {
        self.lambda_max
    }

    /// λ₁, λ₂, … (λ₀ = q is not included).
    pub fn points(&self) -> &[f64] {
        &self.points
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleVariant {
    /// Compare π̂₀^λ at adjacent grid points.
    Plain,
    /// Compare ℓ(λ) = π̂₀^λ + sqrt(V̂^λ).
    Robust,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingRuleSpec {
    pub variant: RuleVariant,
    pub grid: GridSpec,
}

/// How δ is picked when a rule is built for a particular batch.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeltaChoice {
    Fixed(f64),
    /// δ = target / #{p ≥ q}.
    RuleOfThumb { target: usize },
}

/// A stopping rule before it has seen a batch: variant, δ choice and cap.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdaptiveRule {
    pub variant: RuleVariant,
    pub delta: DeltaChoice,
    pub lambda_max: Option<f64>,
}

impl Default for AdaptiveRule {
    /// Robust rule, δ = 50/#{p ≥ q}, truncated at 0.8.
    fn default() -> Self {
        Self {
            variant: RuleVariant::Robust,
            delta: DeltaChoice::RuleOfThumb { target: 50 },
            lambda_max: Some(0.8),
        }
    }
}

impl AdaptiveRule {
    /// Fix δ for `batch` and build the grid. The δ rule only reads #{p ≥ q}.
    pub fn resolve(&self, batch: &PValueBatch, q: f64) -> Result<StoppingRuleSpec> {
        let delta = match self.delta {
            DeltaChoice::Fixed(d) => d,
            DeltaChoice::RuleOfThumb { target } => {
                rule_of_thumb_below(batch, q, target, self.lambda_max.unwrap_or(1.0))?
            }
        };
        Ok(StoppingRuleSpec { variant: self.variant, grid: GridSpec::new(q, delta, self.lambda_max)? })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StoppingOutcome {
    pub lambda_hat: f64,
    pub pi0_hat: f64,
    /// False when no grid point satisfied the rule and the last point was used.
    pub triggered: bool,
    /// (λ_j, statistic) for every visited point, starting at λ₀ = q.
    pub trace: Vec<(f64, f64)>,
}

/// δ = target / #{p ≥ q}, falling back to (1 − q)/2 when that is ≥ 1 − q.
pub fn delta_rule_of_thumb(batch: &PValueBatch, q: f64, target_count: usize) -> Result<f64> {
    rule_of_thumb_below(batch, q, target_count, 1.0)
}

fn rule_of_thumb_below(batch: &PValueBatch, q: f64, target: usize, upper: f64) -> Result<f64> {
    if !(q > 0.0 && q < upper) {
        return Err(Error::Domain(format!("q must lie in (0, {upper}), got {q}")));
    }
    if target == 0 {
        return Err(Error::Domain("δ target count must be positive".into()));
    }
    let above = batch.count_at_least(q);
    if above == 0 {
        return Err(Error::Degenerate(format!(
            "no p-value is at least q = {q}; use a fixed λ or a fixed δ"
        )));
    }
    let delta = target as f64 / above as f64;
    Ok(if delta >= upper - q { (upper - q) / 2.0 } else { delta })
}

fn scan(sorted: &SortedPValues, grid: &GridSpec, variant: RuleVariant) -> StoppingOutcome {
    let n = sorted.len();
    let statistic = |lambda: f64| {
        let (pi0, _) = sorted.storey_value(lambda);
        match variant {
            RuleVariant::Plain => pi0,
            RuleVariant::Robust => pi0 + variance_formula(pi0, n, lambda).sqrt(),
        }
    };

    let mut prev = statistic(grid.q);
    let mut trace = vec![(grid.q, prev)];
    let mut hit = None;
    for &lambda in &grid.points {
        let current = statistic(lambda);
        trace.push((lambda, current));
        if prev <= current {
            hit = Some(lambda);
            break;
        }
        prev = current;
    }
    let (lambda_hat, triggered) = match hit {
        Some(l) => (l, true),
        None => (grid.lambda_max, false),
    };
    StoppingOutcome { lambda_hat, pi0_hat: sorted.storey_value(lambda_hat).0, triggered, trace }
}

/// First λ_j with π̂₀^{λ_{j−1}} ≤ π̂₀^{λ_j}.
pub fn stop_plain(batch: &PValueBatch, grid: &GridSpec) -> StoppingOutcome {
    scan(&batch.sorted(), grid, RuleVariant::Plain)
}

/// First λ_j with ℓ(λ_{j−1}) ≤ ℓ(λ_j). The reported π̂₀ is Storey's estimate
/// at λ̂, not the loss.
pub fn stop_robust(batch: &PValueBatch, grid: &GridSpec) -> StoppingOutcome {
    scan(&batch.sorted(), grid, RuleVariant::Robust)
}

/// The adaptive Storey (AS) estimator for a fully specified rule.
pub fn adaptive_storey(batch: &PValueBatch, q: f64, spec: &StoppingRuleSpec) -> Result<StoppingOutcome> {
    if spec.grid.q != q {
        return Err(Error::Domain(format!("grid origin {} differs from q = {q}", spec.grid.q)));
    }
    Ok(scan(&batch.sorted(), &spec.grid, spec.variant))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimators::{loss, storey_pi0};
    use proptest::prelude::*;

    fn batch(p: &[f64]) -> PValueBatch {
        PValueBatch::new(p.to_vec()).unwrap()
    }

    const TEN: [f64; 10] = [0.01, 0.05, 0.1, 0.25, 0.3, 0.35, 0.45, 0.5, 0.85, 0.9];

    #[test]
    fn grid_points() {
        let g = GridSpec::new(0.2, 0.2, None).unwrap();
        assert_eq!(g.points().len(), 3);
        assert!((g.points()[2] - 0.8).abs() < 1e-12);
        let g = GridSpec::new(0.2, 0.2, Some(0.8)).unwrap();
        assert_eq!(g.points(), &[0.4, 0.6000000000000001, 0.8]);
        assert_eq!(g.lambda_max(), 0.8);
        let g = GridSpec::new(0.2, 0.3, None).unwrap();
        assert_eq!(g.points().len(), 2);
        assert!(GridSpec::new(0.2, 0.9, None).is_err());
        assert!(GridSpec::new(0.2, 0.7, Some(0.8)).is_err());
        assert!(GridSpec::new(0.2, 0.1, Some(1.0)).is_err());
        assert!(GridSpec::new(0.0, 0.1, None).is_err());
        assert!(GridSpec::new(0.2, 0.0, None).is_err());
        assert!(GridSpec::new(0.2, 0.05, None).unwrap().points().iter().all(|&l| l < 1.0));
    }

    #[test]
    fn rule_of_thumb() {
        let mut p = vec![0.1; 100];
        p.extend(vec![0.5; 400]);
        assert_eq!(delta_rule_of_thumb(&batch(&p), 0.2, 50).unwrap(), 0.125);
        assert_eq!(delta_rule_of_thumb(&batch(&p), 0.2, 10).unwrap(), 10.0 / 400.0);

        let mut p = vec![0.1; 10];
        p.extend(vec![0.5; 50]);
        assert!((delta_rule_of_thumb(&batch(&p), 0.2, 50).unwrap() - 0.4).abs() < 1e-15);

        assert!(matches!(delta_rule_of_thumb(&batch(&[0.1, 0.05]), 0.2, 50), Err(Error::Degenerate(_))));
    }

    #[test]
    fn plain_rule_hand_example() {
        let g = GridSpec::new(0.2, 0.2, None).unwrap();
        let out = stop_plain(&batch(&TEN), &g);
        let stats: Vec<f64> = out.trace.iter().map(|t| t.1).collect();
        let expect = [1.0, 5.0 / 6.0, 0.75, 1.5];
        for (a, b) in stats.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((out.lambda_hat - 0.8).abs() < 1e-12);
        assert!((out.pi0_hat - 1.5).abs() < 1e-12);
        assert!(out.triggered);
    }

    #[test]
    fn plain_rule_empty_tail_triggers_immediately() {
        let p: Vec<f64> = (1..=10).map(|i| i as f64 / 100.0).collect();
        let g = GridSpec::new(0.2, 0.2, None).unwrap();
        let out = stop_plain(&batch(&p), &g);
        assert!((out.trace[0].1 - 0.125).abs() < 1e-15);
        assert!((out.lambda_hat - 0.4).abs() < 1e-12);
        assert!(out.triggered);
        assert_eq!(out.trace.len(), 2);
    }

    #[test]
    fn plain_rule_fallback() {
        let p = [0.01, 0.02, 0.03, 0.25, 0.3, 0.35, 0.4, 0.55, 0.6, 0.7];
        let g = GridSpec::new(0.2, 0.3, None).unwrap();
        let out = stop_plain(&batch(&p), &g);
        let stats: Vec<f64> = out.trace.iter().map(|t| t.1).collect();
        for (a, b) in stats.iter().zip([1.0, 0.8, 0.5]) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(!out.triggered);
        assert_eq!(out.lambda_hat, g.lambda_max());
        assert!((out.pi0_hat - 0.5).abs() < 1e-12);
    }

    // full-sequence scan over independently computed losses
    fn robust_oracle(b: &PValueBatch, g: &GridSpec) -> f64 {
        let mut lambdas = vec![g.q()];
        lambdas.extend_from_slice(g.points());
        let losses: Vec<f64> = lambdas.iter().map(|&l| loss(b, l).unwrap()).collect();
        (1..losses.len())
            .find(|&j| losses[j - 1] <= losses[j])
            .map(|j| lambdas[j])
            .unwrap_or(g.lambda_max())
    }

    #[test]
    fn robust_rule_matches_direct_scan() {
        let b = batch(&TEN);
        let g = GridSpec::new(0.2, 0.2, None).unwrap();
        let out = stop_robust(&b, &g);
        assert_eq!(out.lambda_hat, robust_oracle(&b, &g));
        assert_eq!(out.pi0_hat, storey_pi0(&b, out.lambda_hat).unwrap().value);
    }

    #[test]
    fn robust_rule_immediate_trigger() {
        let b = batch(&[0.01, 0.02, 0.03, 0.04, 0.05]);
        let g = GridSpec::new(0.2, 0.1, None).unwrap();
        let out = stop_robust(&b, &g);
        assert!(out.triggered);
        assert!((out.lambda_hat - 0.3).abs() < 1e-12);
    }

    #[test]
    fn adaptive_storey_checks_origin() {
        let b = batch(&TEN);
        let spec = StoppingRuleSpec { variant: RuleVariant::Plain, grid: GridSpec::new(0.2, 0.2, None).unwrap() };
        assert!(adaptive_storey(&b, 0.1, &spec).is_err());
        assert_eq!(adaptive_storey(&b, 0.2, &spec).unwrap(), stop_plain(&b, &spec.grid));
    }

    #[test]
    fn default_rule_resolution() {
        let mut p = vec![0.1; 100];
        p.extend(vec![0.5; 400]);
        let spec = AdaptiveRule::default().resolve(&batch(&p), 0.2).unwrap();
        assert_eq!(spec.variant, RuleVariant::Robust);
        assert_eq!(spec.grid.delta(), 0.125);
        assert_eq!(spec.grid.lambda_max(), 0.8);
        assert_eq!(*spec.grid.points().last().unwrap(), 0.7);

        // δ from the rule would overshoot the cap: halve the capped range
        let mut p = vec![0.1; 10];
        p.extend(vec![0.5; 70]);
        let spec = AdaptiveRule::default().resolve(&batch(&p), 0.2).unwrap();
        assert!((spec.grid.delta() - 0.3).abs() < 1e-15);
        assert_eq!(spec.grid.points().len(), 2);
    }

    fn unimodal(s: &[f64]) -> bool {
        let m = s.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        s[..=m].windows(2).all(|w| w[0] > w[1]) && s[m..].windows(2).all(|w| w[0] <= w[1])
    }

    #[test]
    fn halving_delta_stops_no_later_on_unimodal_profiles() {
        use crate::numerics::derive_stream;
        let mut checked = 0;
        for r in 0..5000 {
            let mut s = derive_stream(99, r);
            let n = 30 + (s.uniform() * 200.0) as usize;
            let p: Vec<f64> = (0..n)
                .map(|_| if s.uniform() < 0.4 { s.uniform_pvalue().powi(3) } else { s.uniform_pvalue().cbrt() })
                .collect();
            let b = batch(&p);
            let coarse = GridSpec::new(0.2, 0.2, Some(0.8)).unwrap();
            let fine = GridSpec::new(0.2, 0.1, Some(0.8)).unwrap();
            let mut lambdas = vec![0.2];
            lambdas.extend_from_slice(fine.points());
            let stats: Vec<f64> = lambdas.iter().map(|&l| storey_pi0(&b, l).unwrap().value).collect();
            if !unimodal(&stats) {
                continue;
            }
            checked += 1;
            let lf = stop_plain(&b, &fine).lambda_hat;
            let lc = stop_plain(&b, &coarse).lambda_hat;
            assert!(lf <= lc + coarse.delta() + 1e-12, "fine {lf} coarse {lc}");
        }
        assert!(checked > 100);
    }

    fn pvalues() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![1e-6f64..=1.0, Just(1.0), Just(0.6)], 1..80)
    }

    proptest! {
        #[test]
        fn sub_q_values_do_not_matter(p in pvalues(), fresh in prop::collection::vec(0.0f64..1.0, 80), delta in 0.02f64..0.3) {
            let q = 0.2;
            let perturbed: Vec<f64> = p
                .iter()
                .zip(&fresh)
                .map(|(&x, &u)| if x < q { (u * q).max(1e-12) } else { x })
                .collect();
            let (a, b) = (batch(&p), batch(&perturbed));
            let g = GridSpec::new(q, delta, None).unwrap();
            for variant in [RuleVariant::Plain, RuleVariant::Robust] {
                let spec = StoppingRuleSpec { variant, grid: g.clone() };
                let (x, y) = (adaptive_storey(&a, q, &spec).unwrap(), adaptive_storey(&b, q, &spec).unwrap());
                prop_assert_eq!(x.lambda_hat, y.lambda_hat);
                prop_assert_eq!(x.pi0_hat, y.pi0_hat);
            }
        }

        #[test]
        fn outcome_is_grid_valued_prefix(p in pvalues(), delta in 0.02f64..0.3, robust in any::<bool>()) {
            let b = batch(&p);
            let g = GridSpec::new(0.2, delta, None).unwrap();
            let out = if robust { stop_robust(&b, &g) } else { stop_plain(&b, &g) };
            prop_assert!(g.points().contains(&out.lambda_hat));
            prop_assert_eq!(out.pi0_hat, storey_pi0(&b, out.lambda_hat).unwrap().value);
            prop_assert_eq!(out.trace[0].0, 0.2);
            let visited: Vec<f64> = out.trace[1..].iter().map(|t| t.0).collect();
            prop_assert_eq!(&visited[..], &g.points()[..visited.len()]);
            if out.triggered {
                prop_assert_eq!(*visited.last().unwrap(), out.lambda_hat);
            } else {
                prop_assert_eq!(visited.len(), g.points().len());
            }
            if robust {
                prop_assert_eq!(out.lambda_hat, robust_oracle(&b, &g));
            }
        }
    }
}
