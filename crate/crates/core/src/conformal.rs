//! Conformal p-values from negative controls.
//!
//! A test score T_i is ranked against the m negative-control scores:
//! p_i = (1 + #{j ∈ nc : T_j ≥ T_i}) / (1 + m). Larger scores are stronger
//! evidence against the null. A tie between a test score and a control
//! counts into the numerator.

use crate::error::{Error, Result};
use crate::estimators::PValueBatch;
use crate::numerics::{binom_exact, ExactRational, RandomStream};

/// Scores of the hypotheses under investigation plus negative-control scores.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreBatch {
    test_scores: Vec<f64>,
    nc_scores: Vec<f64>,
    labels: Option<Vec<bool>>,
}

impl ScoreBatch {
    pub fn new(test_scores: Vec<f64>, nc_scores: Vec<f64>, labels: Option<Vec<bool>>) -> Result<Self> {
        if test_scores.is_empty() {
            return Err(Error::InvalidInput("no test scores".into()));
        }
        if nc_scores.is_empty() {
            return Err(Error::InvalidInput("conformal p-values need at least one negative control".into()));
        }
        if test_scores.iter().chain(&nc_scores).any(|s| !s.is_finite()) {
            return Err(Error::InvalidInput("scores must be finite".into()));
        }
        if let Some(l) = &labels {
            if l.len() != test_scores.len() {
                return Err(Error::InvalidInput(format!(
                    "{} labels for {} test scores",
                    l.len(),
                    test_scores.len()
                )));
            }
        }
        Ok(Self { test_scores, nc_scores, labels })
    }

    pub fn test_scores(&self) -> &[f64] {
        &self.test_scores
    }

    pub fn nc_scores(&self) -> &[f64] {
        &self.nc_scores
    }

    pub fn labels(&self) -> Option<&[bool]> {
        self.labels.as_deref()
    }
}

pub fn conformal_pvalues(scores: &ScoreBatch) -> Result<PValueBatch> {
    let mut nc = scores.nc_scores.clone();
    nc.sort_by(f64::total_cmp);
    let m = nc.len();
    let denom = (m + 1) as f64;
    let pvalues = scores
        .test_scores
        .iter()
        .map(|&t| (1 + m - nc.partition_point(|&c| c < t)) as f64 / denom)
        .collect();
    match &scores.labels {
        Some(l) => PValueBatch::with_labels(pvalues, l.clone()),
        None => PValueBatch::new(pvalues),
    }
}

/// Probability that the reference control ranks r-th among the K largest
/// null test scores and itself: C(K+k−r, k−1) / C(K+k, k).
pub fn rank_probability(big_k: u64, k: u64, r: u64) -> Result<ExactRational> {
    if k == 0 {
        return Err(Error::Domain("k must be at least 1".into()));
    }
    if r == 0 || r > big_k + 1 {
        return Err(Error::Domain(format!("rank r = {r} outside [1, {}]", big_k + 1)));
    }
    Ok(binom_exact(big_k + k - r, k - 1) / binom_exact(big_k + k, k))
}

/// Score law used by the exchangeable generator. Nulls and controls are
/// i.i.d. from the base law; non-nulls are shifted up by `shift`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScoreModel {
    Normal,
    Exponential,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExchangeableDesign {
    pub n0: usize,
    pub n1: usize,
    pub m: usize,
    pub shift: f64,
    pub model: ScoreModel,
}

impl ExchangeableDesign {
    pub fn sample(&self, stream: &mut RandomStream) -> Result<ScoreBatch> {
        if self.n0 + self.n1 == 0 || self.m == 0 {
            return Err(Error::InvalidInput("need n0 + n1 ≥ 1 and m ≥ 1".into()));
        }
        if !self.shift.is_finite() {
            return Err(Error::InvalidInput("shift must be finite".into()));
        }
        let draw = |s: &mut RandomStream| match self.model {
            ScoreModel::Normal => s.standard_normal(),
            ScoreModel::Exponential => s.exponential(),
        };
        let mut test = Vec::with_capacity(self.n0 + self.n1);
        for _ in 0..self.n0 {
            test.push(draw(stream));
        }
        for _ in 0..self.n1 {
            test.push(draw(stream) + self.shift);
        }
        let nc = (0..self.m).map(|_| draw(stream)).collect();
        let labels = (0..self.n0 + self.n1).map(|i| i < self.n0).collect();
        ScoreBatch::new(test, nc, Some(labels))
    }
}

/// Normal-score generator: nulls and controls N(0,1), non-nulls N(shift,1).
pub fn exchangeable_generator(
    stream: &mut RandomStream,
    n0: usize,
    n1: usize,
    m: usize,
    shift: f64,
) -> Result<ScoreBatch> {
    ExchangeableDesign { n0, n1, m, shift, model: ScoreModel::Normal }.sample(stream)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::derive_stream;
    use proptest::prelude::*;
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    fn pvals(test: &[f64], nc: &[f64]) -> Vec<f64> {
        let b = ScoreBatch::new(test.to_vec(), nc.to_vec(), None).unwrap();
        conformal_pvalues(&b).unwrap().pvalues().to_vec()
    }

    #[test]
    fn rank_examples() {
        let nc = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(pvals(&[2.5], &nc), vec![0.6]);
        assert_eq!(pvals(&[3.0], &nc), vec![0.6]);
        assert_eq!(pvals(&[9.0], &nc), vec![0.2]);
        assert_eq!(pvals(&[-1.0], &nc), vec![1.0]);
    }

    #[test]
    fn needs_controls() {
        assert!(ScoreBatch::new(vec![1.0], vec![], None).is_err());
        assert!(ScoreBatch::new(vec![], vec![1.0], None).is_err());
        assert!(ScoreBatch::new(vec![f64::NAN], vec![1.0], None).is_err());
        assert!(ScoreBatch::new(vec![1.0], vec![1.0], Some(vec![true, false])).is_err());
    }

    #[test]
    fn rank_probability_examples() {
        for r in 1..=3 {
            assert_eq!(rank_probability(2, 1, r).unwrap(), ExactRational::new(1, 3));
        }
        assert_eq!(rank_probability(1, 2, 1).unwrap(), ExactRational::new(2, 3));
        assert_eq!(rank_probability(1, 2, 2).unwrap(), ExactRational::new(1, 3));
        for k in 1..6 {
            assert_eq!(rank_probability(0, k, 1).unwrap(), ExactRational::one());
        }
        assert!(rank_probability(2, 1, 0).is_err());
        assert!(rank_probability(2, 1, 4).is_err());
        assert!(rank_probability(2, 0, 1).is_err());
    }

    #[test]
    fn rank_probabilities_sum_to_one() {
        for big_k in 1..=30 {
            for k in 1..=30 {
                let total: ExactRational = (1..=big_k + 1).map(|r| rank_probability(big_k, k, r).unwrap()).sum();
                assert_eq!(total, ExactRational::one(), "K={big_k} k={k}");
            }
        }
    }

    #[test]
    fn generator_layout() {
        let mut s = derive_stream(5, 0);
        let b = exchangeable_generator(&mut s, 3, 2, 7, 1.0).unwrap();
        assert_eq!(b.test_scores().len(), 5);
        assert_eq!(b.nc_scores().len(), 7);
        assert_eq!(b.labels().unwrap(), &[true, true, true, false, false]);
        assert!(exchangeable_generator(&mut s, 0, 0, 3, 1.0).is_err());
        assert!(exchangeable_generator(&mut s, 1, 0, 0, 1.0).is_err());
    }

    #[test]
    fn strong_signals_get_small_pvalues() {
        let mut total = 0.0;
        let mut count = 0usize;
        for r in 0..1000 {
            let mut s = derive_stream(11, r);
            let b = exchangeable_generator(&mut s, 80, 20, 200, 3.0).unwrap();
            let p = conformal_pvalues(&b).unwrap();
            for (&x, &null) in p.pvalues().iter().zip(p.labels().unwrap()) {
                if !null {
                    total += x;
                    count += 1;
                }
            }
        }
        assert!(total / count as f64 <= 0.1);
    }

    #[test]
    fn pure_null_is_super_uniform() {
        let reps = 4000;
        for model in [ScoreModel::Normal, ScoreModel::Exponential] {
            let design = ExchangeableDesign { n0: 20, n1: 0, m: 19, shift: 0.0, model };
            let mut hits = [0usize; 4];
            let ts = [0.05, 0.2, 0.5, 0.8];
            for r in 0..reps {
                let b = design.sample(&mut derive_stream(12, r)).unwrap();
                let p = conformal_pvalues(&b).unwrap();
                for (h, &t) in hits.iter_mut().zip(&ts) {
                    *h += p.pvalues().iter().filter(|&&x| x <= t).count();
                }
            }
            for (h, &t) in hits.iter().zip(&ts) {
                let freq = *h as f64 / (reps * 20) as f64;
                // t·(m+1) is an integer here, so P(p ≤ t) = t exactly
                assert!(freq <= t + 0.01, "{model:?} t={t} freq={freq}");
            }
        }
    }

    // Exact law of #{p_i ≤ t} under pure exchangeability: every placement of
    // the n test scores among the n + m ranks is equally likely.
    fn exact_count_law(n: usize, m: usize, t: f64) -> Vec<f64> {
        let total = n + m;
        let mut law = vec![0.0; n + 1];
        let mut arrangements = 0u64;
        for mask in 0u32..(1 << total) {
            if mask.count_ones() as usize != n {
                continue;
            }
            arrangements += 1;
            // position 0 = largest score
            let mut controls_above = 0;
            let mut hits = 0;
            for pos in 0..total {
                if mask & (1 << pos) != 0 {
                    let p = (1 + controls_above) as f64 / (m + 1) as f64;
                    if p <= t {
                        hits += 1;
                    }
                } else {
                    controls_above += 1;
                }
            }
            law[hits] += 1.0;
        }
        law.iter().map(|c| c / arrangements as f64).collect()
    }

    #[test]
    fn null_count_matches_exact_permutation_law() {
        let (n, m, t) = (3, 4, 0.4);
        let law = exact_count_law(n, m, t);
        let reps = 100_000;
        for model in [ScoreModel::Normal, ScoreModel::Exponential] {
            let design = ExchangeableDesign { n0: n, n1: 0, m, shift: 0.0, model };
            let mut observed = vec![0.0; n + 1];
            for r in 0..reps {
                let b = design.sample(&mut derive_stream(13, r)).unwrap();
                let p = conformal_pvalues(&b).unwrap();
                observed[p.pvalues().iter().filter(|&&x| x <= t).count()] += 1.0;
            }
            let stat: f64 = observed
                .iter()
                .zip(&law)
                .map(|(o, pr)| {
                    let e = pr * reps as f64;
                    (o - e).powi(2) / e
                })
                .sum();
            let pval = 1.0 - ChiSquared::new(n as f64).unwrap().cdf(stat);
            assert!(pval > 1e-4, "{model:?}: chi-square p = {pval}");
        }
    }

    proptest! {
        #[test]
        fn pvalue_lattice_and_monotone(
            test in prop::collection::vec(-5.0f64..5.0, 1..20),
            nc in prop::collection::vec(prop_oneof![-5.0f64..5.0, Just(0.0)], 1..30),
        ) {
            let m = nc.len();
            let p = pvals(&test, &nc);
            for &x in &p {
                let scaled = x * (m + 1) as f64;
                prop_assert!((scaled - scaled.round()).abs() < 1e-9);
                prop_assert!(scaled.round() >= 1.0 && scaled.round() <= (m + 1) as f64);
            }
            for i in 0..test.len() {
                for j in 0..test.len() {
                    if test[i] <= test[j] {
                        prop_assert!(p[i] >= p[j]);
                    }
                }
            }
        }
    }
}
