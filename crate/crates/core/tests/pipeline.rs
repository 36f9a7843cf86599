use fdrlab::simlab::{
    check_conditional_dominance, optimal_lambda, pi0_infty, run_convergence_study, sample_scenario, Alternative,
    MixtureModel, NullDist, ScenarioId, ScenarioSpec,
};
use fdrlab::numerics::derive_stream;
use fdrlab::stopping::AdaptiveRule;
use fdrlab::{
    bh_stepup, fdp_power, run_method, stop_plain, stop_robust, storey_pi0, GridSpec, MethodSpec, PValueBatch,
    RuleVariant,
};

#[test]
fn conservative_nulls_satisfy_dominance() {
    let spec = ScenarioSpec::standard(ScenarioId::D);
    assert_eq!(spec.null, NullDist::Beta { a: 3, b: 1 });
    assert!(check_conditional_dominance(|t| spec.null.cdf(t), 0.2, 500).holds);
}

#[test]
fn methods_agree_on_a_labeled_batch() {
    let batch = sample_scenario(&ScenarioSpec::standard(ScenarioId::A), &mut derive_stream(1, 0)).unwrap();
    let std = run_method(&batch, 0.2, &MethodSpec::Std).unwrap();
    assert_eq!(std.rejected, bh_stepup(&batch, 0.2).unwrap().rejected);
    let oracle = run_method(&batch, 0.2, &MethodSpec::Oracle(None)).unwrap();
    assert_eq!(oracle.pi0_used, 0.9);
    // a smaller π̂₀ can only add rejections
    assert!(oracle.rejections() >= std.rejections());
    let adaptive = run_method(&batch, 0.2, &"as".parse().unwrap()).unwrap();
    let m = fdp_power(&adaptive, &batch).unwrap();
    assert!(m.power > 0.0 && m.fdp <= 1.0);
}

#[test]
fn stopped_estimate_tracks_population_curve() {
    // g has a strict interior minimum at n = 10⁵, so λ̂ lands near λ* and π̂₀ near π₀*
    let model = MixtureModel::new(0.3, NullDist::Beta { a: 3, b: 1 }, Alternative::Shift(1.0)).unwrap();
    let (lambda_star, pi0_star) = optimal_lambda(&model, 0.2, 1e-6).unwrap();
    let batch = model.sample(100_000, &mut derive_stream(12, 0)).unwrap();
    let grid = GridSpec::new(0.2, 0.05, None).unwrap();
    let plain = stop_plain(&batch, &grid);
    let robust = stop_robust(&batch, &grid);
    assert!(plain.triggered && robust.triggered);
    assert_eq!(plain.lambda_hat, robust.lambda_hat);
    assert!((plain.lambda_hat - lambda_star).abs() <= 0.15, "{} vs {lambda_star}", plain.lambda_hat);
    assert!((plain.pi0_hat - pi0_star).abs() < 0.02, "{} vs {pi0_star}", plain.pi0_hat);
    let g = pi0_infty(&model, plain.lambda_hat).unwrap();
    assert!((storey_pi0(&batch, plain.lambda_hat).unwrap().value - g).abs() < 0.02);
}

#[test]
fn spread_shrinks_with_more_tests() {
    let rows = run_convergence_study(&[ScenarioId::D], &[40, 160], 2000, 10, 3, 0.2).unwrap();
    for rule in [RuleVariant::Plain, RuleVariant::Robust] {
        let iqr = |n: usize| {
            let r = rows.iter().find(|r| r.n == n && r.rule == rule).unwrap();
            r.pi0_q75 - r.pi0_q25
        };
        assert!(iqr(160) < iqr(40), "{rule:?}");
    }
}

#[test]
fn truncation_caps_the_estimate() {
    let rule = AdaptiveRule::default();
    let mut stream = derive_stream(2, 0);
    let p: Vec<f64> = (0..400).map(|_| stream.uniform_pvalue()).collect();
    let batch = PValueBatch::new(p).unwrap();
    let spec = rule.resolve(&batch, 0.2).unwrap();
    assert_eq!(spec.variant, RuleVariant::Robust);
    let res = run_method(&batch, 0.2, &MethodSpec::AdaptiveStorey(rule)).unwrap();
    assert!(res.lambda_used.unwrap() <= 0.8 + 1e-12);
}
