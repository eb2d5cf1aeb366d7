use longrun::market::{cp_wealth_law, deflator_law, MarketParams};
use longrun::numerics::{expect_normal, gauss_hermite, normal_draw};

#[test]
fn budget_identity_over_random_weights_and_horizons() {
    // E[X^pi_T Y_T] = 1 for every constant proportion: evaluated by
    // quadrature on the joint lognormal exponent.
    let mkt = MarketParams::new(0.08, 0.2, 0.01).unwrap();
    let rule = gauss_hermite(301).unwrap();
    for i in 0..1000u64 {
        let pi = 2.5 * normal_draw(41, 2 * i).tanh() * 1.5;
        let t = 0.5 + 50.0 * (0.5 + 0.5 * normal_draw(41, 2 * i + 1).tanh());
        let w = cp_wealth_law(&mkt, pi, t).unwrap();
        let y = deflator_law(&mkt, t).unwrap();
        let lm = w.log_mean + y.log_mean;
        // Same Brownian shock drives both; the deflator loads negatively.
        let ls = (pi * mkt.sigma - mkt.theta()) * t.sqrt();
        let val = expect_normal(|z| (lm + ls * z).exp(), &rule).unwrap();
        assert!(
            (val - 1.0).abs() < 1e-10,
            "pi={pi} t={t}: E[XY]={val}"
        );
    }
}

#[test]
fn deflator_mean_matches_the_discount_factor_by_quadrature() {
    let mkt = MarketParams::new(0.08, 0.2, 0.01).unwrap();
    let rule = gauss_hermite(201).unwrap();
    for &t in &[0.5, 1.0, 10.0, 40.0, 120.0] {
        let law = deflator_law(&mkt, t).unwrap();
        let mean = expect_normal(|z| law.value_at(z), &rule).unwrap();
        assert!(
            (mean - (-mkt.r * t).exp()).abs() < 1e-12,
            "t={t}: {mean}"
        );
    }
}

#[test]
fn laws_are_supported_on_positive_wealth() {
    let mkt = MarketParams::new(0.08, 0.2, 0.01).unwrap();
    for &pi in &[-2.0, 0.0, 1.0, 3.0] {
        let law = cp_wealth_law(&mkt, pi, 25.0).unwrap();
        for &z in &[-30.0, -5.0, 0.0, 5.0, 30.0] {
            assert!(law.value_at(z) > 0.0);
        }
    }
}
