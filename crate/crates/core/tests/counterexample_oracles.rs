use longrun::counterexample::{
    ce_collapse_curve, check_param_restriction, divergence_exponent, lowwealth_ratio_closed_form,
};
use longrun::market::{cp_wealth_law, merton_weight, MarketParams};
use longrun::numerics::{expect_normal_segments, normal_draw};
use longrun::utility::InterpolationSpec;

fn mkt() -> MarketParams {
    MarketParams::new(0.08, 0.2, 0.01).unwrap()
}

/// Independent quadrature of E[X^p* 1{X <= 1}] / E[X^p] for the Merton
/// benchmark wealth: the indicator becomes an integration endpoint.
fn lowwealth_ratio_by_quadrature(mkt: &MarketParams, p: f64, p_star: f64, t: f64) -> f64 {
    let weight = merton_weight(mkt, 1.0 - p).unwrap();
    let law = cp_wealth_law(mkt, weight, t).unwrap();
    let z_star = law.z_of_value(1.0).unwrap();
    let numer = expect_normal_segments(
        |z| {
            if z <= z_star {
                law.value_at(z).powf(p_star)
            } else {
                0.0
            }
        },
        &[z_star],
        800,
    )
    .unwrap();
    let denom = expect_normal_segments(|z| law.value_at(z).powf(p), &[], 800).unwrap();
    numer / denom
}

#[test]
fn closed_form_matches_quadrature_at_the_preset() {
    for &t in &[1.0, 5.0, 20.0] {
        let closed = lowwealth_ratio_closed_form(&mkt(), -1.0, -3.0, t)
            .unwrap()
            .lowwealth_ratio;
        let quad = lowwealth_ratio_by_quadrature(&mkt(), -1.0, -3.0, t);
        assert!(
            (closed / quad - 1.0).abs() < 1e-8,
            "t={t}: closed {closed} quad {quad}"
        );
    }
}

#[test]
fn closed_form_matches_quadrature_over_random_parameters() {
    let mut tested = 0;
    for i in 0..400u64 {
        let p = -0.2 - 2.0 * (0.5 + 0.5 * normal_draw(3, 3 * i).tanh());
        let p_star = p - 1.0 - 1.5 * (0.5 + 0.5 * normal_draw(3, 3 * i + 1).tanh()) - 0.05;
        let t = 0.5 + 20.0 * (0.5 + 0.5 * normal_draw(3, 3 * i + 2).tanh());
        let closed = lowwealth_ratio_closed_form(&mkt(), p, p_star, t)
            .unwrap()
            .lowwealth_ratio;
        let quad = lowwealth_ratio_by_quadrature(&mkt(), p, p_star, t);
        if quad < 1e-280 {
            continue;
        }
        assert!(
            (closed / quad - 1.0).abs() < 1e-8,
            "p={p} p*={p_star} t={t}: closed {closed} quad {quad}"
        );
        tested += 1;
    }
    assert!(tested > 300);
}

#[test]
fn restriction_implies_a_positive_exponent() {
    // Sufficient, not necessary: asserted one way only, over a random scan.
    let mut satisfied_count = 0;
    for i in 0..1000u64 {
        let p = -0.1 - 2.5 * (0.5 + 0.5 * normal_draw(5, 4 * i).tanh());
        let p_star = p - 1.0 - 2.5 * (0.5 + 0.5 * normal_draw(5, 4 * i + 1).tanh()) - 0.02;
        let mu = 0.02 + 0.1 * (0.5 + 0.5 * normal_draw(5, 4 * i + 2).tanh());
        let r = 0.002 + 0.05 * (0.5 + 0.5 * normal_draw(5, 4 * i + 3).tanh());
        let m = MarketParams::new(mu, 0.2, r).unwrap();
        let rep = check_param_restriction(&m, p, p_star).unwrap();
        if rep.satisfied {
            satisfied_count += 1;
            let e = divergence_exponent(&m, p, p_star).unwrap();
            assert!(e > 0.0, "restriction satisfied but exponent {e} (p={p}, p*={p_star})");
        }
    }
    assert!(satisfied_count > 50, "scan produced too few satisfied draws");
}

#[test]
fn collapse_is_monotone_once_past_the_bridge_crossing() {
    // The benchmark's certainty equivalent crawls through the
    // interpolation bridge at mid horizons; past it the ratio decays
    // strictly toward zero.
    let pts = ce_collapse_curve(
        &mkt(),
        -1.0,
        -3.0,
        InterpolationSpec::concave_power(6.0),
        &[50.0, 100.0, 150.0, 200.0],
    )
    .unwrap();
    for pair in pts.windows(2) {
        assert!(pair[1].ratio < pair[0].ratio, "{pair:?}");
    }
    assert!(pts.last().unwrap().ratio < 0.1);
    // The expected-utility ratio diverges at the closed-form rate.
    let slope = (pts[3].eu_ratio / pts[1].eu_ratio).ln() / 100.0;
    let exponent = divergence_exponent(&mkt(), -1.0, -3.0).unwrap();
    assert!(
        (slope / exponent - 1.0).abs() < 0.3,
        "slope {slope} vs exponent {exponent}"
    );
    // A different bridge knot changes mid-horizon numbers but not the
    // collapse itself.
    let other = ce_collapse_curve(
        &mkt(),
        -1.0,
        -3.0,
        InterpolationSpec::concave_power(10.0),
        &[100.0, 150.0, 200.0],
    )
    .unwrap();
    for pair in other.windows(2) {
        assert!(pair[1].ratio < pair[0].ratio, "{pair:?}");
    }
    assert!(other.last().unwrap().ratio < 0.1);
}

#[test]
fn similarity_regime_recovers_convergence() {
    // With p* >= p - 1 the low-wealth condition holds and the ratio rises
    // toward one instead of collapsing.
    let pts = ce_collapse_curve(
        &mkt(),
        -1.0,
        -1.8,
        InterpolationSpec::concave_power(12.0),
        &[10.0, 60.0, 200.0],
    )
    .unwrap();
    assert!(pts[2].ratio > pts[0].ratio, "{pts:?}");
    assert!(pts[2].ratio > 0.9);
    assert!(pts.iter().all(|p| p.lowwealth_ratio.is_nan()));
}

#[test]
fn eu_ratio_diverges_while_ce_ratio_collapses() {
    let pts = ce_collapse_curve(
        &mkt(),
        -1.0,
        -3.0,
        InterpolationSpec::concave_power(6.0),
        &[25.0, 100.0, 200.0],
    )
    .unwrap();
    assert!(pts[2].eu_ratio > pts[1].eu_ratio);
    assert!(pts[1].eu_ratio > pts[0].eu_ratio);
    assert!(pts[2].eu_ratio > 10.0);
    assert!(pts[2].ratio < pts[0].ratio);
}
