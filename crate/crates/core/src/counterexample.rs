//! Closed-form machinery behind the failure of long-run robustness for the
//! two-piece power utility: the parameter restriction making the risky
//! asset attractive enough, the divergence exponent of the low-wealth
//! utility contribution, and the certainty-equivalent collapse sweep.

use crate::error::{Error, Result};
use crate::market::{cp_wealth_law, merton_weight, MarketParams};
use crate::numerics::{gauss_hermite, normal_cdf};
use crate::solver::{ce_ratio_with_nodes, expected_utility_of_law, DEFAULT_NODES};
use crate::utility::{InterpolationSpec, UtilitySpec};
use serde::Serialize;

/// Restriction on market parameters under which the collapse is proved:
/// `(mu / (sigma^2 (1-p)))^2 > 2 max{1, 1/(p - p* - 1)} r / sigma^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RestrictionReport {
    pub lhs: f64,
    pub rhs: f64,
    pub satisfied: bool,
    pub margin: f64,
}

/// Divergence diagnostics at one horizon.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DivergenceReport {
    /// Exponential growth rate of the low-wealth ratio.
    pub exponent: f64,
    /// Probability, under the tilted measure, that the benchmark wealth
    /// ends below 1; tends to one as the horizon grows.
    pub qstar_prob: f64,
    /// `E[X^p* 1{X <= 1}] / E[X^p]` for the isoelastic benchmark wealth.
    pub lowwealth_ratio: f64,
}

fn check_exponents(p: f64, p_star: f64) -> Result<()> {
    if !(p.is_finite() && p < 0.0) {
        return Err(Error::Parameter(format!("requires p < 0, got {p}")));
    }
    if !(p_star.is_finite() && p_star < p - 1.0) {
        return Err(Error::Parameter(format!(
            "requires p* < p - 1 = {}, got {p_star}",
            p - 1.0
        )));
    }
    Ok(())
}

pub fn check_param_restriction(
    mkt: &MarketParams,
    p: f64,
    p_star: f64,
) -> Result<RestrictionReport> {
    check_exponents(p, p_star)?;
    let lhs = (mkt.mu / (mkt.sigma * mkt.sigma * (1.0 - p))).powi(2);
    let rhs = 2.0 * 1.0f64.max(1.0 / (p - p_star - 1.0)) * mkt.r / (mkt.sigma * mkt.sigma);
    Ok(RestrictionReport { lhs, rhs, satisfied: lhs > rhs, margin: lhs - rhs })
}

/// `(p* - p) (r + (p* + 1 - p) mu^2 / (2 (1-p)^2 sigma^2))`, positive
/// whenever the parameter restriction holds.
pub fn divergence_exponent(mkt: &MarketParams, p: f64, p_star: f64) -> Result<f64> {
    check_exponents(p, p_star)?;
    Ok(exponent_formula(mkt, p, p_star))
}

pub(crate) fn exponent_formula(mkt: &MarketParams, p: f64, p_star: f64) -> f64 {
    let gamma = 1.0 - p;
    (p_star - p)
        * (mkt.r + (p_star + 1.0 - p) * mkt.mu * mkt.mu
            / (2.0 * gamma * gamma * mkt.sigma * mkt.sigma))
}

/// Closed form of the low-wealth ratio `E[X^p* 1{X <= 1}] / E[X^p]` for
/// the Merton benchmark wealth: an exponential factor times the
/// probability, under the measure tilted by the low-wealth power of the
/// wealth shock, that wealth ends below one.
pub fn lowwealth_ratio_closed_form(
    mkt: &MarketParams,
    p: f64,
    p_star: f64,
    t: f64,
) -> Result<DivergenceReport> {
    check_exponents(p, p_star)?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Parameter(format!("horizon must be > 0, got {t}")));
    }
    let exponent = exponent_formula(mkt, p, p_star);
    let gamma = 1.0 - p;
    // Wealth log-coefficient per sqrt(year) and the drift of the tilted
    // Brownian motion against the {X <= 1} threshold.
    let c = mkt.mu / (gamma * mkt.sigma);
    let threshold_rate = -mkt.r
        - (1.0 - 2.0 * p + 2.0 * p_star) * mkt.mu * mkt.mu
            / (2.0 * gamma * gamma * mkt.sigma * mkt.sigma);
    let qstar_prob = normal_cdf(threshold_rate * t.sqrt() / c);
    Ok(DivergenceReport {
        exponent,
        qstar_prob,
        lowwealth_ratio: (exponent * t).exp() * qstar_prob,
    })
}

/// One horizon of the collapse sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CollapsePoint {
    pub horizon: f64,
    pub ce_optimal: f64,
    pub ce_isoelastic: f64,
    /// Certainty equivalent of the isoelastic strategy relative to the
    /// optimizer; decreases toward zero under the restriction.
    pub ratio: f64,
    /// `E[U(X)] / E[U~(X)]` for the benchmark wealth; diverges at the rate
    /// of the exponent.
    pub eu_ratio: f64,
    /// Closed-form low-wealth ratio (NaN outside the restriction domain).
    pub lowwealth_ratio: f64,
    pub quad_error: f64,
}

/// Certainty-equivalent collapse of the isoelastic strategy under the
/// two-piece utility, via the full solver at each horizon.
///
/// With `p* < p - 1` the parameter restriction is enforced (the collapse
/// is only proved under it). With `p - 1 <= p* < p` the utility falls back
/// to the similarity regime and the ratio rises toward one instead.
pub fn ce_collapse_curve(
    mkt: &MarketParams,
    p: f64,
    p_star: f64,
    interpolation: InterpolationSpec,
    horizons: &[f64],
) -> Result<Vec<CollapsePoint>> {
    ce_collapse_curve_with_nodes(mkt, p, p_star, interpolation, horizons, DEFAULT_NODES)
}

pub fn ce_collapse_curve_with_nodes(
    mkt: &MarketParams,
    p: f64,
    p_star: f64,
    interpolation: InterpolationSpec,
    horizons: &[f64],
    nodes: usize,
) -> Result<Vec<CollapsePoint>> {
    let counterexample_regime = p_star < p - 1.0;
    if counterexample_regime {
        let restriction = check_param_restriction(mkt, p, p_star)?;
        if !restriction.satisfied {
            return Err(Error::Parameter(format!(
                "parameter restriction violated (margin {:.6}): the collapse is only \
                 established for markets where the risky asset is attractive enough",
                restriction.margin
            )));
        }
    }
    let u = UtilitySpec::two_piece_power(p, p_star, interpolation)?;
    let weight = merton_weight(mkt, 1.0 - p)?;
    let rule = gauss_hermite(2 * nodes)?;
    horizons
        .iter()
        .map(|&t| {
            let point = ce_ratio_with_nodes(&u, mkt, p, t, nodes)?;
            let bench = cp_wealth_law(mkt, weight, t)?;
            let eu_bench = expected_utility_of_law(&u, &bench, &rule)?;
            let eu_iso = bench.power_moment(p) / p;
            let lowwealth_ratio = if counterexample_regime {
                lowwealth_ratio_closed_form(mkt, p, p_star, t)?.lowwealth_ratio
            } else {
                f64::NAN
            };
            Ok(CollapsePoint {
                horizon: t,
                ce_optimal: point.ce_optimal,
                ce_isoelastic: point.ce_isoelastic,
                ratio: point.ratio,
                eu_ratio: eu_bench / eu_iso,
                lowwealth_ratio,
                quad_error: point.quad_error,
            })
        })
        .collect()
}
