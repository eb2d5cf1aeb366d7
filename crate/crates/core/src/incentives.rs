//! Compensation-contract analytics: the effective risk aversion induced by
//! power incentives, static replication of power payoffs from option
//! strips, and the horizon profile of an option grant's private value.

use crate::error::{Error, Result};
use crate::market::{MarketParams, TerminalLaw};
use crate::solver::{solve_terminal_with_nodes, DEFAULT_NODES};
use crate::utility::{concave_envelope, effective_utility, Contract};
use serde::Serialize;

/// Risk aversion of a gamma-averse manager handed the power incentive
/// `x^alpha`: `gamma* = alpha gamma + (1 - alpha)`. Must come out positive
/// for the composed problem to be well posed.
pub fn effective_risk_aversion(alpha: f64, gamma: f64) -> Result<f64> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Parameter(format!("incentive exponent must be > 0, got {alpha}")));
    }
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Parameter(format!("risk aversion must be > 0, got {gamma}")));
    }
    let gamma_star = alpha * gamma + 1.0 - alpha;
    if gamma_star <= 0.0 {
        return Err(Error::Wellposedness(format!(
            "effective risk aversion {gamma_star} is not positive (alpha={alpha}, gamma={gamma})"
        )));
    }
    Ok(gamma_star)
}

/// One discretized option position: density weight `f''(k)` at the
/// interval midpoint `strike`, notional `weight * width`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReplicationLeg {
    pub strike: f64,
    pub weight: f64,
    pub width: f64,
}

/// Static replication of the power payoff `f(x) = x^alpha`:
/// cash `f(kbar)`, a forward position `f'(kbar)`, puts below `kbar` and
/// calls above, weighted by `f''(k) = alpha (alpha - 1) k^(alpha - 2)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationPortfolio {
    pub alpha: f64,
    pub kbar: f64,
    pub cash: f64,
    pub forward_qty: f64,
    pub put_legs: Vec<ReplicationLeg>,
    pub call_legs: Vec<ReplicationLeg>,
    grid_lo: f64,
    grid_hi: f64,
}

/// Discretizes the strike integrals over the given grid with the midpoint
/// rule; an interval straddling `kbar` is split so puts and calls stay on
/// their own side.
pub fn carr_madan_legs(alpha: f64, kbar: f64, strikes: &[f64]) -> Result<ReplicationPortfolio> {
    if !(alpha.is_finite() && alpha > 0.0) {
        return Err(Error::Parameter(format!("payoff exponent must be > 0, got {alpha}")));
    }
    if !(kbar.is_finite() && kbar >= 0.0) {
        return Err(Error::Parameter(format!("kbar must be >= 0, got {kbar}")));
    }
    if strikes.len() < 2 {
        return Err(Error::Parameter("strike grid needs at least two points".into()));
    }
    let mut prev = 0.0;
    for &k in strikes {
        if !(k.is_finite() && k > prev) {
            return Err(Error::Parameter(
                "strikes must be positive and strictly increasing".into(),
            ));
        }
        prev = k;
    }
    let cash = if kbar == 0.0 { 0.0 } else { kbar.powf(alpha) };
    let forward_qty = if kbar == 0.0 {
        match alpha.partial_cmp(&1.0).expect("finite alpha") {
            std::cmp::Ordering::Greater => 0.0,
            std::cmp::Ordering::Equal => 1.0,
            std::cmp::Ordering::Less => {
                return Err(Error::Parameter(
                    "f'(0) diverges for alpha < 1; choose kbar > 0".into(),
                ))
            }
        }
    } else {
        alpha * kbar.powf(alpha - 1.0)
    };

    let density = |k: f64| alpha * (alpha - 1.0) * k.powf(alpha - 2.0);
    let mut put_legs = Vec::new();
    let mut call_legs = Vec::new();
    let mut push = |lo: f64, hi: f64| {
        if hi <= lo {
            return;
        }
        let mid = 0.5 * (lo + hi);
        let weight = density(mid);
        if weight == 0.0 {
            return;
        }
        let leg = ReplicationLeg { strike: mid, weight, width: hi - lo };
        if mid < kbar {
            put_legs.push(leg);
        } else {
            call_legs.push(leg);
        }
    };
    for pair in strikes.windows(2) {
        let (lo, hi) = (pair[0], pair[1]);
        if lo < kbar && kbar < hi {
            push(lo, kbar);
            push(kbar, hi);
        } else {
            push(lo, hi);
        }
    }
    Ok(ReplicationPortfolio {
        alpha,
        kbar,
        cash,
        forward_qty,
        put_legs,
        call_legs,
        grid_lo: strikes[0],
        grid_hi: *strikes.last().expect("nonempty"),
    })
}

/// Replication evaluated on a wealth grid, with the worst relative error
/// against the target power payoff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReplicationResult {
    pub values: Vec<f64>,
    pub max_rel_error: f64,
}

impl ReplicationPortfolio {
    pub fn value_at(&self, x: f64) -> Result<f64> {
        if !(x >= self.grid_lo && x <= self.grid_hi) {
            return Err(Error::Coverage { x, lo: self.grid_lo, hi: self.grid_hi });
        }
        let mut v = self.cash + self.forward_qty * (x - self.kbar);
        for leg in &self.put_legs {
            v += leg.weight * leg.width * (leg.strike - x).max(0.0);
        }
        for leg in &self.call_legs {
            v += leg.weight * leg.width * (x - leg.strike).max(0.0);
        }
        Ok(v)
    }
}

/// Evaluates the portfolio against `x^alpha` on the given points.
pub fn replicate(portfolio: &ReplicationPortfolio, xs: &[f64]) -> Result<ReplicationResult> {
    let mut values = Vec::with_capacity(xs.len());
    let mut max_rel_error = 0.0f64;
    for &x in xs {
        let v = portfolio.value_at(x)?;
        let target = x.powf(portfolio.alpha);
        max_rel_error = max_rel_error.max((v - target).abs() / target.abs().max(f64::MIN_POSITIVE));
        values.push(v);
    }
    Ok(ReplicationResult { values, max_rel_error })
}

/// Private value of an option grant at one horizon: certainty equivalents
/// with and without the option legs, and the relative premium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GrantCurvePoint {
    pub horizon: f64,
    pub ce_plain: f64,
    pub ce_incentivized: f64,
    /// `ce_incentivized / ce_plain - 1`, in wealth units. Large at short
    /// horizons and asymptotically zero; the tail may overshoot slightly
    /// below zero because the option-rich package maps the same sure
    /// compensation to a lower firm value.
    pub premium: f64,
    pub quad_error: f64,
}

/// Sweeps the grant's private value over horizons: the stock-and-cash
/// problem against the concavified problem with the option legs included.
pub fn grant_value_curve(
    p: f64,
    contract: &Contract,
    mkt: &MarketParams,
    horizons: &[f64],
) -> Result<Vec<GrantCurvePoint>> {
    grant_value_curve_with_nodes(p, contract, mkt, horizons, DEFAULT_NODES)
}

pub fn grant_value_curve_with_nodes(
    p: f64,
    contract: &Contract,
    mkt: &MarketParams,
    horizons: &[f64],
    nodes: usize,
) -> Result<Vec<GrantCurvePoint>> {
    let plain = effective_utility(p, contract.without_legs())?;
    let granted = concave_envelope(&effective_utility(p, contract.clone())?)?;
    horizons
        .iter()
        .map(|&t| {
            let base = solve_terminal_with_nodes(&plain, mkt, t, 1.0, nodes)?;
            let incent = solve_terminal_with_nodes(&granted, mkt, t, 1.0, nodes)?;
            Ok(GrantCurvePoint {
                horizon: t,
                ce_plain: base.certainty_equivalent,
                ce_incentivized: incent.certainty_equivalent,
                premium: incent.certainty_equivalent / base.certainty_equivalent - 1.0,
                quad_error: base.quad_error.max(incent.quad_error),
            })
        })
        .collect()
}

/// Arbitrage price of the contract paying `exp(-sigma^2 T) S_T^2`, under a
/// zero interest rate: the squared spot price.
///
/// The risk-neutral second moment is `s0^2 exp(sigma^2 T)`, so the
/// discounted payoff prices at exactly `s0^2` under the zero-rate
/// convention (the identity is specific to `r = 0`).
pub fn square_contract_price(s0: f64, sigma: f64, t: f64) -> Result<f64> {
    if !(s0.is_finite() && s0 > 0.0) {
        return Err(Error::Parameter(format!("spot must be > 0, got {s0}")));
    }
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::Parameter(format!("volatility must be > 0, got {sigma}")));
    }
    if !(t.is_finite() && t >= 0.0) {
        return Err(Error::Parameter(format!("horizon must be >= 0, got {t}")));
    }
    if t == 0.0 {
        return Ok(s0 * s0);
    }
    // Risk-neutral law with r = 0: log-mean ln(s0) - sigma^2 T / 2.
    let law = TerminalLaw::new(s0.ln() - 0.5 * sigma * sigma * t, sigma * t.sqrt(), t)?;
    Ok((-sigma * sigma * t).exp() * law.power_moment(2.0))
}
