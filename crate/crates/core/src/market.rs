//! Black-Scholes market with a single risky asset: lognormal terminal laws
//! of the deflator and of constant-proportion wealth, and the Merton weight.
//!
//! `mu` is the *excess* drift, `dS/S = (mu + r) dt + sigma dW`, so the
//! market price of risk is `theta = mu / sigma` with no further adjustment.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Market parameters: excess drift, volatility, and safe rate, per year.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketParams {
    pub mu: f64,
    pub sigma: f64,
    pub r: f64,
}

impl MarketParams {
    /// Requires `sigma > 0` and `r > 0`: the safe asset must grow without
    /// bound for the long-run results to apply.
    pub fn new(mu: f64, sigma: f64, r: f64) -> Result<Self> {
        if !mu.is_finite() || !sigma.is_finite() || !r.is_finite() {
            return Err(Error::Parameter("market parameters must be finite".into()));
        }
        if sigma <= 0.0 {
            return Err(Error::Parameter(format!("sigma must be > 0, got {sigma}")));
        }
        if r <= 0.0 {
            return Err(Error::Parameter(format!("r must be > 0, got {r}")));
        }
        Ok(Self { mu, sigma, r })
    }

    /// Market price of risk `theta = mu / sigma`.
    pub fn theta(&self) -> f64 {
        self.mu / self.sigma
    }
}

/// Lognormal law of a terminal random variable: `exp(log_mean + log_std Z)`
/// with `Z` standard normal. `log_std = 0` describes a deterministic value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TerminalLaw {
    pub log_mean: f64,
    pub log_std: f64,
    pub horizon: f64,
}

impl TerminalLaw {
    pub fn new(log_mean: f64, log_std: f64, horizon: f64) -> Result<Self> {
        if !log_mean.is_finite() || !log_std.is_finite() || !horizon.is_finite() {
            return Err(Error::Parameter("terminal law fields must be finite".into()));
        }
        if log_std < 0.0 {
            return Err(Error::Parameter(format!("log_std must be >= 0, got {log_std}")));
        }
        if horizon <= 0.0 {
            return Err(Error::Parameter(format!("horizon must be > 0, got {horizon}")));
        }
        Ok(Self { log_mean, log_std, horizon })
    }

    /// Realized value at standard normal coordinate `z`.
    pub fn value_at(&self, z: f64) -> f64 {
        (self.log_mean + self.log_std * z).exp()
    }

    /// `E[X^a]`, the lognormal power moment.
    pub fn power_moment(&self, a: f64) -> f64 {
        (a * self.log_mean + 0.5 * a * a * self.log_std * self.log_std).exp()
    }

    /// Standard normal coordinate at which the variable crosses `x`,
    /// or `None` when the law is deterministic.
    pub fn z_of_value(&self, x: f64) -> Option<f64> {
        if self.log_std == 0.0 || x <= 0.0 {
            None
        } else {
            Some((x.ln() - self.log_mean) / self.log_std)
        }
    }
}

/// Law of the unique stochastic discount factor
/// `Y_T = exp(-rT - theta^2 T / 2 - theta W_T)`; its mean is `exp(-rT)`.
pub fn deflator_law(mkt: &MarketParams, horizon: f64) -> Result<TerminalLaw> {
    let theta = mkt.theta();
    TerminalLaw::new(
        -(mkt.r + 0.5 * theta * theta) * horizon,
        theta.abs() * horizon.sqrt(),
        horizon,
    )
}

/// Law of terminal wealth under the constant-proportion strategy holding
/// fraction `pi` in the risky asset, from unit initial capital.
pub fn cp_wealth_law(mkt: &MarketParams, pi: f64, horizon: f64) -> Result<TerminalLaw> {
    if !pi.is_finite() {
        return Err(Error::Parameter("risky weight must be finite".into()));
    }
    let drift = mkt.r + pi * mkt.mu - 0.5 * pi * pi * mkt.sigma * mkt.sigma;
    TerminalLaw::new(drift * horizon, pi.abs() * mkt.sigma * horizon.sqrt(), horizon)
}

/// Optimal risky weight `mu / (gamma sigma^2)` for relative risk aversion
/// `gamma = 1 - p`.
pub fn merton_weight(mkt: &MarketParams, gamma: f64) -> Result<f64> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Parameter(format!("risk aversion must be > 0, got {gamma}")));
    }
    Ok(mkt.mu / (gamma * mkt.sigma * mkt.sigma))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn mkt() -> MarketParams {
        MarketParams::new(0.08, 0.2, 0.01).unwrap()
    }

    #[test]
    fn zero_excess_drift_gives_deterministic_deflator() {
        let m = MarketParams::new(0.0, 0.2, 0.03).unwrap();
        let law = deflator_law(&m, 7.0).unwrap();
        assert_eq!(law.log_std, 0.0);
        assert_relative_eq!(law.value_at(0.0), (-0.03f64 * 7.0).exp(), max_relative = 1e-14);
    }

    #[test]
    fn deflator_mean_is_the_discount_factor() {
        let law = deflator_law(&mkt(), 10.0).unwrap();
        assert_relative_eq!(law.power_moment(1.0), (-0.1f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(law.power_moment(1.0), 0.9048374180359595, max_relative = 1e-12);
    }

    #[test]
    fn deflator_mean_vanishes_in_the_long_run() {
        let mut prev = f64::INFINITY;
        for &t in &[10.0, 100.0, 500.0, 1000.0] {
            let mean = deflator_law(&mkt(), t).unwrap().power_moment(1.0);
            assert!(mean < prev);
            prev = mean;
        }
        assert!(prev < 1e-4);
    }

    #[test]
    fn full_safe_investment_is_deterministic() {
        let law = cp_wealth_law(&mkt(), 0.0, 3.0).unwrap();
        assert_eq!(law.log_std, 0.0);
        assert_relative_eq!(law.value_at(0.0), (0.01f64 * 3.0).exp(), max_relative = 1e-14);
    }

    #[test]
    fn merton_drift_matches_the_two_piece_exponent_formula() {
        // pi = mu / ((1-p) sigma^2) with p = -1 gives log-drift
        // r + (1 - 2p) mu^2 / (2 (1-p)^2 sigma^2).
        let p = -1.0;
        let m = mkt();
        let pi = m.mu / ((1.0 - p) * m.sigma * m.sigma);
        let law = cp_wealth_law(&m, pi, 1.0).unwrap();
        let expected = m.r
            + (1.0 - 2.0 * p) * m.mu * m.mu / (2.0 * (1.0 - p).powi(2) * m.sigma * m.sigma);
        assert_relative_eq!(law.log_mean, expected, max_relative = 1e-14);
        assert_relative_eq!(law.log_mean, 0.07, max_relative = 1e-12);
    }

    #[test]
    fn budget_identity_for_every_weight() {
        // E[X^pi_T Y_T] = 1: the joint exponent cancels since theta = mu/sigma.
        let m = mkt();
        for &pi in &[-1.5, 0.0, 0.3, 1.0, 2.0] {
            for &t in &[0.5, 5.0, 40.0] {
                let w = cp_wealth_law(&m, pi, t).unwrap();
                let y = deflator_law(&m, t).unwrap();
                let lm = w.log_mean + y.log_mean;
                let ls = pi * m.sigma * t.sqrt() - m.theta() * t.sqrt();
                let mean = (lm + 0.5 * ls * ls).exp();
                assert_relative_eq!(mean, 1.0, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn merton_weight_examples() {
        let m = mkt();
        assert_relative_eq!(merton_weight(&m, 2.0).unwrap(), 1.0, max_relative = 1e-14);
        assert!(merton_weight(&m, 1e9).unwrap() < 1e-8);
        let flat = MarketParams::new(0.0, 0.2, 0.01).unwrap();
        assert_eq!(merton_weight(&flat, 3.0).unwrap(), 0.0);
        assert!(matches!(merton_weight(&m, 0.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(MarketParams::new(0.08, 0.0, 0.01).is_err());
        assert!(MarketParams::new(0.08, 0.2, 0.0).is_err());
        assert!(TerminalLaw::new(0.0, -0.1, 1.0).is_err());
        assert!(TerminalLaw::new(0.0, 0.1, 0.0).is_err());
    }
}
