//! The utility family: isoelastic benchmarks, perturbed variants, the
//! two-piece counterexample utility, contract-induced effective utilities,
//! and their convex duals and inverse marginals.

mod bridge;
mod envelope;

pub use bridge::{ConcaveBridge, InterpolationKind, InterpolationSpec};
pub use envelope::{concave_envelope, Bridge, ConcaveEnvelope, InverseMarginal};

use crate::error::{Error, Result};
use serde::Serialize;

/// One call-option leg of a compensation package.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptionLeg {
    pub quantity: f64,
    pub strike: f64,
}

/// Compensation package: cash, a stock fraction, and call-option legs with
/// strictly increasing strikes. The payoff at terminal wealth `x` is
/// `c1 + c2 x + sum_i q_i (x - K_i)^+`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Contract {
    cash: f64,
    stock: f64,
    legs: Vec<OptionLeg>,
}

impl Contract {
    pub fn new(cash: f64, stock: f64, legs: Vec<OptionLeg>) -> Result<Self> {
        if !(cash.is_finite() && cash >= 0.0) {
            return Err(Error::Parameter(format!("cash must be >= 0, got {cash}")));
        }
        if !(stock.is_finite() && stock > 0.0) {
            return Err(Error::Parameter(format!("stock fraction must be > 0, got {stock}")));
        }
        let mut prev = 0.0;
        for leg in &legs {
            if !(leg.quantity.is_finite() && leg.quantity >= 0.0) {
                return Err(Error::Parameter(format!(
                    "option quantity must be >= 0, got {}",
                    leg.quantity
                )));
            }
            if !(leg.strike.is_finite() && leg.strike > prev) {
                return Err(Error::Parameter(
                    "strikes must be positive and strictly increasing".into(),
                ));
            }
            prev = leg.strike;
        }
        Ok(Self { cash, stock, legs })
    }

    /// Pure stock-and-cash contract.
    pub fn stock_and_cash(cash: f64, stock: f64) -> Result<Self> {
        Self::new(cash, stock, Vec::new())
    }

    /// Same cash and stock, option legs removed.
    pub fn without_legs(&self) -> Self {
        Self { cash: self.cash, stock: self.stock, legs: Vec::new() }
    }

    pub fn cash(&self) -> f64 {
        self.cash
    }

    pub fn stock(&self) -> f64 {
        self.stock
    }

    pub fn legs(&self) -> &[OptionLeg] {
        &self.legs
    }

    pub fn total_quantity(&self) -> f64 {
        self.legs.iter().map(|l| l.quantity).sum()
    }

    pub fn payoff(&self, x: f64) -> f64 {
        self.cash
            + self.stock * x
            + self
                .legs
                .iter()
                .map(|l| l.quantity * (x - l.strike).max(0.0))
                .sum::<f64>()
    }

    /// Strikes with a positive quantity: the kinks of the payoff.
    pub fn active_strikes(&self) -> Vec<f64> {
        self.legs
            .iter()
            .filter(|l| l.quantity > 0.0)
            .map(|l| l.strike)
            .collect()
    }

    /// Number of affine pieces of the payoff.
    pub(crate) fn n_pieces(&self) -> usize {
        self.legs.len() + 1
    }

    /// Intercept and slope of the payoff on piece `j` (strikes `< j` vested).
    pub(crate) fn piece_coeffs(&self, j: usize) -> (f64, f64) {
        let mut a = self.cash;
        let mut b = self.stock;
        for leg in &self.legs[..j] {
            a -= leg.quantity * leg.strike;
            b += leg.quantity;
        }
        (a, b)
    }

    /// Wealth bounds of piece `j`.
    pub(crate) fn piece_bounds(&self, j: usize) -> (f64, f64) {
        let lo = if j == 0 { 0.0 } else { self.legs[j - 1].strike };
        let hi = if j < self.legs.len() { self.legs[j].strike } else { f64::INFINITY };
        (lo, hi)
    }

    pub(crate) fn piece_of(&self, x: f64) -> usize {
        self.legs.iter().take_while(|l| l.strike < x).count()
    }
}

/// Two-piece power utility: exponent `p_star` below wealth 1, exponent `p`
/// above `x_hi`, joined by a concave C1 bridge. With `p_star < p - 1` this
/// is the counterexample utility that is too risk averse at low wealth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TwoPiecePower {
    pub p: f64,
    pub p_star: f64,
    pub interpolation: InterpolationSpec,
    bridge: ConcaveBridge,
}

/// Contract-composed effective utility
/// `u(x) = U(c1 + c2 x + sum q_i (x - K_i)^+) / (c2 + sum q_i)^p`.
/// Non-concave near active strikes; concavify before solving.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Incentivized {
    pub p: f64,
    pub contract: Contract,
    norm: f64,
}

impl Incentivized {
    pub(crate) fn norm(&self) -> f64 {
        self.norm
    }

    /// Inverse of the marginal restricted to piece `j`; `None` if the
    /// solution falls outside the piece.
    pub(crate) fn marginal_inverse_in_piece(&self, y: f64, j: usize) -> Option<f64> {
        let (a, b) = self.contract.piece_coeffs(j);
        let g = (y * self.norm / b).powf(1.0 / (self.p - 1.0));
        let x = (g - a) / b;
        let (lo, hi) = self.contract.piece_bounds(j);
        if x >= lo && x <= hi && x > 0.0 {
            Some(x)
        } else {
            None
        }
    }

    pub(crate) fn marginal_right(&self, x: f64) -> f64 {
        let j = self.contract.legs().iter().take_while(|l| l.strike <= x).count();
        let (a, b) = self.contract.piece_coeffs(j);
        b * (a + b * x).powf(self.p - 1.0) / self.norm
    }

    pub(crate) fn second_derivative(&self, x: f64) -> f64 {
        let j = self.contract.piece_of(x);
        let (a, b) = self.contract.piece_coeffs(j);
        b * b * (self.p - 1.0) * (a + b * x).powf(self.p - 2.0) / self.norm
    }
}

/// Tagged family of utility functions on (0, infinity).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum UtilitySpec {
    /// `x^p / p`, `p < 1`, `p != 0`.
    Isoelastic { p: f64 },
    /// `log x`, the `p = 0` case.
    Logarithmic,
    /// `(x + a)^p / p`, the low-wealth perturbation of the isoelastic form.
    ShiftedPower { p: f64, a: f64 },
    TwoPiecePower(TwoPiecePower),
    Incentivized(Incentivized),
}

fn check_exponent(p: f64) -> Result<()> {
    if !(p.is_finite() && p < 1.0 && p != 0.0) {
        return Err(Error::Parameter(format!("exponent must satisfy p < 1, p != 0, got {p}")));
    }
    Ok(())
}

impl UtilitySpec {
    pub fn isoelastic(p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self::Isoelastic { p })
    }

    pub fn logarithmic() -> Self {
        Self::Logarithmic
    }

    pub fn shifted_power(p: f64, a: f64) -> Result<Self> {
        check_exponent(p)?;
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::Parameter(format!("shift must be >= 0, got {a}")));
        }
        Ok(Self::ShiftedPower { p, a })
    }

    /// Two-piece power utility. Requires `p < 0` and `p_star < p`; the
    /// counterexample regime is `p_star < p - 1` and is checked separately
    /// by the parameter-restriction report.
    pub fn two_piece_power(p: f64, p_star: f64, interpolation: InterpolationSpec) -> Result<Self> {
        if !(p.is_finite() && p < 0.0) {
            return Err(Error::Parameter(format!("high-wealth exponent must be < 0, got {p}")));
        }
        if !(p_star.is_finite() && p_star < p) {
            return Err(Error::Parameter(format!(
                "low-wealth exponent must be < p = {p}, got {p_star}"
            )));
        }
        let x_hi = interpolation.x_hi;
        let bridge = ConcaveBridge::new(
            interpolation,
            1.0 / p_star,
            1.0,
            x_hi.powf(p) / p,
            x_hi.powf(p - 1.0),
        )?;
        Ok(Self::TwoPiecePower(TwoPiecePower { p, p_star, interpolation, bridge }))
    }

    /// Effective utility induced by a compensation contract. `p = 0` is
    /// rejected: the normalization by `(c2 + sum q_i)^p` is specific to
    /// power utilities.
    pub fn incentivized(p: f64, contract: Contract) -> Result<Self> {
        check_exponent(p)?;
        let norm = (contract.stock + contract.total_quantity()).powf(p);
        Ok(Self::Incentivized(Incentivized { p, contract, norm }))
    }

    /// High-wealth power exponent the variant is asymptotically equivalent to.
    pub fn p_high(&self) -> f64 {
        match self {
            Self::Isoelastic { p } => *p,
            Self::Logarithmic => 0.0,
            Self::ShiftedPower { p, .. } => *p,
            Self::TwoPiecePower(t) => t.p,
            Self::Incentivized(i) => i.p,
        }
    }

    pub fn is_concave(&self) -> bool {
        match self {
            Self::Incentivized(i) => i.contract.active_strikes().is_empty(),
            _ => true,
        }
    }

    pub(crate) fn ensure_concave(&self) -> Result<()> {
        if self.is_concave() {
            Ok(())
        } else {
            Err(Error::NotConcave(
                "effective utility with option legs is non-concave near its strikes".into(),
            ))
        }
    }

    /// U(x).
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Domain(format!("utility argument must be > 0, got {x}")));
        }
        Ok(match self {
            Self::Isoelastic { p } => x.powf(*p) / p,
            Self::Logarithmic => x.ln(),
            Self::ShiftedPower { p, a } => (x + a).powf(*p) / p,
            Self::TwoPiecePower(t) => {
                if x <= 1.0 {
                    x.powf(t.p_star) / t.p_star
                } else if x >= t.interpolation.x_hi {
                    x.powf(t.p) / t.p
                } else {
                    t.bridge.value(x)
                }
            }
            Self::Incentivized(i) => i.contract.payoff(x).powf(i.p) / i.p / i.norm,
        })
    }

    /// U'(x). Errors at the kinks of an incentivized utility, carrying the
    /// one-sided slopes.
    pub fn marginal(&self, x: f64) -> Result<f64> {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::Domain(format!("utility argument must be > 0, got {x}")));
        }
        Ok(match self {
            Self::Isoelastic { p } => x.powf(p - 1.0),
            Self::Logarithmic => 1.0 / x,
            Self::ShiftedPower { p, a } => (x + a).powf(p - 1.0),
            Self::TwoPiecePower(t) => {
                if x <= 1.0 {
                    x.powf(t.p_star - 1.0)
                } else if x >= t.interpolation.x_hi {
                    x.powf(t.p - 1.0)
                } else {
                    t.bridge.derivative(x)
                }
            }
            Self::Incentivized(i) => {
                if let Some(leg) = i
                    .contract
                    .legs()
                    .iter()
                    .find(|l| l.quantity > 0.0 && l.strike == x)
                {
                    let j = i.contract.piece_of(x);
                    let g = i.contract.payoff(x).powf(i.p - 1.0);
                    let (_, b_left) = i.contract.piece_coeffs(j);
                    return Err(Error::NonDifferentiable {
                        at: leg.strike,
                        left: b_left * g / i.norm,
                        right: (b_left + leg.quantity) * g / i.norm,
                    });
                }
                let j = i.contract.piece_of(x);
                let (a, b) = i.contract.piece_coeffs(j);
                b * (a + b * x).powf(i.p - 1.0) / i.norm
            }
        })
    }

    /// Convex dual `V(y) = sup_x (U(x) - x y)`. Requires a concave variant.
    pub fn dual_eval(&self, y: f64) -> Result<f64> {
        self.ensure_concave()?;
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::Domain(format!("dual argument must be > 0, got {y}")));
        }
        Ok(match self {
            Self::Isoelastic { p } => {
                let q = p / (p - 1.0);
                -y.powf(q) / q
            }
            Self::Logarithmic => -y.ln() - 1.0,
            Self::ShiftedPower { p, a } => {
                if *a > 0.0 && y >= a.powf(p - 1.0) {
                    a.powf(*p) / p
                } else {
                    let q = p / (p - 1.0);
                    -y.powf(q) / q + a * y
                }
            }
            Self::TwoPiecePower(_) => {
                let x = self.inverse_marginal(y)?;
                self.evaluate(x)? - x * y
            }
            Self::Incentivized(i) => {
                let x = self.inverse_marginal(y)?;
                if x > 0.0 {
                    self.evaluate(x)? - x * y
                } else {
                    // Supremum at the boundary: payoff tends to the cash floor.
                    i.contract.cash().powf(i.p) / i.p / i.norm
                }
            }
        })
    }

    /// Inverse marginal `I(y) = (U')^{-1}(y)`, clamped to 0 where the
    /// marginal utility is bounded at zero wealth and `y` exceeds it.
    pub fn inverse_marginal(&self, y: f64) -> Result<f64> {
        self.ensure_concave()?;
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::Domain(format!("marginal value must be > 0, got {y}")));
        }
        Ok(match self {
            Self::Isoelastic { p } => y.powf(1.0 / (p - 1.0)),
            Self::Logarithmic => 1.0 / y,
            Self::ShiftedPower { p, a } => (y.powf(1.0 / (p - 1.0)) - a).max(0.0),
            Self::TwoPiecePower(t) => {
                if y >= 1.0 {
                    y.powf(1.0 / (t.p_star - 1.0))
                } else if y <= t.bridge.d_hi() {
                    y.powf(1.0 / (t.p - 1.0))
                } else {
                    t.bridge.inverse_derivative(y)
                }
            }
            Self::Incentivized(i) => {
                let (a, b) = i.contract.piece_coeffs(0);
                let g = (y * i.norm / b).powf(1.0 / (i.p - 1.0));
                ((g - a) / b).max(0.0)
            }
        })
    }

    /// Finite limit of U at zero wealth, where one exists.
    pub fn value_at_zero(&self) -> Option<f64> {
        match self {
            Self::Isoelastic { p } => (*p > 0.0).then_some(0.0),
            Self::Logarithmic => None,
            Self::ShiftedPower { p, a } => {
                if *a > 0.0 {
                    Some(a.powf(*p) / p)
                } else {
                    (*p > 0.0).then_some(0.0)
                }
            }
            Self::TwoPiecePower(_) => None,
            Self::Incentivized(i) => {
                if i.contract.cash() > 0.0 {
                    Some(i.contract.cash().powf(i.p) / i.p / i.norm)
                } else {
                    (i.p > 0.0).then_some(0.0)
                }
            }
        }
    }

    /// Finite limit of U' at zero wealth, where one exists (`None` means
    /// the Inada condition holds at zero).
    pub fn marginal_at_zero(&self) -> Option<f64> {
        match self {
            Self::ShiftedPower { p, a } if *a > 0.0 => Some(a.powf(p - 1.0)),
            Self::Incentivized(i) if i.contract.cash() > 0.0 => {
                let (a, b) = i.contract.piece_coeffs(0);
                Some(b * a.powf(i.p - 1.0) / i.norm)
            }
            _ => None,
        }
    }

    /// Open range of U: limits at zero and infinite wealth.
    pub fn value_limits(&self) -> (f64, f64) {
        let lo = self.value_at_zero().unwrap_or(f64::NEG_INFINITY);
        let hi = match self {
            Self::Isoelastic { p } | Self::ShiftedPower { p, .. } => {
                if *p > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
            Self::Logarithmic => f64::INFINITY,
            Self::TwoPiecePower(_) => 0.0,
            Self::Incentivized(i) => {
                if i.p > 0.0 {
                    f64::INFINITY
                } else {
                    0.0
                }
            }
        };
        (lo, hi)
    }

    /// Wealth levels where the variant is not C2 (strikes, bridge knots).
    pub fn wealth_kinks(&self) -> Vec<f64> {
        match self {
            Self::TwoPiecePower(t) => vec![1.0, t.interpolation.x_hi],
            Self::Incentivized(i) => i.contract.active_strikes(),
            _ => Vec::new(),
        }
    }

    /// Marginal-utility levels where the inverse marginal is not smooth.
    pub fn slope_cuts(&self) -> Vec<f64> {
        match self {
            Self::TwoPiecePower(t) => vec![t.bridge.d_hi(), 1.0],
            _ => self.marginal_at_zero().into_iter().collect(),
        }
    }
}

/// Effective utility of a manager with exponent `p` under a compensation
/// contract: awarding options is equivalent to replacing the utility.
pub fn effective_utility(p: f64, contract: Contract) -> Result<UtilitySpec> {
    UtilitySpec::incentivized(p, contract)
}

/// One probe of an asymptotic-similarity check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioProbe {
    pub x: f64,
    pub ratio: f64,
}

/// Report of the high-wealth marginal equivalence and the low-wealth
/// boundedness condition against the reference exponent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AssumptionReport {
    /// `U'(x) / x^(p_ref - 1)` over large wealth levels.
    pub marginal_ratios: Vec<RatioProbe>,
    pub marginal_ok: bool,
    /// `U(x) / x^(p_ref - 1)` over small wealth levels (liminf proxy).
    pub lowwealth_ratios: Vec<RatioProbe>,
    pub lowwealth_ok: bool,
    /// For the two-piece utility the low-wealth condition has an exact
    /// answer: it holds iff `p_star >= p - 1`.
    pub lowwealth_analytic: Option<bool>,
}

/// Empirical check of the similarity assumptions against `x^p_ref / p_ref`.
///
/// Report-only: flags summarize the probes, and for the two-piece variant
/// the analytic verdict is included.
pub fn validate_assumptions(u: &UtilitySpec, p_ref: f64) -> Result<AssumptionReport> {
    if !(p_ref.is_finite() && p_ref < 1.0) {
        return Err(Error::Parameter(format!("reference exponent must be < 1, got {p_ref}")));
    }
    let marginal_ratios: Vec<RatioProbe> = [1e2, 1e4, 1e6, 1e8]
        .iter()
        .map(|&x| {
            let m = match u.marginal(x) {
                Ok(m) => m,
                Err(Error::NonDifferentiable { right, .. }) => right,
                Err(e) => return Err(e),
            };
            Ok(RatioProbe { x, ratio: m / x.powf(p_ref - 1.0) })
        })
        .collect::<Result<_>>()?;
    let first = (marginal_ratios[0].ratio - 1.0).abs();
    let last = (marginal_ratios.last().unwrap().ratio - 1.0).abs();
    let marginal_ok = last < 1e-2 && last <= first + 1e-9;

    let lowwealth_ratios: Vec<RatioProbe> = (2..=8)
        .map(|k| {
            let x = 10f64.powi(-k);
            Ok(RatioProbe { x, ratio: u.evaluate(x)? / x.powf(p_ref - 1.0) })
        })
        .collect::<Result<_>>()?;
    let r_first = lowwealth_ratios[0].ratio;
    let r_last = lowwealth_ratios.last().unwrap().ratio;
    // Bounded-below proxy: fail when the ratio dives by orders of magnitude.
    let lowwealth_ok = r_last >= -1e4 * (1.0 + r_first.abs());

    let lowwealth_analytic = match u {
        UtilitySpec::TwoPiecePower(t) => Some(t.p_star >= t.p - 1.0),
        _ => None,
    };

    Ok(AssumptionReport {
        marginal_ratios,
        marginal_ok,
        lowwealth_ratios,
        lowwealth_ok,
        lowwealth_analytic,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    pub(super) fn figure_contract() -> Contract {
        Contract::new(1.0, 2.0, vec![OptionLeg { quantity: 3.0, strike: 4.0 }]).unwrap()
    }

    fn all_variants() -> Vec<UtilitySpec> {
        vec![
            UtilitySpec::isoelastic(-1.0).unwrap(),
            UtilitySpec::isoelastic(0.5).unwrap(),
            UtilitySpec::logarithmic(),
            UtilitySpec::shifted_power(-1.0, 1.0).unwrap(),
            UtilitySpec::two_piece_power(-1.0, -3.0, InterpolationSpec::concave_power(6.0))
                .unwrap(),
            effective_utility(0.5, figure_contract()).unwrap(),
        ]
    }

    #[test]
    fn point_values() {
        let iso = UtilitySpec::isoelastic(-1.0).unwrap();
        assert_relative_eq!(iso.evaluate(2.0).unwrap(), -0.5, max_relative = 1e-14);
        assert_eq!(UtilitySpec::logarithmic().evaluate(1.0).unwrap(), 0.0);
        // At the kink the option leg pays nothing: U(1 + 2*4) / 5^(1/2).
        let eff = effective_utility(0.5, figure_contract()).unwrap();
        let expected = 2.0 * 3.0 / 5f64.sqrt();
        assert_relative_eq!(eff.evaluate(4.0).unwrap(), expected, max_relative = 1e-12);
        assert_relative_eq!(eff.evaluate(4.0).unwrap(), 2.6832815729997477, max_relative = 1e-12);
    }

    #[test]
    fn domain_errors() {
        for u in all_variants() {
            assert!(matches!(u.evaluate(0.0), Err(Error::Domain(_))));
            assert!(matches!(u.evaluate(-1.0), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn strictly_increasing_on_grids() {
        for u in all_variants() {
            let mut prev = f64::NEG_INFINITY;
            for i in 0..400 {
                let x = 10f64.powf(-4.0 + 8.0 * i as f64 / 399.0);
                let v = u.evaluate(x).unwrap();
                assert!(v > prev, "{u:?} not increasing at x={x}");
                prev = v;
            }
        }
    }

    #[test]
    fn marginal_point_values_and_positivity() {
        let iso = UtilitySpec::isoelastic(-1.0).unwrap();
        assert_relative_eq!(iso.marginal(2.0).unwrap(), 0.25, max_relative = 1e-14);
        for u in all_variants() {
            for &x in &[0.01, 0.5, 1.0, 3.0, 10.0, 1e4] {
                match u.marginal(x) {
                    Ok(m) => assert!(m > 0.0, "{u:?} at {x}"),
                    Err(Error::NonDifferentiable { left, right, .. }) => {
                        assert!(left > 0.0 && right > left);
                    }
                    Err(e) => panic!("unexpected error {e}"),
                }
            }
        }
    }

    #[test]
    fn marginal_matches_central_differences() {
        // O(h^2) away from kinks; h = 1e-5 puts the error near 1e-10 rel.
        for u in all_variants() {
            for &x in &[0.37, 0.9, 1.7, 2.9, 5.3, 47.0] {
                let h = 1e-5 * x;
                let fd =
                    (u.evaluate(x + h).unwrap() - u.evaluate(x - h).unwrap()) / (2.0 * h);
                let m = u.marginal(x).unwrap();
                assert_relative_eq!(m, fd, max_relative = 1e-7);
            }
        }
    }

    #[test]
    fn shifted_power_marginal_ratio_tends_to_one() {
        let u = UtilitySpec::shifted_power(-1.0, 1.0).unwrap();
        let mut prev = f64::INFINITY;
        for &x in &[1e2, 1e4, 1e6] {
            let gap = (u.marginal(x).unwrap() / x.powf(-2.0) - 1.0).abs();
            assert!(gap < prev);
            prev = gap;
        }
        assert!(prev < 1e-5);
    }

    #[test]
    fn marginal_at_kink_reports_slopes() {
        let eff = effective_utility(0.5, figure_contract()).unwrap();
        match eff.marginal(4.0) {
            Err(Error::NonDifferentiable { at, left, right }) => {
                assert_eq!(at, 4.0);
                // g = 9^(-1/2), slopes 2g and 5g over sqrt(5).
                assert_relative_eq!(left, 2.0 / 3.0 / 5f64.sqrt(), max_relative = 1e-12);
                assert_relative_eq!(right, 5.0 / 3.0 / 5f64.sqrt(), max_relative = 1e-12);
            }
            other => panic!("expected kink error, got {other:?}"),
        }
    }

    #[test]
    fn dual_point_values() {
        // p = 1/2 gives q = -1 and V(y) = 1/y.
        let u = UtilitySpec::isoelastic(0.5).unwrap();
        assert_relative_eq!(u.dual_eval(2.0).unwrap(), 0.5, max_relative = 1e-14);
        assert_relative_eq!(u.dual_eval(0.25).unwrap(), 4.0, max_relative = 1e-14);
        assert_eq!(UtilitySpec::logarithmic().dual_eval(1.0).unwrap(), -1.0);
    }

    #[test]
    fn fenchel_inequality_with_equality_at_the_inverse_marginal() {
        for u in all_variants() {
            if !u.is_concave() {
                assert!(matches!(u.dual_eval(1.0), Err(Error::NotConcave(_))));
                continue;
            }
            for &y in &[0.05, 0.3, 1.0, 2.5] {
                let v = u.dual_eval(y).unwrap();
                for &x in &[0.1, 0.8, 1.0, 4.0, 20.0] {
                    assert!(v >= u.evaluate(x).unwrap() - x * y - 1e-12);
                }
                let x_star = u.inverse_marginal(y).unwrap();
                if x_star > 0.0 {
                    let gap = v - (u.evaluate(x_star).unwrap() - x_star * y);
                    assert!(gap.abs() < 1e-10, "{u:?} y={y} gap={gap}");
                }
            }
        }
    }

    #[test]
    fn inverse_marginal_point_values() {
        let iso = UtilitySpec::isoelastic(-1.0).unwrap();
        assert_relative_eq!(iso.inverse_marginal(0.25).unwrap(), 2.0, max_relative = 1e-14);
        assert_eq!(UtilitySpec::logarithmic().inverse_marginal(1.0).unwrap(), 1.0);
        let sp = UtilitySpec::shifted_power(-0.5, 2.0).unwrap();
        for &y in &[0.01, 0.1] {
            assert_relative_eq!(
                sp.inverse_marginal(y).unwrap(),
                y.powf(1.0 / -1.5) - 2.0,
                max_relative = 1e-13
            );
        }
        // Beyond the zero-wealth slope the inverse clamps to 0.
        assert_eq!(sp.inverse_marginal(10.0).unwrap(), 0.0);
    }

    #[test]
    fn inverse_marginal_inverts_marginal() {
        // The two-piece bridge derivative is numerically flat against its
        // terminal slope past x ~ 2.5, so probe the resolvable range.
        for u in all_variants() {
            if !u.is_concave() {
                continue;
            }
            for &x in &[0.2, 0.9, 1.15, 8.0, 20.0] {
                let y = u.marginal(x).unwrap();
                assert_relative_eq!(u.inverse_marginal(y).unwrap(), x, max_relative = 1e-8);
            }
        }
    }

    #[test]
    fn identity_contract_reduces_to_isoelastic() {
        let eff = effective_utility(-1.0, Contract::stock_and_cash(0.0, 1.0).unwrap()).unwrap();
        let iso = UtilitySpec::isoelastic(-1.0).unwrap();
        for &x in &[0.1, 1.0, 5.0, 50.0] {
            assert_relative_eq!(
                eff.evaluate(x).unwrap(),
                iso.evaluate(x).unwrap(),
                max_relative = 1e-14
            );
            assert_relative_eq!(
                eff.marginal(x).unwrap(),
                iso.marginal(x).unwrap(),
                max_relative = 1e-14
            );
        }
        assert!(eff.is_concave());
    }

    #[test]
    fn figure_contract_is_nonconcave_near_the_strike() {
        let eff = effective_utility(0.5, figure_contract()).unwrap();
        assert!(!eff.is_concave());
        // Chord over the kink lies above the function on one side.
        let (xl, xr) = (3.0, 5.0);
        let chord = |x: f64| {
            let (vl, vr) = (eff.evaluate(xl).unwrap(), eff.evaluate(xr).unwrap());
            vl + (vr - vl) * (x - xl) / (xr - xl)
        };
        assert!(chord(4.0) > eff.evaluate(4.0).unwrap());
    }

    #[test]
    fn cash_floor_kills_the_lowwealth_ratio() {
        // With c1 > 0, u(x)/x^(p-1) tends to 0 at zero wealth.
        let eff = effective_utility(0.5, figure_contract()).unwrap();
        let mut prev = f64::INFINITY;
        for &x in &[1e-3, 1e-6, 1e-9] {
            let ratio = eff.evaluate(x).unwrap() / x.powf(-0.5);
            assert!(ratio.abs() < prev);
            prev = ratio.abs();
        }
        assert!(prev < 1e-3);
    }

    #[test]
    fn p_zero_contract_composition_rejected() {
        assert!(effective_utility(0.0, figure_contract()).is_err());
    }

    #[test]
    fn two_piece_concavity_second_differences() {
        let u = UtilitySpec::two_piece_power(-1.0, -3.0, InterpolationSpec::concave_power(6.0))
            .unwrap();
        let n = 4000;
        let (lo, hi) = (1.0, 6.0);
        let h = (hi - lo) / n as f64;
        for i in 1..n {
            let x = lo + i as f64 * h;
            let dd = u.evaluate(x + h).unwrap() - 2.0 * u.evaluate(x).unwrap()
                + u.evaluate(x - h).unwrap();
            assert!(dd <= 1e-12, "second difference {dd} at x={x}");
        }
    }

    #[test]
    fn validate_assumptions_flags() {
        let shifted = UtilitySpec::shifted_power(-1.0, 1.0).unwrap();
        let rep = validate_assumptions(&shifted, -1.0).unwrap();
        assert!(rep.marginal_ok && rep.lowwealth_ok);
        assert_eq!(rep.lowwealth_analytic, None);

        let two = UtilitySpec::two_piece_power(-1.0, -3.0, InterpolationSpec::concave_power(6.0))
            .unwrap();
        let rep = validate_assumptions(&two, -1.0).unwrap();
        assert!(rep.marginal_ok);
        assert!(!rep.lowwealth_ok, "low-wealth flag must fail: {rep:?}");
        assert_eq!(rep.lowwealth_analytic, Some(false));

        let iso = UtilitySpec::isoelastic(-1.5).unwrap();
        let rep = validate_assumptions(&iso, -1.5).unwrap();
        assert!(rep.marginal_ok && rep.lowwealth_ok);
    }

    #[test]
    fn inverse_marginal_normalization_limit() {
        // I(y) y^(1/(1-p)) tends to 1 for every similarity-compliant
        // variant, including the contract-composed one thanks to the
        // (c2 + sum q)^p normalization.
        for (u, p) in [
            (UtilitySpec::isoelastic(-1.0).unwrap(), -1.0),
            (UtilitySpec::shifted_power(-1.0, 1.0).unwrap(), -1.0),
            (UtilitySpec::logarithmic(), 0.0),
        ] {
            let y = 1e-9;
            let ratio = u.inverse_marginal(y).unwrap() * y.powf(1.0 / (1.0 - p));
            assert!((ratio - 1.0).abs() < 1e-2, "{u:?}: {ratio}");
        }
    }

    #[test]
    fn contract_validation() {
        assert!(Contract::new(-1.0, 1.0, vec![]).is_err());
        assert!(Contract::new(0.0, 0.0, vec![]).is_err());
        assert!(Contract::new(
            0.0,
            1.0,
            vec![
                OptionLeg { quantity: 1.0, strike: 2.0 },
                OptionLeg { quantity: 1.0, strike: 2.0 }
            ]
        )
        .is_err());
        assert!(Contract::new(0.0, 1.0, vec![OptionLeg { quantity: -1.0, strike: 2.0 }]).is_err());
    }
}
