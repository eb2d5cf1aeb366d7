//! Complete-market terminal-wealth optimization through the dual
//! first-order condition: solve the budget equation for the Lagrange
//! multiplier, read the optimal payoff off the inverse marginal of the
//! deflator, and report expected utility, certainty equivalent, and the
//! duality gap as a quality diagnostic.

use crate::error::{Error, Result};
use crate::market::{cp_wealth_law, deflator_law, merton_weight, MarketParams, TerminalLaw};
use crate::numerics::{
    expect_normal, expect_normal_segments, find_root_monotone, gauss_hermite, QuadratureRule,
};
use crate::utility::{ConcaveEnvelope, UtilitySpec};
use serde::Serialize;
use std::cell::RefCell;

/// Default quadrature resolution; the doubling check reports the error.
pub const DEFAULT_NODES: usize = 201;

const BRACKET_EXPANSIONS: usize = 40;

/// What the solver needs from an objective: a concave, strictly increasing
/// terminal utility with a usable inverse marginal. Implemented by the
/// concave members of [`UtilitySpec`] and by [`ConcaveEnvelope`].
pub trait TerminalObjective {
    fn value(&self, x: f64) -> Result<f64>;
    fn value_at_zero(&self) -> Option<f64>;
    /// Inverse marginal with set-valued points resolved deterministically
    /// (bridge slopes map to the right endpoint) and clamped at zero.
    fn optimal_wealth(&self, y: f64) -> Result<f64>;
    fn dual_value(&self, y: f64) -> Result<f64>;
    /// Marginal-utility levels where the inverse marginal is non-smooth.
    fn slope_cuts(&self) -> Vec<f64>;
    fn p_high(&self) -> f64;
    fn value_limits(&self) -> (f64, f64);
    fn ensure_concave(&self) -> Result<()>;
}

impl TerminalObjective for UtilitySpec {
    fn value(&self, x: f64) -> Result<f64> {
        self.evaluate(x)
    }

    fn value_at_zero(&self) -> Option<f64> {
        self.value_at_zero()
    }

    fn optimal_wealth(&self, y: f64) -> Result<f64> {
        self.inverse_marginal(y)
    }

    fn dual_value(&self, y: f64) -> Result<f64> {
        self.dual_eval(y)
    }

    fn slope_cuts(&self) -> Vec<f64> {
        self.slope_cuts()
    }

    fn p_high(&self) -> f64 {
        self.p_high()
    }

    fn value_limits(&self) -> (f64, f64) {
        self.value_limits()
    }

    fn ensure_concave(&self) -> Result<()> {
        self.ensure_concave()
    }
}

impl TerminalObjective for ConcaveEnvelope {
    fn value(&self, x: f64) -> Result<f64> {
        self.evaluate(x)
    }

    fn value_at_zero(&self) -> Option<f64> {
        self.value_at_zero()
    }

    fn optimal_wealth(&self, y: f64) -> Result<f64> {
        Ok(self.inverse_marginal(y)?.resolved())
    }

    fn dual_value(&self, y: f64) -> Result<f64> {
        self.dual_eval(y)
    }

    fn slope_cuts(&self) -> Vec<f64> {
        self.slope_cuts()
    }

    fn p_high(&self) -> f64 {
        self.p_high()
    }

    fn value_limits(&self) -> (f64, f64) {
        self.value_limits()
    }

    fn ensure_concave(&self) -> Result<()> {
        Ok(())
    }
}

/// Solution of one terminal-wealth problem.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolveResult {
    /// Lagrange multiplier of the budget constraint.
    pub multiplier: f64,
    pub expected_utility: f64,
    pub certainty_equivalent: f64,
    /// Dual value minus primal value at the solved multiplier; weak duality
    /// keeps this nonnegative up to quadrature error.
    pub duality_gap: f64,
    /// Node-doubling discrepancy of the expected-utility integral.
    pub quad_error: f64,
}

/// Isoelastic benchmark solved in closed form, with its Merton weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IsoelasticSolution {
    pub weight: f64,
    pub result: SolveResult,
}

/// One horizon of a robustness sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CeRatioPoint {
    pub horizon: f64,
    pub ce_optimal: f64,
    pub ce_isoelastic: f64,
    pub ratio: f64,
    pub quad_error: f64,
}

/// Closed-form solution of the isoelastic problem (`p = 0` is logarithmic):
/// Merton weight, certainty equivalent `exp((r + mu^2/(2(1-p) sigma^2)) T)`,
/// and multiplier `E[X_T^p]` (identically 1 for the logarithmic case).
pub fn isoelastic_closed_form(mkt: &MarketParams, p: f64, t: f64) -> Result<IsoelasticSolution> {
    if !(p.is_finite() && p < 1.0) {
        return Err(Error::Parameter(format!("exponent must be < 1, got {p}")));
    }
    let gamma = 1.0 - p;
    let weight = merton_weight(mkt, gamma)?;
    let ce = ((mkt.r + mkt.mu * mkt.mu / (2.0 * gamma * mkt.sigma * mkt.sigma)) * t).exp();
    let (eu, multiplier) = if p == 0.0 {
        (ce.ln(), 1.0)
    } else {
        let law = cp_wealth_law(mkt, weight, t)?;
        (ce.powf(p) / p, law.power_moment(p))
    };
    Ok(IsoelasticSolution {
        weight,
        result: SolveResult {
            multiplier,
            expected_utility: eu,
            certainty_equivalent: ce,
            duality_gap: 0.0,
            quad_error: 0.0,
        },
    })
}

/// Traps integrand errors raised inside quadrature closures so they can be
/// reported instead of the NaN they produce.
struct ErrTrap(RefCell<Option<Error>>);

impl ErrTrap {
    fn new() -> Self {
        Self(RefCell::new(None))
    }

    fn guard<'a, F: Fn(f64) -> Result<f64> + 'a>(&'a self, f: F) -> impl Fn(f64) -> f64 + 'a {
        move |z| match f(z) {
            Ok(v) => v,
            Err(e) => {
                self.0.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        }
    }

    fn check(&self, outcome: Result<f64>) -> Result<f64> {
        if let Some(e) = self.0.borrow_mut().take() {
            return Err(e);
        }
        outcome
    }
}

fn expect_law<F: Fn(f64) -> Result<f64>>(
    f: F,
    cuts: &[f64],
    rule: &QuadratureRule,
) -> Result<f64> {
    let trap = ErrTrap::new();
    let guarded = trap.guard(f);
    let outcome = if cuts.is_empty() {
        expect_normal(&guarded, rule)
    } else {
        expect_normal_segments(&guarded, cuts, rule.order())
    };
    trap.check(outcome).map_err(promote_divergence)
}

fn promote_divergence(e: Error) -> Error {
    match e {
        Error::Evaluation { node, value } if value.is_infinite() => Error::Wellposedness(format!(
            "integrand diverges at node {node}; the problem violates the finiteness assumption"
        )),
        other => other,
    }
}

/// `E[U(X_T)]` for terminal wealth following `law`.
///
/// Smooth utilities go through the supplied Gauss-Hermite rule; variants
/// with wealth kinks are integrated piecewise at the same resolution. A
/// deterministic law evaluates the utility at its point mass.
pub fn expected_utility_of_law(
    u: &UtilitySpec,
    law: &TerminalLaw,
    rule: &QuadratureRule,
) -> Result<f64> {
    if law.log_std == 0.0 {
        return u.evaluate(law.log_mean.exp());
    }
    let cuts: Vec<f64> = u
        .wealth_kinks()
        .iter()
        .filter_map(|&k| law.z_of_value(k))
        .collect();
    expect_law(
        |z| {
            let x = law.value_at(z);
            if !x.is_finite() {
                return Err(Error::Evaluation { node: z, value: x });
            }
            u.evaluate(x)
        },
        &cuts,
        rule,
    )
}

/// Inverts a strictly increasing value function at `target`, bracketing in
/// log-wealth so the tolerance is relative.
fn invert_value(
    value: &dyn Fn(f64) -> Result<f64>,
    limits: (f64, f64),
    target: f64,
) -> Result<f64> {
    let (lo_v, hi_v) = limits;
    if !(target > lo_v && target < hi_v) {
        return Err(Error::Range { value: target, lo: lo_v, hi: hi_v });
    }
    let mut t_lo = 0.0f64;
    let mut t_hi = 0.0f64;
    let f = |t: f64| value(t.exp()).map(|v| v - target);
    let mut f_lo = f(t_lo)?;
    let mut expansions = 0;
    while f_lo > 0.0 {
        t_lo -= std::f64::consts::LN_2 * 4.0;
        f_lo = f(t_lo)?;
        expansions += 1;
        if expansions > 300 {
            return Err(Error::Convergence("certainty-equivalent lower bracket".into()));
        }
    }
    if f_lo == 0.0 {
        return Ok(t_lo.exp());
    }
    let mut f_hi = f(t_hi)?;
    expansions = 0;
    while f_hi < 0.0 {
        t_hi += std::f64::consts::LN_2 * 4.0;
        f_hi = f(t_hi)?;
        expansions += 1;
        if expansions > 300 {
            return Err(Error::Convergence("certainty-equivalent upper bracket".into()));
        }
    }
    if f_hi == 0.0 {
        return Ok(t_hi.exp());
    }
    let trap = ErrTrap::new();
    let guarded = trap.guard(&f);
    let t_star = trap.check(find_root_monotone(&guarded, t_lo, t_hi, 1e-13))?;
    Ok(t_star.exp())
}

/// Sure wealth with the same utility as the expected utility: `U^{-1}(EU)`,
/// by monotone bracketed inversion at relative tolerance ~1e-12.
pub fn certainty_equivalent(u: &UtilitySpec, expected_utility: f64) -> Result<f64> {
    invert_value(&|x: f64| u.evaluate(x), u.value_limits(), expected_utility)
}

fn deflator_cuts(obj: &dyn TerminalObjective, y: f64, y_law: &TerminalLaw) -> Vec<f64> {
    obj.slope_cuts()
        .iter()
        .filter_map(|&c| y_law.z_of_value(c / y))
        .collect()
}

/// Solves `max E[U(X_T)]` over payoffs financed by `x0`: finds the
/// multiplier with `E[Y_T I(y Y_T)] = x0`, evaluates the optimum
/// `X_T = I(y Y_T)`, and reports the duality gap
/// `E[V(y Y_T)] + y x0 - E[U(X_T)]`.
pub fn solve_terminal(
    obj: &dyn TerminalObjective,
    mkt: &MarketParams,
    t: f64,
    x0: f64,
) -> Result<SolveResult> {
    solve_terminal_with_nodes(obj, mkt, t, x0, DEFAULT_NODES)
}

pub fn solve_terminal_with_nodes(
    obj: &dyn TerminalObjective,
    mkt: &MarketParams,
    t: f64,
    x0: f64,
    nodes: usize,
) -> Result<SolveResult> {
    obj.ensure_concave()?;
    if !(x0.is_finite() && x0 > 0.0) {
        return Err(Error::Parameter(format!("initial capital must be > 0, got {x0}")));
    }
    let y_law = deflator_law(mkt, t)?;
    let rule = gauss_hermite(nodes)?;
    let rule_fine = gauss_hermite(2 * nodes)?;

    let budget_at = |y: f64, r: &QuadratureRule| -> Result<f64> {
        let cuts = deflator_cuts(obj, y, &y_law);
        expect_law(
            |z| {
                let deflator = y_law.value_at(z);
                let scaled = y * deflator;
                if !scaled.is_finite() {
                    return Err(Error::Evaluation { node: z, value: scaled });
                }
                let x = obj.optimal_wealth(scaled)?;
                Ok(deflator * x)
            },
            &cuts,
            r,
        )
        .map(|v| v - x0)
    };

    // Start the multiplier bracket at the isoelastic closed form for the
    // objective's asymptotic exponent and expand geometrically; the true
    // multiplier approaches the isoelastic one at long horizons.
    let p_ref = obj.p_high();
    let y_iso = if p_ref == 0.0 {
        1.0 / x0
    } else {
        let bench = cp_wealth_law(mkt, merton_weight(mkt, 1.0 - p_ref)?, t)?;
        x0.powf(p_ref - 1.0) * bench.power_moment(p_ref)
    };
    let f0 = budget_at(y_iso, &rule)?;
    let multiplier = if f0 == 0.0 {
        y_iso
    } else {
        // The budget is decreasing in y: expand the side that traps the root.
        let mut lo = y_iso;
        let mut hi = y_iso;
        let mut f_lo = f0;
        let mut f_hi = f0;
        let mut expansions = 0;
        while f_lo < 0.0 {
            lo /= 10.0;
            f_lo = budget_at(lo, &rule)?;
            expansions += 1;
            if expansions > BRACKET_EXPANSIONS {
                return Err(Error::Bracketing { lo, hi, glo: f_lo, ghi: f_hi });
            }
        }
        expansions = 0;
        while f_hi > 0.0 {
            hi *= 10.0;
            f_hi = budget_at(hi, &rule)?;
            expansions += 1;
            if expansions > BRACKET_EXPANSIONS {
                return Err(Error::Bracketing { lo, hi, glo: f_lo, ghi: f_hi });
            }
        }
        let trap = ErrTrap::new();
        let guarded = trap.guard(|y| budget_at(y, &rule));
        trap.check(find_root_monotone(&guarded, lo, hi, 1e-12 * y_iso))?
    };

    let utility_at = |r: &QuadratureRule| -> Result<f64> {
        let cuts = deflator_cuts(obj, multiplier, &y_law);
        expect_law(
            |z| {
                let scaled = multiplier * y_law.value_at(z);
                if !scaled.is_finite() {
                    return Err(Error::Evaluation { node: z, value: scaled });
                }
                let x = obj.optimal_wealth(scaled)?;
                if !x.is_finite() {
                    return Err(Error::Evaluation { node: z, value: x });
                }
                if x > 0.0 {
                    obj.value(x)
                } else {
                    obj.value_at_zero().ok_or_else(|| {
                        Error::Internal("zero wealth reached without a finite utility floor".into())
                    })
                }
            },
            &cuts,
            r,
        )
    };
    let eu_coarse = utility_at(&rule)?;
    let expected_utility = utility_at(&rule_fine)?;
    // Node-doubling discrepancy, floored at the machine-relative scale of
    // the integral; the estimate cannot honestly be smaller.
    let quad_error =
        (expected_utility - eu_coarse).abs().max(1e-14 * expected_utility.abs());

    let cuts = deflator_cuts(obj, multiplier, &y_law);
    let dual = expect_law(
        |z| {
            let scaled = multiplier * y_law.value_at(z);
            if !scaled.is_finite() {
                return Err(Error::Evaluation { node: z, value: scaled });
            }
            obj.dual_value(scaled)
        },
        &cuts,
        &rule_fine,
    )?;
    let duality_gap = dual + multiplier * x0 - expected_utility;

    let certainty_equivalent =
        invert_value(&|x: f64| obj.value(x), obj.value_limits(), expected_utility)?;

    Ok(SolveResult {
        multiplier,
        expected_utility,
        certainty_equivalent,
        duality_gap,
        quad_error,
    })
}

/// Certainty equivalents of the isoelastic strategy and of the optimizer
/// under the same utility, and their ratio (at most 1 up to quadrature).
pub fn ce_ratio(
    u: &UtilitySpec,
    mkt: &MarketParams,
    p_ref: f64,
    t: f64,
) -> Result<CeRatioPoint> {
    ce_ratio_with_nodes(u, mkt, p_ref, t, DEFAULT_NODES)
}

pub fn ce_ratio_with_nodes(
    u: &UtilitySpec,
    mkt: &MarketParams,
    p_ref: f64,
    t: f64,
    nodes: usize,
) -> Result<CeRatioPoint> {
    let opt = solve_terminal_with_nodes(u, mkt, t, 1.0, nodes)?;
    let weight = merton_weight(mkt, 1.0 - p_ref)?;
    let bench_law = cp_wealth_law(mkt, weight, t)?;
    let rule = gauss_hermite(2 * nodes)?;
    let eu_iso = expected_utility_of_law(u, &bench_law, &rule)?;
    let ce_isoelastic = certainty_equivalent(u, eu_iso)?;
    Ok(CeRatioPoint {
        horizon: t,
        ce_optimal: opt.certainty_equivalent,
        ce_isoelastic,
        ratio: ce_isoelastic / opt.certainty_equivalent,
        quad_error: opt.quad_error,
    })
}

/// Weak-duality scan: `E[V(y Y_T)] + y - E[U(X*_T)]` over the supplied
/// multipliers, with `X*` solved at unit capital. Convex in `y` and
/// minimized near the solved multiplier.
pub fn duality_gap_scan(
    u: &UtilitySpec,
    mkt: &MarketParams,
    t: f64,
    ys: &[f64],
) -> Result<Vec<f64>> {
    let solved = solve_terminal(u, mkt, t, 1.0)?;
    let y_law = deflator_law(mkt, t)?;
    let rule = gauss_hermite(2 * DEFAULT_NODES)?;
    ys.iter()
        .map(|&y| {
            if !(y.is_finite() && y > 0.0) {
                return Err(Error::Parameter(format!("multiplier must be > 0, got {y}")));
            }
            let cuts = deflator_cuts(u, y, &y_law);
            let dual = expect_law(|z| u.dual_eval(y * y_law.value_at(z)), &cuts, &rule)?;
            Ok(dual + y - solved.expected_utility)
        })
        .collect()
}

/// Randomized check of the power-mean duality inequality
/// `(1/p) E[X^p] <= (1/p) E[Y^q]^(1-p)` for positive variables with
/// `E[XY] <= 1`, plus the equality case `X^(p-1) = alpha Y`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HolderReport {
    pub trials: u64,
    pub violations: u64,
    /// Largest positive relative excess of the left side.
    pub max_violation: f64,
    /// Largest relative gap in the constructed equality cases.
    pub max_equality_gap: f64,
}

impl HolderReport {
    pub fn passed(&self, tol: f64) -> bool {
        self.violations == 0 && self.max_violation <= tol && self.max_equality_gap <= 1e-10
    }
}

pub fn holder_duality_check(n_trials: u64, seed: u64) -> Result<HolderReport> {
    if n_trials < 1 {
        return Err(Error::Parameter("need at least one trial".into()));
    }
    let mut max_violation = 0.0f64;
    let mut max_equality_gap = 0.0f64;
    let mut violations = 0u64;
    let mut ctr = 0u64;
    let mut next = move || {
        ctr += 1;
        ctr
    };
    let mut draw = |scale: f64| (scale * crate::numerics::normal_draw(seed, next())).exp();
    for trial in 0..n_trials {
        let k = 2 + (trial % 7) as usize;
        let raw: Vec<f64> = (0..k).map(|_| draw(0.4)).collect();
        let total: f64 = raw.iter().sum();
        let probs: Vec<f64> = raw.iter().map(|w| w / total).collect();
        let ys: Vec<f64> = (0..k).map(|_| draw(1.0)).collect();
        let mut p = -3.0 + 3.9 * crate::numerics::mc::uniform_draw(seed ^ 0x5bd1, trial);
        if p.abs() < 0.05 {
            p = -0.5;
        }
        let q = p / (p - 1.0);
        let e = |f: &dyn Fn(usize) -> f64| -> f64 {
            probs.iter().enumerate().map(|(i, &w)| w * f(i)).sum()
        };

        // Random feasible pair: scale X so that E[XY] <= 1.
        let xs: Vec<f64> = (0..k).map(|_| draw(1.0)).collect();
        let exy = e(&|i| xs[i] * ys[i]);
        let slack = if trial % 2 == 0 { 1.0 } else { 0.7 };
        let xs_scaled: Vec<f64> = xs.iter().map(|x| x * slack / exy).collect();
        let lhs = e(&|i| xs_scaled[i].powf(p)) / p;
        let rhs = e(&|i| ys[i].powf(q)).powf(1.0 - p) / p;
        let violation = (lhs - rhs) / rhs.abs();
        if violation > 1e-12 {
            violations += 1;
        }
        max_violation = max_violation.max(violation);

        // Equality case: X = (alpha Y)^(1/(p-1)) with alpha = E[Y^q]^(1-p)
        // makes E[XY] = 1 and the bound tight.
        let alpha = e(&|i| ys[i].powf(q)).powf(1.0 - p);
        let xe: Vec<f64> = ys.iter().map(|y| (alpha * y).powf(1.0 / (p - 1.0))).collect();
        let lhs_eq = e(&|i| xe[i].powf(p)) / p;
        let gap = ((lhs_eq - rhs) / rhs.abs()).abs();
        max_equality_gap = max_equality_gap.max(gap);
    }
    Ok(HolderReport { trials: n_trials, violations, max_violation, max_equality_gap })
}
