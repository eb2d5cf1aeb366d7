//! Minimal concave function dominating a non-concave effective utility.
//!
//! Construction runs an upper concave hull over a log-spaced sample grid to
//! bracket the affine bridge intervals, then refines each bridge by solving
//! the common-tangency condition in the slope variable, where the defect is
//! strictly monotone.

use crate::error::{Error, Result};
use crate::utility::{Incentivized, UtilitySpec};
use serde::Serialize;

/// Affine segment of the envelope, tangent to the base at both endpoints
/// (at the left endpoint only if it is interior; a bridge anchored at
/// `x_lo = 0` starts from the base's cash floor instead).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bridge {
    pub x_lo: f64,
    pub x_hi: f64,
    pub slope: f64,
    pub intercept: f64,
}

impl Bridge {
    pub fn value(&self, x: f64) -> f64 {
        self.slope * x + self.intercept
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.x_lo && x <= self.x_hi
    }
}

/// Resolution of an inverse-marginal query against the envelope.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InverseMarginal {
    Point(f64),
    /// The queried slope equals a bridge slope: every wealth level in the
    /// bridge is optimal.
    Interval(f64, f64),
}

impl InverseMarginal {
    /// Deterministic tie-break used by the solver: the right endpoint.
    pub fn resolved(&self) -> f64 {
        match *self {
            InverseMarginal::Point(x) => x,
            InverseMarginal::Interval(_, hi) => hi,
        }
    }
}

/// Concave envelope of a utility: the base function outside finitely many
/// bridge intervals, affine across them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConcaveEnvelope {
    base: UtilitySpec,
    bridges: Vec<Bridge>,
}

const GRID_SIZE: usize = 4096;
const TANGENCY_ITERS: usize = 80;

/// Builds the concave envelope. Already-concave inputs get zero bridges.
pub fn concave_envelope(u: &UtilitySpec) -> Result<ConcaveEnvelope> {
    if u.is_concave() {
        return Ok(ConcaveEnvelope { base: u.clone(), bridges: Vec::new() });
    }
    let UtilitySpec::Incentivized(inc) = u else {
        return Err(Error::Internal("only contract utilities can be non-concave".into()));
    };
    let strikes = inc.contract.active_strikes();
    let k_min = strikes.first().copied().expect("non-concave implies an active strike");
    let k_max = strikes.last().copied().expect("non-concave implies an active strike");

    let x_lo = (1e-6 * k_min).min(1e-6);
    let x_hi = 1e5 * k_max;
    let (xs, vs) = sample_log_grid(u, x_lo, x_hi, GRID_SIZE)?;
    let hull = upper_concave_hull(&xs, &vs);

    let mut bridges = Vec::new();
    for gap in hull.windows(2) {
        let (ia, ib) = (gap[0], gap[1]);
        if ib <= ia + 1 {
            continue;
        }
        // Confirm the chord clears the base strictly; collinear runs on
        // smooth stretches are not bridges.
        let slope = (vs[ib] - vs[ia]) / (xs[ib] - xs[ia]);
        let clearance = (ia + 1..ib)
            .map(|i| vs[ia] + slope * (xs[i] - xs[ia]) - vs[i])
            .fold(0.0f64, f64::max);
        if clearance <= 1e-11 * (1.0 + vs[ib].abs()) {
            continue;
        }
        bridges.push(refine_bridge(inc, u, xs[ia], xs[ib], slope)?);
    }
    merge_bridges(&mut bridges);
    Ok(ConcaveEnvelope { base: u.clone(), bridges })
}

fn sample_log_grid(
    u: &UtilitySpec,
    lo: f64,
    hi: f64,
    n: usize,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let log_lo = lo.ln();
    let step = (hi / lo).ln() / (n - 1) as f64;
    let mut xs = Vec::with_capacity(n);
    let mut vs = Vec::with_capacity(n);
    for i in 0..n {
        let x = (log_lo + step * i as f64).exp();
        xs.push(x);
        vs.push(u.evaluate(x)?);
    }
    Ok((xs, vs))
}

/// Indices of the vertices of the upper concave hull (slopes strictly
/// decreasing along the kept chain).
fn upper_concave_hull(xs: &[f64], vs: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(xs.len());
    for i in 0..xs.len() {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            let s_ab = (vs[b] - vs[a]) / (xs[b] - xs[a]);
            let s_bi = (vs[i] - vs[b]) / (xs[i] - xs[b]);
            if s_bi >= s_ab {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(i);
    }
    hull
}

/// Solves the common-tangency system for one bridge. The defect
/// `phi(s) = u(x_r(s)) - u(x_l(s)) - s (x_r(s) - x_l(s))` has derivative
/// `-(x_r - x_l) < 0`, so Newton in the slope converges monotonically from
/// the hull chord.
fn refine_bridge(
    inc: &Incentivized,
    u: &UtilitySpec,
    x_a: f64,
    x_b: f64,
    chord: f64,
) -> Result<Bridge> {
    let zero_slope = u.marginal_at_zero();
    let mut s = chord;
    for _ in 0..TANGENCY_ITERS {
        let left = match zero_slope {
            Some(s0) if s >= s0 => None,
            _ => marginal_inverse_near(inc, s, x_a),
        };
        let Some(x_l) = left else {
            return boundary_bridge(inc, u, x_b);
        };
        let x_r = marginal_inverse_near(inc, s, x_b).ok_or_else(|| {
            Error::Internal(format!("tangency slope {s} has no inverse near {x_b}"))
        })?;
        if x_r <= x_l {
            return Err(Error::Internal("bridge endpoints crossed during refinement".into()));
        }
        let (v_l, v_r) = (u.evaluate(x_l)?, u.evaluate(x_r)?);
        let phi = v_r - v_l - s * (x_r - x_l);
        let step = phi / (x_r - x_l);
        s += step;
        // Converged when the slope stabilizes or the chord defect falls to
        // the float noise of the values (narrow bridges hit this first).
        let noise = 1e-13 * (v_l.abs() + v_r.abs() + (s * (x_r - x_l)).abs());
        if step.abs() <= 1e-15 * (1.0 + s.abs()) || phi.abs() <= noise {
            let value = u.evaluate(x_l)?;
            return Ok(Bridge { x_lo: x_l, x_hi: x_r, slope: s, intercept: value - s * x_l });
        }
    }
    Err(Error::Convergence("bridge tangency refinement".into()))
}

/// Bridge anchored at zero wealth: the required tangency slope exceeds the
/// base's slope at the cash floor, so the envelope is the chord from
/// `(0, u(0+))` tangent to the base on the right.
fn boundary_bridge(inc: &Incentivized, u: &UtilitySpec, x_b: f64) -> Result<Bridge> {
    let v0 = u
        .value_at_zero()
        .ok_or_else(|| Error::Internal("boundary bridge requires a finite cash floor".into()))?;
    // g(x) = u(x) - v0 - u'(x) x is strictly increasing; Newton with the
    // marginal's derivative.
    let mut x = x_b;
    for _ in 0..TANGENCY_ITERS {
        let m = inc.marginal_right(x);
        let g = u.evaluate(x)? - v0 - m * x;
        let gp = -inc.second_derivative(x) * x;
        let step = g / gp;
        let mut next = x - step;
        if next <= 0.0 {
            next = 0.5 * x;
        }
        if (next - x).abs() <= 1e-14 * (1.0 + x.abs()) {
            let slope = inc.marginal_right(next);
            return Ok(Bridge { x_lo: 0.0, x_hi: next, slope, intercept: v0 });
        }
        x = next;
    }
    Err(Error::Convergence("boundary bridge tangency".into()))
}

/// Inverse of the base marginal near a guess, hopping across payoff pieces
/// when the in-piece solution escapes its bounds.
fn marginal_inverse_near(inc: &Incentivized, s: f64, x_guess: f64) -> Option<f64> {
    let n = inc.contract.n_pieces();
    let mut j = inc.contract.piece_of(x_guess);
    for _ in 0..=n {
        if let Some(x) = inc.marginal_inverse_in_piece(s, j) {
            return Some(x);
        }
        // The marginal decreases within a piece: below the piece's terminal
        // slope the inverse lies to the right, otherwise to the left.
        let (a, b) = inc.contract.piece_coeffs(j);
        let (_, hi) = inc.contract.piece_bounds(j);
        let slope_at_hi = if hi.is_finite() {
            b * (a + b * hi).powf(inc.p - 1.0) / inc.norm()
        } else {
            0.0
        };
        if s < slope_at_hi {
            if j + 1 >= n {
                return None;
            }
            j += 1;
        } else {
            if j == 0 {
                return None;
            }
            j -= 1;
        }
    }
    None
}

fn merge_bridges(bridges: &mut Vec<Bridge>) {
    bridges.sort_by(|a, b| a.x_lo.partial_cmp(&b.x_lo).expect("finite bridges"));
    bridges.dedup_by(|b, a| {
        if b.x_lo <= a.x_hi {
            a.x_hi = a.x_hi.max(b.x_hi);
            true
        } else {
            false
        }
    });
}

impl ConcaveEnvelope {
    pub fn base(&self) -> &UtilitySpec {
        &self.base
    }

    pub fn bridges(&self) -> &[Bridge] {
        &self.bridges
    }

    fn bridge_at(&self, x: f64) -> Option<&Bridge> {
        self.bridges.iter().find(|b| b.contains(x))
    }

    /// Envelope value: affine across bridges, the base elsewhere.
    pub fn evaluate(&self, x: f64) -> Result<f64> {
        if let Some(b) = self.bridge_at(x) {
            if x > 0.0 {
                return Ok(b.value(x));
            }
        }
        self.base.evaluate(x)
    }

    /// Envelope derivative (single-valued: tangency makes it continuous).
    pub fn marginal(&self, x: f64) -> Result<f64> {
        if let Some(b) = self.bridge_at(x) {
            if x > 0.0 {
                return Ok(b.slope);
            }
        }
        self.base.marginal(x)
    }

    /// Inverse of the envelope derivative. Exactly at a bridge slope the
    /// result is the whole bridge interval.
    pub fn inverse_marginal(&self, y: f64) -> Result<InverseMarginal> {
        if !(y.is_finite() && y > 0.0) {
            return Err(Error::Domain(format!("marginal value must be > 0, got {y}")));
        }
        for b in &self.bridges {
            if y == b.slope {
                return Ok(InverseMarginal::Interval(b.x_lo, b.x_hi));
            }
        }
        if let Some(s0) = self.marginal_at_zero() {
            if y >= s0 {
                return Ok(InverseMarginal::Point(0.0));
            }
        }
        match &self.base {
            UtilitySpec::Incentivized(inc) => {
                // Locate the inter-bridge region containing the slope and
                // invert the base marginal there.
                let mut guess = 1.0;
                for b in &self.bridges {
                    if y > b.slope {
                        guess = 0.5 * b.x_lo;
                        break;
                    }
                    guess = b.x_hi * 1.5;
                }
                let x = marginal_inverse_near(inc, y, guess)
                    .ok_or_else(|| Error::Internal(format!("no inverse marginal at y={y}")))?;
                Ok(InverseMarginal::Point(x))
            }
            other => Ok(InverseMarginal::Point(other.inverse_marginal(y)?)),
        }
    }

    /// Convex dual of the envelope (equal to the dual of the base).
    pub fn dual_eval(&self, y: f64) -> Result<f64> {
        let x = self.inverse_marginal(y)?.resolved();
        if x == 0.0 {
            return self
                .base
                .value_at_zero()
                .ok_or_else(|| Error::Internal("dual boundary without a cash floor".into()));
        }
        Ok(self.evaluate(x)? - x * y)
    }

    /// Marginal-utility levels where the inverse marginal jumps or kinks:
    /// the bridge slopes, plus the slope at zero wealth when finite.
    pub fn slope_cuts(&self) -> Vec<f64> {
        let mut cuts: Vec<f64> = self.bridges.iter().map(|b| b.slope).collect();
        cuts.extend(self.base.slope_cuts());
        cuts
    }

    pub fn marginal_at_zero(&self) -> Option<f64> {
        if let Some(first) = self.bridges.first() {
            if first.x_lo == 0.0 {
                return Some(first.slope);
            }
        }
        self.base.marginal_at_zero()
    }

    pub fn value_at_zero(&self) -> Option<f64> {
        self.base.value_at_zero()
    }

    pub fn value_limits(&self) -> (f64, f64) {
        self.base.value_limits()
    }

    pub fn p_high(&self) -> f64 {
        self.base.p_high()
    }
}
