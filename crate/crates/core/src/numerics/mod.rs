//! Deterministic quadrature, monotone root-finding, and seeded Monte Carlo.
//!
//! Expectations against the standard normal law come in two flavours:
//! [`expect_normal`] pushes a smooth integrand through a Gauss-Hermite rule,
//! while [`expect_normal_segments`] splits the real line at known kink
//! locations and integrates each smooth segment with composite
//! Gauss-Legendre panels. Discontinuous indicators never go through either
//! path; they are rewritten as [`normal_cdf`] evaluations by the callers.

pub(crate) mod mc;
mod root;

pub use mc::{mc_expect, normal_draw, McConfig};
pub use root::find_root_monotone;

use crate::error::{Error, Result};
use statrs::distribution::{ContinuousCDF, Normal};
use std::sync::OnceLock;

/// Integration is truncated where the standard normal density underflows:
/// exp(-37.5^2/2) ~ 1e-306. Keeping the window this tight also keeps
/// exponential-of-lognormal integrands representable before the density
/// multiply, instead of overflowing in the discarded tail.
pub const Z_MAX: f64 = 37.5;

const GH_MAX_ORDER: usize = 10_000;

fn std_normal() -> &'static Normal {
    static N: OnceLock<Normal> = OnceLock::new();
    N.get_or_init(|| Normal::new(0.0, 1.0).expect("unit normal"))
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    std_normal().cdf(x)
}

/// Standard normal quantile (inverse CDF), p in (0,1).
pub fn normal_quantile(p: f64) -> f64 {
    std_normal().inverse_cdf(p)
}

/// Gauss-Hermite rule normalized against the standard normal density:
/// `sum(weights * f(nodes))` approximates `E[f(Z)]`, exact for polynomials
/// of degree <= 2n-1.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    order: usize,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

/// Orthonormal physicists' Hermite polynomial value `p_n(x)` and the
/// derivative factor `p_n'(x) = sqrt(2n) p_{n-1}(x)`, both scaled by
/// `1e-280^rescales`: before its oscillatory regime the polynomial passes
/// through magnitudes far beyond f64 range at high order, so the
/// recurrence renormalizes and counts the scale separately. The Newton
/// step `p/p'` is scale-free.
fn hermite_eval(n: usize, x: f64) -> (f64, f64, i32) {
    const CAP: f64 = 1e280;
    const INV: f64 = 1e-280;
    let mut p1 = std::f64::consts::PI.powf(-0.25);
    let mut p2 = 0.0;
    let mut rescales = 0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = x * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
        if p1.abs() > CAP {
            p1 *= INV;
            p2 *= INV;
            rescales += 1;
        }
    }
    (p1, (2.0 * n as f64).sqrt() * p2, rescales)
}

/// Weight `2 / p'^2` from a scaled derivative value; falls back to log
/// space when the scale counter is engaged (the result is then at or
/// below the underflow threshold).
fn weight_from_derivative(scaled: f64, rescales: i32) -> f64 {
    if rescales == 0 {
        2.0 / (scaled * scaled)
    } else {
        let ln_w = 2f64.ln() - 2.0 * scaled.abs().ln() - 2.0 * f64::from(rescales) * 280.0 * 10f64.ln();
        ln_w.exp()
    }
}

/// Eigenvalues of a symmetric tridiagonal matrix with zero diagonal and
/// off-diagonals `off`, by the implicit QL algorithm.
fn symmetric_tridiagonal_eigenvalues(off: &[f64]) -> Result<Vec<f64>> {
    let n = off.len() + 1;
    let mut d = vec![0.0_f64; n];
    let mut e = off.to_vec();
    e.push(0.0);
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(Error::Convergence("tridiagonal QL eigenvalue iteration".into()));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0_f64, 1.0_f64);
            let mut p = 0.0;
            let mut underflow = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    underflow = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if underflow {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(d)
}

/// Builds the n-point Gauss-Hermite rule in the standard normal convention.
///
/// Nodes come from the Golub-Welsch eigenvalue problem for the Hermite
/// recurrence, polished by Newton steps on the orthonormal polynomial;
/// only the positive half is kept and mirrored, so the rule is symmetric
/// to the bit and the central node of an odd rule is exactly zero.
pub fn gauss_hermite(n: usize) -> Result<QuadratureRule> {
    if !(1..=GH_MAX_ORDER).contains(&n) {
        return Err(Error::Parameter(format!(
            "Gauss-Hermite order must be in [1, {GH_MAX_ORDER}], got {n}"
        )));
    }
    let off: Vec<f64> = (1..n).map(|k| (k as f64 / 2.0).sqrt()).collect();
    let mut eig = symmetric_tridiagonal_eigenvalues(&off)?;
    eig.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));

    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Work on the positive half (descending from the largest root).
        let mut z = eig[n - 1 - i];
        let mut w = 0.0;
        for _ in 0..8 {
            let (p, d, rescales) = hermite_eval(n, z);
            w = weight_from_derivative(d, rescales);
            let step = p / d;
            z -= step;
            if step.abs() <= 1e-16 * (1.0 + z.abs()) {
                break;
            }
        }
        if n % 2 == 1 && i == m - 1 {
            z = 0.0;
            let (_, d, rescales) = hermite_eval(n, 0.0);
            w = weight_from_derivative(d, rescales);
        }
        nodes[n - 1 - i] = z;
        nodes[i] = -z;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    // Rescale from weight exp(-x^2) to the standard normal density.
    let sqrt_pi = std::f64::consts::PI.sqrt();
    for i in 0..n {
        nodes[i] *= std::f64::consts::SQRT_2;
        weights[i] /= sqrt_pi;
    }
    Ok(QuadratureRule { nodes, weights, order: n })
}

/// Approximates `E[f(Z)]`, Z standard normal, by the given rule.
///
/// Errors if the integrand is non-finite at any node. Summation pairs
/// opposite nodes first (a fixed, reproducible order) so that symmetric
/// cancellations, such as odd moments, come out exact.
pub fn expect_normal<F: Fn(f64) -> f64>(f: F, rule: &QuadratureRule) -> Result<f64> {
    let n = rule.nodes.len();
    let eval = |i: usize| -> Result<f64> {
        let v = f(rule.nodes[i]);
        if !v.is_finite() {
            return Err(Error::Evaluation { node: rule.nodes[i], value: v });
        }
        Ok(rule.weights[i] * v)
    };
    let mut acc = 0.0;
    for i in 0..n / 2 {
        acc += eval(i)? + eval(n - 1 - i)?;
    }
    if n % 2 == 1 {
        acc += eval(n / 2)?;
    }
    Ok(acc)
}

fn gauss_legendre_16() -> &'static ([f64; 16], [f64; 16]) {
    static GL: OnceLock<([f64; 16], [f64; 16])> = OnceLock::new();
    GL.get_or_init(|| {
        // Newton iteration on the Legendre recurrence over [-1, 1].
        let n = 16usize;
        let mut x = [0.0; 16];
        let mut w = [0.0; 16];
        let m = n.div_ceil(2);
        for i in 0..m {
            let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            loop {
                let mut p1 = 1.0;
                let mut p2 = 0.0;
                for j in 0..n {
                    let p3 = p2;
                    p2 = p1;
                    let jf = j as f64;
                    p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
                }
                let pp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
                let z1 = z;
                z = z1 - p1 / pp;
                if (z - z1).abs() <= 1e-15 {
                    let weight = 2.0 / ((1.0 - z * z) * pp * pp);
                    x[i] = -z;
                    x[n - 1 - i] = z;
                    w[i] = weight;
                    w[n - 1 - i] = weight;
                    break;
                }
            }
        }
        (x, w)
    })
}

/// Approximates `E[f(Z)]` for an integrand that is smooth except at the
/// given cut points. The line is truncated at `[-Z_MAX, Z_MAX]`, split at
/// the cuts, and each segment integrated with composite 16-point
/// Gauss-Legendre panels against the explicit normal density.
///
/// `resolution` plays the role of a node count: panel width scales like
/// 1/resolution, so doubling it refines the mesh for convergence checks.
pub fn expect_normal_segments<F: Fn(f64) -> f64>(
    f: F,
    cuts: &[f64],
    resolution: usize,
) -> Result<f64> {
    if resolution < 2 {
        return Err(Error::Parameter(format!(
            "segment quadrature resolution must be >= 2, got {resolution}"
        )));
    }
    let mut bounds = vec![-Z_MAX];
    let mut sorted: Vec<f64> = cuts
        .iter()
        .copied()
        .filter(|c| c.is_finite() && c.abs() < Z_MAX)
        .collect();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite cuts"));
    sorted.dedup();
    bounds.extend(sorted);
    bounds.push(Z_MAX);

    let (gl_x, gl_w) = gauss_legendre_16();
    let target_width = 2.0 * Z_MAX / resolution as f64;
    let inv_sqrt_2pi = 1.0 / (2.0 * std::f64::consts::PI).sqrt();

    let mut acc = 0.0;
    for pair in bounds.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if b <= a {
            continue;
        }
        let panels = ((b - a) / target_width).ceil().max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + k as f64 * h;
            let mid = lo + 0.5 * h;
            let half = 0.5 * h;
            let mut panel = 0.0;
            for (&xi, &wi) in gl_x.iter().zip(gl_w.iter()) {
                let z = mid + half * xi;
                let v = f(z);
                if !v.is_finite() {
                    return Err(Error::Evaluation { node: z, value: v });
                }
                panel += wi * v * inv_sqrt_2pi * (-0.5 * z * z).exp();
            }
            acc += panel * half;
        }
    }
    Ok(acc)
}

/// Partial lognormal power moment `E[X^a 1{X <= c}]` for
/// `X = exp(m + s Z)`, the indicator routed through the normal CDF.
pub fn lognormal_partial_moment(m: f64, s: f64, a: f64, c: f64) -> f64 {
    if c <= 0.0 {
        return 0.0;
    }
    if s == 0.0 {
        let x = m.exp();
        return if x <= c { x.powf(a) } else { 0.0 };
    }
    let z_star = (c.ln() - m) / s;
    (a * m + 0.5 * a * a * s * s).exp() * normal_cdf(z_star - a * s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn degenerate_rule_is_a_point_mass() {
        let rule = gauss_hermite(1).unwrap();
        assert_eq!(rule.nodes(), &[0.0]);
        assert_relative_eq!(rule.weights()[0], 1.0, max_relative = 1e-14);
    }

    #[test]
    fn second_moment_with_five_nodes() {
        let rule = gauss_hermite(5).unwrap();
        let m2 = expect_normal(|z| z * z, &rule).unwrap();
        assert!((m2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn fourth_moment_with_three_nodes() {
        // 2n-1 = 5 exactness covers the quartic.
        let rule = gauss_hermite(3).unwrap();
        let m4 = expect_normal(|z| z.powi(4), &rule).unwrap();
        assert!((m4 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn monomial_exactness_up_to_order_fifty() {
        // E[Z^k] = (k-1)!! for even k, 0 for odd k.
        for n in 1..=50usize {
            let rule = gauss_hermite(n).unwrap();
            let mut expected = 1.0;
            for k in 0..=(2 * n - 1) {
                let got = expect_normal(|z| z.powi(k as i32), &rule).unwrap();
                if k % 2 == 1 {
                    assert!(got.abs() < 1e-10, "odd moment k={k} n={n}: {got}");
                } else {
                    if k > 0 {
                        expected *= (k - 1) as f64;
                    }
                    assert!(
                        (got - expected).abs() <= 1e-10 * expected.max(1.0),
                        "moment k={k} n={n}: {got} vs {expected}"
                    );
                }
            }
        }
    }

    #[test]
    fn nodes_are_symmetric_and_weights_normalized() {
        for &n in &[2usize, 7, 64, 201, 402] {
            let rule = gauss_hermite(n).unwrap();
            let sum: f64 = rule.weights().iter().sum();
            assert!((sum - 1.0).abs() < 1e-12, "n={n} weight sum {sum}");
            for i in 0..n {
                assert_eq!(rule.nodes()[i], -rule.nodes()[n - 1 - i], "n={n} i={i}");
            }
            // Extreme weights of very wide rules underflow f64; within the
            // orders used for expectations they are strictly positive.
            if n <= 201 {
                assert!(rule.weights().iter().all(|&w| w > 0.0));
            } else {
                assert!(rule.weights().iter().all(|&w| w >= 0.0));
            }
        }
    }

    #[test]
    fn large_order_rule_builds() {
        let rule = gauss_hermite(10_000).unwrap();
        let sum: f64 = rule.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9, "weight sum {sum}");
        let m2 = expect_normal(|z| z * z, &rule).unwrap();
        assert!((m2 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn order_out_of_range_rejected() {
        assert!(matches!(gauss_hermite(0), Err(Error::Parameter(_))));
        assert!(matches!(gauss_hermite(10_001), Err(Error::Parameter(_))));
    }

    #[test]
    fn constant_integrates_to_one() {
        let rule = gauss_hermite(31).unwrap();
        assert_relative_eq!(expect_normal(|_| 1.0, &rule).unwrap(), 1.0, max_relative = 1e-14);
    }

    #[test]
    fn lognormal_mgf_oracle() {
        // E[exp(0.2 Z)] = exp(0.02).
        let rule = gauss_hermite(21).unwrap();
        let got = expect_normal(|z| (0.2 * z).exp(), &rule).unwrap();
        assert_relative_eq!(got, 0.02_f64.exp(), max_relative = 1e-12);
        assert_relative_eq!(got, 1.020201340026756, max_relative = 1e-12);
    }

    #[test]
    fn indicator_goes_through_the_cdf_not_the_nodes() {
        // Half-line indicator: the closed-form route is exact, and an
        // even-order rule confirms it by symmetry (no node sits at 0).
        assert_eq!(normal_cdf(0.0), 0.5);
        let rule = gauss_hermite(64).unwrap();
        let via_nodes = expect_normal(|z| if z <= 0.0 { 1.0 } else { 0.0 }, &rule).unwrap();
        assert_relative_eq!(via_nodes, 0.5, max_relative = 1e-12);
    }

    #[test]
    fn non_finite_integrand_names_the_node() {
        let rule = gauss_hermite(11).unwrap();
        let err = expect_normal(|z| 1.0 / z, &rule).unwrap_err();
        match err {
            Error::Evaluation { node, .. } => assert_eq!(node, 0.0),
            other => panic!("expected evaluation error, got {other}"),
        }
    }

    #[test]
    fn segment_quadrature_matches_gauss_hermite_on_smooth_integrands() {
        let rule = gauss_hermite(201).unwrap();
        for c in [0.0, 0.5, 2.0, -3.0] {
            let smooth = |z: f64| (c * z).exp();
            let gh = expect_normal(smooth, &rule).unwrap();
            let gl = expect_normal_segments(smooth, &[], 201).unwrap();
            assert_relative_eq!(gh, gl, max_relative = 1e-12);
        }
    }

    #[test]
    fn segment_quadrature_handles_kinks_exactly() {
        // E[(Z - k)^+] = phi(k) - k (1 - Phi(k)), kinked at z = k.
        let k = 0.7f64;
        let phi = (-0.5 * k * k).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let exact = phi - k * (1.0 - normal_cdf(k));
        let got = expect_normal_segments(|z| (z - k).max(0.0), &[k], 201).unwrap();
        assert_relative_eq!(got, exact, max_relative = 1e-13);
    }

    #[test]
    fn partial_moment_matches_segment_quadrature() {
        let (m, s, a, c) = (0.3, 0.8, -2.0, 1.4);
        let closed = lognormal_partial_moment(m, s, a, c);
        let cut = (c.ln() - m) / s;
        let quad = expect_normal_segments(
            |z| {
                let x = (m + s * z).exp();
                if x <= c {
                    x.powf(a)
                } else {
                    0.0
                }
            },
            &[cut],
            400,
        )
        .unwrap();
        assert_relative_eq!(closed, quad, max_relative = 1e-10);
    }

    #[test]
    fn quantile_round_trips_through_cdf() {
        for &p in &[1e-8, 0.01, 0.3, 0.5, 0.9, 1.0 - 1e-9] {
            let x = normal_quantile(p);
            assert!((normal_cdf(x) - p).abs() < 1e-9 * p.max(1e-3));
        }
    }
}
