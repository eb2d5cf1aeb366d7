use crate::error::{Error, Result};
use serde::Serialize;

/// How the gap between the two power pieces is filled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum InterpolationKind {
    /// C1 bridge whose derivative decays like a power of the remaining
    /// distance to the upper knot: h'(x) = d_hi + (d_lo - d_hi) w^beta with
    /// w = (x_hi - x)/(x_hi - 1). Matches value and derivative at both
    /// knots, is strictly increasing and concave.
    ConcavePower,
}

/// Bridge specification: knots are (1, x_hi).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InterpolationSpec {
    pub kind: InterpolationKind,
    pub x_hi: f64,
}

impl InterpolationSpec {
    pub fn concave_power(x_hi: f64) -> Self {
        Self { kind: InterpolationKind::ConcavePower, x_hi }
    }
}

/// Constructed concave C1 bridge on [1, x_hi].
///
/// A concave interpolant matching both values and derivatives exists iff
/// the chord slope lies strictly between the endpoint derivatives; the
/// constructor verifies this and rejects the knot otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConcaveBridge {
    pub x_hi: f64,
    v_lo: f64,
    d_lo: f64,
    v_hi: f64,
    d_hi: f64,
    beta: f64,
}

impl ConcaveBridge {
    pub fn new(spec: InterpolationSpec, v_lo: f64, d_lo: f64, v_hi: f64, d_hi: f64) -> Result<Self> {
        let InterpolationKind::ConcavePower = spec.kind;
        let x_hi = spec.x_hi;
        if !(x_hi.is_finite() && x_hi > 1.0) {
            return Err(Error::Parameter(format!("bridge knot x_hi must be > 1, got {x_hi}")));
        }
        if !(d_hi > 0.0 && d_lo > d_hi) {
            return Err(Error::Parameter(format!(
                "bridge endpoint derivatives must satisfy 0 < d_hi < d_lo, got {d_hi}, {d_lo}"
            )));
        }
        let width = x_hi - 1.0;
        let chord = (v_hi - v_lo) / width;
        if !(chord > d_hi && chord < d_lo) {
            return Err(Error::Parameter(format!(
                "no concave C1 bridge exists on [1, {x_hi}]: chord slope {chord:.6} \
                 must lie strictly between the endpoint derivatives \
                 ({d_hi:.6}, {d_lo:.6}); increase x_hi"
            )));
        }
        let beta = (d_lo - chord) / (chord - d_hi);
        Ok(Self { x_hi, v_lo, d_lo, v_hi, d_hi, beta })
    }

    fn omega(&self, x: f64) -> f64 {
        ((self.x_hi - x) / (self.x_hi - 1.0)).clamp(0.0, 1.0)
    }

    pub fn value(&self, x: f64) -> f64 {
        let width = self.x_hi - 1.0;
        let w = self.omega(x);
        self.v_lo
            + self.d_hi * (x - 1.0)
            + (self.d_lo - self.d_hi) * width / (self.beta + 1.0) * (1.0 - w.powf(self.beta + 1.0))
    }

    pub fn derivative(&self, x: f64) -> f64 {
        self.d_hi + (self.d_lo - self.d_hi) * self.omega(x).powf(self.beta)
    }

    /// Inverse of the derivative, for y in [d_hi, d_lo].
    pub fn inverse_derivative(&self, y: f64) -> f64 {
        let w = ((y - self.d_hi) / (self.d_lo - self.d_hi)).clamp(0.0, 1.0);
        self.x_hi - (self.x_hi - 1.0) * w.powf(1.0 / self.beta)
    }

    pub fn d_hi(&self) -> f64 {
        self.d_hi
    }
}
