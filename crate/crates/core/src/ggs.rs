//! Figure-8 return dynamics with an exactly solvable derivative cocycle.
//!
//! The map acts on a tower of rectangles S_n = [a,b] × σ^{-n}[a,b]; the
//! return from S_n lands in S_{2n} after n + k0 steps, and its derivative is
//! the anti-diagonal matrix [0, -σ^n; σ^{-2n}, 0].  Composing d returns gives
//! a closed form whose entries are exact signed powers of σ, so finite-time
//! exponents can be evaluated at huge times without any floating-point orbit.

// Validation deliberately writes `!(x > 1.0)` and friends: the negated form
// also rejects NaN, which a direct comparison would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::analysis::FtleSeries;
use crate::numerics::{vec_lognorm, LogValue, NumericsError, SigmaPower, SpMat2};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum GgsError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("point outside S_n for n = {0}")]
    OutsideDomain(i64),
    #[error("index {0} out of range")]
    IndexOutOfRange(i64),
    #[error("zeta {0} outside [0, 1]")]
    ZetaOutOfRange(f64),
    #[error("tangent vector must be nonzero")]
    ZeroVector,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Slack (in log magnitude) for floating-point domain-membership checks.
const MEMBERSHIP_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct GgsParams {
    /// Expansion base, > 1.
    pub sigma: f64,
    /// Left edge of the base interval I = [a, b]; 1 < a < b < sigma.
    pub a: f64,
    pub b: f64,
    /// Depth of the first rectangle, >= 2.
    pub n0: i64,
    /// Steps spent in the fixed transition between tower visits, >= 1.
    pub k0: i64,
}

impl Default for GgsParams {
    fn default() -> Self {
        GgsParams { sigma: 2.0, a: 1.2, b: 1.5, n0: 2, k0: 3 }
    }
}

impl GgsParams {
    pub fn validate(&self) -> Result<(), GgsError> {
        if !(self.sigma > 1.0) {
            return Err(GgsError::InvalidParams(format!("sigma = {} must be > 1", self.sigma)));
        }
        if !(1.0 < self.a && self.a < self.b && self.b < self.sigma) {
            return Err(GgsError::InvalidParams(format!(
                "need 1 < a < b < sigma, got a = {}, b = {}, sigma = {}",
                self.a, self.b, self.sigma
            )));
        }
        if self.n0 < 2 {
            return Err(GgsError::InvalidParams(format!("n0 = {} must be >= 2", self.n0)));
        }
        if self.k0 < 1 {
            return Err(GgsError::InvalidParams(format!("k0 = {} must be >= 1", self.k0)));
        }
        Ok(())
    }

    pub fn ln_sigma(&self) -> f64 {
        self.sigma.ln()
    }
}

/// A point of S_n: x is an ordinary real in [a, b], y is extended-range
/// (its magnitude is comparable to σ^{-n}).
#[derive(Debug, Clone, Copy)]
pub struct GgsPoint {
    pub x: f64,
    pub y: LogValue,
}

fn pow2(e: i64) -> Result<i128, GgsError> {
    if !(0..=120).contains(&e) {
        return Err(GgsError::IndexOutOfRange(e));
    }
    Ok(1i128 << e)
}

/// Time of the d-th return: N(d) = (2^d - 1) n0 + d k0.
pub fn return_time(params: &GgsParams, d: i64) -> Result<i128, GgsError> {
    if d < 1 {
        return Err(GgsError::IndexOutOfRange(d));
    }
    let n0 = params.n0 as i128;
    let k0 = params.k0 as i128;
    (pow2(d)? - 1)
        .checked_mul(n0)
        .and_then(|t| t.checked_add(d as i128 * k0))
        .ok_or(GgsError::IndexOutOfRange(d))
}

/// Whether `p` lies in S_n = [a,b] × σ^{-n}[a,b], up to a small log slack.
pub fn in_s_n(params: &GgsParams, n: i64, p: &GgsPoint) -> bool {
    let slack = MEMBERSHIP_SLACK;
    if !(params.a - slack <= p.x && p.x <= params.b + slack) {
        return false;
    }
    if p.y.sign() != 1 {
        return false;
    }
    // σ^n y ∈ [a, b]
    let scaled = p.y.logmag() + n as f64 * params.ln_sigma();
    params.a.ln() - slack <= scaled && scaled <= params.b.ln() + slack
}

/// The return map S_n → S_{2n}: (x, y) ↦ (a + b - σ^n y, σ^{-2n} x).
pub fn return_map(params: &GgsParams, n: i64, p: &GgsPoint) -> Result<GgsPoint, GgsError> {
    if !in_s_n(params, n, p) {
        return Err(GgsError::OutsideDomain(n));
    }
    let ln_sigma = params.ln_sigma();
    let sigma_n_y = (p.y.logmag() + n as f64 * ln_sigma).exp();
    let x_new = params.a + params.b - sigma_n_y;
    let y_new = LogValue::new(1, p.x.ln() - 2.0 * n as f64 * ln_sigma);
    Ok(GgsPoint { x: x_new, y: y_new })
}

/// Derivative factor of a single return from S_n: [0, -σ^n; σ^{-2n}, 0].
pub fn per_return_factor(n: i128) -> SpMat2 {
    SpMat2::new([
        [None, Some(SigmaPower::new(-1, n))],
        [Some(SigmaPower::new(1, -2 * n)), None],
    ])
}

/// Product of the first `index` per-return derivative factors
/// (depths n0, 2 n0, 4 n0, …).  `index = 0` gives the identity.
pub fn cocycle_product(params: &GgsParams, index: i64) -> Result<SpMat2, GgsError> {
    if index < 0 {
        return Err(GgsError::IndexOutOfRange(index));
    }
    let mut m = SpMat2::identity();
    for j in 1..=index {
        let n_j = pow2(j - 1)? * params.n0 as i128;
        m = per_return_factor(n_j).mul(m)?;
    }
    Ok(m)
}

/// Closed form of the composed cocycle after `index` returns:
///
/// index = 2d-1 (odd):  (-1)^{d-1} · [0, -σ^{n0}; σ^{-2^{index} n0}, 0]
/// index = 2d   (even): (-1)^d · diag(1, σ^{(1 - 2^{index}) n0})
pub fn cocycle_closed_form(params: &GgsParams, index: i64) -> Result<SpMat2, GgsError> {
    if index < 1 {
        return Err(GgsError::IndexOutOfRange(index));
    }
    let n0 = params.n0 as i128;
    let p2 = pow2(index)?;
    if index % 2 == 1 {
        let d = (index + 1) / 2;
        let s: i8 = if (d - 1) % 2 == 0 { 1 } else { -1 };
        Ok(SpMat2::new([
            [None, Some(SigmaPower::new(-s, n0))],
            [Some(SigmaPower::new(s, -p2 * n0)), None],
        ]))
    } else {
        let d = index / 2;
        let s: i8 = if d % 2 == 0 { 1 } else { -1 };
        Ok(SpMat2::new([
            [Some(SigmaPower::new(s, 0)), None],
            [None, Some(SigmaPower::new(s, (1 - p2) * n0))],
        ]))
    }
}

/// Derivative after N(4d) + t steps, 0 <= t <= 2^{4d} n0: the orbit sits in
/// the linear regime, contributing diag(σ^{-2t}, σ^t) on top of the closed
/// form at index 4d.
pub fn intermediate_derivative(params: &GgsParams, d: i64, t: i128) -> Result<SpMat2, GgsError> {
    if d < 1 {
        return Err(GgsError::IndexOutOfRange(d));
    }
    let span = pow2(4 * d)? * params.n0 as i128;
    if !(0..=span).contains(&t) {
        return Err(GgsError::IndexOutOfRange(d));
    }
    let linear = SpMat2::new([
        [Some(SigmaPower::new(1, -2 * t)), None],
        [None, Some(SigmaPower::new(1, t))],
    ]);
    Ok(linear.mul(cocycle_closed_form(params, 4 * d)?)?)
}

/// Limit profile of the intermediate-time exponent, in units of log σ:
/// θ(ζ) = -2ζ/(1+ζ) for ζ < 1/3, -(1-ζ)/(1+ζ) for ζ >= 1/3.
pub fn theta(zeta: f64) -> Result<f64, GgsError> {
    if !(0.0..=1.0).contains(&zeta) {
        return Err(GgsError::ZetaOutOfRange(zeta));
    }
    Ok(if zeta >= 1.0 / 3.0 { -(1.0 - zeta) / (1.0 + zeta) } else { -2.0 * zeta / (1.0 + zeta) })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GgsSchedule {
    /// Times N(1), N(2), …, N(d_max).
    Returns { d_max: i64 },
    /// Times N(4d) + ⌊ζ 2^{4d} n0⌋ for d = 1..d_max.
    Intermediate { zeta: f64, d_max: i64 },
}

fn exponent_at(params: &GgsParams, m: &SpMat2, v: [f64; 2], time: i128) -> f64 {
    let vlog = [LogValue::from_real(v[0]), LogValue::from_real(v[1])];
    let image = m.to_log(params.ln_sigma()).apply(vlog);
    vec_lognorm(image).logmag() / time as f64
}

/// Finite-time exponents (1/t)·log‖Df^t v‖ along the chosen schedule.
pub fn ftle_series(
    params: &GgsParams,
    v: [f64; 2],
    schedule: &GgsSchedule,
) -> Result<FtleSeries, GgsError> {
    params.validate()?;
    if v[0] == 0.0 && v[1] == 0.0 {
        return Err(GgsError::ZeroVector);
    }
    let vector = format!("({},{})", v[0], v[1]);
    match *schedule {
        GgsSchedule::Returns { d_max } => {
            let mut s = FtleSeries::new("ggs", &vector, "returns");
            for index in 1..=d_max {
                let time = return_time(params, index)?;
                let m = cocycle_closed_form(params, index)?;
                s.push(time as f64, exponent_at(params, &m, v, time));
            }
            Ok(s)
        }
        GgsSchedule::Intermediate { zeta, d_max } => {
            if !(0.0..=1.0).contains(&zeta) {
                return Err(GgsError::ZetaOutOfRange(zeta));
            }
            let mut s = FtleSeries::new("ggs", &vector, &format!("intermediate-zeta-{zeta}"));
            for d in 1..=d_max {
                let span = pow2(4 * d)? * params.n0 as i128;
                let t = (zeta * span as f64).floor() as i128;
                let t = t.min(span);
                let time = return_time(params, 4 * d)? + t;
                let m = intermediate_derivative(params, d, t)?;
                s.push(time as f64, exponent_at(params, &m, v, time));
            }
            Ok(s)
        }
    }
}

/// Split a `returns` series into odd-index and even-index subsequences.
pub fn split_parity(series: &FtleSeries) -> (FtleSeries, FtleSeries) {
    let mut odd = FtleSeries::new(&series.system, &series.vector, "returns-odd");
    let mut even = FtleSeries::new(&series.system, &series.vector, "returns-even");
    for (i, &(t, e)) in series.entries.iter().enumerate() {
        // entry i corresponds to return index i + 1
        if i % 2 == 0 {
            odd.push(t, e);
        } else {
            even.push(t, e);
        }
    }
    (odd, even)
}
