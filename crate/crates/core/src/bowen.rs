//! Flow with two saddle connections whose successive section radii obey an
//! explicit log-linear recursion, making passage times, closest-approach
//! instants, finite-time exponents, and Birkhoff averages computable in
//! closed form for arbitrarily many circuits.
//!
//! One circuit enters the first saddle (rates α₊ expanding, α₋ contracting)
//! at section distance sₙ, crosses in time tₙ = -log sₙ / α₊, travels for a
//! fixed time T̄ to the second saddle (rates β₊, β₋), crosses in time
//! t̂ₙ = -log ŝₙ / β₊, and returns in time T̂̄.  Working with L = log sₙ keeps
//! everything finite even when sₙ underflows any float.

// Validation deliberately writes `!(x > 0.0)` and friends: the negated form
// also rejects NaN, which a direct `x <= 0.0` would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use crate::analysis::FtleSeries;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum BowenError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("need at least one circuit, got n_max = {0}")]
    EmptyTrajectory(usize),
}

#[derive(Debug, Clone, Copy)]
pub struct BowenParams {
    /// Expanding rate at the first saddle.
    pub alpha_plus: f64,
    /// Contracting rate at the first saddle.
    pub alpha_minus: f64,
    /// Expanding rate at the second saddle.
    pub beta_plus: f64,
    /// Contracting rate at the second saddle.
    pub beta_minus: f64,
    /// Transition coefficients between the saddle sections.
    pub c: f64,
    pub c_hat: f64,
    /// Travel times between saddles and back.
    pub t_bar: f64,
    pub t_hat_bar: f64,
    /// Time of the first section crossing.
    pub t_hat0: f64,
    /// Initial section distance s₁ ∈ (0, 1).
    pub s_init: f64,
    /// Size of a nonlinear perturbation of the first transition (0 = exact).
    pub delta: f64,
}

impl Default for BowenParams {
    fn default() -> Self {
        BowenParams {
            alpha_plus: 1.0,
            alpha_minus: 1.2,
            beta_plus: 1.0,
            beta_minus: 1.2,
            c: 1.0,
            c_hat: 1.0,
            t_bar: 1.0,
            t_hat_bar: 1.0,
            t_hat0: 1.0,
            s_init: 0.5,
            delta: 0.0,
        }
    }
}

impl BowenParams {
    /// Contraction/expansion ratio at the first saddle.
    pub fn a(&self) -> f64 {
        self.alpha_minus / self.alpha_plus
    }

    /// Contraction/expansion ratio at the second saddle.
    pub fn b(&self) -> f64 {
        self.beta_minus / self.beta_plus
    }

    pub fn validate(&self) -> Result<(), BowenError> {
        for (name, v) in [
            ("alpha_plus", self.alpha_plus),
            ("alpha_minus", self.alpha_minus),
            ("beta_plus", self.beta_plus),
            ("beta_minus", self.beta_minus),
            ("c", self.c),
            ("c_hat", self.c_hat),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(BowenError::InvalidParams(format!("{name} = {v} must be positive")));
            }
        }
        for (name, v) in [
            ("t_bar", self.t_bar),
            ("t_hat_bar", self.t_hat_bar),
            ("t_hat0", self.t_hat0),
            ("delta", self.delta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(BowenError::InvalidParams(format!(
                    "{name} = {v} must be nonnegative"
                )));
            }
        }
        if !(self.s_init > 0.0 && self.s_init < 1.0) {
            return Err(BowenError::InvalidParams(format!(
                "s_init = {} must lie in (0, 1)",
                self.s_init
            )));
        }
        if !(self.a() * self.b() > 1.0) {
            return Err(BowenError::InvalidParams(format!(
                "need (alpha_minus/alpha_plus)*(beta_minus/beta_plus) > 1 for an attracting \
                 circuit, got {}",
                self.a() * self.b()
            )));
        }
        Ok(())
    }
}

/// One circuit step in log space: given L = log sₙ, return
/// (log ŝₙ, L' = log sₙ₊₁).
pub fn advance(params: &BowenParams, l: f64) -> (f64, f64) {
    let log_s_hat =
        params.c.ln() + params.a() * l + f64::ln_1p(params.delta * (0.5 * params.a() * l).exp());
    let l_next = params.c_hat.ln() + params.b() * log_s_hat;
    (log_s_hat, l_next)
}

/// Instant of closest approach to the first saddle (measured from the section
/// crossing at distance e^L) and the log of the flow speed at that instant.
///
/// During the passage the squared distance is g(t) = e^{-2α₋t} + e^{2L+2α₊t};
/// g'(t*) = 0 gives t* = -L/(α₊+α₋) + C₁ with C₁ = (ln α₋ - ln α₊)/(2(α₊+α₋)).
pub fn closest_approach(params: &BowenParams, l: f64) -> (f64, f64) {
    let ap = params.alpha_plus;
    let am = params.alpha_minus;
    let c1 = (am.ln() - ap.ln()) / (2.0 * (ap + am));
    let rho = -l / (ap + am) + c1;
    let c1p = (am * am * (-2.0 * am * c1).exp() + ap * ap * (2.0 * ap * c1).exp()).sqrt();
    let log_speed = c1p.ln() + am / (ap + am) * l;
    (rho, log_speed)
}

/// Precomputed circuit data for n = 1..=n_max (index i holds circuit i+1).
#[derive(Debug, Clone)]
pub struct BowenTrajectory {
    pub params: BowenParams,
    /// L_n = log s_n.
    pub l: Vec<f64>,
    /// log ŝ_n.
    pub log_s_hat: Vec<f64>,
    /// First-saddle passage times t_n.
    pub t: Vec<f64>,
    /// Second-saddle passage times t̂_n.
    pub t_hat: Vec<f64>,
    /// Arrival times at the first-saddle section.
    pub tau: Vec<f64>,
    /// Arrival times at the second-saddle section.
    pub tau_hat: Vec<f64>,
}

impl BowenTrajectory {
    pub fn new(params: &BowenParams, n_max: usize) -> Result<Self, BowenError> {
        params.validate()?;
        if n_max == 0 {
            return Err(BowenError::EmptyTrajectory(0));
        }
        let mut l = Vec::with_capacity(n_max);
        let mut log_s_hat = Vec::with_capacity(n_max);
        let mut t = Vec::with_capacity(n_max);
        let mut t_hat = Vec::with_capacity(n_max);
        let mut tau = Vec::with_capacity(n_max);
        let mut tau_hat = Vec::with_capacity(n_max);
        let mut cur = params.s_init.ln();
        for i in 0..n_max {
            let (lsh, next) = advance(params, cur);
            l.push(cur);
            log_s_hat.push(lsh);
            t.push(-cur / params.alpha_plus);
            t_hat.push(-lsh / params.beta_plus);
            let tau_i = if i == 0 {
                params.t_hat0
            } else {
                tau[i - 1] + t[i - 1] + params.t_bar + t_hat[i - 1] + params.t_hat_bar
            };
            tau.push(tau_i);
            tau_hat.push(tau_i + t[i] + params.t_bar);
            cur = next;
        }
        Ok(BowenTrajectory { params: *params, l, log_s_hat, t, t_hat, tau, tau_hat })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BowenSchedule {
    /// Arrival times at the first-saddle section.
    Tau,
    /// Arrival times at the second-saddle section.
    TauHat,
    /// Instants of closest approach to the first saddle.
    TauPlusRho,
}

impl BowenSchedule {
    fn label(self) -> &'static str {
        match self {
            BowenSchedule::Tau => "tau",
            BowenSchedule::TauHat => "tau-hat",
            BowenSchedule::TauPlusRho => "tau-plus-rho",
        }
    }
}

/// Finite-time exponents (1/t)·log‖flow velocity at time t‖ along the chosen
/// schedule of observation times.
pub fn flow_ftle(
    params: &BowenParams,
    schedule: BowenSchedule,
    n_max: usize,
) -> Result<FtleSeries, BowenError> {
    let traj = BowenTrajectory::new(params, n_max)?;
    let mut s = FtleSeries::new("bowen", "flow", schedule.label());
    for i in 0..n_max {
        let (time, log_speed) = match schedule {
            BowenSchedule::Tau => {
                let am = params.alpha_minus;
                let ap = params.alpha_plus;
                let sp = 0.5 * (am * am + ap * ap * (2.0 * traj.l[i]).exp()).ln();
                (traj.tau[i], sp)
            }
            BowenSchedule::TauHat => {
                let bm = params.beta_minus;
                let bp = params.beta_plus;
                let sp = 0.5 * (bm * bm + bp * bp * (2.0 * traj.log_s_hat[i]).exp()).ln();
                (traj.tau_hat[i], sp)
            }
            BowenSchedule::TauPlusRho => {
                let (rho, log_speed) = closest_approach(params, traj.l[i]);
                (traj.tau[i] + rho, log_speed)
            }
        };
        s.push(time, log_speed / time);
    }
    Ok(s)
}

/// Theoretical limit of the closest-approach exponent series:
/// (α₊β₊ - α₋β₋)/(α₊ + α₋ + β₊ + β₋).
pub fn closest_approach_limit(params: &BowenParams) -> f64 {
    let BowenParams { alpha_plus: ap, alpha_minus: am, beta_plus: bp, beta_minus: bm, .. } =
        *params;
    (ap * bp - am * bm) / (ap + am + bp + bm)
}

/// Time averages of an observable equal to `phi_p` during first-saddle
/// passages and `phi_p_hat` during second-saddle passages (transitions and
/// the initial segment are charged the mean of the two), evaluated at the
/// cut times τₙ and τ̂ₙ for n = n_max.
///
/// As n grows these converge to two different values:
/// at τ:  (φ(p) + r·φ(p̂))/(1 + r)  with r = α₋/β₊,
/// at τ̂: (r̂·φ(p) + φ(p̂))/(1 + r̂) with r̂ = β₋/α₊.
pub fn birkhoff_averages(
    params: &BowenParams,
    phi_p: f64,
    phi_p_hat: f64,
    n_max: usize,
) -> Result<(f64, f64), BowenError> {
    let traj = BowenTrajectory::new(params, n_max)?;
    let mean = 0.5 * (phi_p + phi_p_hat);
    let n = n_max - 1;
    let mut integral = params.t_hat0 * mean;
    for k in 0..n {
        integral += traj.t[k] * phi_p
            + traj.t_hat[k] * phi_p_hat
            + (params.t_bar + params.t_hat_bar) * mean;
    }
    let avg_tau = integral / traj.tau[n];
    let integral_hat = integral + traj.t[n] * phi_p + params.t_bar * mean;
    let avg_tau_hat = integral_hat / traj.tau_hat[n];
    Ok((avg_tau, avg_tau_hat))
}

/// Limits of [`birkhoff_averages`] along the two cut schedules.
pub fn birkhoff_limits(params: &BowenParams, phi_p: f64, phi_p_hat: f64) -> (f64, f64) {
    let r = params.alpha_minus / params.beta_plus;
    let r_hat = params.beta_minus / params.alpha_plus;
    ((phi_p + r * phi_p_hat) / (1.0 + r), (r_hat * phi_p + phi_p_hat) / (1.0 + r_hat))
}
