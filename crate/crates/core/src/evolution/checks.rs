//! Post-processing of trajectories: energy identity, the `d/dt ‖u‖₂² = -2I`
//! identity, and the explicit exponential decay bounds.

use serde::Serialize;

use super::Trajectory;
use crate::error::{KirchhoffError, Result};
use crate::functionals::ModelParams;

/// `max_k |D(t_k) + J(u(t_k)) - J(u₀)| / max(1, |J(u₀)|)`.
pub fn energy_identity_residual(traj: &Trajectory) -> f64 {
    let Some(&j0) = traj.energy.first() else {
        return 0.0;
    };
    let scale = j0.abs().max(1.0);
    traj.energy
        .iter()
        .zip(&traj.dissipation)
        .map(|(j, d)| (d + j - j0).abs() / scale)
        .fold(0.0, f64::max)
}

/// Central-difference check of `d/dt ‖u‖₂² = -2 I(u)` at interior snapshots:
/// `max_k |Δ‖u‖₂²/Δt + 2I_k| / max(1, 2|I_k|)`.
pub fn dl2_identity_check(traj: &Trajectory) -> f64 {
    let n = traj.len();
    let mut worst: f64 = 0.0;
    for k in 1..n.saturating_sub(1) {
        let dt = traj.times[k + 1] - traj.times[k - 1];
        let deriv = (traj.l2_sq[k + 1] - traj.l2_sq[k - 1]) / dt;
        let i = traj.nehari[k];
        worst = worst.max((deriv + 2.0 * i).abs() / (2.0 * i.abs()).max(1.0));
    }
    worst
}

/// Explicit constants of the exponential decay estimates.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayRates {
    pub c1: f64,
    pub c2: f64,
    pub alpha: f64,
    pub lambda1: f64,
    /// `r = (J(u₀)/d₀)^{(q-1)/2}`.
    pub ratio: f64,
    pub j0: f64,
    pub d0: f64,
}

/// `C₁ = 2aλ₁(1 - r)`, `α = 8(1 - r)/(2 - 4r/(q+1))`,
/// `C₂ = aλ₁α(q-1)/(aλ₁(q-1) + 2(q+1))`.
///
/// `J₀ = 0` is accepted for the zero state (then `r = 0`).
pub fn decay_rates(j0: f64, d0: f64, p: &ModelParams, lambda1: f64) -> Result<DecayRates> {
    if !(d0 > 0.0 && lambda1 > 0.0) {
        return Err(KirchhoffError::Domain(format!(
            "decay rates need d0 > 0 and λ₁ > 0 (d0 = {d0}, λ₁ = {lambda1})"
        )));
    }
    if !(j0 >= 0.0 && j0 < d0) {
        return Err(KirchhoffError::Domain(format!(
            "explicit decay rates require 0 < J(u0) < d0; got J(u0) = {j0:e}, d0 = {d0:e}"
        )));
    }
    let (a, q) = (p.a(), p.q());
    let r = (j0 / d0).powf((q - 1.0) / 2.0);
    let c1 = 2.0 * a * lambda1 * (1.0 - r);
    let alpha = 8.0 * (1.0 - r) / (2.0 - 4.0 * r / (q + 1.0));
    let c2 = a * lambda1 * alpha * (q - 1.0) / (a * lambda1 * (q - 1.0) + 2.0 * (q + 1.0));
    Ok(DecayRates {
        c1,
        c2,
        alpha,
        lambda1,
        ratio: r,
        j0,
        d0,
    })
}

/// Relative slack allowed on every decay inequality (time-discretization budget).
pub const DECAY_SLACK: f64 = 0.02;

/// Worst relative excess `(value - bound) / bound` of one inequality.
#[derive(Clone, Debug, Serialize)]
pub struct InequalityCheck {
    pub name: &'static str,
    pub max_violation: f64,
    pub worst_time: f64,
    pub pass: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayVerification {
    pub rates: DecayRates,
    pub window: f64,
    pub slack: f64,
    pub checks: Vec<InequalityCheck>,
    /// Least-squares exponent of `‖u‖₂²`; compared to `C₁` one-sidedly.
    pub empirical_l2_rate: Option<f64>,
    pub empirical_h1_rate: Option<f64>,
    pub empirical_h_rate: Option<f64>,
    pub l2_rate_check: InequalityCheck,
}

impl DecayVerification {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass) && self.l2_rate_check.pass
    }
}

/// Least-squares slope `k` of `ln(series) ≈ c - k t` over snapshots with
/// `t <= window` and `series > 1e-12`. `None` with fewer than 3 usable points.
pub fn fit_decay_exponent(times: &[f64], series: &[f64], window: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(series)
        .filter(|(&t, &s)| t <= window && s > 1e-12)
        .map(|(&t, &s)| (t, s.ln()))
        .collect();
    if pts.len() < 3 {
        return None;
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    Some(-sxy / sxx)
}

fn check(
    name: &'static str,
    times: &[f64],
    values: &[f64],
    bound: impl Fn(f64) -> f64,
    window: f64,
    slack: f64,
) -> InequalityCheck {
    let mut worst = f64::NEG_INFINITY;
    let mut worst_time = 0.0;
    for (&t, &v) in times.iter().zip(values) {
        if t > window {
            break;
        }
        let b = bound(t);
        let excess = if b > 0.0 {
            (v - b) / b
        } else if v <= b {
            0.0
        } else {
            f64::INFINITY
        };
        if excess > worst {
            worst = excess;
            worst_time = t;
        }
    }
    if worst == f64::NEG_INFINITY {
        worst = 0.0;
    }
    InequalityCheck {
        name,
        max_violation: worst,
        worst_time,
        pass: worst <= slack,
    }
}

/// Check the four exponential bounds at every snapshot with `t <= window`
/// (default window `5/C₂`), each with relative slack `slack`.
pub fn verify_decay(
    traj: &Trajectory,
    rates: &DecayRates,
    p: &ModelParams,
    sobolev: f64,
    window: Option<f64>,
    slack: f64,
) -> Result<DecayVerification> {
    let Some(&j0) = traj.energy.first() else {
        return Err(KirchhoffError::Structure("empty trajectory".into()));
    };
    if !(j0 < rates.d0) {
        return Err(KirchhoffError::Domain(format!(
            "decay verification needs J(u0) < d0; got J(u0) = {j0:e}, d0 = {:e}",
            rates.d0
        )));
    }
    let (a, q) = (p.a(), p.q());
    let window = window.unwrap_or(5.0 / rates.c2);
    let l2_0 = traj.l2_sq[0];
    let h0 = j0 + l2_0;
    let grad_coef = 2.0 * (q + 1.0) / (a * (q - 1.0));
    let (c1, c2) = (rates.c1, rates.c2);
    let t = &traj.times;
    let lq1_sq: Vec<f64> = traj.lq1.iter().map(|v| v * v).collect();
    let checks = vec![
        check(
            "L2sq <= L2sq(0) exp(-C1 t)",
            t,
            &traj.l2_sq,
            |s| l2_0 * (-c1 * s).exp(),
            window,
            slack,
        ),
        check(
            "H1sq <= 2(q+1)/(a(q-1)) H(0) exp(-C2 t)",
            t,
            &traj.h1_sq,
            |s| grad_coef * h0 * (-c2 * s).exp(),
            window,
            slack,
        ),
        check(
            "Lq1^2 <= 2 S^2 (q+1)/(a(q-1)) H(0) exp(-C2 t)",
            t,
            &lq1_sq,
            |s| sobolev * sobolev * grad_coef * h0 * (-c2 * s).exp(),
            window,
            slack,
        ),
        check(
            "H <= H(0) exp(-C2 t)",
            t,
            &traj.aux_h,
            |s| h0 * (-c2 * s).exp(),
            window,
            slack,
        ),
    ];
    let empirical_l2_rate = fit_decay_exponent(t, &traj.l2_sq, window);
    let l2_rate_check = match empirical_l2_rate {
        Some(k) => {
            let deficit = if c1 > 0.0 { (c1 - k) / c1 } else { 0.0 };
            InequalityCheck {
                name: "empirical L2 exponent >= C1",
                max_violation: deficit,
                worst_time: window,
                pass: deficit <= slack,
            }
        }
        None => InequalityCheck {
            name: "empirical L2 exponent >= C1",
            max_violation: 0.0,
            worst_time: 0.0,
            pass: true,
        },
    };
    Ok(DecayVerification {
        rates: *rates,
        window,
        slack,
        checks,
        empirical_l2_rate,
        empirical_h1_rate: fit_decay_exponent(t, &traj.h1_sq, window),
        empirical_h_rate: fit_decay_exponent(t, &traj.aux_h, window),
        l2_rate_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 5.0, 1).unwrap()
    }

    #[test]
    fn rate_formulas() {
        let p = params();
        let lam = PI * PI;
        // r = 1/16 with q = 5: J0/d0 = (1/16)^{1/2} = 1/4
        let r = decay_rates(0.25, 1.0, &p, lam).unwrap();
        assert!((r.ratio - 1.0 / 16.0).abs() < 1e-15);
        assert!((r.c1 - 2.0 * lam * 15.0 / 16.0).abs() < 1e-12);
        assert!((r.c1 - 18.506).abs() < 1e-3);
        let z = decay_rates(0.0, 1.0, &p, lam).unwrap();
        assert_eq!(z.alpha, 4.0);
        assert!((z.c2 - lam * 16.0 / (4.0 * lam + 12.0)).abs() < 1e-12);
        assert!((z.c2 - 3.06757).abs() < 1e-5);
        let near = decay_rates(1.0 - 1e-12, 1.0, &p, lam).unwrap();
        assert!(near.c1 < 1e-9 && near.alpha < 1e-9);
        assert!(decay_rates(1.0, 1.0, &p, lam).is_err());
        assert!(decay_rates(2.0, 1.0, &p, lam).is_err());
    }

    #[test]
    fn fit_recovers_exponent() {
        let t: Vec<f64> = (0..100).map(|k| k as f64 * 0.01).collect();
        let s: Vec<f64> = t.iter().map(|t| 3.0 * (-7.5 * t).exp()).collect();
        assert!((fit_decay_exponent(&t, &s, 10.0).unwrap() - 7.5).abs() < 1e-10);
        assert!(fit_decay_exponent(&t[..2], &s[..2], 10.0).is_none());
    }
}
