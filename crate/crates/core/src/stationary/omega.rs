use serde::Serialize;

use super::{ground_state_from, stationary_residual, GroundStateConfig};
use crate::discretization::{first_eigenvalue, grad_norm_sq, Field};
use crate::error::{KirchhoffError, Result};
use crate::evolution::{Outcome, Trajectory};
use crate::functionals::ModelParams;

#[derive(Clone, Copy, Debug)]
pub struct OmegaConfig {
    /// Residual (and gradient-norm) level at which a snapshot counts as stationary.
    pub tol: f64,
    /// Settings of the polish run seeded from the final snapshot.
    pub polish: GroundStateConfig,
}

impl Default for OmegaConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            polish: GroundStateConfig::default(),
        }
    }
}

/// How the limit candidate was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LimitKind {
    /// The trajectory decayed to within tolerance of the trivial solution.
    Zero,
    /// The final snapshot is already stationary.
    FinalSnapshot,
    /// A ground-state iteration from the final snapshot converged.
    Polished,
    /// The polish run did not converge; `u*` is its last iterate.
    Unconverged,
}

#[derive(Clone, Debug)]
pub struct OmegaLimitReport {
    /// Selected times `t_k` (strictly increasing).
    pub times: Vec<f64>,
    /// Snapshot indices behind `times`.
    pub indices: Vec<usize>,
    /// `‖J'(u(t_k))‖_{H⁻¹}`.
    pub residuals: Vec<f64>,
    pub energies: Vec<f64>,
    /// `‖δu/dt‖₂` at `t_k`.
    pub ut_l2: Vec<f64>,
    /// `max_k residual_k / (‖δu/dt‖₂(t_k)/√λ₁)` over selected `k > 0`.
    pub residual_bound_ratio: f64,
    pub lambda1: f64,
    pub u_star: Field,
    pub limit_kind: LimitKind,
    /// `‖∇(u(t_K) - u*)‖₂`.
    pub distance: f64,
    pub final_grad_norm: f64,
    /// Estimate of `lim J(u(t))`: `J(u*)`.
    pub j0: f64,
}

impl OmegaLimitReport {
    /// Residuals at the selected times never increase.
    pub fn residuals_monotone(&self) -> bool {
        self.residuals.windows(2).all(|w| w[1] <= w[0])
    }

    pub fn energies_monotone(&self, tol: f64) -> bool {
        self.energies.windows(2).all(|w| w[1] <= w[0] + tol)
    }
}

/// Select the snapshots whose `‖δu/dt‖₂` is a running minimum, measure the
/// stationary residual there, and pick a limit candidate `u*`.
pub fn omega_limit_analysis(
    traj: &Trajectory,
    p: &ModelParams,
    cfg: &OmegaConfig,
) -> Result<OmegaLimitReport> {
    if matches!(traj.outcome, Outcome::BlowUp { .. }) {
        return Err(KirchhoffError::Domain(
            "ω-limit analysis needs a global trajectory, got a blow-up run".into(),
        ));
    }
    if traj.fields.len() != traj.len() || traj.is_empty() {
        return Err(KirchhoffError::Structure(format!(
            "trajectory has {} snapshots but {} stored fields; rerun with store_fields",
            traj.len(),
            traj.fields.len()
        )));
    }
    let last = traj.len() - 1;
    let mut indices = Vec::new();
    let mut record = f64::INFINITY;
    for k in 1..=last {
        if traj.ut_l2[k] <= record {
            record = traj.ut_l2[k];
            indices.push(k);
        }
    }
    if indices.last() != Some(&last) {
        indices.push(last);
    }
    let mesh = *traj.fields[0].mesh();
    let lambda1 = first_eigenvalue(&mesh);
    let mut residuals = Vec::with_capacity(indices.len());
    for &k in &indices {
        residuals.push(stationary_residual(&traj.fields[k], p)?);
    }
    let mut ratio: f64 = 0.0;
    for (&k, &r) in indices.iter().zip(&residuals) {
        let bound = traj.ut_l2[k] / lambda1.sqrt();
        if bound > 0.0 {
            ratio = ratio.max(r / bound);
        } else if r > 0.0 {
            ratio = f64::INFINITY;
        }
    }
    let final_field = &traj.fields[last];
    let final_grad_norm = grad_norm_sq(final_field).sqrt();
    let final_residual = *residuals.last().unwrap_or(&0.0);
    let (u_star, limit_kind) = if final_grad_norm <= cfg.tol {
        (Field::zeros(mesh), LimitKind::Zero)
    } else if final_residual <= cfg.tol {
        (final_field.clone(), LimitKind::FinalSnapshot)
    } else {
        let run = ground_state_from(final_field, p, &cfg.polish, 0)?;
        let kind = if run.converged {
            LimitKind::Polished
        } else {
            LimitKind::Unconverged
        };
        (run.field, kind)
    };
    let distance = grad_norm_sq(&final_field.sub(&u_star)?).sqrt();
    let j0 = crate::functionals::energy_j(&u_star, p);
    Ok(OmegaLimitReport {
        times: indices.iter().map(|&k| traj.times[k]).collect(),
        energies: indices.iter().map(|&k| traj.energy[k]).collect(),
        ut_l2: indices.iter().map(|&k| traj.ut_l2[k]).collect(),
        indices,
        residuals,
        residual_bound_ratio: ratio,
        lambda1,
        u_star,
        limit_kind,
        distance,
        final_grad_norm,
        j0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Mesh;
    use crate::evolution::{simulate, TimeStepConfig};
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 5.0, 1).unwrap()
    }

    #[test]
    fn zero_data_gives_zero_report() {
        let m = Mesh::unit_interval(31).unwrap();
        let mut cfg = TimeStepConfig::new(1e-3, 0.1);
        cfg.store_fields = true;
        let tr = simulate(&Field::zeros(m), &params(), &cfg).unwrap();
        let rep = omega_limit_analysis(&tr, &params(), &OmegaConfig::default()).unwrap();
        assert_eq!(rep.limit_kind, LimitKind::Zero);
        assert!(rep.residuals.iter().all(|&r| r == 0.0));
        assert_eq!((rep.distance, rep.j0, rep.final_grad_norm), (0.0, 0.0, 0.0));
    }

    #[test]
    fn missing_fields_is_structural() {
        let m = Mesh::unit_interval(31).unwrap();
        let u = Field::from_fn(m, |x, _| 1e-3 * (PI * x).sin());
        let tr = simulate(&u, &params(), &TimeStepConfig::new(1e-3, 0.01)).unwrap();
        assert!(matches!(
            omega_limit_analysis(&tr, &params(), &OmegaConfig::default()),
            Err(KirchhoffError::Structure(_))
        ));
    }

    #[test]
    fn small_data_limit_is_zero() {
        let p = params();
        let m = Mesh::unit_interval(63).unwrap();
        let u = Field::from_fn(m, |x, _| 1e-3 * (PI * x).sin());
        let mut cfg = TimeStepConfig::new(1e-3, 1.5);
        cfg.store_fields = true;
        cfg.snapshot_stride = 10;
        let tr = simulate(&u, &p, &cfg).unwrap();
        let rep = omega_limit_analysis(&tr, &p, &OmegaConfig::default()).unwrap();
        assert_eq!(rep.limit_kind, LimitKind::Zero);
        assert!(rep.residuals_monotone());
        assert!(rep.energies_monotone(1e-14));
        assert!(rep.times.windows(2).all(|w| w[1] > w[0]));
        assert!(*rep.residuals.last().unwrap() < 1e-6);
        assert!(
            rep.residual_bound_ratio <= 1.2,
            "{}",
            rep.residual_bound_ratio
        );
    }
}
