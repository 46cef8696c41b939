//! Potential-well analysis: depth `d`, the stable/unstable sets, and the
//! two-sided bounds on `‖u‖₂` over Nehari level sets.
//!
//! Everything here is relative to the numerically estimated depth `d_est`;
//! the continuum `d` is never available.

mod bounds;
mod gn;

use serde::Serialize;

use crate::discretization::{lp_power, Field, Mesh};
use crate::error::Result;
use crate::functionals::{
    d0_lower_bound, nehari_tolerance, sobolev_constant_with, ModelParams, NormPair, SobolevConfig,
};
use crate::stationary::{ground_state, GroundStateConfig, RunSummary};

pub use bounds::{
    level_set_bounds, sample_nehari_levelset, Branch, LevelSetBounds, LevelSetSample,
};
pub use gn::{
    gn_constant_estimate, gn_constant_estimate_with, gn_ratio, GnConfig, GnEstimate,
    GN_SAFETY_FACTOR,
};

/// Depth estimate `d_est` with the lower bound `d₀` and the data behind both.
#[derive(Clone, Debug)]
pub struct WellReport {
    pub d_est: f64,
    pub d0: f64,
    pub sobolev: f64,
    pub num_starts: usize,
    pub best_start_id: usize,
    pub runs: Vec<RunSummary>,
    pub ground_state: Field,
    pub ground_state_residual: f64,
}

impl WellReport {
    /// Energies of the runs that converged; `d_est` is their minimum.
    pub fn per_start_energies(&self) -> Vec<f64> {
        self.runs
            .iter()
            .filter(|r| r.converged)
            .map(|r| r.energy)
            .collect()
    }

    /// `(max - min) / min` over converged starts.
    pub fn spread(&self) -> f64 {
        let e = self.per_start_energies();
        let max = e.iter().cloned().fold(f64::MIN, f64::max);
        let min = e.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / min.abs()
    }
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WellConfig {
    pub ground_state: GroundStateConfig,
    pub sobolev: SobolevConfig,
}

/// Estimate `d = inf_N J` by multi-start Nehari-constrained minimization and
/// attach `S_h` and `d₀`.
pub fn well_depth(mesh: &Mesh, p: &ModelParams, cfg: &WellConfig) -> Result<WellReport> {
    let gs = ground_state(mesh, p, &cfg.ground_state)?;
    let s = sobolev_constant_with(mesh, p.q(), cfg.sobolev)?;
    let d0 = d0_lower_bound(p, s.value)?;
    Ok(WellReport {
        d_est: gs.energy,
        d0,
        sobolev: s.value,
        num_starts: gs.runs.len(),
        best_start_id: gs.start_id,
        runs: gs.runs,
        ground_state: gs.field,
        ground_state_residual: gs.residual,
    })
}

/// Membership of a state relative to a depth `d`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Classification {
    /// `I > 0`, `J < d`: the stable set.
    InsideW,
    /// `I < 0`, `J < d`: the unstable set.
    InsideV,
    /// `|I| <= tol`, `u ≠ 0`.
    OnNehari,
    /// Nonzero, off the manifold, `J >= d`.
    EnergyAboveD,
    /// The zero state, which belongs to `W` by definition.
    Zero,
}

impl Classification {
    pub fn label(&self) -> &'static str {
        match self {
            Self::InsideW => "InsideW",
            Self::InsideV => "InsideV",
            Self::OnNehari => "OnNehari",
            Self::EnergyAboveD => "EnergyAboveD",
            Self::Zero => "Zero",
        }
    }
}

/// Classify `u` with the scale-aware Nehari tolerance.
pub fn classify(u: &Field, p: &ModelParams, d: f64) -> Classification {
    if lp_power(u, 2.0) == 0.0 {
        return Classification::Zero;
    }
    let np = NormPair::of(u, p);
    let i = np.nehari(p);
    let j = np.energy(p);
    let tol = nehari_tolerance(&np, p);
    if i.abs() <= tol && np.grad_sq > 0.0 {
        Classification::OnNehari
    } else if i > tol && j < d {
        Classification::InsideW
    } else if i < -tol && j < d {
        Classification::InsideV
    } else {
        Classification::EnergyAboveD
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::nehari_project;
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 5.0, 1).unwrap()
    }

    #[test]
    fn classify_examples() {
        let p = params();
        let m = Mesh::unit_interval(63).unwrap();
        let d = 1.0e4;
        assert_eq!(classify(&Field::zeros(m), &p, d), Classification::Zero);
        let sine = Field::from_fn(m, |x, _| (PI * x).sin());
        assert_eq!(classify(&sine.scaled(1e-3), &p, d), Classification::InsideW);
        let on = nehari_project(&sine, &p).unwrap();
        assert_eq!(classify(&on, &p, d), Classification::OnNehari);
        // far out on the ray: I < 0 and J < 0 < d
        assert_eq!(classify(&sine.scaled(30.0), &p, d), Classification::InsideV);
        // above the well: I > 0 but J >= d with a tiny d
        assert_eq!(classify(&sine, &p, 1e-3), Classification::EnergyAboveD);
    }
}
