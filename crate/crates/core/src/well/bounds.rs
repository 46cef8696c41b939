use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{first_eigenvalue, lp_power, Field, Mesh};
use crate::error::{KirchhoffError, Result};
use crate::functionals::{nehari_project, nehari_tolerance, ModelParams, NormPair};
use crate::sampling::{random_direction, rng_for, stream};

/// Which of the two `K₁` formulas applies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `q <= 1 + 4/n`
    Subcritical,
    /// `q > 1 + 4/n`
    Supercritical,
}

/// Constants bounding `λ_s = inf ‖u‖₂` and `Λ_s = sup ‖u‖₂` over
/// `N_s = N ∩ {J < s}`, optionally with the sampled values of both.
#[derive(Clone, Debug, Serialize)]
pub struct LevelSetBounds {
    pub s: f64,
    pub d: f64,
    pub k1: f64,
    pub k2: f64,
    /// GN constant actually used in `K₁` (estimate times safety factor, if any).
    pub gn_constant: f64,
    pub gamma: f64,
    pub theta: f64,
    pub branch: Branch,
    pub lambda1: f64,
    pub empirical_lambda_s: Option<f64>,
    pub empirical_cap_lambda_s: Option<f64>,
    pub sample_count: usize,
}

impl LevelSetBounds {
    pub fn with_samples(mut self, sample: &LevelSetSample) -> Self {
        self.empirical_lambda_s = sample.lambda_s;
        self.empirical_cap_lambda_s = sample.cap_lambda_s;
        self.sample_count = sample.retained.len();
        self
    }

    /// Upper bound on `‖∇u‖₂²` for `u ∈ N_s` obtained by dropping the quartic term.
    pub fn grad_sq_cap(&self, p: &ModelParams) -> f64 {
        2.0 * (p.q() + 1.0) * self.s / (p.a() * (p.q() - 1.0))
    }
}

/// `θ`, `γ`, `K₁` (two branches) and `K₂ = sqrt(2(q+1)s / (aλ₁(q-1)))` with
/// the discrete `λ₁`.
pub fn level_set_bounds(
    s: f64,
    p: &ModelParams,
    mesh: &Mesh,
    d: f64,
    gn_constant: f64,
    sobolev: f64,
) -> Result<LevelSetBounds> {
    if !(s > d) {
        return Err(KirchhoffError::Domain(format!(
            "level s = {s} must exceed the depth d = {d}"
        )));
    }
    if !(d > 0.0 && gn_constant > 0.0 && sobolev > 0.0) {
        return Err(KirchhoffError::Domain(format!(
            "d, G, S must be positive (d = {d}, G = {gn_constant}, S = {sobolev})"
        )));
    }
    let (a, q) = (p.a(), p.q());
    let n = p.dim() as f64;
    let gamma = p.gamma();
    if !(gamma > 0.0) {
        return Err(KirchhoffError::Domain(format!(
            "γ = {gamma} must be positive"
        )));
    }
    let theta = (2.0 * (q + 1.0) * d / (q - 1.0)).powf(1.0 / (q + 1.0)) / sobolev;
    let lambda1 = first_eigenvalue(mesh);
    let grad_cap = 2.0 * (q + 1.0) * s / (a * (q - 1.0));
    let lead = (a / gn_constant).powf(1.0 / gamma);
    let expo_num = 4.0 - n * (q - 1.0);
    let (branch, k1) = if q <= 1.0 + 4.0 / n {
        (
            Branch::Subcritical,
            lead * theta.powf(expo_num / (2.0 * gamma)),
        )
    } else {
        (
            Branch::Supercritical,
            lead * grad_cap.powf(expo_num / (4.0 * gamma)),
        )
    };
    let k2 = (grad_cap / lambda1).sqrt();
    Ok(LevelSetBounds {
        s,
        d,
        k1,
        k2,
        gn_constant,
        gamma,
        theta,
        branch,
        lambda1,
        empirical_lambda_s: None,
        empirical_cap_lambda_s: None,
        sample_count: 0,
    })
}

/// Sampled portion of `N_s`.
#[derive(Clone, Debug)]
pub struct LevelSetSample {
    pub generated: usize,
    pub retained: Vec<Field>,
    /// `min ‖u‖₂` over retained samples; `None` when nothing was retained.
    pub lambda_s: Option<f64>,
    /// `max ‖u‖₂` over retained samples.
    pub cap_lambda_s: Option<f64>,
}

/// Project `count` seeded random directions onto the Nehari manifold and keep
/// those with `J < s`. An empty result means the sampling missed `N_s`, not that
/// it is empty.
pub fn sample_nehari_levelset(
    s: f64,
    p: &ModelParams,
    mesh: &Mesh,
    count: usize,
    seed: u64,
) -> Result<LevelSetSample> {
    if count == 0 {
        return Err(KirchhoffError::Domain(
            "level-set sampling needs count >= 1".into(),
        ));
    }
    let projected: Vec<Option<Field>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mut rng = rng_for(seed, stream::LEVEL_SET, k as u64);
            let dir = random_direction(mesh, &mut rng);
            let v = nehari_project(&dir, p).ok()?;
            let np = NormPair::of(&v, p);
            let ok = np.nehari(p).abs() <= nehari_tolerance(&np, p) && np.energy(p) < s;
            ok.then_some(v)
        })
        .collect();
    let retained: Vec<Field> = projected.into_iter().flatten().collect();
    let norms: Vec<f64> = retained.iter().map(|v| lp_power(v, 2.0).sqrt()).collect();
    let lambda_s = norms.iter().cloned().reduce(f64::min);
    let cap_lambda_s = norms.iter().cloned().reduce(f64::max);
    Ok(LevelSetSample {
        generated: count,
        retained,
        lambda_s,
        cap_lambda_s,
    })
}
