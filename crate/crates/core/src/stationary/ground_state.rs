//! Ground states of `-(a + b‖∇u‖₂²)Δu = |u|^{q-1}u` by minimizing `J` over the
//! Nehari manifold.
//!
//! Each iteration takes a preconditioned gradient step and re-projects onto the
//! manifold along the ray. The step direction is the Riesz representer of
//! `J'(u)` for the inner product `M(A)(∇·,∇·)`, i.e. `(-Δ)⁻¹ r / M(A)` with `r`
//! the L²-residual; its pairing with `r` is `‖J'(u)‖²_{H⁻¹} / M(A)`, so the
//! stopping test and the descent direction use the same norm.

use rayon::prelude::*;
use serde::Serialize;

use crate::discretization::{grad_norm_sq, inner_unchecked, solve_poisson, Field, Mesh};
use crate::error::{KirchhoffError, Result};
use crate::functionals::{
    energy_j, j_prime_residual, nehari_i, nehari_project, ModelParams, NormPair,
};
use crate::sampling::{random_direction, rng_for, stream};

#[derive(Clone, Copy, Debug)]
pub struct GroundStateConfig {
    pub starts: usize,
    pub max_iter: usize,
    /// Stop once `‖J'(u)‖_{H⁻¹} <= residual_tol`.
    pub residual_tol: f64,
    pub armijo: f64,
    pub backtrack: f64,
    pub min_step: f64,
    pub seed: u64,
}

impl Default for GroundStateConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iter: 5_000,
            residual_tol: 1e-6,
            armijo: 1e-4,
            backtrack: 0.5,
            min_step: 1e-12,
            seed: 0,
        }
    }
}

/// Outcome of one projected-gradient run.
#[derive(Clone, Debug)]
pub struct GroundStateRun {
    pub start_id: usize,
    pub field: Field,
    pub energy: f64,
    pub nehari_abs: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub start_id: usize,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub note: Option<String>,
}

impl From<&GroundStateRun> for RunSummary {
    fn from(r: &GroundStateRun) -> Self {
        Self {
            start_id: r.start_id,
            energy: r.energy,
            residual: r.residual,
            iterations: r.iterations,
            converged: r.converged,
            note: r.note.clone(),
        }
    }
}

/// Minimal-energy converged run plus the log of every start.
#[derive(Clone, Debug)]
pub struct GroundStateReport {
    pub field: Field,
    pub energy: f64,
    pub nehari_abs: f64,
    pub residual: f64,
    pub iterations: usize,
    pub start_id: usize,
    pub runs: Vec<RunSummary>,
}

/// `‖J'(u)‖_{H⁻¹}`, the discrete dual norm of the derivative of `J`.
pub fn stationary_residual(u: &Field, p: &ModelParams) -> Result<f64> {
    crate::discretization::h_minus1_norm(&j_prime_residual(u, p))
}

/// One step: returns the new point, its energy, and the accepted step length.
fn descent_step(
    u: &Field,
    energy: f64,
    r: &Field,
    phi: &Field,
    p: &ModelParams,
    cfg: &GroundStateConfig,
) -> Result<Option<(Field, f64, f64)>> {
    let m = p.kirchhoff_coefficient(grad_norm_sq(u));
    let dir = phi.scaled(1.0 / m);
    let slope = inner_unchecked(r, &dir);
    let slack = 1e-13 * energy.abs().max(1.0);
    let mut eta = 1.0;
    while eta >= cfg.min_step {
        let trial = u.add_scaled(-eta, &dir)?;
        if let Ok(proj) = nehari_project(&trial, p) {
            let e = energy_j(&proj, p);
            if e <= energy - cfg.armijo * eta * slope + slack {
                return Ok(Some((proj, e, eta)));
            }
        }
        eta *= cfg.backtrack;
    }
    Ok(None)
}

/// Run the projected gradient iteration from a given nonzero starting field.
pub fn ground_state_from(
    start: &Field,
    p: &ModelParams,
    cfg: &GroundStateConfig,
    start_id: usize,
) -> Result<GroundStateRun> {
    let mut u = nehari_project(start, p)?;
    let mut energy = energy_j(&u, p);
    let mut note = None;
    let mut iterations = 0;
    let mut residual;
    loop {
        let r = j_prime_residual(&u, p);
        let phi = solve_poisson(&r)?;
        residual = inner_unchecked(&r, &phi).max(0.0).sqrt();
        if residual <= cfg.residual_tol {
            break;
        }
        if iterations >= cfg.max_iter {
            note = Some(format!(
                "iteration cap {} reached with residual {residual:e}",
                cfg.max_iter
            ));
            break;
        }
        match descent_step(&u, energy, &r, &phi, p, cfg)? {
            Some((next, e, _)) => {
                u = next;
                energy = e;
            }
            None => {
                note = Some(format!(
                    "line search stalled below step {:e} with residual {residual:e}",
                    cfg.min_step
                ));
                break;
            }
        }
        iterations += 1;
    }
    let np = NormPair::of(&u, p);
    Ok(GroundStateRun {
        start_id,
        nehari_abs: np.nehari(p).abs(),
        energy,
        residual,
        iterations,
        converged: residual <= cfg.residual_tol,
        field: u,
        note,
    })
}

/// Starting field for start `k`: a seeded random direction with nonzero source power.
pub fn ground_state_start(mesh: &Mesh, p: &ModelParams, seed: u64, k: usize) -> Field {
    let mut rng = rng_for(seed, stream::GROUND_STATE, k as u64);
    loop {
        let f = random_direction(mesh, &mut rng);
        let np = NormPair::of(&f, p);
        if np.grad_sq > 0.0 && np.source_power > 0.0 {
            return f;
        }
    }
}

/// Multi-start ground-state search; the converged run with the lowest energy wins.
pub fn ground_state(
    mesh: &Mesh,
    p: &ModelParams,
    cfg: &GroundStateConfig,
) -> Result<GroundStateReport> {
    if cfg.starts == 0 {
        return Err(KirchhoffError::Domain(
            "ground state needs at least one start".into(),
        ));
    }
    let runs: Vec<Result<GroundStateRun>> = (0..cfg.starts)
        .into_par_iter()
        .map(|k| ground_state_from(&ground_state_start(mesh, p, cfg.seed, k), p, cfg, k))
        .collect();
    let runs: Vec<GroundStateRun> = runs.into_iter().collect::<Result<_>>()?;
    let summaries: Vec<RunSummary> = runs.iter().map(RunSummary::from).collect();
    let best = runs.into_iter().filter(|r| r.converged).min_by(|x, y| {
        x.energy
            .total_cmp(&y.energy)
            .then(x.start_id.cmp(&y.start_id))
    });
    match best {
        Some(b) => Ok(GroundStateReport {
            field: b.field,
            energy: b.energy,
            nehari_abs: b.nehari_abs,
            residual: b.residual,
            iterations: b.iterations,
            start_id: b.start_id,
            runs: summaries,
        }),
        None => Err(KirchhoffError::Numerical(format!(
            "no ground-state start converged: {}",
            summaries
                .iter()
                .map(|s| format!(
                    "[start {}: J={:.6e}, residual={:.3e}, iters={}, {}]",
                    s.start_id,
                    s.energy,
                    s.residual,
                    s.iterations,
                    s.note.as_deref().unwrap_or("")
                ))
                .collect::<Vec<_>>()
                .join(" ")
        ))),
    }
}

/// `(⟨I'(v), v⟩, I(v))` at a candidate ground state. The first entry must be
/// negative so that the Lagrange multiplier of the Nehari constraint vanishes.
pub fn lagrange_consistency_check(v0: &Field, p: &ModelParams) -> (f64, f64) {
    let ip = crate::functionals::i_prime_pairing(v0, v0, p).expect("same mesh");
    (ip, nehari_i(v0, p))
}

/// One additional projected-gradient step from `u`; returns the energy after it.
/// Used to confirm that a converged point is a fixed point.
pub fn one_more_step(u: &Field, p: &ModelParams, cfg: &GroundStateConfig) -> Result<f64> {
    let energy = energy_j(u, p);
    let r = j_prime_residual(u, p);
    let phi = solve_poisson(&r)?;
    Ok(descent_step(u, energy, &r, &phi, p, cfg)?
        .map(|(_, e, _)| e)
        .unwrap_or(energy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::functionals::{d0_lower_bound, i_prime_pairing, nehari_tolerance, sobolev_constant};
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 5.0, 1).unwrap()
    }

    fn solve(n: usize) -> GroundStateReport {
        ground_state(
            &Mesh::unit_interval(n).unwrap(),
            &params(),
            &GroundStateConfig::default(),
        )
        .unwrap()
    }

    #[test]
    fn converged_output_is_on_the_manifold_and_stationary() {
        let p = params();
        let gs = solve(127);
        let np = NormPair::of(&gs.field, &p);
        assert!(gs.nehari_abs <= nehari_tolerance(&np, &p));
        assert!(gs.residual <= 1e-6);
        let s = sobolev_constant(gs.field.mesh(), 5.0).unwrap().value;
        assert!(gs.energy >= d0_lower_bound(&p, s).unwrap());
        assert!(stationary_residual(&gs.field, &p).unwrap() <= 1e-6);
    }

    #[test]
    fn zero_is_stationary() {
        let z = Field::zeros(Mesh::unit_interval(31).unwrap());
        assert_eq!(stationary_residual(&z, &params()).unwrap(), 0.0);
    }

    #[test]
    fn unprojected_sine_is_not_stationary() {
        let m = Mesh::unit_interval(63).unwrap();
        let u = Field::from_fn(m, |x, _| (PI * x).sin());
        let res = stationary_residual(&u, &params()).unwrap();
        assert!(res > 0.0);
        // duality oracle: (r, v) / ‖∇v‖ never exceeds the dual norm
        let r = j_prime_residual(&u, &params());
        let mut best: f64 = 0.0;
        for k in 0..100 {
            let v = random_direction(&m, &mut rng_for(1, stream::TESTING, k));
            best = best.max(inner_unchecked(&r, &v).abs() / grad_norm_sq(&v).sqrt());
        }
        assert!(best <= res * (1.0 + 1e-10));
        // the representer itself attains it
        let phi = solve_poisson(&r).unwrap();
        let attained = inner_unchecked(&r, &phi) / grad_norm_sq(&phi).sqrt();
        assert!((attained - res).abs() <= 1e-8 * res);
    }

    #[test]
    fn sign_symmetry() {
        let p = params();
        let m = Mesh::unit_interval(127).unwrap();
        let cfg = GroundStateConfig::default();
        let start = ground_state_start(&m, &p, 0, 0);
        let plus = ground_state_from(&start, &p, &cfg, 0).unwrap();
        let minus = ground_state_from(&start.scaled(-1.0), &p, &cfg, 0).unwrap();
        assert!(plus.converged && minus.converged);
        assert!((plus.energy - minus.energy).abs() <= 1e-10 * plus.energy);
    }

    #[test]
    fn fixed_point_and_scaled_copies() {
        let p = params();
        let gs = solve(127);
        let cfg = GroundStateConfig::default();
        let after = one_more_step(&gs.field, &p, &cfg).unwrap();
        assert!((after - gs.energy).abs() <= 1e-10 * gs.energy);
        for c in [0.5, 2.0] {
            assert!(stationary_residual(&gs.field.scaled(c), &p).unwrap() > 1e-3);
        }
    }

    #[test]
    fn lagrange_multiplier_vanishes() {
        let p = params();
        let gs = solve(127);
        let (ip, i) = lagrange_consistency_check(&gs.field, &p);
        let a = grad_norm_sq(&gs.field);
        let expected = -p.a() * (p.q() - 1.0) * a - p.b() * (p.q() - 3.0) * a * a;
        assert!(ip < 0.0);
        assert!((ip - expected).abs() <= 1e-6 * expected.abs());
        assert!(
            (ip - i_prime_pairing(&gs.field, &gs.field, &p).unwrap()).abs() <= 1e-10 * ip.abs()
        );
        assert!(i.abs() <= nehari_tolerance(&NormPair::of(&gs.field, &p), &p));
    }

    #[test]
    fn random_nehari_samples_do_not_beat_the_ground_state() {
        let p = params();
        let gs = solve(63);
        let m = *gs.field.mesh();
        for k in 0..200 {
            let w = random_direction(&m, &mut rng_for(3, stream::TESTING, k));
            let v = nehari_project(&w, &p).unwrap();
            assert!(gs.energy <= energy_j(&v, &p) * (1.0 + 1e-12));
        }
    }
}
