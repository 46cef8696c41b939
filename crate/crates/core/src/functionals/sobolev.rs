//! Discrete embedding constant `S = sup ‖w‖_{q+1} / ‖∇w‖₂` and the bound `d₀`.

use rayon::prelude::*;
use serde::Serialize;

use super::params::ModelParams;
use crate::discretization::{
    first_eigenfunction, grad_norm_sq, lp_power, solve_shifted, Field, Mesh,
};
use crate::error::{KirchhoffError, Result};
use crate::sampling::{random_direction, rng_for, stream};

/// Multi-start settings for [`sobolev_constant`].
#[derive(Clone, Copy, Debug)]
pub struct SobolevConfig {
    pub starts: usize,
    pub max_iter: usize,
    pub rel_tol: f64,
    pub seed: u64,
}

impl Default for SobolevConfig {
    fn default() -> Self {
        Self {
            starts: 8,
            max_iter: 20_000,
            rel_tol: 1e-13,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SobolevStart {
    pub start: usize,
    pub ratio: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Best ratio over all starts together with the per-start log.
#[derive(Clone, Debug)]
pub struct SobolevEstimate {
    pub value: f64,
    pub best_start: usize,
    pub starts: Vec<SobolevStart>,
    pub maximizer: Field,
    /// Non-fatal issues, e.g. starts that hit the iteration cap.
    pub warnings: Vec<String>,
}

impl SobolevEstimate {
    /// `(max - min) / max` over the starts that converged.
    pub fn spread(&self) -> f64 {
        let conv: Vec<f64> = self
            .starts
            .iter()
            .filter(|s| s.converged)
            .map(|s| s.ratio)
            .collect();
        if conv.is_empty() {
            return f64::NAN;
        }
        let max = conv.iter().cloned().fold(f64::MIN, f64::max);
        let min = conv.iter().cloned().fold(f64::MAX, f64::min);
        (max - min) / max
    }
}

/// `‖w‖_{q+1} / ‖∇w‖₂` for one field; any field certifies `S ≥` this value.
pub fn sobolev_ratio(w: &Field, q: f64) -> f64 {
    let p = q + 1.0;
    lp_power(w, p).powf(1.0 / p) / grad_norm_sq(w).sqrt()
}

/// Ascent in the `H¹₀` metric for the ratio on the unit sphere `‖∇w‖₂ = 1`:
/// `w ← (-Δ)⁻¹(|w|^{p-2} w)`, renormalized. Because `‖w‖_p^p` is convex, every
/// step is non-decreasing, and for `p = 2` the scheme is inverse power iteration.
fn ascend(
    start: Field,
    q: f64,
    max_iter: usize,
    rel_tol: f64,
) -> Result<(Field, f64, usize, bool)> {
    let p = q + 1.0;
    let normalize = |w: Field| -> Field {
        let g = grad_norm_sq(&w).sqrt();
        w.scaled(1.0 / g)
    };
    let mut w = normalize(start);
    let mut ratio = sobolev_ratio(&w, q);
    for it in 1..=max_iter {
        let rhs = w.map(|v| v.abs().powf(p - 2.0) * v);
        let next = normalize(solve_shifted(&rhs, 0.0, 1.0)?);
        let r = sobolev_ratio(&next, q);
        w = next;
        let done = (r - ratio).abs() <= rel_tol * r;
        ratio = r;
        if done {
            return Ok((w, ratio, it, true));
        }
    }
    Ok((w, ratio, max_iter, false))
}

/// Estimate the optimal discrete embedding constant `H¹₀ → L^{q+1}` by
/// multi-start ascent. Start 0 is the first eigenfunction; the others are
/// seeded random directions.
pub fn sobolev_constant(mesh: &Mesh, q: f64) -> Result<SobolevEstimate> {
    sobolev_constant_with(mesh, q, SobolevConfig::default())
}

pub fn sobolev_constant_with(mesh: &Mesh, q: f64, cfg: SobolevConfig) -> Result<SobolevEstimate> {
    if !(q + 1.0 >= 2.0) {
        return Err(KirchhoffError::Domain(format!(
            "Sobolev constant needs q + 1 >= 2, got q = {q}"
        )));
    }
    if cfg.starts == 0 {
        return Err(KirchhoffError::Domain(
            "at least one start is required".into(),
        ));
    }
    let runs: Vec<Result<(Field, f64, usize, bool)>> = (0..cfg.starts)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                first_eigenfunction(mesh)
            } else {
                let mut rng = rng_for(cfg.seed, stream::SOBOLEV, k as u64);
                let mut f = random_direction(mesh, &mut rng);
                while grad_norm_sq(&f) == 0.0 {
                    f = random_direction(mesh, &mut rng);
                }
                f
            };
            ascend(start, q, cfg.max_iter, cfg.rel_tol)
        })
        .collect();

    let mut starts = Vec::with_capacity(runs.len());
    let mut best: Option<(usize, Field, f64)> = None;
    let mut warnings = Vec::new();
    for (k, run) in runs.into_iter().enumerate() {
        let (field, ratio, iterations, converged) = run?;
        if !converged {
            warnings.push(format!(
                "start {k} reached {iterations} iterations without meeting tolerance; ratio {ratio:.12e}"
            ));
        }
        starts.push(SobolevStart {
            start: k,
            ratio,
            iterations,
            converged,
        });
        if best.as_ref().map_or(true, |(_, _, r)| ratio > *r) {
            best = Some((k, field, ratio));
        }
    }
    let (best_start, maximizer, value) = best.expect("at least one start");
    Ok(SobolevEstimate {
        value,
        best_start,
        starts,
        maximizer,
        warnings,
    })
}

/// `d₀ = [a(q-1)/(2(q+1))] (a / S^{q+1})^{2/(q-1)}`, a lower bound for the well depth.
pub fn d0_lower_bound(p: &ModelParams, sobolev: f64) -> Result<f64> {
    if !(sobolev > 0.0 && sobolev.is_finite()) {
        return Err(KirchhoffError::Domain(format!(
            "Sobolev constant must be positive, got {sobolev}"
        )));
    }
    let (a, q) = (p.a(), p.q());
    Ok(a * (q - 1.0) / (2.0 * (q + 1.0)) * (a / sobolev.powf(q + 1.0)).powf(2.0 / (q - 1.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::first_eigenvalue;

    #[test]
    fn d0_hand_values() {
        let p = ModelParams::new(1.0, 1.0, 5.0, 1).unwrap();
        assert!((d0_lower_bound(&p, 1.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let p2 = ModelParams::new(2.0, 1.0, 5.0, 1).unwrap();
        assert!((d0_lower_bound(&p2, 1.0).unwrap() - 0.94281).abs() < 1e-5);
        let mut prev = f64::INFINITY;
        for k in 1..50 {
            let d0 = d0_lower_bound(&p, 0.1 * k as f64).unwrap();
            assert!(d0 < prev);
            prev = d0;
        }
        assert!(d0_lower_bound(&p, 0.0).is_err());
    }

    #[test]
    fn quadratic_case_is_rayleigh_quotient() {
        let m = Mesh::unit_interval(63).unwrap();
        let est = sobolev_constant(&m, 1.0).unwrap();
        let expected = 1.0 / first_eigenvalue(&m).sqrt();
        assert!((est.value - expected).abs() < 1e-10 * expected);
        assert!(est.warnings.is_empty());
    }

    #[test]
    fn every_field_is_a_lower_bound() {
        let m = Mesh::unit_interval(63).unwrap();
        let est = sobolev_constant(&m, 5.0).unwrap();
        for k in 0..20 {
            let w = random_direction(&m, &mut rng_for(3, stream::TESTING, k));
            assert!(sobolev_ratio(&w, 5.0) <= est.value * (1.0 + 1e-12));
        }
        let sine = first_eigenfunction(&m);
        assert!(sobolev_ratio(&sine, 5.0) < est.value);
    }

    #[test]
    fn rejects_small_exponent() {
        let m = Mesh::unit_interval(7).unwrap();
        assert!(sobolev_constant(&m, 0.5).is_err());
    }
}
