//! The fibering map `λ ↦ J(λu)` and projection onto the Nehari manifold.

use serde::Serialize;

use super::energy::{NormPair, NEHARI_REL_TOL};
use super::params::ModelParams;
use crate::discretization::Field;
use crate::error::{KirchhoffError, Result};

/// Root-finding settings for `λ*`.
#[derive(Clone, Copy, Debug)]
pub struct FiberConfig {
    pub rel_tol: f64,
    pub max_iter: usize,
}

impl Default for FiberConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_iter: 400,
        }
    }
}

/// The unique critical scaling of a ray and how it was found.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FiberResult {
    pub lambda_star: f64,
    pub iterations: usize,
    pub bracket: (f64, f64),
}

/// `g(λ) = aA + bλ²A² - λ^{q-1}B`; `I(λu) = λ² g(λ)`.
fn fiber_g(lam: f64, a_norm: f64, b_norm: f64, p: &ModelParams) -> f64 {
    p.a() * a_norm + p.b() * lam * lam * a_norm * a_norm - lam.powf(p.q() - 1.0) * b_norm
}

fn fiber_g_prime(lam: f64, a_norm: f64, b_norm: f64, p: &ModelParams) -> f64 {
    2.0 * p.b() * lam * a_norm * a_norm - (p.q() - 1.0) * lam.powf(p.q() - 2.0) * b_norm
}

/// Positive root of `aλ²A + bλ⁴A² = λ^{q+1}B`.
///
/// Brackets by doubling or halving from `λ = 1`, bisects to `rel_tol`, then
/// polishes with a few safeguarded Newton steps.
pub fn fiber_lambda_star(a_norm: f64, b_norm: f64, p: &ModelParams) -> Result<FiberResult> {
    fiber_lambda_star_with(a_norm, b_norm, p, FiberConfig::default())
}

pub fn fiber_lambda_star_with(
    a_norm: f64,
    b_norm: f64,
    p: &ModelParams,
    cfg: FiberConfig,
) -> Result<FiberResult> {
    if !(a_norm > 0.0 && b_norm > 0.0 && a_norm.is_finite() && b_norm.is_finite()) {
        return Err(KirchhoffError::Degenerate(format!(
            "fiber root needs ‖∇u‖₂² > 0 and ‖u‖_(q+1) > 0, got A = {a_norm:e}, B = {b_norm:e}"
        )));
    }
    if p.q() == 3.0 && b_norm <= p.b() * a_norm * a_norm {
        return Err(KirchhoffError::Degenerate(format!(
            "for q = 3 the ray meets the Nehari manifold only if B > bA², got B = {b_norm:e}, bA² = {:e}",
            p.b() * a_norm * a_norm
        )));
    }
    let g = |l: f64| fiber_g(l, a_norm, b_norm, p);
    let mut iterations = 0;
    let (mut lo, mut hi) = (1.0f64, 1.0f64);
    if g(1.0) > 0.0 {
        while g(hi) > 0.0 {
            lo = hi;
            hi *= 2.0;
            iterations += 1;
            if iterations > cfg.max_iter || !hi.is_finite() {
                return Err(KirchhoffError::Numerical(format!(
                    "could not bracket λ* (A = {a_norm:e}, B = {b_norm:e})"
                )));
            }
        }
    } else {
        while g(lo) <= 0.0 {
            hi = lo;
            lo *= 0.5;
            iterations += 1;
            if iterations > cfg.max_iter || lo == 0.0 {
                return Err(KirchhoffError::Numerical(format!(
                    "could not bracket λ* (A = {a_norm:e}, B = {b_norm:e})"
                )));
            }
        }
    }
    let bracket = (lo, hi);
    while hi - lo > cfg.rel_tol * hi {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        iterations += 1;
        if iterations > cfg.max_iter {
            return Err(KirchhoffError::Numerical(format!(
                "bisection for λ* stalled in [{lo}, {hi}]"
            )));
        }
    }
    let mut lam = 0.5 * (lo + hi);
    for _ in 0..3 {
        let d = fiber_g_prime(lam, a_norm, b_norm, p);
        if d == 0.0 {
            break;
        }
        let next = lam - g(lam) / d;
        if !(next >= lo && next <= hi) {
            break;
        }
        lam = next;
    }
    Ok(FiberResult {
        lambda_star: lam,
        iterations,
        bracket,
    })
}

/// Nehari tolerance for the field with the given norm pair.
pub fn nehari_tolerance(np: &NormPair, p: &ModelParams) -> f64 {
    NEHARI_REL_TOL * np.nehari_scale(p)
}

/// `λ* u`, the unique point of the ray through `u` on the Nehari manifold.
pub fn nehari_project(u: &Field, p: &ModelParams) -> Result<Field> {
    nehari_project_with_scale(u, p).map(|(f, _)| f)
}

/// As [`nehari_project`], also returning the root-finding record.
pub fn nehari_project_with_scale(u: &Field, p: &ModelParams) -> Result<(Field, FiberResult)> {
    let np = NormPair::of(u, p);
    if np.grad_sq == 0.0 || np.source_power == 0.0 {
        return Err(KirchhoffError::Degenerate(
            "cannot project the zero field onto the Nehari manifold".to_string(),
        ));
    }
    let fr = fiber_lambda_star(np.grad_sq, np.source_power, p)?;
    Ok((u.scaled(fr.lambda_star), fr))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::Mesh;
    use crate::functionals::{energy_j, nehari_i};

    fn params() -> ModelParams {
        ModelParams::new(1.0, 1.0, 5.0, 1).unwrap()
    }

    /// Independent bisection on `I(λ)` directly, no bracketing heuristics.
    fn brute_bisection(a_norm: f64, b_norm: f64, p: &ModelParams) -> f64 {
        let i = |l: f64| {
            p.a() * l * l * a_norm + p.b() * l.powi(4) * a_norm * a_norm
                - l.powf(p.q() + 1.0) * b_norm
        };
        let (mut lo, mut hi): (f64, f64) = (1e-6, 1e6);
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if i(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        (lo * hi).sqrt()
    }

    #[test]
    fn closed_form_roots() {
        let p = params();
        let r = fiber_lambda_star(1.0, 2.0, &p).unwrap();
        assert!((r.lambda_star - 1.0).abs() < 1e-12);
        let r = fiber_lambda_star(1.0, 1.0, &p).unwrap();
        let expected = ((1.0 + 5f64.sqrt()) / 2.0).sqrt();
        assert!((r.lambda_star - expected).abs() < 1e-12);
        assert!((expected - 1.27202).abs() < 1e-5);
        assert!((brute_bisection(1.0, 1.0, &p) - expected).abs() < 1e-10);
    }

    #[test]
    fn roots_agree_with_bisection_oracle() {
        let p = ModelParams::new(0.7, 2.3, 4.2, 1).unwrap();
        for &(a, b) in &[(1e-3, 5.0), (3.0, 1e-4), (100.0, 7.0), (0.5, 0.5)] {
            let got = fiber_lambda_star(a, b, &p).unwrap().lambda_star;
            let oracle = brute_bisection(a, b, &p);
            assert!(
                (got - oracle).abs() <= 1e-9 * oracle,
                "{a} {b}: {got} vs {oracle}"
            );
        }
    }

    #[test]
    fn degenerate_inputs() {
        let p = params();
        assert!(matches!(
            fiber_lambda_star(0.0, 1.0, &p),
            Err(KirchhoffError::Degenerate(_))
        ));
        assert!(matches!(
            fiber_lambda_star(1.0, 0.0, &p),
            Err(KirchhoffError::Degenerate(_))
        ));
        let z = Field::zeros(Mesh::unit_interval(7).unwrap());
        assert!(matches!(
            nehari_project(&z, &p),
            Err(KirchhoffError::Degenerate(_))
        ));
        let cubic = ModelParams::cubic(1.0, 0.5, 1, 1.0).unwrap();
        assert!(fiber_lambda_star(1.0, 0.4, &cubic).is_err());
        assert!(fiber_lambda_star(1.0, 0.6, &cubic).is_ok());
    }

    #[test]
    fn projection_properties() {
        let p = params();
        let m = Mesh::unit_interval(63).unwrap();
        let u = Field::from_fn(m, |x, _| (std::f64::consts::PI * x).sin());
        let v = nehari_project(&u, &p).unwrap();
        let np = NormPair::of(&v, &p);
        assert!(nehari_i(&v, &p).abs() <= 1e-10 * np.nehari_scale(&p));
        // fixed point
        let (w, fr) = nehari_project_with_scale(&v, &p).unwrap();
        assert!((fr.lambda_star - 1.0).abs() < 1e-10);
        assert!(w.sub(&v).unwrap().max_abs() <= 1e-10 * v.max_abs());
        // ray invariance
        let v2 = nehari_project(&u.scaled(2.0), &p).unwrap();
        assert!(v2.sub(&v).unwrap().max_abs() <= 1e-10 * v.max_abs());
        // projection maximizes J along the ray
        let j = energy_j(&v, &p);
        for s in [0.9, 0.99, 1.01, 1.1] {
            assert!(energy_j(&v.scaled(s), &p) < j);
        }
    }
}
