//! Linear solves with the shifted Dirichlet operator `shift * I + scale * (-Δ)`.
//!
//! 1D uses Thomas elimination on the constant-coefficient tridiagonal matrix.
//! 2D uses unpreconditioned conjugate gradients on the 5-point stencil.

use super::mesh::{Field, Mesh};
use super::ops::neg_laplacian_into;
use crate::error::{KirchhoffError, Result};

/// Relative residual target for conjugate gradients.
pub const CG_REL_TOL: f64 = 1e-12;

/// Solve `(shift * I + scale * (-Δ)) φ = rhs` with zero boundary values.
///
/// Requires `shift >= 0`, `scale > 0` so the operator is symmetric positive definite.
pub fn solve_shifted(rhs: &Field, shift: f64, scale: f64) -> Result<Field> {
    if !(shift >= 0.0 && scale > 0.0 && shift.is_finite() && scale.is_finite()) {
        return Err(KirchhoffError::Domain(format!(
            "shifted operator needs shift >= 0 and scale > 0, got shift={shift}, scale={scale}"
        )));
    }
    let mesh = *rhs.mesh();
    if rhs.is_zero() {
        return Ok(Field::zeros(mesh));
    }
    match mesh.dim() {
        1 => Ok(thomas(&mesh, rhs.values(), shift, scale)),
        _ => conjugate_gradient(&mesh, rhs.values(), shift, scale),
    }
}

fn thomas(mesh: &Mesh, rhs: &[f64], shift: f64, scale: f64) -> Field {
    let h = mesh.spacing(0);
    let off = -scale / (h * h);
    let diag = shift + 2.0 * scale / (h * h);
    let n = rhs.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    c[0] = off / diag;
    d[0] = rhs[0] / diag;
    for i in 1..n {
        let denom = diag - off * c[i - 1];
        c[i] = off / denom;
        d[i] = (rhs[i] - off * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n.saturating_sub(1)).rev() {
        x[i] -= c[i] * x[i + 1];
    }
    Field::from_raw(*mesh, x)
}

fn apply(mesh: &Mesh, x: &[f64], shift: f64, scale: f64, out: &mut [f64]) {
    neg_laplacian_into(mesh, x, out);
    for (o, xi) in out.iter_mut().zip(x) {
        *o = shift * xi + scale * *o;
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn conjugate_gradient(mesh: &Mesh, rhs: &[f64], shift: f64, scale: f64) -> Result<Field> {
    let n = rhs.len();
    let max_iter = 20 * n + 100;
    let rhs_norm = dot(rhs, rhs).sqrt();
    let mut x = vec![0.0; n];
    let mut r = rhs.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rr = dot(&r, &r);
    for it in 0..max_iter {
        if rr.sqrt() <= CG_REL_TOL * rhs_norm {
            return Ok(Field::from_raw(*mesh, x));
        }
        apply(mesh, &p, shift, scale, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(KirchhoffError::Numerical(format!(
                "conjugate gradient breakdown at iteration {it}: p^T A p = {pap:e}"
            )));
        }
        let alpha = rr / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    Err(KirchhoffError::Numerical(format!(
        "conjugate gradient did not converge in {max_iter} iterations: relative residual {:e}",
        rr.sqrt() / rhs_norm
    )))
}

/// `‖(shift I + scale(-Δ)) φ - rhs‖₂ / ‖rhs‖₂` in the Euclidean nodal norm.
pub fn relative_residual(phi: &Field, rhs: &Field, shift: f64, scale: f64) -> f64 {
    let mut out = vec![0.0; phi.len()];
    apply(phi.mesh(), phi.values(), shift, scale, &mut out);
    let num: f64 = out
        .iter()
        .zip(rhs.values())
        .map(|(a, b)| (a - b).powi(2))
        .sum();
    let den = dot(rhs.values(), rhs.values());
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}
