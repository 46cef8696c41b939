use std::f64::consts::PI;

use super::mesh::{Field, Mesh};
use super::solve::{relative_residual, solve_shifted};
use crate::error::{KirchhoffError, Result};

/// Accumulate `-Δx` (central differences, zero Dirichlet data) into `out`.
pub(crate) fn neg_laplacian_into(mesh: &Mesh, x: &[f64], out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    for axis in 0..mesh.dim() {
        let h = mesh.spacing(axis);
        let inv_h2 = 1.0 / (h * h);
        let n = mesh.nodes(axis);
        let stride = if axis == 0 { 1 } else { mesh.nodes(0) };
        for k in 0..x.len() {
            let pos = (k / stride) % n;
            let left = if pos > 0 { x[k - stride] } else { 0.0 };
            let right = if pos + 1 < n { x[k + stride] } else { 0.0 };
            out[k] += (2.0 * x[k] - left - right) * inv_h2;
        }
    }
}

/// Discrete Dirichlet Laplacian `Δu` (3-point stencil in 1D, 5-point in 2D).
pub fn laplacian(u: &Field) -> Field {
    let mut out = vec![0.0; u.len()];
    neg_laplacian_into(u.mesh(), u.values(), &mut out);
    out.iter_mut().for_each(|v| *v = -*v);
    Field::from_raw(*u.mesh(), out)
}

/// `-Δu`, the positive semidefinite form of [`laplacian`].
pub fn neg_laplacian(u: &Field) -> Field {
    let mut out = vec![0.0; u.len()];
    neg_laplacian_into(u.mesh(), u.values(), &mut out);
    Field::from_raw(*u.mesh(), out)
}

/// Discrete Dirichlet form `‖∇u‖₂²`: squared difference quotients over every grid
/// edge, including edges that touch the boundary, weighted by the cell measure.
pub fn grad_norm_sq(u: &Field) -> f64 {
    let mesh = u.mesh();
    let x = u.values();
    let cell = mesh.cell_measure();
    let mut total = 0.0;
    for axis in 0..mesh.dim() {
        let h = mesh.spacing(axis);
        let n = mesh.nodes(axis);
        let stride = if axis == 0 { 1 } else { mesh.nodes(0) };
        let mut acc = 0.0;
        for k in 0..x.len() {
            let pos = (k / stride) % n;
            let left = if pos > 0 { x[k - stride] } else { 0.0 };
            acc += (x[k] - left).powi(2);
            if pos + 1 == n {
                acc += x[k] * x[k];
            }
        }
        total += acc / (h * h);
    }
    total * cell
}

/// `Σ |u_i|^r · cell`, i.e. `‖u‖_r^r` under nodal quadrature.
pub fn lp_power(u: &Field, r: f64) -> f64 {
    let cell = u.mesh().cell_measure();
    let s: f64 = if r == 2.0 {
        u.values().iter().map(|v| v * v).sum()
    } else {
        u.values().iter().map(|v| v.abs().powf(r)).sum()
    };
    s * cell
}

/// `‖u‖_r` with nodal (midpoint) quadrature.
pub fn lp_norm(u: &Field, r: f64) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(KirchhoffError::Domain(format!(
            "L^r norm needs finite r >= 1, got {r}"
        )));
    }
    Ok(lp_power(u, r).powf(1.0 / r))
}

/// Discrete L² inner product `Σ u_i v_i · cell`.
pub fn inner(u: &Field, v: &Field) -> Result<f64> {
    u.check_same_mesh(v)?;
    Ok(inner_unchecked(u, v))
}

pub(crate) fn inner_unchecked(u: &Field, v: &Field) -> f64 {
    let s: f64 = u.values().iter().zip(v.values()).map(|(a, b)| a * b).sum();
    s * u.mesh().cell_measure()
}

/// Smallest eigenvalue of the discrete Dirichlet `-Δ`, by the closed form
/// `Σ_axis (2/h²)(1 - cos(π h / L))`.
pub fn first_eigenvalue(mesh: &Mesh) -> f64 {
    (0..mesh.dim())
        .map(|axis| {
            let h = mesh.spacing(axis);
            let s = (PI * h / (2.0 * mesh.extent(axis))).sin();
            4.0 * s * s / (h * h)
        })
        .sum()
}

/// Continuum counterpart `Σ_axis (π / L)²`, for reporting next to the discrete value.
pub fn continuum_first_eigenvalue(mesh: &Mesh) -> f64 {
    (0..mesh.dim())
        .map(|axis| (PI / mesh.extent(axis)).powi(2))
        .sum()
}

/// First discrete eigenfunction (product of sines), normalized to unit L² norm.
pub fn first_eigenfunction(mesh: &Mesh) -> Field {
    let lx = mesh.extent(0);
    let ly = if mesh.dim() == 2 { mesh.extent(1) } else { 1.0 };
    let two_d = mesh.dim() == 2;
    let e = Field::from_fn(*mesh, |x, y| {
        let sx = (PI * x / lx).sin();
        if two_d {
            sx * (PI * y / ly).sin()
        } else {
            sx
        }
    });
    let norm = lp_power(&e, 2.0).sqrt();
    e.scaled(1.0 / norm)
}

/// Result of inverse power iteration on the discrete `-Δ`.
#[derive(Clone, Debug)]
pub struct EigenEstimate {
    pub eigenvalue: f64,
    pub eigenfunction: Field,
    pub iterations: usize,
}

/// Independent check of [`first_eigenvalue`] by inverse power iteration.
pub fn first_eigenvalue_inverse_iteration(mesh: &Mesh, tol: f64) -> Result<EigenEstimate> {
    let max_iter = 100_000;
    // deterministic start with a nonzero first-mode component
    let mut x = Field::from_fn(*mesh, |x, y| 1.0 + 0.3 * (7.0 * x + 3.0 * y).sin());
    let mut lambda = f64::INFINITY;
    for it in 1..=max_iter {
        let y = solve_shifted(&x, 0.0, 1.0)?;
        let norm = lp_power(&y, 2.0).sqrt();
        x = y.scaled(1.0 / norm);
        let rq = grad_norm_sq(&x) / lp_power(&x, 2.0);
        if (rq - lambda).abs() <= tol * rq {
            return Ok(EigenEstimate {
                eigenvalue: rq,
                eigenfunction: x,
                iterations: it,
            });
        }
        lambda = rq;
    }
    Err(KirchhoffError::Numerical(format!(
        "inverse iteration did not reach tolerance {tol:e} in {max_iter} steps (last estimate {lambda})"
    )))
}

/// Solve `-Δφ = r` with zero boundary values.
pub fn solve_poisson(r: &Field) -> Result<Field> {
    let phi = solve_shifted(r, 0.0, 1.0)?;
    let res = relative_residual(&phi, r, 0.0, 1.0);
    if !(res <= 1e-10) {
        return Err(KirchhoffError::Numerical(format!(
            "Poisson solve residual {res:e} exceeds 1e-10 (mesh {:?})",
            r.mesh()
        )));
    }
    Ok(phi)
}

/// Discrete dual norm `‖r‖_{H⁻¹} = sqrt((r, (-Δ)⁻¹ r))`.
pub fn h_minus1_norm(r: &Field) -> Result<f64> {
    if r.is_zero() {
        return Ok(0.0);
    }
    let phi = solve_poisson(r)?;
    Ok(inner_unchecked(r, &phi).max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(n: usize) -> Mesh {
        Mesh::unit_interval(n).unwrap()
    }

    #[test]
    fn single_node_hand_values() {
        let m = unit(1);
        let u = Field::new(m, vec![1.0]).unwrap();
        assert_eq!(laplacian(&u).values(), &[-8.0]);
        assert_eq!(grad_norm_sq(&u), 4.0);
        assert!((lp_norm(&u, 2.0).unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_field_maps_to_zero() {
        let m = Mesh::rectangle(1.0, 2.0, 5, 4).unwrap();
        let z = Field::zeros(m);
        assert!(laplacian(&z).is_zero());
        assert_eq!(grad_norm_sq(&z), 0.0);
        assert_eq!(lp_norm(&z, 3.0).unwrap(), 0.0);
        assert!(solve_poisson(&z).unwrap().is_zero());
        assert_eq!(h_minus1_norm(&z).unwrap(), 0.0);
    }

    #[test]
    fn lp_norm_rejects_r_below_one() {
        let u = Field::zeros(unit(3));
        assert!(matches!(lp_norm(&u, 0.5), Err(KirchhoffError::Domain(_))));
    }

    #[test]
    fn first_eigenvalue_closed_form() {
        let lam = first_eigenvalue(&unit(3));
        let expected = 32.0 * (1.0 - (PI / 4.0).cos());
        assert!((lam - expected).abs() < 1e-12);
        assert!((lam - 9.3726).abs() < 1e-4);
        let sq = Mesh::rectangle(1.0, 1.0, 31, 31).unwrap();
        assert!((first_eigenvalue(&sq) - 2.0 * first_eigenvalue(&unit(31))).abs() < 1e-12);
    }

    #[test]
    fn first_eigenvalue_increases_to_pi_squared() {
        let mut prev = 0.0;
        for n in [3, 7, 15, 31, 63, 127, 255, 511] {
            let lam = first_eigenvalue(&unit(n));
            assert!(lam > prev && lam < PI * PI);
            prev = lam;
        }
        assert!((prev - PI * PI).abs() < 1e-4);
    }

    #[test]
    fn inverse_iteration_agrees_with_closed_form() {
        for m in [unit(3), unit(64), Mesh::rectangle(1.0, 2.0, 9, 13).unwrap()] {
            let est = first_eigenvalue_inverse_iteration(&m, 1e-10).unwrap();
            let closed = first_eigenvalue(&m);
            assert!((est.eigenvalue - closed).abs() <= 1e-8 * closed);
        }
    }

    #[test]
    fn eigenfunction_dual_norm() {
        let m = unit(63);
        let e1 = first_eigenfunction(&m);
        let lam = first_eigenvalue(&m);
        let got = h_minus1_norm(&e1).unwrap();
        assert!((got - 1.0 / lam.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn poisson_inverts_laplacian() {
        let m = Mesh::rectangle(1.0, 1.5, 11, 8).unwrap();
        let u = Field::from_fn(m, |x, y| {
            x * (1.0 - x) * (y + 0.3).cos() + 0.1 * (9.0 * x * y).sin()
        });
        let phi = solve_poisson(&neg_laplacian(&u)).unwrap();
        let err = phi.sub(&u).unwrap().max_abs();
        assert!(err < 1e-9 * u.max_abs(), "err {err}");
    }

    #[test]
    fn orthogonality_of_sine_modes() {
        let m = unit(127);
        let s1 = Field::from_fn(m, |x, _| (PI * x).sin());
        let s2 = Field::from_fn(m, |x, _| (2.0 * PI * x).sin());
        assert!(inner(&s1, &s2).unwrap().abs() < 1e-14);
        assert!((inner(&s1, &s1).unwrap() - lp_norm(&s1, 2.0).unwrap().powi(2)).abs() < 1e-14);
    }

    #[test]
    fn h_minus1_matches_gradient_of_potential() {
        let m = unit(40);
        let r = Field::from_fn(m, |x, _| (3.0 * x).exp() - 2.0);
        let phi = solve_poisson(&r).unwrap();
        let a = h_minus1_norm(&r).unwrap();
        assert!((a - grad_norm_sq(&phi).sqrt()).abs() < 1e-12 * a);
        assert!((h_minus1_norm(&r.scaled(-3.0)).unwrap() - 3.0 * a).abs() < 1e-12 * a);
    }
}
