use super::params::ModelParams;
use crate::discretization::{grad_norm_sq, inner_unchecked, lp_power, neg_laplacian, Field};
use crate::error::Result;

/// The two scalars every functional is built from:
/// `A = ‖∇u‖₂²` and `B = ‖u‖_{q+1}^{q+1}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NormPair {
    pub grad_sq: f64,
    pub source_power: f64,
}

impl NormPair {
    pub fn of(u: &Field, p: &ModelParams) -> Self {
        Self {
            grad_sq: grad_norm_sq(u),
            source_power: lp_power(u, p.q() + 1.0),
        }
    }

    pub fn energy(&self, p: &ModelParams) -> f64 {
        let (a, b) = (self.grad_sq, self.source_power);
        0.5 * p.a() * a + 0.25 * p.b() * a * a - b / (p.q() + 1.0)
    }

    pub fn nehari(&self, p: &ModelParams) -> f64 {
        let (a, b) = (self.grad_sq, self.source_power);
        p.a() * a + p.b() * a * a - b
    }

    /// Scale of `I` used for the relative Nehari tolerance: `max(aA, B)`.
    pub fn nehari_scale(&self, p: &ModelParams) -> f64 {
        (p.a() * self.grad_sq).max(self.source_power)
    }
}

/// Relative tolerance for Nehari membership, `|I| <= NEHARI_REL_TOL * max(aA, B)`.
pub const NEHARI_REL_TOL: f64 = 1e-8;

/// `J(u) = (a/2)A + (b/4)A² - B/(q+1)`.
pub fn energy_j(u: &Field, p: &ModelParams) -> f64 {
    NormPair::of(u, p).energy(p)
}

/// `I(u) = aA + bA² - B`.
pub fn nehari_i(u: &Field, p: &ModelParams) -> f64 {
    NormPair::of(u, p).nehari(p)
}

/// Kirchhoff part of the energy, `E(u) = (a/2)A + (b/4)A²`.
pub fn kirchhoff_energy_e(u: &Field, p: &ModelParams) -> f64 {
    let a = grad_norm_sq(u);
    0.5 * p.a() * a + 0.25 * p.b() * a * a
}

/// L²-representer of `J'(u)`: `r = (a + bA)(-Δu) - |u|^{q-1}u`, so that
/// `(r, v) = ⟨J'(u), v⟩` for every grid function `v`.
pub fn j_prime_residual(u: &Field, p: &ModelParams) -> Field {
    let m = p.kirchhoff_coefficient(grad_norm_sq(u));
    let mut r = neg_laplacian(u);
    for (ri, &ui) in r.values_mut().iter_mut().zip(u.values()) {
        *ri = m * *ri - p.source(ui);
    }
    r
}

/// `⟨I'(u), v⟩ = 2a(∇u,∇v) + 4bA(∇u,∇v) - (q+1)(|u|^{q-1}u, v)`.
pub fn i_prime_pairing(u: &Field, v: &Field, p: &ModelParams) -> Result<f64> {
    u.check_same_mesh(v)?;
    let a = grad_norm_sq(u);
    let grad_pair = inner_unchecked(&neg_laplacian(u), v);
    let src = u.map(|x| p.source(x));
    let src_pair = inner_unchecked(&src, v);
    Ok((2.0 * p.a() + 4.0 * p.b() * a) * grad_pair - (p.q() + 1.0) * src_pair)
}

/// `⟨E'(u), w⟩ = (a + bA)(∇u, ∇w)`.
pub fn e_prime_pairing(u: &Field, w: &Field, p: &ModelParams) -> Result<f64> {
    u.check_same_mesh(w)?;
    let m = p.kirchhoff_coefficient(grad_norm_sq(u));
    Ok(m * inner_unchecked(&neg_laplacian(u), w))
}

/// Both rewritings of `J` through `I`:
///
/// * `[a(q-1)/(2(q+1))]A + [b(q-3)/(4(q+1))]A² + I/(q+1)`
/// * `(a/4)A + [(q-3)/(4(q+1))]B + I/4`
pub fn decomposition_check(u: &Field, p: &ModelParams) -> (f64, f64) {
    let np = NormPair::of(u, p);
    let (a, b) = (np.grad_sq, np.source_power);
    let i = np.nehari(p);
    let q = p.q();
    let first = p.a() * (q - 1.0) / (2.0 * (q + 1.0)) * a
        + p.b() * (q - 3.0) / (4.0 * (q + 1.0)) * a * a
        + i / (q + 1.0);
    let second = 0.25 * p.a() * a + (q - 3.0) / (4.0 * (q + 1.0)) * b + 0.25 * i;
    (first, second)
}

/// Energy of a Nehari point expressed through `A` alone.
pub fn nehari_energy(grad_sq: f64, p: &ModelParams) -> f64 {
    let q = p.q();
    p.a() * (q - 1.0) / (2.0 * (q + 1.0)) * grad_sq
        + p.b() * (q - 3.0) / (4.0 * (q + 1.0)) * grad_sq * grad_sq
}
