//! Uniform finite-difference grids, discrete norms, and Dirichlet solves.

mod mesh;
mod ops;
mod solve;

pub use mesh::{Field, Mesh};
pub(crate) use ops::inner_unchecked;
pub use ops::{
    continuum_first_eigenvalue, first_eigenfunction, first_eigenvalue,
    first_eigenvalue_inverse_iteration, grad_norm_sq, h_minus1_norm, inner, laplacian, lp_norm,
    lp_power, neg_laplacian, solve_poisson, EigenEstimate,
};
pub use solve::{relative_residual, solve_shifted, CG_REL_TOL};
