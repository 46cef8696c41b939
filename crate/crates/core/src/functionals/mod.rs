//! Energy `J`, Nehari functional `I`, their derivatives, the fibering map, and
//! the embedding constant that bounds the well depth from below.

mod energy;
mod fiber;
mod params;
mod sobolev;

pub use energy::{
    decomposition_check, e_prime_pairing, energy_j, i_prime_pairing, j_prime_residual,
    kirchhoff_energy_e, nehari_energy, nehari_i, NormPair, NEHARI_REL_TOL,
};
pub use fiber::{
    fiber_lambda_star, fiber_lambda_star_with, nehari_project, nehari_project_with_scale,
    nehari_tolerance, FiberConfig, FiberResult,
};
pub use params::ModelParams;
pub use sobolev::{
    d0_lower_bound, sobolev_constant, sobolev_constant_with, sobolev_ratio, SobolevConfig,
    SobolevEstimate, SobolevStart,
};
