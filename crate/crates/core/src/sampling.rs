//! Seeded random grid functions used as starting points and sample directions.
//!
//! Every sample gets its own generator whose seed is derived from
//! `(seed, stream, index)`, so results do not depend on evaluation order.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::discretization::{Field, Mesh};

/// Seed streams, one per consumer, so that e.g. ground-state starts and
/// level-set samples drawn with the same user seed are unrelated.
pub mod stream {
    pub const GROUND_STATE: u64 = 1;
    pub const SOBOLEV: u64 = 2;
    pub const GAGLIARDO_NIRENBERG: u64 = 3;
    pub const LEVEL_SET: u64 = 4;
    pub const INITIAL_DATA: u64 = 5;
    pub const TESTING: u64 = 99;
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

pub fn rng_for(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive_seed(seed, stream, index))
}

/// Number of sine modes per axis in random Fourier fields.
pub const FOURIER_MODES: usize = 16;

/// Sine series `Σ c_k sin(kπx/L)` with `c_k ~ N(0,1) k^{-2}`
/// (tensor product with `(k² + l²)^{-1}` decay in 2D).
pub fn fourier_field<R: Rng>(mesh: &Mesh, modes: usize, rng: &mut R) -> Field {
    let lx = mesh.extent(0);
    if mesh.dim() == 1 {
        let coef: Vec<f64> = (1..=modes)
            .map(|k| rng.sample::<f64, _>(StandardNormal) / (k * k) as f64)
            .collect();
        Field::from_fn(*mesh, |x, _| {
            coef.iter()
                .enumerate()
                .map(|(k, c)| c * ((k + 1) as f64 * PI * x / lx).sin())
                .sum()
        })
    } else {
        let ly = mesh.extent(1);
        let mut coef = vec![0.0; modes * modes];
        for k in 1..=modes {
            for l in 1..=modes {
                coef[(k - 1) * modes + (l - 1)] =
                    rng.sample::<f64, _>(StandardNormal) / (k * k + l * l) as f64;
            }
        }
        Field::from_fn(*mesh, |x, y| {
            let sx: Vec<f64> = (1..=modes)
                .map(|k| (k as f64 * PI * x / lx).sin())
                .collect();
            let sy: Vec<f64> = (1..=modes)
                .map(|l| (l as f64 * PI * y / ly).sin())
                .collect();
            let mut s = 0.0;
            for k in 0..modes {
                for l in 0..modes {
                    s += coef[k * modes + l] * sx[k] * sy[l];
                }
            }
            s
        })
    }
}

/// Gaussian bump with random center in the middle 60% of the domain and
/// width between 5% and 30% of the extent.
pub fn gaussian_bump<R: Rng>(mesh: &Mesh, rng: &mut R) -> Field {
    let mut center = [0.0; 2];
    let mut width = [1.0; 2];
    for axis in 0..mesh.dim() {
        let l = mesh.extent(axis);
        center[axis] = l * rng.gen_range(0.2..0.8);
        width[axis] = l * rng.gen_range(0.05..0.3);
    }
    let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
    bump(mesh, center, width, sign)
}

pub fn bump(mesh: &Mesh, center: [f64; 2], width: [f64; 2], amplitude: f64) -> Field {
    let two_d = mesh.dim() == 2;
    Field::from_fn(*mesh, |x, y| {
        let mut r2 = ((x - center[0]) / width[0]).powi(2);
        if two_d {
            r2 += ((y - center[1]) / width[1]).powi(2);
        }
        amplitude * (-0.5 * r2).exp()
    })
}

/// Mixed sampling distribution: three quarters Fourier series, one quarter bumps.
pub fn random_direction<R: Rng>(mesh: &Mesh, rng: &mut R) -> Field {
    if rng.gen_bool(0.75) {
        fourier_field(mesh, FOURIER_MODES, rng)
    } else {
        gaussian_bump(mesh, rng)
    }
}
