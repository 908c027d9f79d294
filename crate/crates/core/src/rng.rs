//! Seeded random inputs shared by solvers, samplers and experiments.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::grid::{Grid, GridFunction};

pub type SeededRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream derived from a base seed and a task index.
pub fn substream(seed: u64, task: u64) -> SeededRng {
    // splitmix64 finalizer keeps neighbouring task ids decorrelated
    let mut z = seed ^ task.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    ChaCha8Rng::seed_from_u64(z ^ (z >> 31))
}

pub fn complex_normal(rng: &mut impl Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Uniformly distributed unit vector in `C^n`.
pub fn unit_vector(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<Complex64> = (0..n).map(|_| complex_normal(rng)).collect();
        let norm = crate::linalg::vnorm(&v);
        if norm > 1e-12 {
            return v.into_iter().map(|z| z / norm).collect();
        }
    }
}

/// Uniformly distributed unit vector in `R^n` embedded in `C^n`.
pub fn real_unit_vector(rng: &mut impl Rng, n: usize) -> Vec<Complex64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-12 {
            return v.into_iter().map(|x| Complex64::new(x / norm, 0.0)).collect();
        }
    }
}

/// Complex Gaussian grid function.
pub fn gaussian_function(rng: &mut impl Rng, grid: Grid, n: usize) -> GridFunction {
    let values = (0..grid.num_cells() * n).map(|_| complex_normal(rng)).collect();
    GridFunction { grid, n, values }
}

/// Random `n x n` complex matrix with Gaussian entries.
pub fn gaussian_matrix(rng: &mut impl Rng, n: usize) -> crate::linalg::CMatrix {
    crate::linalg::CMatrix::from_fn(n, n, |_, _| complex_normal(rng))
}

/// Haar-ish random unitary via QR of a Gaussian matrix.
pub fn random_unitary(rng: &mut impl Rng, n: usize) -> crate::linalg::CMatrix {
    let g = gaussian_matrix(rng, n);
    g.qr().q()
}
