#![allow(dead_code)]

use corrproj::generator::{GeneralizedLindblad, JumpIndex};
use corrproj::operator::{expm, from_real_diagonal, hermitian_part, ComplexMatrix};
use nalgebra::DMatrix;
use corrproj::state::ComponentState;
use num_complex::Complex64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut StdRng) -> f64 {
    rng.sample(StandardNormal)
}

pub fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| Complex64::new(gaussian(rng), gaussian(rng)))
}

pub fn random_square(rng: &mut StdRng, d: usize) -> ComplexMatrix {
    random_matrix(rng, d, d)
}

pub fn random_hermitian(rng: &mut StdRng, d: usize) -> ComplexMatrix {
    hermitian_part(&random_square(rng, d))
}

/// `GG† / tr(GG†)`, full rank with probability one.
pub fn random_density(rng: &mut StdRng, d: usize) -> ComplexMatrix {
    let g = random_square(rng, d);
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho.unscale(tr)
}

/// Physical components: `p_i ρ_i` with random weights summing to one.
pub fn random_components(rng: &mut StdRng, n: usize, d: usize) -> ComponentState {
    let weights: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.05).collect();
    let total: f64 = weights.iter().sum();
    ComponentState::new(weights.iter().map(|w| random_density(rng, d).scale(w / total)).collect()).unwrap()
}

/// Arbitrary (generally non-Hermitian) component lists.
pub fn random_operator_state(rng: &mut StdRng, n: usize, d: usize) -> ComponentState {
    ComponentState::new((0..n).map(|_| random_square(rng, d)).collect()).unwrap()
}

/// Generator with random Hamiltonians and zero to two jump operators per
/// ordered component pair, including diagonal pairs.
pub fn random_generator(rng: &mut StdRng, n: usize, d: usize) -> GeneralizedLindblad {
    let h_ops = (0..n).map(|_| random_hermitian(rng, d).scale(0.5)).collect();
    let mut jumps = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let count = rng.random_range(0..=2usize);
            for lambda in 0..count {
                jumps.push((JumpIndex::new(i, j, lambda), random_square(rng, d).scale(0.4)));
            }
        }
    }
    GeneralizedLindblad::new(d, h_ops, jumps).unwrap()
}

pub fn instance_shape(k: usize) -> (usize, usize) {
    let n = [2, 3, 4][k % 3];
    let d = [2, 3][(k / 3) % 2];
    (n, d)
}

/// `k` orthogonal projectors summing to the identity, rotated by a random unitary.
pub fn random_bands(r: &mut StdRng, dim_env: usize, k: usize) -> Vec<ComplexMatrix> {
    let mut cuts: Vec<usize> = (1..dim_env).collect();
    while cuts.len() > k - 1 {
        let i = r.random_range(0..cuts.len());
        cuts.remove(i);
    }
    let mut bounds = vec![0];
    bounds.extend(cuts);
    bounds.push(dim_env);
    let u = expm(&(random_hermitian(r, dim_env) * Complex64::new(0.0, -1.0))).unwrap();
    bounds
        .windows(2)
        .map(|w| {
            let diag: Vec<f64> = (0..dim_env).map(|e| if e >= w[0] && e < w[1] { 1.0 } else { 0.0 }).collect();
            &u * from_real_diagonal(&diag) * u.adjoint()
        })
        .collect()
}

pub fn random_gauge(r: &mut StdRng, n: usize) -> DMatrix<f64> {
    loop {
        let u = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 } + 0.4 * gaussian(r));
        let sv = u.clone().svd(false, false).singular_values;
        if sv.max() / sv.min() <= 10.0 {
            return u;
        }
    }
}

