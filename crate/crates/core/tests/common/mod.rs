#![allow(dead_code)]

use pauli_lens_core::circuit::{random_circuit, QacCircuit};
use pauli_lens_core::{Matrix, C64};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn unit_vector(g: &mut ChaCha8Rng, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| C64::new(g.gen::<f64>() - 0.5, g.gen::<f64>() - 0.5)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

pub fn complex_matrix(g: &mut ChaCha8Rng, dim: usize) -> Matrix {
    Matrix::from_fn(dim, dim, |_, _| C64::new(g.gen::<f64>() - 0.5, g.gen::<f64>() - 0.5))
}

pub fn hermitian(g: &mut ChaCha8Rng, dim: usize) -> Matrix {
    let m = complex_matrix(g, dim);
    m.add(&m.adjoint()).scale(C64::new(0.5, 0.0))
}

/// Random density matrix of rank up to `dim`.
pub fn density(g: &mut ChaCha8Rng, dim: usize) -> Matrix {
    let m = complex_matrix(g, dim);
    let p = m.mul(&m.adjoint());
    let tr = p.trace().re;
    p.scale(C64::new(1.0 / tr, 0.0))
}

pub fn circuit(g: &mut ChaCha8Rng, n_in: usize, a: usize, depth: usize, max_arity: usize) -> QacCircuit {
    let mut u = || g.gen::<f64>();
    random_circuit(n_in, a, depth, max_arity, &mut u)
}
