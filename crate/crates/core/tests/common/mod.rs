#![allow(dead_code)]

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};
use spe_core::state::{born_probabilities, tat_pom, CMatrix, DensityMatrix, C64};

/// Random full-rank state `G G† / tr`, with `G` a complex Gaussian matrix.
pub fn ginibre_state(dim: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let g = CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
    });
    let m = &g * g.adjoint();
    let tr = m.trace();
    let m = m / tr;
    // Symmetrize away rounding.
    DensityMatrix::new((&m + m.adjoint()) * C64::from(0.5)).expect("Gram matrices are states")
}

/// Mixture `t ρ_a + (1 - t) ρ_b`.
pub fn mix(a: &DensityMatrix, b: &DensityMatrix, t: f64) -> DensityMatrix {
    DensityMatrix::new(a.matrix() * C64::from(t) + b.matrix() * C64::from(1.0 - t)).expect("mixtures are states")
}

/// TAT probabilities of a random state; a third lie close to the singlet.
pub fn random_tat_probs(rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut rho = ginibre_state(4, rng);
    if rng.random::<f64>() < 1.0 / 3.0 {
        let singlet = DensityMatrix::bell_diagonal(1.0, 1.0, 1.0).unwrap();
        rho = mix(&singlet, &rho, rng.random_range(0.5..0.95));
    }
    born_probabilities(&rho, &tat_pom()).unwrap().into()
}

/// Uniform point of the `k`-outcome simplex.
pub fn simplex_point(k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let e: Vec<f64> = (0..k).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|x| x / s).collect()
}
