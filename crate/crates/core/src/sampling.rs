//! Seeded random instances: Haar states and unitaries, random density
//! operators, effects and POVMs.
//!
//! Every sampler takes the generator explicitly. [`seeded_rng`] fixes the
//! generator family so that a seed reproduces bit-identical output across
//! platforms.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{self, CMatrix, CVector};
use crate::quantum::{DensityOperator, DiscretePovm, Effect, KrausOperation, PureState};

pub type SeededRng = ChaCha20Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha20Rng::seed_from_u64(seed)
}

/// Child generator for an independent stream, e.g. one per work chunk.
pub fn sub_rng(seed: u64, stream: u64) -> SeededRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
}

pub fn gaussian_vector<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| complex_gaussian(rng))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

/// Pure state distributed according to the unitarily invariant measure.
///
/// # Panics
/// If `n == 0`.
pub fn haar_state<R: Rng + ?Sized>(n: usize, rng: &mut R) -> PureState {
    assert!(n > 0, "state dimension must be positive");
    loop {
        // A zero draw has probability zero but would not normalize.
        if let Ok(s) = PureState::normalize(gaussian_vector(n, rng)) {
            return s;
        }
    }
}

/// Haar-random unitary (Gram-Schmidt of a Ginibre matrix).
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMatrix {
    linalg::orthonormalize_columns(&gaussian_matrix(n, n, rng))
}

/// `G G* / tr(G G*)` for a square Ginibre `G`; full rank almost surely.
pub fn random_density<R: Rng + ?Sized>(n: usize, rng: &mut R) -> DensityOperator {
    let g = gaussian_matrix(n, n, rng);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityOperator::new(m * Complex64::new(1.0 / tr, 0.0)).expect("Wishart matrices are states")
}

/// Density operator of the given rank.
pub fn random_density_of_rank<R: Rng + ?Sized>(n: usize, rank: usize, rng: &mut R) -> DensityOperator {
    let g = gaussian_matrix(n, rank.clamp(1, n), rng);
    let m = &g * g.adjoint();
    let tr = linalg::trace(&m).re;
    DensityOperator::new(m * Complex64::new(1.0 / tr, 0.0)).expect("Wishart matrices are states")
}

/// `U diag(u) U*` with Haar `U` and eigenvalues uniform in `[0, 1)`.
pub fn random_effect<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Effect {
    let u = haar_unitary(n, rng);
    let d = DVector::from_fn(n, |_, _| Complex64::new(rng.random::<f64>(), 0.0));
    let m = &u * CMatrix::from_diagonal(&d) * u.adjoint();
    Effect::new(m).expect("spectrum is in [0, 1)")
}

/// Random `outcomes`-element POVM: Wishart elements `G_d` conjugated by
/// `(sum G_d)^{-1/2}`.
pub fn random_povm<R: Rng + ?Sized>(n: usize, outcomes: usize, rng: &mut R) -> DiscretePovm {
    assert!(outcomes > 0, "a POVM needs at least one outcome");
    let parts: Vec<CMatrix> = (0..outcomes)
        .map(|_| {
            let g = gaussian_matrix(n, n, rng);
            &g * g.adjoint()
        })
        .collect();
    // A second pass removes the rounding left by an ill-conditioned first sum.
    let effects = normalize_parts(&normalize_parts(&parts))
        .into_iter()
        .map(Effect::from_trusted)
        .collect();
    DiscretePovm::new(effects).expect("normalized by construction")
}

fn normalize_parts(parts: &[CMatrix]) -> Vec<CMatrix> {
    let n = parts[0].nrows();
    let total = parts.iter().fold(CMatrix::zeros(n, n), |acc, p| acc + p);
    let inv_sqrt = linalg::eigh(&linalg::hermitize(&total))
        .expect("sum of positive matrices is Hermitian")
        .map(|x| 1.0 / x.sqrt());
    parts
        .iter()
        .map(|p| linalg::hermitize(&(&inv_sqrt * p * &inv_sqrt)))
        .collect()
}

/// Kraus operators `U_d E_d^{1/2}` with independent Haar `U_d`.
pub fn twirled_kraus<R: Rng + ?Sized>(povm: &DiscretePovm, rng: &mut R) -> KrausOperation {
    let unitaries: Vec<CMatrix> = (0..povm.outcomes())
        .map(|_| haar_unitary(povm.dim(), rng))
        .collect();
    KrausOperation::with_unitaries(povm, &unitaries).expect("unitaries preserve completeness")
}
