//! Dense complex linear algebra for small Hermitian problems.
//!
//! Everything here works on `n <= 16` matrices. Spectral decompositions are
//! returned in a canonical order (descending eigenvalue, ties broken by the
//! lexicographic order of phase-fixed eigenvectors) so that downstream
//! classical states are reproducible.

use std::cmp::Ordering;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::tol;

pub type CMatrix = DMatrix<Complex64>;
pub type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Relative singular-value cutoff used to decide the rank in polar decompositions.
const RANK_REL: f64 = 1e-12;
/// Residual norm below which a Gram-Schmidt candidate is discarded.
const GS_DROP: f64 = 1e-6;

pub fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

pub fn basis_vector(n: usize, k: usize) -> CVector {
    let mut v = CVector::from_element(n, ZERO);
    v[k] = ONE;
    v
}

pub fn ensure_square(m: &CMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    Ok(m.nrows())
}

pub fn ensure_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

/// Largest entrywise modulus of `m - m*`.
pub fn adjoint_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    worst
}

pub fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * Complex64::new(0.5, 0.0)
}

pub fn trace(m: &CMatrix) -> Complex64 {
    m.diagonal().iter().sum()
}

/// Real part of `tr(a b)` without forming the product.
pub fn trace_product(a: &CMatrix, b: &CMatrix) -> f64 {
    let n = a.nrows();
    let mut acc = 0.0;
    for i in 0..n {
        for j in 0..n {
            acc += (a[(i, j)] * b[(j, i)]).re;
        }
    }
    acc
}

pub fn frobenius(m: &CMatrix) -> f64 {
    m.norm()
}

/// `|v><v|`
pub fn outer(v: &CVector) -> CMatrix {
    v * v.adjoint()
}

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// `Re <v|m|v>`; the imaginary part vanishes for Hermitian `m`.
pub fn expectation(v: &CVector, m: &CMatrix) -> f64 {
    v.dotc(&(m * v)).re
}

/// Rotates `v` so that its first non-negligible entry is real and positive.
pub fn fix_phase(v: &mut CVector) {
    if let Some(lead) = v.iter().copied().find(|z| z.norm() > tol::PHASE) {
        let phase = lead.conj() / lead.norm();
        v.iter_mut().for_each(|z| *z *= phase);
    }
}

fn lexicographic(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)) {
            Ordering::Equal => continue,
            other => return other,
        }
    }
    Ordering::Equal
}

/// Eigenpairs of a Hermitian matrix in canonical order.
#[derive(Debug, Clone)]
pub struct Spectrum {
    pub values: Vec<f64>,
    pub vectors: Vec<CVector>,
}

impl Spectrum {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn min(&self) -> f64 {
        self.values.last().copied().unwrap_or(0.0)
    }

    pub fn max(&self) -> f64 {
        self.values.first().copied().unwrap_or(0.0)
    }

    /// `sum_k f(lambda_k) |v_k><v_k|`
    pub fn map(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.dim();
        let mut out = CMatrix::zeros(n, n);
        for (&lambda, v) in self.values.iter().zip(&self.vectors) {
            let scale = f(lambda);
            if scale != 0.0 {
                out += outer(v) * Complex64::new(scale, 0.0);
            }
        }
        out
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.map(|x| x)
    }
}

/// Spectral decomposition of a Hermitian matrix.
pub fn eigh(m: &CMatrix) -> Result<Spectrum> {
    let n = ensure_square(m)?;
    let dev = adjoint_deviation(m);
    if dev > tol::HERM {
        return Err(Error::NotHermitian(dev));
    }
    let eig = hermitize(m).symmetric_eigen();
    let mut pairs: Vec<(f64, CVector)> = (0..n)
        .map(|k| {
            let mut v: CVector = eig.eigenvectors.column(k).into_owned();
            let norm = v.norm();
            v /= Complex64::new(norm, 0.0);
            fix_phase(&mut v);
            (eig.eigenvalues[k], v)
        })
        .collect();
    pairs.sort_by(|a, b| b.0.total_cmp(&a.0));

    // Within each degenerate cluster order eigenvectors lexicographically.
    let mut start = 0;
    while start < pairs.len() {
        let mut end = start + 1;
        while end < pairs.len() && (pairs[start].0 - pairs[end].0).abs() <= tol::DEGENERATE {
            end += 1;
        }
        pairs[start..end].sort_by(|a, b| lexicographic(&b.1, &a.1));
        start = end;
    }

    let (values, vectors) = pairs.into_iter().unzip();
    Ok(Spectrum { values, vectors })
}

/// Eigenvalues of a Hermitian matrix that is already known to be valid, descending.
pub(crate) fn spectrum_of(m: &CMatrix) -> Spectrum {
    eigh(m).expect("validated Hermitian matrix")
}

/// Principal square root of a Hermitian positive semi-definite matrix.
///
/// Negative eigenvalues within `tol::PSD` are clamped to zero; anything more
/// negative is rejected.
pub fn matrix_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let spectrum = eigh(m)?;
    if spectrum.min() < -tol::PSD {
        return Err(Error::NotPositive(spectrum.min()));
    }
    Ok(hermitize(&spectrum.map(|x| x.max(0.0).sqrt())))
}

/// `M = V P` with `P = (M*M)^{1/2}`.
#[derive(Debug, Clone)]
pub struct PolarDecomposition {
    /// Partial isometry with `V*V` the projector onto `range(P)`.
    pub isometry: CMatrix,
    /// `isometry` completed to a unitary on the orthogonal complements.
    pub unitary: CMatrix,
    pub positive: CMatrix,
    pub rank: usize,
}

/// One-sided Jacobi SVD, `M = U S W*`, returned as `(U, S, W)`.
///
/// Columns of `M W` are orthogonalized pairwise until every pair has cosine
/// below machine precision. Unlike bidiagonalization this keeps the
/// factorization backward stable for nearly singular inputs, which matters
/// when the square root of a rank-deficient state enters a polar factor.
/// Columns of `U` belonging to zero singular values are left as zero.
pub fn jacobi_svd(m: &CMatrix) -> Result<(CMatrix, Vec<f64>, CMatrix)> {
    let n = ensure_square(m)?;
    let mut a = m.clone();
    let mut w = identity(n);
    for _sweep in 0..60 {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let alpha = a.column(i).norm_squared();
                let beta = a.column(j).norm_squared();
                let gamma = a.column(i).dotc(&a.column(j));
                let g = gamma.norm();
                if g == 0.0 || g <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                // Rotate the phase out of gamma, then apply a real Jacobi rotation.
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for mat in [&mut a, &mut w] {
                    for r in 0..n {
                        let x = mat[(r, i)];
                        let y = mat[(r, j)] * phase.conj();
                        mat[(r, i)] = x * c - y * s;
                        mat[(r, j)] = x * s + y * c;
                    }
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let sigma: Vec<f64> = (0..n).map(|k| a.column(k).norm()).collect();
    let mut u = CMatrix::zeros(n, n);
    for (k, &s) in sigma.iter().enumerate() {
        if s > 0.0 {
            u.set_column(k, &(a.column(k) / Complex64::new(s, 0.0)));
        }
    }
    Ok((u, sigma, w))
}

/// Polar decomposition via the SVD `M = U S W*`.
///
/// The partial isometry keeps only singular directions above a relative
/// cutoff. The unitary completion maps a Gram-Schmidt basis of `ker P`
/// (built from the standard basis) onto a Gram-Schmidt basis of
/// `range(M)^perp`, both in standard-basis order, so it is deterministic.
pub fn polar_decompose(m: &CMatrix) -> Result<PolarDecomposition> {
    let n = ensure_square(m)?;
    let (u, singular_values, w) = jacobi_svd(m)?;

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| singular_values[b].total_cmp(&singular_values[a]));
    let sigma_max = order.first().map_or(0.0, |&k| singular_values[k]);
    let cutoff = RANK_REL * sigma_max;

    let mut isometry = CMatrix::zeros(n, n);
    let mut positive = CMatrix::zeros(n, n);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for &k in &order {
        let sigma = singular_values[k];
        let uk: CVector = u.column(k).into_owned();
        let wk: CVector = w.column(k).into_owned();
        positive += outer(&wk) * Complex64::new(sigma, 0.0);
        if sigma > cutoff && sigma > 0.0 {
            isometry += &uk * wk.adjoint();
            left.push(uk);
            right.push(wk);
        }
    }
    let rank = left.len();

    let left_complement = orthonormal_complement(&left, n);
    let right_complement = orthonormal_complement(&right, n);
    let mut unitary = isometry.clone();
    for (l, r) in left_complement.iter().zip(&right_complement) {
        unitary += l * r.adjoint();
    }

    Ok(PolarDecomposition {
        isometry,
        unitary,
        positive: hermitize(&positive),
        rank,
    })
}

/// Orthonormal basis of the complement of `span(basis)`, from Gram-Schmidt over
/// the standard basis vectors in order.
pub fn orthonormal_complement(basis: &[CVector], n: usize) -> Vec<CVector> {
    let mut span: Vec<CVector> = basis.to_vec();
    let mut out = Vec::new();
    for j in 0..n {
        if span.len() == n {
            break;
        }
        let mut v = basis_vector(n, j);
        // Two passes keep the result orthogonal to working precision.
        for _ in 0..2 {
            for b in &span {
                let c = b.dotc(&v);
                v -= b * c;
            }
        }
        let norm = v.norm();
        if norm > GS_DROP {
            v /= Complex64::new(norm, 0.0);
            span.push(v.clone());
            out.push(v);
        }
    }
    out
}

/// Orthonormalizes the columns of a tall matrix by modified Gram-Schmidt.
pub fn orthonormalize_columns(m: &CMatrix) -> CMatrix {
    let mut q = m.clone();
    for k in 0..q.ncols() {
        for _ in 0..2 {
            for j in 0..k {
                let qj: CVector = q.column(j).into_owned();
                let c = qj.dotc(&q.column(k));
                let update = &qj * c;
                let mut col = q.column_mut(k);
                col -= update;
            }
        }
        let norm = q.column(k).norm();
        q.column_mut(k).unscale_mut(norm);
    }
    q
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn gaussian(n: usize, rng: &mut ChaCha20Rng) -> CMatrix {
        CMatrix::from_fn(n, n, |_, _| {
            Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng))
        })
    }

    #[test]
    fn sqrt_of_identity_and_diagonal() {
        let s = matrix_sqrt(&identity(3)).unwrap();
        assert!(frobenius(&(s - identity(3))) < 1e-15);

        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![c(4.0), c(9.0)]));
        let s = matrix_sqrt(&d).unwrap();
        let expected = CMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0), c(3.0)]));
        assert!(frobenius(&(s - expected)) < 1e-14);
    }

    #[test]
    fn jacobi_svd_on_nearly_singular_input() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        for n in 2..=6 {
            let g = gaussian(n, &mut rng);
            let v = g.column(0).into_owned();
            let tiny = gaussian(n, &mut rng) * c(1e-9);
            let m = &g * outer(&v) + tiny;
            let (u, s, w) = jacobi_svd(&m).unwrap();
            let sd = CMatrix::from_diagonal(&DVector::from_iterator(n, s.iter().map(|&x| c(x))));
            assert!(frobenius(&(&u * sd * w.adjoint() - &m)) < 1e-13 * frobenius(&m));
            assert!(frobenius(&(w.adjoint() * &w - identity(n))) < 1e-13);
            assert!(frobenius(&(u.adjoint() * &u - identity(n))) < 1e-10);
        }
    }

    #[test]
    fn sqrt_multiplies_back() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        for n in 2..=8 {
            let g = gaussian(n, &mut rng);
            let m = &g * g.adjoint();
            let s = matrix_sqrt(&m).unwrap();
            assert!(adjoint_deviation(&s) < 1e-14);
            assert!(eigh(&s).unwrap().min() > -1e-12);
            assert!(frobenius(&(&s * &s - &m)) <= 1e-12 * frobenius(&m).max(1.0));
        }
    }

    #[test]
    fn sqrt_rejects_bad_input() {
        let mut m = identity(2);
        m[(0, 1)] = c(0.5);
        assert!(matches!(matrix_sqrt(&m), Err(Error::NotHermitian(_))));

        let neg = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1e-3)]));
        assert!(matches!(matrix_sqrt(&neg), Err(Error::NotPositive(_))));

        let tiny = CMatrix::from_diagonal(&DVector::from_vec(vec![c(1.0), c(-1e-12)]));
        assert!(matrix_sqrt(&tiny).is_ok());
    }

    #[test]
    fn eigh_orders_descending_with_fixed_phase() {
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![c(0.2), c(0.5), c(0.3)]));
        let s = eigh(&d).unwrap();
        assert_eq!(s.values.len(), 3);
        assert!((s.values[0] - 0.5).abs() < 1e-15);
        assert!((s.values[2] - 0.2).abs() < 1e-15);
        assert!((s.vectors[0][1] - ONE).norm() < 1e-15);

        let s = eigh(&(identity(2) * c(0.5))).unwrap();
        assert!((s.vectors[0][0] - ONE).norm() < 1e-15);
        assert!((s.vectors[1][1] - ONE).norm() < 1e-15);
    }

    #[test]
    fn polar_of_positive_definite_is_trivial() {
        let d = CMatrix::from_diagonal(&DVector::from_vec(vec![c(2.0), c(0.5)]));
        let p = polar_decompose(&d).unwrap();
        assert!(frobenius(&(&p.unitary - identity(2))) < 1e-14);
        assert!(frobenius(&(&p.positive - &d)) < 1e-14);
    }

    #[test]
    fn polar_of_unitary_is_itself() {
        let mut rng = ChaCha20Rng::seed_from_u64(5);
        let q = orthonormalize_columns(&gaussian(4, &mut rng));
        let p = polar_decompose(&q).unwrap();
        assert!(frobenius(&(&p.unitary - &q)) < 1e-12);
        assert!(frobenius(&(&p.positive - identity(4))) < 1e-12);
        assert_eq!(p.rank, 4);
    }

    #[test]
    fn polar_multiplies_back_for_random_and_singular() {
        let mut rng = ChaCha20Rng::seed_from_u64(17);
        for n in 2..=6 {
            let mut m = gaussian(n, &mut rng);
            if n % 2 == 0 {
                // Make it rank deficient.
                let col: CVector = m.column(0).into_owned();
                m.set_column(1, &(col * c(2.0)));
            }
            let p = polar_decompose(&m).unwrap();
            assert!(frobenius(&(&p.isometry * &p.positive - &m)) < 1e-12);
            assert!(frobenius(&(&p.unitary * &p.positive - &m)) < 1e-12);
            let vv = p.isometry.adjoint() * &p.isometry;
            assert!(frobenius(&(&vv * &vv - &vv)) < 1e-12);
            let uu = p.unitary.adjoint() * &p.unitary;
            assert!(frobenius(&(uu - identity(n))) < 1e-12);
            assert_eq!(p.rank, if n % 2 == 0 { n - 1 } else { n });
        }
    }

    #[test]
    fn complement_is_orthonormal() {
        let v = CVector::from_vec(vec![c(1.0), c(1.0), ZERO]) / c(2f64.sqrt());
        let comp = orthonormal_complement(std::slice::from_ref(&v), 3);
        assert_eq!(comp.len(), 2);
        for a in &comp {
            assert!(a.dotc(&v).norm() < 1e-15);
            assert!((a.norm() - 1.0).abs() < 1e-15);
        }
        assert!(comp[0].dotc(&comp[1]).norm() < 1e-15);
    }

    #[test]
    fn non_square_is_rejected() {
        let m = CMatrix::zeros(2, 3);
        assert!(matches!(polar_decompose(&m), Err(Error::NotSquare { .. })));
        assert!(matches!(eigh(&m), Err(Error::NotSquare { .. })));
    }
}
