//! Classical representations: quantum states as distributions over the
//! outcomes of a reference POVM built from pure states.
//!
//! A minimal informationally complete frame has `N = n^2` elements
//! `E_i = w_i |w_i><w_i|` spanning the Hermitian operators. The outcome
//! probabilities `p_i = tr(rho E_i)` determine `rho`, while the expansion
//! coefficients `rho = sum_i c_i E_i` solve `G c = p` with the Gram matrix
//! `G_ij = tr(E_i E_j)` and may be negative. The uniform POVM over all pure
//! states is realized by Haar sampling.

use std::io::Write;

use nalgebra::{DMatrix, DVector, Dyn, LU};
use num_complex::Complex64;
use rand::Rng;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::extension::{reduce, ClassicalState};
use crate::linalg::{self, CMatrix};
use crate::quantum::{DensityOperator, Effect, PureState};
use crate::sampling;
use crate::tol;

/// Frames whose Gram matrix is worse conditioned than this are rejected.
pub const MAX_GRAM_CONDITION: f64 = 1e12;
/// A random frame with Gram condition below this is accepted at once.
pub const RANDOM_FRAME_TARGET: f64 = 1e5;
/// Otherwise the best of [`RANDOM_FRAME_ATTEMPTS`] draws is kept if below this.
pub const RANDOM_FRAME_CONDITION: f64 = 1e8;
pub const RANDOM_FRAME_ATTEMPTS: usize = 16;
/// Reconstructions may miss trace or positivity by this much before being
/// rejected.
pub const RECONSTRUCTION_SLACK: f64 = 1e-8;

const SAMPLE_CHUNK: usize = 8192;

/// Real symmetric `G_ij = tr(E_i E_j)` with its spectral condition number.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    pub matrix: DMatrix<f64>,
    pub condition: f64,
}

impl GramMatrix {
    fn of(vectors: &[PureState], weights: &[f64]) -> Self {
        let n = vectors.len();
        let matrix = DMatrix::from_fn(n, n, |i, j| {
            weights[i] * weights[j] * vectors[i].fidelity(&vectors[j])
        });
        let eig = matrix.clone().symmetric_eigen();
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        let condition = if min > 0.0 { max / min } else { f64::INFINITY };
        GramMatrix { matrix, condition }
    }
}

/// Minimal informationally complete POVM `E_i = w_i |w_i><w_i|`, `N = n^2`.
#[derive(Debug, Clone)]
pub struct MinimalIcPovm {
    dim: usize,
    vectors: Vec<PureState>,
    weights: Vec<f64>,
    gram: GramMatrix,
    lu: LU<f64, Dyn, Dyn>,
}

impl PartialEq for MinimalIcPovm {
    fn eq(&self, other: &Self) -> bool {
        self.vectors == other.vectors && self.weights == other.weights
    }
}

impl MinimalIcPovm {
    pub fn new(vectors: Vec<PureState>, weights: Vec<f64>) -> Result<Self> {
        let dim = vectors
            .first()
            .map(PureState::dim)
            .ok_or_else(|| Error::InvalidArgument("empty frame".into()))?;
        linalg::ensure_dim(dim * dim, vectors.len())?;
        linalg::ensure_dim(vectors.len(), weights.len())?;
        let mut sum = CMatrix::zeros(dim, dim);
        for (v, &w) in vectors.iter().zip(&weights) {
            linalg::ensure_dim(dim, v.dim())?;
            if w.is_nan() || w <= 0.0 {
                return Err(Error::InvalidArgument(format!("frame weight {w} is not positive")));
            }
            sum += v.projector() * Complex64::new(w, 0.0);
        }
        let dev = (sum - linalg::identity(dim))
            .iter()
            .fold(0.0f64, |acc, z| acc.max(z.norm()));
        if dev > tol::POVM {
            return Err(Error::NotComplete(dev));
        }
        let gram = GramMatrix::of(&vectors, &weights);
        if gram.condition.is_nan() || gram.condition >= MAX_GRAM_CONDITION {
            return Err(Error::GramSingular(gram.condition));
        }
        let lu = gram.matrix.clone().lu();
        Ok(MinimalIcPovm {
            dim,
            vectors,
            weights,
            gram,
            lu,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn vectors(&self) -> &[PureState] {
        &self.vectors
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    /// `Omega = N / n` when all elements share the weight `1 / Omega`.
    pub fn omega(&self) -> Option<f64> {
        let w0 = self.weights[0];
        self.weights
            .iter()
            .all(|&w| (w - w0).abs() <= 1e-15)
            .then(|| 1.0 / w0)
    }

    pub fn effect(&self, i: usize) -> Effect {
        Effect::from_trusted(self.vectors[i].projector() * Complex64::new(self.weights[i], 0.0))
    }

    /// `sum_i c_i E_i`
    pub fn synthesize(&self, coefficients: &[f64]) -> CMatrix {
        let mut m = CMatrix::zeros(self.dim, self.dim);
        for ((v, &w), &c) in self.vectors.iter().zip(&self.weights).zip(coefficients) {
            m += v.projector() * Complex64::new(w * c, 0.0);
        }
        linalg::hermitize(&m)
    }

    /// Solves `G c = rhs`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        linalg::ensure_dim(self.len(), rhs.len())?;
        let b = DVector::from_column_slice(rhs);
        self.lu
            .solve(&b)
            .map(|c| c.iter().copied().collect())
            .ok_or(Error::GramSingular(self.gram.condition))
    }

    /// `(tr(X E_i))_i` for Hermitian `X`.
    fn pairings(&self, x: &CMatrix) -> Vec<f64> {
        self.vectors
            .iter()
            .zip(&self.weights)
            .map(|(v, &w)| w * v.expectation(x))
            .collect()
    }
}

#[derive(Serialize, Deserialize)]
struct FrameJson {
    dim: usize,
    weights: Vec<f64>,
    vectors: Vec<PureState>,
    #[serde(default, skip_deserializing)]
    gram_condition: f64,
}

impl Serialize for MinimalIcPovm {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        FrameJson {
            dim: self.dim,
            weights: self.weights.clone(),
            vectors: self.vectors.clone(),
            gram_condition: self.gram.condition,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for MinimalIcPovm {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = FrameJson::deserialize(d)?;
        let frame = MinimalIcPovm::new(j.vectors, j.weights).map_err(de::Error::custom)?;
        if frame.dim != j.dim {
            return Err(de::Error::custom("frame dim does not match its vectors"));
        }
        Ok(frame)
    }
}

/// Bloch vectors of the regular tetrahedron used by [`sic_qubit`].
pub const TETRAHEDRON: [[f64; 3]; 4] = [
    [1.0, 1.0, 1.0],
    [1.0, -1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
];

/// Qubit SIC-POVM from the regular tetrahedron, `Omega = 2`.
pub fn sic_qubit() -> MinimalIcPovm {
    let s = 3f64.sqrt();
    let vectors = TETRAHEDRON
        .iter()
        .map(|r| PureState::from_bloch_vector([r[0] / s, r[1] / s, r[2] / s]))
        .collect();
    MinimalIcPovm::new(vectors, vec![0.5; 4]).expect("tetrahedral SIC")
}

/// Qubit state antipodal to tetrahedron vertex `k`.
pub fn sic_antipode(k: usize) -> PureState {
    let s = 3f64.sqrt();
    let r = TETRAHEDRON[k];
    PureState::from_bloch_vector([-r[0] / s, -r[1] / s, -r[2] / s])
}

/// Random minimal IC frame.
///
/// Draws `n^2` Haar vectors and maps them through `S^{-1/2}` with
/// `S = sum_i |w_i><w_i|`. The resulting elements `S^{-1/2}|w_i><w_i|S^{-1/2}`
/// sum exactly to the identity. Draws are repeated until the Gram condition
/// meets [`RANDOM_FRAME_TARGET`]; failing that, the best draw is used if it is
/// below [`RANDOM_FRAME_CONDITION`].
pub fn random_ic_povm<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<MinimalIcPovm> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!("frame dimension {n} < 2")));
    }
    let count = n * n;
    let mut best: Option<MinimalIcPovm> = None;
    for _ in 0..RANDOM_FRAME_ATTEMPTS {
        let raw: Vec<PureState> = (0..count).map(|_| sampling::haar_state(n, rng)).collect();
        let frame_op = raw
            .iter()
            .fold(CMatrix::zeros(n, n), |acc, v| acc + v.projector());
        let inv_sqrt = linalg::eigh(&linalg::hermitize(&frame_op))?.map(|x| 1.0 / x.sqrt());
        let mut vectors = Vec::with_capacity(count);
        let mut weights = Vec::with_capacity(count);
        for v in &raw {
            let t = &inv_sqrt * v.amplitudes();
            weights.push(t.norm_squared());
            vectors.push(PureState::normalize(t)?);
        }
        let Ok(frame) = MinimalIcPovm::new(vectors, weights) else {
            continue;
        };
        if frame.gram.condition < RANDOM_FRAME_TARGET {
            return Ok(frame);
        }
        if best.as_ref().is_none_or(|b| frame.gram.condition < b.gram.condition) {
            best = Some(frame);
        }
    }
    match best {
        Some(frame) if frame.gram.condition < RANDOM_FRAME_CONDITION => Ok(frame),
        _ => Err(Error::FrameDegenerate(RANDOM_FRAME_ATTEMPTS)),
    }
}

/// `p_i = tr(rho E_i)`
pub fn representation_probabilities(rho: &DensityOperator, frame: &MinimalIcPovm) -> Result<Vec<f64>> {
    linalg::ensure_dim(frame.dim(), rho.dim())?;
    Ok(frame
        .pairings(rho.matrix())
        .into_iter()
        .map(|p| p.max(0.0))
        .collect())
}

/// Inverts [`representation_probabilities`].
///
/// Trace or positivity violations up to [`RECONSTRUCTION_SLACK`] are
/// projected away; larger ones are reported as [`Error::NotAState`].
pub fn reconstruct(p: &[f64], frame: &MinimalIcPovm) -> Result<DensityOperator> {
    let c = frame.solve(p)?;
    let m = frame.synthesize(&c);
    let trace = linalg::trace(&m).re;
    let spectrum = linalg::eigh(&m)?;
    let min_eigenvalue = spectrum.min();
    if (trace - 1.0).abs() > RECONSTRUCTION_SLACK || min_eigenvalue < -RECONSTRUCTION_SLACK {
        return Err(Error::NotAState {
            min_eigenvalue,
            trace,
        });
    }
    if (trace - 1.0).abs() <= tol::TRACE && min_eigenvalue >= -tol::PSD {
        return Ok(DensityOperator::from_trusted(m));
    }
    let clamped = spectrum.map(|x| x.max(0.0));
    let tr = linalg::trace(&clamped).re;
    Ok(DensityOperator::from_trusted(clamped * Complex64::new(1.0 / tr, 0.0)))
}

/// Expansion coefficients `rho = sum_i c_i E_i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PseudoDistribution {
    pub coefficients: Vec<f64>,
    pub min: f64,
    pub has_negative: bool,
}

impl PseudoDistribution {
    fn from_coefficients(coefficients: Vec<f64>) -> Self {
        let min = coefficients.iter().copied().fold(f64::INFINITY, f64::min);
        PseudoDistribution {
            has_negative: min < -tol::NEGATIVITY,
            min,
            coefficients,
        }
    }

    /// `sum_i c_i tr(E_i)`, which equals `tr(rho) = 1`.
    pub fn trace(&self, frame: &MinimalIcPovm) -> f64 {
        self.coefficients
            .iter()
            .zip(frame.weights())
            .map(|(c, w)| c * w)
            .sum()
    }
}

pub fn pseudo_distribution(rho: &DensityOperator, frame: &MinimalIcPovm) -> Result<PseudoDistribution> {
    let p = representation_probabilities(rho, frame)?;
    Ok(PseudoDistribution::from_coefficients(frame.solve(&p)?))
}

/// Unique `e^i` with `E = sum_i e^i E_i`; generally not confined to `[0, 1]`.
pub fn effect_expansion(effect: &Effect, frame: &MinimalIcPovm) -> Result<Vec<f64>> {
    linalg::ensure_dim(frame.dim(), effect.dim())?;
    frame.solve(&frame.pairings(effect.matrix()))
}

/// Haar sample standing in for the uniform POVM `n |w><w| dw`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformPovmSample {
    dim: usize,
    atoms: Vec<PureState>,
    weight: f64,
    identity_deviation: f64,
}

impl UniformPovmSample {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn atoms(&self) -> &[PureState] {
        &self.atoms
    }

    /// Per-atom effect weight `n / N`.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// `||(n/N) sum_j |w_j><w_j| - I||_F`
    pub fn identity_deviation(&self) -> f64 {
        self.identity_deviation
    }

    /// Classical representation `<w_j|rho|w_j>` at each atom.
    pub fn densities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        self.atoms.iter().map(|w| uniform_density(rho, w)).collect()
    }

    /// Outcome probabilities `(n/N) <w_j|rho|w_j>`; they sum to one up to
    /// sampling error.
    pub fn probabilities(&self, rho: &DensityOperator) -> Result<Vec<f64>> {
        Ok(self
            .densities(rho)?
            .into_iter()
            .map(|d| d * self.weight)
            .collect())
    }
}

/// Samples `count` Haar atoms. Chunks of atoms draw from independent
/// sub-streams of `seed` and are generated in parallel; the output depends
/// only on `(n, count, seed)`.
pub fn uniform_povm_sample(n: usize, count: usize, seed: u64) -> Result<UniformPovmSample> {
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be positive".into()));
    }
    if n == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    let chunks = count.div_ceil(SAMPLE_CHUNK);
    let mut parts: Vec<(Vec<PureState>, CMatrix)> = Vec::with_capacity(chunks);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..chunks)
            .map(|c| {
                scope.spawn(move || {
                    let mut rng = sampling::sub_rng(seed, c as u64);
                    let len = SAMPLE_CHUNK.min(count - c * SAMPLE_CHUNK);
                    let mut acc = CMatrix::zeros(n, n);
                    let atoms: Vec<PureState> = (0..len)
                        .map(|_| {
                            let w = sampling::haar_state(n, &mut rng);
                            acc += w.projector();
                            w
                        })
                        .collect();
                    (atoms, acc)
                })
            })
            .collect();
        for h in handles {
            parts.push(h.join().expect("sampling thread panicked"));
        }
    });
    let weight = n as f64 / count as f64;
    let mut atoms = Vec::with_capacity(count);
    let mut sum = CMatrix::zeros(n, n);
    for (chunk, acc) in parts {
        atoms.extend(chunk);
        sum += acc;
    }
    let identity_deviation = linalg::frobenius(&(sum * Complex64::new(weight, 0.0) - linalg::identity(n)));
    Ok(UniformPovmSample {
        dim: n,
        atoms,
        weight,
        identity_deviation,
    })
}

/// Density of `rho` in the uniform representation, `<w|rho|w>`.
pub fn uniform_density(rho: &DensityOperator, w: &PureState) -> Result<f64> {
    linalg::ensure_dim(rho.dim(), w.dim())?;
    Ok(rho.expectation(w))
}

/// `S(w, w~) = |<w|w~>|^2`
pub fn smearing_kernel(a: &PureState, b: &PureState) -> Result<f64> {
    linalg::ensure_dim(a.dim(), b.dim())?;
    Ok(a.fidelity(b).clamp(0.0, 1.0))
}

/// Largest `|<w~|R(p)|w~> - sum_k w_k S(w_k, w~)|` over the test points.
pub fn smearing_check(p: &ClassicalState, test_points: &[PureState]) -> Result<f64> {
    let rho = reduce(p);
    let mut worst = 0.0f64;
    for t in test_points {
        let lhs = uniform_density(&rho, t)?;
        let mut rhs = 0.0;
        for a in p.atoms() {
            rhs += a.weight * smearing_kernel(&a.state, t)?;
        }
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// Writes `index,weight,value` rows with a header.
pub fn write_csv<W: Write>(out: W, rows: impl IntoIterator<Item = (usize, f64, f64)>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| Error::Io(e.to_string());
    w.write_record(["index", "weight", "value"]).map_err(io)?;
    for (i, weight, value) in rows {
        w.serialize((i, weight, value)).map_err(io)?;
    }
    w.flush().map_err(|e| Error::Io(e.to_string()))
}
